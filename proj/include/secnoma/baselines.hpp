#pragma once

#include "secnoma/optimizer.hpp"

namespace secnoma::baselines {

using channel::BeamformerSet;
using channel::NetworkGeometry;
using channel::SystemConfig;
using optimizer::SolverOptions;
using optimizer::Solution;
using optimizer::Subproblem;

struct GridSpec {
  int points_per_axis = 200;
  bool grid_xi = true;
  bool grid_theta = true;
};

struct GridBest {
  std::vector<double> xi;
  std::vector<double> theta;
  double objective = 0.0;
  long evaluations = 0;
};

/// Exhaustive search over the product grid: theta on a simplex lattice,
/// xi on a per-user axis grid. The objective is separable in xi at fixed
/// theta, so each lattice point takes one 1-D scan per user; the result is
/// identical to scanning the full product grid. Lattice points that violate
/// the kappa feasibility are skipped. Only small clusters (K_m <= 3).
GridBest grid_oracle(const Subproblem& sub, const GridSpec& grid);

/// Orthogonal access: zero-forcing between clusters, equal time slices inside
/// a cluster. Each user gets the whole cluster power for a 1/K_m fraction and
/// is solved as a single-user instance of the same machinery.
Solution tdma_baseline(const SystemConfig& cfg, const NetworkGeometry& geo,
                       const BeamformerSet& beams, const SolverOptions& opts);

/// Power allocation designed as if the fed-back directions were exact (no
/// feedback penalty, no connection-outage cap), then evaluated under the true
/// imperfect-feedback objective.
Solution naive_noma_baseline(const SystemConfig& cfg, const NetworkGeometry& geo,
                             const BeamformerSet& beams, const SolverOptions& opts);

/// The design/evaluation pair behind naive_noma_baseline, exposed per
/// subproblem: solve with sub_naive (quant_scale 0, uncapped box), return the
/// true objective of that state under sub_true.
double naive_solve_and_evaluate(const Subproblem& sub_true,
                                const Subproblem& sub_naive,
                                const SolverOptions& opts,
                                optimizer::SubproblemState* state_out = nullptr);

}  // namespace secnoma::baselines
