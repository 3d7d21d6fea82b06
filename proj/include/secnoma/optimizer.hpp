#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "secnoma/channel.hpp"
#include "secnoma/outage.hpp"

namespace secnoma::optimizer {

using channel::BeamformerSet;
using channel::InfeasibleError;
using channel::NetworkGeometry;
using channel::SystemConfig;

struct SolverOptions {
  double tol = 1e-4;       // relative-change stopping for every loop
  int alg1_cap = 50;       // ratio-transform inner loop
  int pg_cap = 2000;       // projected-gradient iterations
  int am_cap = 100;        // alternating rounds
  int refine_cap = 20;     // epsilon_k bisection rounds
  double refine_resolution = 0.01;  // z
  double armijo_init = 1.0;
  double armijo_shrink = 0.5;
  double armijo_slope = 1e-4;
  int armijo_cap = 30;
  double pg_residual_tol = 1e-3;   // projected-gradient residual at termination
  double pg_residual_step = 1e-4;  // probe step s for the residual
  double xi_tol = 1e-12;           // bisection resolution for the xi update
  int workers = 1;
  bool refine = true;              // run the epsilon_k refinement loop
  double fixed_epsilon_k = 0.1;    // used when refine == false
};

/// Immutable data of one per-cluster, per-Eve subproblem. Users follow the
/// cluster decoding order (nearest first).
struct Subproblem {
  int m = 0, j = 0;
  std::vector<double> gamma;  // per user
  double gamma_e = 1.0;
  double cluster_power = 1.0;  // P_m
  int clusters = 1;            // M
  double quant_scale = 1.0;    // 2^{-B/(N-1)}; 0 disables the feedback penalty
  double delta = 0.5;
  std::vector<double> kappa;   // per user (depends on epsilon_k)
  std::vector<double> xi_ub;   // per user

  int users() const { return static_cast<int>(gamma.size()); }
};

/// Decision variables. xi is the per-user rate surrogate, theta the power
/// split on the scaled simplex {theta >= 0, sum = P_m}, y the ratio-transform
/// auxiliaries.
struct SubproblemState {
  std::vector<double> xi;
  std::vector<double> theta;
  std::vector<double> y;
};

struct PgResult {
  std::vector<double> theta;
  std::vector<double> trace;  // objective after each accepted step
  int iterations = 0;
  bool converged = false;
  bool stalled = false;  // no ascent step found
};

struct AmResult {
  SubproblemState state;
  std::vector<double> trace;       // P2 objective after init and each block
  std::vector<double> alg1_trace;  // inner-loop values of the first round
  std::vector<double> pg_trace;    // PG values of the first round
  int rounds = 0;
  bool converged = false;
};

struct RefineResult {
  AmResult am;
  std::vector<double> epsilon_k;
  std::vector<double> achieved_sop;
  int rounds = 0;
  bool converged = false;
  bool tightening_failed = false;
};

struct UserAllocation {
  int m = 0, k = 0;
  double xi = 0.0, theta = 0.0;
  double rate = 0.0;        // R, bits/s/Hz
  double redundancy = 0.0;  // D-tilde at the chosen Eve
  double secure_term = 0.0; // (1 - cop) * [R - D]^+
};

struct SubproblemReport {
  int m = 0, j = 0;
  SubproblemState state;
  std::vector<double> epsilon_k, achieved_sop, kappa, xi_ub;
  std::vector<double> trace, alg1_trace, pg_trace;
  double objective = 0.0;
  int am_rounds = 0, refine_rounds = 0;
  bool converged = false;
  bool infeasible = false;
  bool tightening_failed = false;
};

struct Solution {
  std::vector<UserAllocation> rows;
  int chosen_eve = 0;
  double objective = 0.0;  // security-guaranteed sum-rate, bits/s/Hz
  std::vector<SubproblemReport> reports;
  double wall_seconds = 0.0;
};

// ---------------------------------------------------------------------------
// Core operations
// ---------------------------------------------------------------------------

/// Largest xi satisfying the connection-outage constraint at level delta:
/// exp(-xi/(2 gamma)) (1 + xi P_m 2^{-B/(N-1)}/2)^{1-M} = 1 - delta, solved in
/// closed form through the Lambert W function and polished by Newton steps.
/// M = 1 reduces to the pure exponential equation.
double xi_upper_bound(double gamma, double P_m, int M, int B, int N, double delta);

/// The secure sum objective: sum_k w_k [log2 ratio]^+ with the
/// connection-success weight w_k = exp(-xi/(2 gamma))(1+xi P_m q/2)^{1-M}
/// when cop_weighted, else w_k = 1. Throws InfeasibleError when a kappa
/// denominator is non-positive.
double objective(const Subproblem& sub, const SubproblemState& state,
                 bool cop_weighted);

/// Optimal ratio-transform auxiliaries y_k = sqrt(A_k)/B_k at fixed xi.
void update_y(const Subproblem& sub, SubproblemState& state);

/// Per-user concave maximization of g(xi_k, y_k) = 2 y sqrt(A) - y^2 B over
/// (threshold, xi_ub] via bisection on the stationarity condition; flat users
/// (y_k = 0) keep their incumbent value.
void update_xi(const Subproblem& sub, SubproblemState& state, double xi_tol);

/// Gradient of the unweighted rate sum f(theta) = sum_k log2-ratio terms.
/// Piecewise in the user index (below / at / above the derivative target),
/// assembled with prefix and suffix sums in O(K).
std::vector<double> gradient_theta(const Subproblem& sub,
                                   const SubproblemState& state);

/// Euclidean projection onto {x >= 0, sum = P_m}: shift-and-clamp applied
/// repeatedly on the active support until the clamp stops firing.
std::vector<double> project_simplex(std::vector<double> v, double P_m);

/// Projected-gradient ascent for the power split at fixed xi (the unweighted
/// rate-sum objective), with Armijo backtracking on the projected point.
PgResult update_theta_pg(const Subproblem& sub, const SubproblemState& state,
                         const SolverOptions& opts);

/// Alternating maximization at fixed per-user epsilon_k (already baked into
/// sub.kappa). The power block ascends the connection-weighted objective so
/// the reported trace is nondecreasing.
AmResult solve_subproblem_am(const Subproblem& sub, const SolverOptions& opts,
                             bool record_traces = false);

/// Per-user bisection of epsilon_k in [epsilon, 1] around the full solve,
/// matching the achieved secrecy outage to the target within
/// opts.refine_resolution.
RefineResult refine_epsilon_k(const SystemConfig& cfg, const NetworkGeometry& geo,
                              const BeamformerSet& beams, int m, int j,
                              const SolverOptions& opts,
                              bool record_traces = false);

/// Generic refinement driver: factory(eps) must produce the subproblem with
/// kappa evaluated at the given per-user tunables; an empty eps vector asks
/// for the loose end (epsilon_k = 1), used once to probe the cluster size.
RefineResult refine_epsilon_k_driver(
    const std::function<Subproblem(const std::vector<double>&)>& factory,
    const SystemConfig& cfg, const BeamformerSet& beams,
    const SolverOptions& opts, bool record_traces = false);

/// Full solve: all (m, j) subproblems independently (parallel when
/// opts.workers > 1), per-Eve totals assembled, the worst Eve selected, and
/// rates recovered from the auxiliaries.
Solution solve_p2(const SystemConfig& cfg, const NetworkGeometry& geo,
                  const BeamformerSet& beams, const SolverOptions& opts);

// ---------------------------------------------------------------------------
// Helpers shared with baselines and the harness
// ---------------------------------------------------------------------------

Subproblem make_subproblem(const SystemConfig& cfg, const NetworkGeometry& geo,
                           const BeamformerSet& beams, int m, int j,
                           const std::vector<double>& epsilon_k);

/// R = log2(1 + xi theta_k / (1 + xi sum_{i<k} theta_i)).
double recovered_rate(double xi, const std::vector<double>& theta, int k);

/// Connection-success weight 1/B_k(xi).
double connection_weight(const Subproblem& sub, int k, double xi);

/// Unweighted per-user rate term log2-ratio (can be negative).
double rate_term(const Subproblem& sub, const std::vector<double>& theta, int k,
                 double xi);

namespace detail {
/// Deterministic static-partition-free task pool (ordered results, unordered
/// execution).
void run_tasks_for_baselines(int count, int workers,
                             const std::function<void(int)>& fn);
/// Box edge used when the connection-outage cap is disabled.
double uncapped_xi_edge(double gamma);
}  // namespace detail

}  // namespace secnoma::optimizer
