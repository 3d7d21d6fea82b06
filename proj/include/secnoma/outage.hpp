#pragma once

#include "secnoma/channel.hpp"
#include "secnoma/mathkit.hpp"

namespace secnoma::outage {

using channel::BeamformerSet;
using channel::InfeasibleError;
using channel::SystemConfig;
using mathkit::HermitianMatrix;
using mathkit::Rng;

// ---------------------------------------------------------------------------
// Inputs
// ---------------------------------------------------------------------------

/// Connection-outage evaluation point for user k of one cluster.
/// theta holds the cluster's power ratios in decoding order; rate is the
/// transmission rate in bits/s/Hz.
struct CopInput {
  double rate = 0.0;
  std::vector<double> theta;
  int k = 0;  // 0-based user index within the cluster
  double gamma = 1.0;
  double cluster_power = 1.0;  // P_m
  int clusters = 1;            // M
  int feedback_bits = 1;       // B
  int n_antennas = 2;          // N

  double quant_error_scale() const;
  /// theta_k - (2^R - 1) sum_{i<k} theta_i; the outage probability is 1
  /// whenever this is <= 0.
  double rate_margin() const;
};

/// Secrecy-outage evaluation point for user k of cluster m against one Eve.
struct SopInput {
  double redundancy = 0.0;  // D, bits/s/Hz
  std::vector<double> theta;
  int k = 0;
  double gamma_e = 1.0;
  const BeamformerSet* beams = nullptr;
  int m = 0;
  double cluster_power = 1.0;
};

struct McEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  long samples = 0;
};

// ---------------------------------------------------------------------------
// Connection outage
// ---------------------------------------------------------------------------

/// Closed form: 1 - exp(-I/(2 gamma)) (1 + I P_m 2^{-B/(N-1)}/2)^{1-M} with
/// I = (2^R-1)/rate_margin; exactly 1 when the margin is non-positive.
double cop_closed_form(const CopInput& in);

/// Scalar-level estimator of the same event: I > X/(P_m Y + 1/gamma) with
/// X ~ Exp(mean 2) and Y ~ Gamma(M-1, 2^{-B/(N-1)}), independent.
McEstimate cop_monte_carlo(const CopInput& in, long samples, Rng& rng);

/// Vector-level estimator: every independent factor of the outage event is
/// drawn as an explicit sample and combined through the actual beamformers.
/// Per draw: a CN(0, 2 I_N) signal vector h gives the gain |h^H w_m|^2; each
/// interfering cluster v contributes ||psi_v||^2 sin^2(beta_v) |e_v^H w_v|^2
/// with its own norm, angle and unit error vector in the nullspace of the
/// serving direction. The outage event R > log2(1 + rho) is then tested on
/// the assembled SINR.
McEstimate cop_monte_carlo_vector(const CopInput& in, const BeamformerSet& beams,
                                  int m, long samples, Rng& rng);

// ---------------------------------------------------------------------------
// Secrecy outage
// ---------------------------------------------------------------------------

/// Quadratic-form matrix: gamma_e theta_k w_m w_m^H
///   - gamma_e (2^D - 1) w_m w_m^H sum_{i != k} theta_i
///   - gamma_e P_m (2^D - 1) sum_{v != m} w_v w_v^H.
HermitianMatrix build_lambda(const SopInput& in);

/// CDF tail of the indefinite quadratic form over the positive distinct
/// eigenvalues; coincident eigenvalues get a deterministic relative jitter of
/// 1e-9 * lambda * index so the product stays defined. Zero when no
/// eigenvalue is positive.
double sop_closed_form(const SopInput& in);

/// Empirical frequency of ge^H Lambda ge > 2^D - 1 over ge ~ CN(0, I_N),
/// evaluated through the beamformer inner products.
McEstimate sop_monte_carlo(const SopInput& in, long samples, Rng& rng);

// ---------------------------------------------------------------------------
// Constraint tightening
// ---------------------------------------------------------------------------

/// Concentration-bound constant for cluster m against an Eve with SNR
/// gamma_e, at tunable epsilon_k in (0,1]. May be negative; callers decide
/// feasibility.
double kappa(const BeamformerSet& beams, const SystemConfig& cfg, double gamma_e,
             int m, double epsilon_k);

/// Minimum redundancy rate log2(1 + theta_k / (kappa + sum_{i!=k} theta_i)).
/// Throws InfeasibleError when the denominator is non-positive.
double d_tilde(const std::vector<double>& theta, double kappa_val, int k);

}  // namespace secnoma::outage
