#pragma once

#include <stdexcept>
#include <vector>

#include "secnoma/mathkit.hpp"

namespace secnoma::channel {

using mathkit::cvec;
using mathkit::Rng;

/// Raised when a secrecy tightening leaves no feasible operating point.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Static system description
// ---------------------------------------------------------------------------

struct SystemConfig {
  int n_antennas = 16;    // N
  int clusters = 4;       // M = 2^B
  int feedback_bits = 2;  // B
  int eves = 3;           // J
  double power = 10.0;    // P, linear
  double path_loss_exponent = 2.5;
  double noise_user = 1.0;  // sigma_b^2, linear
  double noise_eve = 1.0;   // sigma_e^2, linear
  double delta = 0.5;       // max connection outage probability
  double epsilon = 0.1;     // max secrecy outage probability
  std::vector<double> cluster_power;  // P_m, sums to 1

  /// 2^{-B/(N-1)}: scale of the quantization error distribution.
  double quant_error_scale() const;

  void validate() const;  // throws std::invalid_argument
};

/// Distances and per-link SNR scalars. Within a cluster users are ordered by
/// distance, nearest first; that order is also the SIC decoding order.
struct NetworkGeometry {
  std::vector<std::vector<double>> user_distances;  // per cluster, ascending
  std::vector<double> eve_distances;
  std::vector<std::vector<double>> gamma_users;  // P mu^2 d^-alpha / sigma_b^2
  std::vector<double> gamma_eves;

  int cluster_size(int m) const { return static_cast<int>(user_distances[m].size()); }
  int total_users() const;
  void validate() const;
};

/// gamma tables from distances (mu fixed to 1 for every link).
NetworkGeometry build_geometry(const SystemConfig& cfg,
                               std::vector<std::vector<double>> user_distances,
                               std::vector<double> eve_distances);

struct BeamformerSet {
  std::vector<cvec> codebook;     // M unit-norm direction vectors
  std::vector<cvec> beamformers;  // M unit-norm zero-forcing beams
  double zf_residual = 0.0;       // max_{n != m} |g_n^H w_m|
};

/// Per-user pieces of one channel draw under the quantization cell model.
struct UserRealization {
  cvec g;           // small-scale vector, CN(0, I_N)
  double sin2_beta; // quantization angle term
  cvec e;           // unit error vector in the nullspace of the cluster direction
};

struct ChannelRealization {
  std::vector<std::vector<UserRealization>> users;  // [cluster][user]
  std::vector<cvec> eves;                           // CN(0, I_N) each
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Random unit-norm codebook plus the pseudo-inverse zero-forcing beams
/// w_m ~ column m of G (G^H G)^{-1}, normalized. Retries a rank-deficient
/// draw up to 10 times before failing.
BeamformerSet generate_codebook_and_beamformers(const SystemConfig& cfg, Rng& rng);

/// Cluster index per user: argmax_m |g^H ghat_m| / ||g||, ties to lower m.
std::vector<int> assign_users_to_clusters(const std::vector<cvec>& vectors,
                                          const std::vector<cvec>& codebook);

/// Inverse-transform sample of sin^2(beta): F(s) = 2^B s^{N-1} on
/// [0, 2^{-B/(N-1)}].
double quantization_angle_from_uniform(const SystemConfig& cfg, double u);
double sample_quantization_angle(const SystemConfig& cfg, Rng& rng);

ChannelRealization sample_channel_realization(const SystemConfig& cfg,
                                              const NetworkGeometry& geo,
                                              const BeamformerSet& beams,
                                              Rng& rng);

/// User SINR under the realized draw:
///   |g^H w_m|^2 theta_k / (|g^H w_m|^2 sum_{i<k} theta_i
///       + P_m ||g||^2 sin^2(beta) sum_{v != m} |e^H w_v|^2 + 1/gamma_{m,k}).
double sinr_user(const SystemConfig& cfg, const NetworkGeometry& geo,
                 const ChannelRealization& real, const BeamformerSet& beams,
                 const std::vector<double>& theta, int m, int k);

/// Eavesdropper SINR for user k of cluster m at Eve j (no SIC at the Eve):
///   |ge^H w_m|^2 theta_k / (|ge^H w_m|^2 sum_{i != k} theta_i
///       + P_m sum_{v != m} |ge^H w_v|^2 + 1/gamma_{e,j}).
double sinr_eve(const SystemConfig& cfg, const NetworkGeometry& geo,
                const ChannelRealization& real, const BeamformerSet& beams,
                const std::vector<double>& theta, int m, int k, int j);

}  // namespace secnoma::channel
