#include "secnoma/channel.hpp"

#include <algorithm>
#include <cmath>

namespace secnoma::channel {

using mathkit::cd;

double SystemConfig::quant_error_scale() const {
  return std::exp2(-static_cast<double>(feedback_bits) / (n_antennas - 1));
}

void SystemConfig::validate() const {
  if (n_antennas < 1) throw std::invalid_argument("config: N >= 1");
  if (feedback_bits < 0) throw std::invalid_argument("config: B >= 0");
  if (clusters != (1 << feedback_bits)) {
    throw std::invalid_argument("config: M must equal 2^B");
  }
  if (clusters > n_antennas) {
    throw std::invalid_argument("config: M <= N required for zero-forcing");
  }
  if (eves < 1) throw std::invalid_argument("config: J >= 1");
  if (!(power > 0.0) || !(noise_user > 0.0) || !(noise_eve > 0.0)) {
    throw std::invalid_argument("config: powers must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0) || !(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("config: delta and epsilon must lie in (0,1)");
  }
  if (static_cast<int>(cluster_power.size()) != clusters) {
    throw std::invalid_argument("config: cluster_power needs one entry per cluster");
  }
  double sum = 0.0;
  for (double p : cluster_power) {
    if (!(p > 0.0)) throw std::invalid_argument("config: cluster powers must be > 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("config: cluster powers must sum to 1");
  }
}

int NetworkGeometry::total_users() const {
  int n = 0;
  for (const auto& c : user_distances) n += static_cast<int>(c.size());
  return n;
}

void NetworkGeometry::validate() const {
  for (const auto& c : user_distances) {
    for (std::size_t k = 1; k < c.size(); ++k) {
      if (!(c[k - 1] < c[k])) {
        throw std::invalid_argument("geometry: cluster distances must be ascending");
      }
    }
  }
  for (const auto& c : gamma_users) {
    for (double g : c) {
      if (!(g > 0.0)) throw std::invalid_argument("geometry: gammas must be > 0");
    }
  }
  for (double g : gamma_eves) {
    if (!(g > 0.0)) throw std::invalid_argument("geometry: gammas must be > 0");
  }
}

NetworkGeometry build_geometry(const SystemConfig& cfg,
                               std::vector<std::vector<double>> user_distances,
                               std::vector<double> eve_distances) {
  NetworkGeometry geo;
  for (auto& c : user_distances) std::sort(c.begin(), c.end());
  geo.user_distances = std::move(user_distances);
  geo.eve_distances = std::move(eve_distances);
  const double mu2 = 1.0;
  geo.gamma_users.resize(geo.user_distances.size());
  for (std::size_t m = 0; m < geo.user_distances.size(); ++m) {
    for (double d : geo.user_distances[m]) {
      geo.gamma_users[m].push_back(cfg.power * mu2 *
                                   std::pow(d, -cfg.path_loss_exponent) /
                                   cfg.noise_user);
    }
  }
  for (double d : geo.eve_distances) {
    geo.gamma_eves.push_back(cfg.power * mu2 *
                             std::pow(d, -cfg.path_loss_exponent) / cfg.noise_eve);
  }
  geo.validate();
  return geo;
}

namespace {

// Cholesky of a Hermitian positive definite M x M matrix stored column-major.
// Returns false when a pivot collapses (rank-deficient draw).
bool cholesky(std::vector<cd>& a, int n) {
  for (int j = 0; j < n; ++j) {
    double d = a[static_cast<std::size_t>(j) * n + j].real();
    for (int k = 0; k < j; ++k) d -= std::norm(a[static_cast<std::size_t>(k) * n + j]);
    if (d <= 1e-12) return false;
    const double ljj = std::sqrt(d);
    a[static_cast<std::size_t>(j) * n + j] = ljj;
    for (int i = j + 1; i < n; ++i) {
      cd s = a[static_cast<std::size_t>(j) * n + i];
      for (int k = 0; k < j; ++k) {
        s -= a[static_cast<std::size_t>(k) * n + i] *
             std::conj(a[static_cast<std::size_t>(k) * n + j]);
      }
      a[static_cast<std::size_t>(j) * n + i] = s / ljj;
    }
  }
  return true;
}

// Solve L L^H x = b in place (L lower triangular from cholesky()).
void cholesky_solve(const std::vector<cd>& l, int n, std::vector<cd>& b) {
  for (int i = 0; i < n; ++i) {
    cd s = b[i];
    for (int k = 0; k < i; ++k) s -= l[static_cast<std::size_t>(k) * n + i] * b[k];
    b[i] = s / l[static_cast<std::size_t>(i) * n + i].real();
  }
  for (int i = n - 1; i >= 0; --i) {
    cd s = b[i];
    for (int k = i + 1; k < n; ++k) {
      s -= std::conj(l[static_cast<std::size_t>(i) * n + k]) * b[k];
    }
    b[i] = s / l[static_cast<std::size_t>(i) * n + i].real();
  }
}

}  // namespace

BeamformerSet generate_codebook_and_beamformers(const SystemConfig& cfg, Rng& rng) {
  const int n = cfg.n_antennas;
  const int m = cfg.clusters;
  if (m > n) throw std::invalid_argument("beamformers: M <= N required");

  for (int attempt = 0; attempt < 10; ++attempt) {
    BeamformerSet set;
    set.codebook.reserve(m);
    for (int i = 0; i < m; ++i) {
      cvec g = mathkit::sample_complex_gaussian_vector(n, rng);
      mathkit::normalize(g);
      set.codebook.push_back(std::move(g));
    }

    // T = G^H G
    std::vector<cd> t(static_cast<std::size_t>(m) * m);
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < m; ++i) {
        t[static_cast<std::size_t>(j) * m + i] =
            mathkit::vdot(set.codebook[i], set.codebook[j]);
      }
    }
    if (!cholesky(t, m)) continue;

    // column j of G (G^H G)^{-1}: solve T x = e_j, then w_j = G x
    set.beamformers.assign(m, cvec(n, cd{0.0, 0.0}));
    for (int j = 0; j < m; ++j) {
      std::vector<cd> x(m, cd{0.0, 0.0});
      x[j] = 1.0;
      cholesky_solve(t, m, x);
      cvec w(n, cd{0.0, 0.0});
      for (int i = 0; i < m; ++i) {
        for (int r = 0; r < n; ++r) w[r] += set.codebook[i][r] * x[i];
      }
      mathkit::normalize(w);
      set.beamformers[j] = std::move(w);
    }

    set.zf_residual = 0.0;
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < m; ++i) {
        if (i == j) continue;
        set.zf_residual = std::max(
            set.zf_residual, std::abs(mathkit::vdot(set.codebook[i], set.beamformers[j])));
      }
    }
    return set;
  }
  throw std::runtime_error("beamformers: codebook rank-deficient after 10 draws");
}

std::vector<int> assign_users_to_clusters(const std::vector<cvec>& vectors,
                                          const std::vector<cvec>& codebook) {
  if (codebook.empty()) throw std::invalid_argument("clustering: empty codebook");
  std::vector<int> out;
  out.reserve(vectors.size());
  for (const cvec& g : vectors) {
    const double nrm = mathkit::norm(g);
    int best = 0;
    double best_val = -1.0;
    for (std::size_t m = 0; m < codebook.size(); ++m) {
      const double val = std::abs(mathkit::vdot(g, codebook[m])) / nrm;
      if (val > best_val) {
        best_val = val;
        best = static_cast<int>(m);
      }
    }
    out.push_back(best);
  }
  return out;
}

double quantization_angle_from_uniform(const SystemConfig& cfg, double u) {
  // B = 0 degenerates to F(s) = s^{N-1} on [0,1]; anything B >= 1 is the
  // quantization-cell law proper
  if (cfg.feedback_bits < 0 || cfg.n_antennas < 2) {
    throw std::invalid_argument("quantization angle: needs B >= 0, N >= 2");
  }
  return cfg.quant_error_scale() *
         std::pow(u, 1.0 / (cfg.n_antennas - 1));
}

double sample_quantization_angle(const SystemConfig& cfg, Rng& rng) {
  return quantization_angle_from_uniform(cfg, rng.uniform01());
}

ChannelRealization sample_channel_realization(const SystemConfig& cfg,
                                              const NetworkGeometry& geo,
                                              const BeamformerSet& beams,
                                              Rng& rng) {
  ChannelRealization real;
  real.users.resize(geo.user_distances.size());
  for (std::size_t m = 0; m < geo.user_distances.size(); ++m) {
    const cvec& ghat = beams.codebook[m];
    for (std::size_t k = 0; k < geo.user_distances[m].size(); ++k) {
      UserRealization u;
      u.g = mathkit::sample_complex_gaussian_vector(cfg.n_antennas, rng);
      u.sin2_beta = sample_quantization_angle(cfg, rng);
      // error direction: isotropic in the nullspace of ghat_m
      cvec z = mathkit::sample_complex_gaussian_vector(cfg.n_antennas, rng);
      const cd proj = mathkit::vdot(ghat, z);
      for (int r = 0; r < cfg.n_antennas; ++r) z[r] -= proj * ghat[r];
      mathkit::normalize(z);
      u.e = std::move(z);
      real.users[m].push_back(std::move(u));
    }
  }
  for (int j = 0; j < cfg.eves; ++j) {
    real.eves.push_back(mathkit::sample_complex_gaussian_vector(cfg.n_antennas, rng));
  }
  return real;
}

double sinr_user(const SystemConfig& cfg, const NetworkGeometry& geo,
                 const ChannelRealization& real, const BeamformerSet& beams,
                 const std::vector<double>& theta, int m, int k) {
  if (m < 0 || m >= static_cast<int>(real.users.size()) || k < 0 ||
      k >= static_cast<int>(real.users[m].size())) {
    throw std::out_of_range("sinr_user: index out of range");
  }
  const UserRealization& u = real.users[m][k];
  const double gain = std::norm(mathkit::vdot(beams.beamformers[m], u.g));
  double intra = 0.0;
  for (int i = 0; i < k; ++i) intra += theta[i];
  intra *= gain;
  double residual = 0.0;
  for (int v = 0; v < cfg.clusters; ++v) {
    if (v == m) continue;
    residual += std::norm(mathkit::vdot(beams.beamformers[v], u.e));
  }
  residual *= cfg.cluster_power[m] * mathkit::norm_sq(u.g) * u.sin2_beta;
  const double den =
      std::max(intra + residual + 1.0 / geo.gamma_users[m][k], 1e-300);
  return gain * theta[k] / den;
}

double sinr_eve(const SystemConfig& cfg, const NetworkGeometry& geo,
                const ChannelRealization& real, const BeamformerSet& beams,
                const std::vector<double>& theta, int m, int k, int j) {
  if (m < 0 || m >= cfg.clusters || j < 0 ||
      j >= static_cast<int>(real.eves.size()) || k < 0 ||
      k >= static_cast<int>(theta.size())) {
    throw std::out_of_range("sinr_eve: index out of range");
  }
  const cvec& ge = real.eves[j];
  const double gain = std::norm(mathkit::vdot(beams.beamformers[m], ge));
  double intra = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (static_cast<int>(i) != k) intra += theta[i];
  }
  intra *= gain;
  double inter = 0.0;
  for (int v = 0; v < cfg.clusters; ++v) {
    if (v == m) continue;
    inter += std::norm(mathkit::vdot(beams.beamformers[v], ge));
  }
  inter *= cfg.cluster_power[m];
  const double den = std::max(intra + inter + 1.0 / geo.gamma_eves[j], 1e-300);
  return gain * theta[k] / den;
}

}  // namespace secnoma::channel
