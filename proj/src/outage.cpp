#include "secnoma/outage.hpp"

#include <algorithm>
#include <cmath>

namespace secnoma::outage {

using mathkit::cd;
using mathkit::cvec;

double CopInput::quant_error_scale() const {
  return std::exp2(-static_cast<double>(feedback_bits) / (n_antennas - 1));
}

double CopInput::rate_margin() const {
  const double grow = std::exp2(rate) - 1.0;
  double below = 0.0;
  for (int i = 0; i < k; ++i) below += theta[i];
  return theta[k] - grow * below;
}

namespace {

McEstimate finish(long hits, long samples) {
  McEstimate est;
  est.samples = samples;
  est.estimate = static_cast<double>(hits) / static_cast<double>(samples);
  est.stderr_ = std::sqrt(est.estimate * (1.0 - est.estimate) /
                          static_cast<double>(samples));
  return est;
}

}  // namespace

double cop_closed_form(const CopInput& in) {
  if (in.rate < 0.0) throw std::invalid_argument("cop: rate >= 0");
  if (in.rate == 0.0) return 0.0;
  const double margin = in.rate_margin();
  if (margin <= 0.0) return 1.0;  // outage is certain
  const double grow = std::exp2(in.rate) - 1.0;
  const double i_val = grow / margin;
  const double scale = in.quant_error_scale();
  const double expo = mathkit::exp_clamped(-i_val / (2.0 * in.gamma));
  const double base = 1.0 + i_val * in.cluster_power * scale / 2.0;
  const double power = std::pow(base, 1.0 - in.clusters);
  return mathkit::clamp_probability(1.0 - expo * power);
}

McEstimate cop_monte_carlo(const CopInput& in, long samples, Rng& rng) {
  if (samples < 1) throw std::invalid_argument("cop_monte_carlo: samples >= 1");
  if (in.rate == 0.0) return McEstimate{0.0, 0.0, samples};
  const double margin = in.rate_margin();
  if (margin <= 0.0) return McEstimate{1.0, 0.0, samples};
  const double i_val = (std::exp2(in.rate) - 1.0) / margin;
  const double scale = in.quant_error_scale();
  const double inv_gamma = 1.0 / in.gamma;
  long hits = 0;
  for (long s = 0; s < samples; ++s) {
    const double x = rng.exponential(2.0);
    const double y =
        in.clusters > 1 ? rng.gamma(in.clusters - 1.0, scale) : 0.0;
    if (x < i_val * (in.cluster_power * y + inv_gamma)) ++hits;
  }
  return finish(hits, samples);
}

McEstimate cop_monte_carlo_vector(const CopInput& in, const BeamformerSet& beams,
                                  int m, long samples, Rng& rng) {
  if (samples < 1) throw std::invalid_argument("cop_monte_carlo: samples >= 1");
  if (in.rate == 0.0) return McEstimate{0.0, 0.0, samples};
  const int n = in.n_antennas;
  const int mm = in.clusters;
  const cvec& ghat = beams.codebook[m];
  const cvec& wm = beams.beamformers[m];

  double below = 0.0;
  for (int i = 0; i < in.k; ++i) below += in.theta[i];
  const double theta_k = in.theta[in.k];
  const double inv_gamma = 1.0 / in.gamma;
  const double sqrt2 = std::sqrt(2.0);

  long hits = 0;
  cvec h(n), z(n);
  for (long s = 0; s < samples; ++s) {
    // desired-signal gain, chi-square(2N) normalization: |h^H w_m|^2 ~ Exp(2)
    for (int r = 0; r < n; ++r) h[r] = sqrt2 * rng.complex_normal();
    const double gain = std::norm(mathkit::vdot(wm, h));

    // residual inter-cluster interference, one independent draw per cluster
    double resid = 0.0;
    for (int v = 0; v < mm; ++v) {
      if (v == m) continue;
      const double psi_norm_sq = rng.gamma(static_cast<double>(n), 1.0);
      const double s2b =
          in.quant_error_scale() * std::pow(rng.uniform01(), 1.0 / (n - 1));
      for (int r = 0; r < n; ++r) z[r] = rng.complex_normal();
      const cd proj = mathkit::vdot(ghat, z);
      // e_v = (z - proj ghat)/||.|| lies in the nullspace of ghat; w_v is
      // orthogonal to ghat already, so e_v^H w_v = z^H w_v / ||z - proj ghat||
      double perp_sq = mathkit::norm_sq(z) - std::norm(proj);
      if (perp_sq <= 0.0) perp_sq = 1e-300;
      const double cross = std::norm(mathkit::vdot(z, beams.beamformers[v])) / perp_sq;
      resid += psi_norm_sq * s2b * cross;
    }

    const double den = std::max(
        gain * below + in.cluster_power * resid + inv_gamma, 1e-300);
    const double rho = gain * theta_k / den;
    if (in.rate > std::log2(1.0 + rho)) ++hits;
  }
  return finish(hits, samples);
}

HermitianMatrix build_lambda(const SopInput& in) {
  if (in.redundancy < 0.0) throw std::invalid_argument("sop: D >= 0");
  const BeamformerSet& beams = *in.beams;
  const int n = static_cast<int>(beams.beamformers[in.m].size());
  const double thresh = std::exp2(in.redundancy) - 1.0;
  double others = 0.0;
  for (std::size_t i = 0; i < in.theta.size(); ++i) {
    if (static_cast<int>(i) != in.k) others += in.theta[i];
  }
  const double a = in.gamma_e * (in.theta[in.k] - thresh * others);
  const double b = in.gamma_e * in.cluster_power * thresh;

  HermitianMatrix lam(n);
  lam.add_outer(a, beams.beamformers[in.m]);
  for (std::size_t v = 0; v < beams.beamformers.size(); ++v) {
    if (static_cast<int>(v) == in.m) continue;
    lam.add_outer(-b, beams.beamformers[v]);
  }
  return lam;
}

double sop_closed_form(const SopInput& in) {
  HermitianMatrix lam = build_lambda(in);
  std::vector<double> ev = mathkit::hermitian_eigenvalues(lam);
  const int n = static_cast<int>(ev.size());
  double max_abs = 0.0;
  for (double v : ev) max_abs = std::max(max_abs, std::abs(v));
  if (max_abs <= 0.0) return 0.0;

  // separate near-coincident eigenvalues so the partial-fraction product
  // stays defined (deterministic relative jitter, largest first)
  for (int i = 1; i < n; ++i) {
    if (std::abs(ev[i] - ev[i - 1]) <= 1e-8 * std::max(std::abs(ev[i]), std::abs(ev[i - 1]))) {
      ev[i] = ev[i] - 1e-9 * std::abs(ev[i]) * i;
    }
  }

  const double pos_tol = 1e-12 * max_abs;
  const double thresh = std::exp2(in.redundancy) - 1.0;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (ev[i] <= pos_tol) continue;
    double prod = 1.0;
    for (int v = 0; v < n; ++v) {
      if (v == i) continue;
      prod *= 1.0 / (1.0 - ev[v] / ev[i]);
    }
    total += prod * mathkit::exp_clamped(-thresh / ev[i]);
  }
  return mathkit::clamp_probability(total);
}

McEstimate sop_monte_carlo(const SopInput& in, long samples, Rng& rng) {
  if (samples < 1) throw std::invalid_argument("sop_monte_carlo: samples >= 1");
  const BeamformerSet& beams = *in.beams;
  const int n = static_cast<int>(beams.beamformers[in.m].size());
  const int mm = static_cast<int>(beams.beamformers.size());
  const double thresh = std::exp2(in.redundancy) - 1.0;
  double others = 0.0;
  for (std::size_t i = 0; i < in.theta.size(); ++i) {
    if (static_cast<int>(i) != in.k) others += in.theta[i];
  }
  const double a = in.gamma_e * (in.theta[in.k] - thresh * others);
  const double b = in.gamma_e * in.cluster_power * thresh;

  long hits = 0;
  cvec g(n);
  for (long s = 0; s < samples; ++s) {
    for (int r = 0; r < n; ++r) g[r] = rng.complex_normal();
    double q = a * std::norm(mathkit::vdot(beams.beamformers[in.m], g));
    if (b != 0.0) {
      for (int v = 0; v < mm; ++v) {
        if (v == in.m) continue;
        q -= b * std::norm(mathkit::vdot(beams.beamformers[v], g));
      }
    }
    if (q > thresh) ++hits;
  }
  return finish(hits, samples);
}

double kappa(const BeamformerSet& beams, const SystemConfig& cfg, double gamma_e,
             int m, double epsilon_k) {
  if (!(epsilon_k > 0.0 && epsilon_k <= 1.0)) {
    throw std::invalid_argument("kappa: epsilon_k must lie in (0,1]");
  }
  const double log_term = std::log(1.0 / epsilon_k);
  const double root_term = std::sqrt(2.0 * log_term);

  const double tr_wm = mathkit::norm_sq(beams.beamformers[m]);
  double tr_perp = 0.0;
  double frob_sq = 0.0;
  const int mm = static_cast<int>(beams.beamformers.size());
  for (int u = 0; u < mm; ++u) {
    if (u == m) continue;
    tr_perp += mathkit::norm_sq(beams.beamformers[u]);
    for (int v = 0; v < mm; ++v) {
      if (v == m) continue;
      frob_sq += std::norm(mathkit::vdot(beams.beamformers[u], beams.beamformers[v]));
    }
  }
  const double frob = std::sqrt(frob_sq);

  const double num = 1.0 / gamma_e + cfg.cluster_power[m] * tr_perp -
                     cfg.cluster_power[m] * root_term * frob;
  const double den = (1.0 + log_term + root_term) * tr_wm;
  return num / den;
}

double d_tilde(const std::vector<double>& theta, double kappa_val, int k) {
  double others = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (static_cast<int>(i) != k) others += theta[i];
  }
  const double den = kappa_val + others;
  if (den <= 0.0) {
    throw InfeasibleError("d_tilde: secrecy tightening infeasible (kappa too negative)");
  }
  return std::log2(1.0 + theta[k] / den);
}

}  // namespace secnoma::outage
