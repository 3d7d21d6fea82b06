#include "secnoma/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace secnoma::optimizer {

namespace {

constexpr double kLn2 = 0.6931471805599453094172321;
constexpr double kInf = std::numeric_limits<double>::infinity();
// box edge for a solve that ignores the connection-outage cap:
// exp(-xi/(2 gamma)) has decayed to 1e-12 at xi = 2 gamma ln(1e12)
constexpr double kUncappedXiFactor = 2.0 * 27.631021115928547;

struct ThetaSums {
  std::vector<double> s_lt;  // sum_{i<k}
  double total = 0.0;
  explicit ThetaSums(const std::vector<double>& theta) : s_lt(theta.size()) {
    double acc = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      s_lt[k] = acc;
      acc += theta[k];
    }
    total = acc;
  }
  double s_le(const std::vector<double>& theta, int k) const {
    return s_lt[k] + theta[k];
  }
  double others(const std::vector<double>& theta, int k) const {
    return total - theta[k];
  }
};

double b_of(const Subproblem& sub, int k, double xi) {
  const double half = sub.cluster_power * sub.quant_scale / 2.0;
  return mathkit::exp_clamped(xi / (2.0 * sub.gamma[k])) *
         std::pow(1.0 + xi * half, sub.clusters - 1.0);
}

// f_k in bits; negative values are allowed, non-positive kappa denominators
// are the caller's infeasibility signal (quiet = sentinel, loud = throw)
double rate_term_quiet(const Subproblem& sub, const std::vector<double>& theta,
                       const ThetaSums& sums, int k, double xi, bool& ok) {
  const double den = sub.kappa[k] + sums.others(theta, k);
  if (den <= 0.0) {
    ok = false;
    return -kInf;
  }
  const double c = theta[k] / den;
  return (std::log1p(xi * sums.s_le(theta, k)) - std::log1p(xi * sums.s_lt[k]) -
          std::log1p(c)) /
         kLn2;
}

double rate_term_loud(const Subproblem& sub, const std::vector<double>& theta,
                      const ThetaSums& sums, int k, double xi) {
  bool ok = true;
  const double f = rate_term_quiet(sub, theta, sums, k, xi, ok);
  if (!ok) {
    throw InfeasibleError("subproblem m=" + std::to_string(sub.m) +
                          " j=" + std::to_string(sub.j) + " user " +
                          std::to_string(k) +
                          ": kappa + interfering power is non-positive");
  }
  return f;
}

enum class PgMode { kRateSum, kWeightedSum };

// kRateSum: smooth sum of the per-user rate terms (the power subproblem as
// stated). kWeightedSum: the connection-weighted clamped sum, i.e. the true
// objective at fixed xi; used inside the alternating loop so its trace is
// guaranteed nondecreasing.
double pg_value(const Subproblem& sub, const std::vector<double>& xi,
                const std::vector<double>& theta, PgMode mode, bool& ok) {
  const ThetaSums sums(theta);
  double total = 0.0;
  ok = true;
  for (int k = 0; k < sub.users(); ++k) {
    const double f = rate_term_quiet(sub, theta, sums, k, xi[k], ok);
    if (!ok) return -kInf;
    if (mode == PgMode::kRateSum) {
      total += f;
    } else if (f > 0.0) {
      total += f / b_of(sub, k, xi[k]);
    }
  }
  return total;
}

// Gradient of pg_value. Piecewise per user pair (i vs k), assembled with
// prefix/suffix sums in O(K).
std::vector<double> pg_gradient(const Subproblem& sub, const std::vector<double>& xi,
                                const std::vector<double>& theta, PgMode mode) {
  const int kk = sub.users();
  const ThetaSums sums(theta);
  std::vector<double> u(kk), v(kk), w(kk), omega(kk);
  for (int k = 0; k < kk; ++k) {
    const double den = sub.kappa[k] + sums.others(theta, k);
    if (den <= 0.0) throw std::domain_error("gradient: log argument non-positive");
    u[k] = xi[k] / (1.0 + xi[k] * sums.s_le(theta, k));
    v[k] = xi[k] / (1.0 + xi[k] * sums.s_lt[k]);
    w[k] = 1.0 / den;
    if (mode == PgMode::kRateSum) {
      omega[k] = 1.0;
    } else {
      bool ok = true;
      const double f = rate_term_quiet(sub, theta, sums, k, xi[k], ok);
      omega[k] = (ok && f > 0.0) ? 1.0 / b_of(sub, k, xi[k]) : 0.0;
    }
  }
  std::vector<double> grad(kk);
  double suffix = 0.0;  // sum_{k>i} omega_k (u_k - v_k + w_k)
  for (int i = kk - 1; i >= 0; --i) {
    grad[i] = suffix + omega[i] * u[i];
    suffix += omega[i] * (u[i] - v[i] + w[i]);
  }
  double prefix = 0.0;  // sum_{k<i} omega_k w_k
  for (int i = 0; i < kk; ++i) {
    grad[i] = (grad[i] + prefix) / kLn2;
    prefix += omega[i] * w[i];
  }
  return grad;
}


double g_value(const Subproblem& sub, const std::vector<double>& theta,
               const ThetaSums& sums, int k, double xi, double y) {
  bool ok = true;
  double f = rate_term_quiet(sub, theta, sums, k, xi, ok);
  if (!ok) throw InfeasibleError("g_value: infeasible kappa denominator");
  if (f < 0.0) f = 0.0;
  return 2.0 * y * std::sqrt(f) - y * y * b_of(sub, k, xi);
}

double dg_dxi(const Subproblem& sub, const std::vector<double>& theta,
              const ThetaSums& sums, int k, double xi, double y) {
  bool ok = true;
  const double f = rate_term_quiet(sub, theta, sums, k, xi, ok);
  if (!ok) throw InfeasibleError("dg_dxi: infeasible kappa denominator");
  if (f <= 0.0) return 1e100;  // below the positivity threshold g can only grow
  const double a_prime = theta[k] / ((1.0 + xi * sums.s_le(theta, k)) *
                                     (1.0 + xi * sums.s_lt[k]) * kLn2);
  const double bb = b_of(sub, k, xi);
  const double half = sub.cluster_power * sub.quant_scale / 2.0;
  const double b_prime =
      bb * (1.0 / (2.0 * sub.gamma[k]) +
            (sub.clusters - 1.0) * half / (1.0 + xi * half));
  return y * a_prime / std::sqrt(f) - y * y * b_prime;
}

// Q2 value at the current auxiliaries.
double q2_value(const Subproblem& sub, const SubproblemState& state) {
  const ThetaSums sums(state.theta);
  double total = 0.0;
  for (int k = 0; k < sub.users(); ++k) {
    total += g_value(sub, state.theta, sums, k, state.xi[k], state.y[k]);
  }
  return total;
}

// Users parked where the rate term is zero move to the positive-rate part of
// their box when one exists; the move can only raise the objective.
void relocate_zero_rate_users(const Subproblem& sub, SubproblemState& state) {
  const ThetaSums sums(state.theta);
  for (int k = 0; k < sub.users(); ++k) {
    bool ok = true;
    if (rate_term_quiet(sub, state.theta, sums, k, state.xi[k], ok) > 0.0 || !ok) {
      continue;
    }
    double above = 0.0;
    for (int i = k + 1; i < sub.users(); ++i) above += state.theta[i];
    const double thr_den = sub.kappa[k] + above;
    if (thr_den <= 0.0) continue;
    const double thr = 1.0 / thr_den;
    if (thr >= sub.xi_ub[k]) continue;
    const double probe = 0.5 * (thr + sub.xi_ub[k]);
    if (rate_term_quiet(sub, state.theta, sums, k, probe, ok) > 0.0) {
      state.xi[k] = probe;
    }
  }
}

PgResult pg_ascend(const Subproblem& sub, const std::vector<double>& xi,
                   const std::vector<double>& theta0, const SolverOptions& opts,
                   PgMode mode) {
  PgResult out;
  out.theta = theta0;
  const int kk = sub.users();
  if (kk == 1) {
    out.theta = {sub.cluster_power};
    out.converged = true;
    return out;
  }
  bool ok = true;
  double val = pg_value(sub, xi, out.theta, mode, ok);
  if (!ok) throw InfeasibleError("pg_ascend: infeasible starting point");
  out.trace.push_back(val);

  double last_relch = kInf;
  for (int iter = 1; iter <= opts.pg_cap; ++iter) {
    out.iterations = iter;
    std::vector<double> grad = pg_gradient(sub, xi, out.theta, mode);

    std::vector<double> probe(kk);
    for (int i = 0; i < kk; ++i) {
      probe[i] = out.theta[i] + opts.pg_residual_step * grad[i];
    }
    probe = project_simplex(probe, sub.cluster_power);
    double res = 0.0;
    for (int i = 0; i < kk; ++i) {
      const double d = probe[i] - out.theta[i];
      res += d * d;
    }
    res = std::sqrt(res) / opts.pg_residual_step;
    if ((res <= opts.pg_residual_tol && last_relch < opts.tol) ||
        res <= 1e-2 * opts.pg_residual_tol) {
      out.converged = true;
      break;
    }

    double step = opts.armijo_init;
    bool accepted = false;
    std::vector<double> cand;
    double cval = 0.0;
    for (int bt = 0; bt < opts.armijo_cap; ++bt) {
      cand.assign(kk, 0.0);
      for (int i = 0; i < kk; ++i) cand[i] = out.theta[i] + step * grad[i];
      cand = project_simplex(cand, sub.cluster_power);
      bool cok = true;
      cval = pg_value(sub, xi, cand, mode, cok);
      double ddot = 0.0;
      for (int i = 0; i < kk; ++i) ddot += grad[i] * (cand[i] - out.theta[i]);
      if (cok && std::isfinite(cval) &&
          cval >= val + opts.armijo_slope * ddot) {
        accepted = true;
        break;
      }
      step *= opts.armijo_shrink;
    }
    if (!accepted) {
      out.stalled = true;
      break;
    }
    last_relch = std::abs(cval - val) / std::max(1.0, std::abs(val));
    out.theta = cand;
    val = cval;
    out.trace.push_back(val);
  }
  return out;
}

void run_alg1(const Subproblem& sub, SubproblemState& state,
              const SolverOptions& opts, std::vector<double>* trace) {
  relocate_zero_rate_users(sub, state);
  double prev = -kInf;
  for (int it = 1; it <= opts.alg1_cap; ++it) {
    update_y(sub, state);
    update_xi(sub, state, opts.xi_tol);
    const double val = q2_value(sub, state);
    if (trace) trace->push_back(val);
    if (std::abs(val - prev) <= opts.tol * std::max(1.0, std::abs(prev))) break;
    prev = val;
  }
}

void run_tasks(int count, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (;;) {
          const int i = next.fetch_add(1);
          if (i >= count) return;
          fn(i);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

// ---------------------------------------------------------------------------

double xi_upper_bound(double gamma, double P_m, int M, int B, int N, double delta) {
  if (!(gamma > 0.0) || !(P_m > 0.0) || M < 1 || N < 2 || B < 0 ||
      !(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("xi_upper_bound: invalid parameters");
  }
  if (M == 1) return -2.0 * gamma * std::log1p(-delta);

  const double qs = std::exp2(static_cast<double>(B) / (N - 1));
  const double c = qs / (gamma * (M - 1) * P_m);
  const double ell = std::log(c) + c - std::log1p(-delta) / (M - 1);
  const double w = mathkit::lambert_w0_exp(ell);
  double xi = 2.0 * gamma * (M - 1) * w - 2.0 * qs / P_m;
  if (xi < 0.0) xi = 0.0;

  // Newton polish of the defining equation in log form; the closed form can
  // lose digits to cancellation when gamma is small
  const double half = P_m / (2.0 * qs);  // P_m 2^{-B/(N-1)} / 2
  const double target = std::log1p(-delta);
  for (int it = 0; it < 4; ++it) {
    const double h = -xi / (2.0 * gamma) + (1.0 - M) * std::log1p(xi * half) - target;
    const double hp = -1.0 / (2.0 * gamma) + (1.0 - M) * half / (1.0 + xi * half);
    const double dx = h / hp;
    xi -= dx;
    if (xi < 0.0) xi = 0.0;
    if (std::abs(dx) <= 1e-15 * std::max(1.0, xi)) break;
  }
  return std::max(xi, 0.0);
}

double connection_weight(const Subproblem& sub, int k, double xi) {
  const double half = sub.cluster_power * sub.quant_scale / 2.0;
  return mathkit::exp_clamped(-xi / (2.0 * sub.gamma[k])) *
         std::pow(1.0 + xi * half, 1.0 - sub.clusters);
}

double rate_term(const Subproblem& sub, const std::vector<double>& theta, int k,
                 double xi) {
  const ThetaSums sums(theta);
  return rate_term_loud(sub, theta, sums, k, xi);
}

double recovered_rate(double xi, const std::vector<double>& theta, int k) {
  double below = 0.0;
  for (int i = 0; i < k; ++i) below += theta[i];
  return std::log2(1.0 + xi * theta[k] / (1.0 + xi * below));
}

double objective(const Subproblem& sub, const SubproblemState& state,
                 bool cop_weighted) {
  const ThetaSums sums(state.theta);
  double total = 0.0;
  for (int k = 0; k < sub.users(); ++k) {
    const double f = rate_term_loud(sub, state.theta, sums, k, state.xi[k]);
    if (f <= 0.0) continue;
    total += cop_weighted ? f * connection_weight(sub, k, state.xi[k]) : f;
  }
  return total;
}

void update_y(const Subproblem& sub, SubproblemState& state) {
  const ThetaSums sums(state.theta);
  state.y.resize(state.xi.size());
  for (int k = 0; k < sub.users(); ++k) {
    double f = rate_term_loud(sub, state.theta, sums, k, state.xi[k]);
    if (f < 0.0) f = 0.0;
    state.y[k] = std::sqrt(f) / b_of(sub, k, state.xi[k]);
  }
}

void update_xi(const Subproblem& sub, SubproblemState& state, double xi_tol) {
  const ThetaSums sums(state.theta);
  for (int k = 0; k < sub.users(); ++k) {
    const double y = state.y[k];
    if (y <= 0.0) continue;  // flat objective: keep the incumbent
    double above = 0.0;
    for (int i = k + 1; i < sub.users(); ++i) above += state.theta[i];
    const double thr_den = sub.kappa[k] + above;
    if (thr_den <= 0.0) continue;
    const double thr = 1.0 / thr_den;
    const double ub = sub.xi_ub[k];
    if (thr >= ub) continue;
    const double lo = thr * (1.0 + 1e-9) + 1e-300;
    if (lo >= ub) continue;

    double xi_new;
    if (dg_dxi(sub, state.theta, sums, k, ub, y) >= 0.0) {
      xi_new = ub;  // stationary point beyond the box: cap
    } else {
      mathkit::RootBracket br;
      br.lo = lo;
      br.hi = ub;
      br.tol = xi_tol * std::max(1.0, ub);
      br.max_iter = 200;
      xi_new = mathkit::bisect(
          [&](double x) { return dg_dxi(sub, state.theta, sums, k, x, y); }, br);
    }
    if (g_value(sub, state.theta, sums, k, xi_new, y) >=
        g_value(sub, state.theta, sums, k, state.xi[k], y)) {
      state.xi[k] = xi_new;
    }
  }
}

std::vector<double> gradient_theta(const Subproblem& sub,
                                   const SubproblemState& state) {
  return pg_gradient(sub, state.xi, state.theta, PgMode::kRateSum);
}

std::vector<double> project_simplex(std::vector<double> v, double P_m) {
  const std::size_t n = v.size();
  if (n == 0) throw std::invalid_argument("project_simplex: empty vector");
  std::vector<bool> active(n, true);
  std::size_t n_active = n;
  for (;;) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (active[i]) sum += v[i];
    }
    const double shift = (sum - P_m) / static_cast<double>(n_active);
    bool clipped = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (active[i] && v[i] - shift < 0.0) {
        active[i] = false;
        --n_active;
        clipped = true;
      }
    }
    if (!clipped) {
      for (std::size_t i = 0; i < n; ++i) v[i] = active[i] ? v[i] - shift : 0.0;
      return v;
    }
    if (n_active == 0) {
      // all mass clipped (P_m <= 0 corner); put everything on the largest entry
      const std::size_t imax = static_cast<std::size_t>(
          std::max_element(v.begin(), v.end()) - v.begin());
      std::fill(v.begin(), v.end(), 0.0);
      v[imax] = P_m;
      return v;
    }
  }
}

PgResult update_theta_pg(const Subproblem& sub, const SubproblemState& state,
                         const SolverOptions& opts) {
  return pg_ascend(sub, state.xi, state.theta, opts, PgMode::kRateSum);
}

AmResult solve_subproblem_am(const Subproblem& sub, const SolverOptions& opts,
                             bool record_traces) {
  const int kk = sub.users();
  if (kk < 1) throw std::invalid_argument("solve_subproblem_am: empty cluster");

  AmResult out;
  out.state.theta.assign(kk, sub.cluster_power / kk);
  for (int k = 0; k < kk; ++k) {
    const double den = sub.kappa[k] + (sub.cluster_power - out.state.theta[k]);
    if (den <= 0.0) {
      throw InfeasibleError("subproblem m=" + std::to_string(sub.m) +
                            " j=" + std::to_string(sub.j) + " user " +
                            std::to_string(k) + " infeasible at the uniform split");
    }
  }
  out.state.xi.resize(kk);
  for (int k = 0; k < kk; ++k) out.state.xi[k] = sub.xi_ub[k] / 2.0;
  out.state.y.assign(kk, 0.0);

  out.trace.push_back(objective(sub, out.state, true));
  double prev = out.trace.back();

  for (int round = 1; round <= opts.am_cap; ++round) {
    out.rounds = round;
    run_alg1(sub, out.state, opts,
             (record_traces && round == 1) ? &out.alg1_trace : nullptr);
    out.trace.push_back(objective(sub, out.state, true));

    if (kk > 1) {
      PgResult pg =
          pg_ascend(sub, out.state.xi, out.state.theta, opts, PgMode::kWeightedSum);
      out.state.theta = pg.theta;
      if (record_traces && round == 1) out.pg_trace = pg.trace;
    }
    out.trace.push_back(objective(sub, out.state, true));

    const double cur = out.trace.back();
    const double relch = std::abs(cur - prev) / std::max(1.0, std::abs(prev));
    prev = cur;
    if (kk == 1) {
      // the power split is a single point; one exact block solve finishes
      out.converged = true;
      break;
    }
    if (relch < opts.tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

Subproblem make_subproblem(const SystemConfig& cfg, const NetworkGeometry& geo,
                           const BeamformerSet& beams, int m, int j,
                           const std::vector<double>& epsilon_k) {
  Subproblem sp;
  sp.m = m;
  sp.j = j;
  sp.gamma = geo.gamma_users[m];
  sp.gamma_e = geo.gamma_eves[j];
  sp.cluster_power = cfg.cluster_power[m];
  sp.clusters = cfg.clusters;
  sp.quant_scale = cfg.quant_error_scale();
  sp.delta = cfg.delta;
  const int kk = sp.users();
  if (static_cast<int>(epsilon_k.size()) != kk) {
    throw std::invalid_argument("make_subproblem: epsilon_k size mismatch");
  }
  sp.kappa.resize(kk);
  sp.xi_ub.resize(kk);
  for (int k = 0; k < kk; ++k) {
    sp.kappa[k] = outage::kappa(beams, cfg, sp.gamma_e, m, epsilon_k[k]);
    sp.xi_ub[k] = xi_upper_bound(sp.gamma[k], sp.cluster_power, cfg.clusters,
                                 cfg.feedback_bits, cfg.n_antennas, cfg.delta);
  }
  return sp;
}

RefineResult refine_epsilon_k_driver(
    const std::function<Subproblem(const std::vector<double>&)>& factory,
    const SystemConfig& cfg, const BeamformerSet& beams,
    const SolverOptions& opts, bool record_traces) {
  const double target = cfg.epsilon;
  const double z = opts.refine_resolution;

  // probe size from a first factory call at the loose end
  Subproblem probe = factory(std::vector<double>{});
  const int kk = probe.users();

  std::vector<double> lo(kk, target), hi(kk, 1.0), eps(kk), achieved(kk, 2.0);
  RefineResult out;
  bool have_solution = false;

  for (int round = 1; round <= opts.refine_cap; ++round) {
    out.rounds = round;
    for (int k = 0; k < kk; ++k) eps[k] = 0.5 * (lo[k] + hi[k]);
    Subproblem sub = factory(eps);

    AmResult am;
    try {
      am = solve_subproblem_am(sub, opts, record_traces && !have_solution);
    } catch (const InfeasibleError&) {
      // a too-small epsilon_k makes kappa too negative; push those users up
      bool moved = false;
      for (int k = 0; k < kk; ++k) {
        const double den =
            sub.kappa[k] + sub.cluster_power * (1.0 - 1.0 / kk);
        if (den <= 0.0) {
          lo[k] = eps[k];
          moved = true;
        }
      }
      if (!moved) {
        for (int k = 0; k < kk; ++k) lo[k] = eps[k];
      }
      continue;
    }

    bool all_ok = true;
    for (int k = 0; k < kk; ++k) {
      double p;
      bool feas = true;
      try {
        const double dt = outage::d_tilde(am.state.theta, sub.kappa[k], k);
        outage::SopInput si;
        si.redundancy = dt;
        si.theta = am.state.theta;
        si.k = k;
        si.gamma_e = sub.gamma_e;
        si.beams = &beams;
        si.m = sub.m;
        si.cluster_power = sub.cluster_power;
        p = outage::sop_closed_form(si);
      } catch (const InfeasibleError&) {
        feas = false;
        p = 1.0;
      }
      achieved[k] = p;
      if (!feas) {
        lo[k] = eps[k];  // infeasible tightening: raise epsilon_k
        all_ok = false;
        continue;
      }
      if (p < target) {
        lo[k] = eps[k];
      } else {
        hi[k] = eps[k];
      }
      if (std::abs(p - target) > z) all_ok = false;
    }

    out.am = std::move(am);
    out.epsilon_k = eps;
    out.achieved_sop = achieved;
    have_solution = true;
    if (all_ok) {
      out.converged = true;
      break;
    }
  }

  if (!have_solution) {
    throw InfeasibleError("epsilon_k refinement: no feasible tunable found");
  }

  // Safety valve: if the bisection collapsed onto the target and the achieved
  // outage still exceeds it, fall back to epsilon_k = epsilon and flag.
  bool fallback = false;
  std::vector<double> eps_fixed = out.epsilon_k;
  for (int k = 0; k < kk; ++k) {
    if (out.achieved_sop[k] > target + z && hi[k] - target < 1e-9) {
      eps_fixed[k] = target;
      fallback = true;
    }
  }
  if (fallback) {
    Subproblem sub = factory(eps_fixed);
    out.am = solve_subproblem_am(sub, opts, false);
    out.epsilon_k = eps_fixed;
    for (int k = 0; k < kk; ++k) {
      const double dt = outage::d_tilde(out.am.state.theta, sub.kappa[k], k);
      outage::SopInput si;
      si.redundancy = dt;
      si.theta = out.am.state.theta;
      si.k = k;
      si.gamma_e = sub.gamma_e;
      si.beams = &beams;
      si.m = sub.m;
      si.cluster_power = sub.cluster_power;
      out.achieved_sop[k] = outage::sop_closed_form(si);
    }
    out.tightening_failed = true;
  }
  return out;
}

RefineResult refine_epsilon_k(const SystemConfig& cfg, const NetworkGeometry& geo,
                              const BeamformerSet& beams, int m, int j,
                              const SolverOptions& opts, bool record_traces) {
  const int kk = geo.cluster_size(m);
  auto factory = [&, m, j](const std::vector<double>& eps) {
    std::vector<double> use = eps;
    if (use.empty()) use.assign(kk, 1.0);
    return make_subproblem(cfg, geo, beams, m, j, use);
  };
  return refine_epsilon_k_driver(factory, cfg, beams, opts, record_traces);
}

Solution solve_p2(const SystemConfig& cfg, const NetworkGeometry& geo,
                  const BeamformerSet& beams, const SolverOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  geo.validate();

  std::vector<std::pair<int, int>> tasks;
  for (int m = 0; m < cfg.clusters; ++m) {
    if (geo.cluster_size(m) == 0) continue;  // empty clusters are skipped
    for (int j = 0; j < cfg.eves; ++j) tasks.emplace_back(m, j);
  }

  Solution sol;
  std::vector<SubproblemReport> reports(tasks.size());
  run_tasks(static_cast<int>(tasks.size()), opts.workers, [&](int t) {
    const auto [m, j] = tasks[static_cast<std::size_t>(t)];
    SubproblemReport rep;
    rep.m = m;
    rep.j = j;
    const int kk = geo.cluster_size(m);
    try {
      RefineResult rr;
      if (opts.refine) {
        rr = refine_epsilon_k(cfg, geo, beams, m, j, opts, false);
      } else {
        std::vector<double> eps(kk, opts.fixed_epsilon_k);
        Subproblem sub = make_subproblem(cfg, geo, beams, m, j, eps);
        rr.am = solve_subproblem_am(sub, opts, false);
        rr.epsilon_k = eps;
        rr.converged = rr.am.converged;
        rr.achieved_sop.assign(kk, 0.0);
        for (int k = 0; k < kk; ++k) {
          const double dt = outage::d_tilde(rr.am.state.theta, sub.kappa[k], k);
          outage::SopInput si;
          si.redundancy = dt;
          si.theta = rr.am.state.theta;
          si.k = k;
          si.gamma_e = sub.gamma_e;
          si.beams = &beams;
          si.m = m;
          si.cluster_power = sub.cluster_power;
          rr.achieved_sop[k] = outage::sop_closed_form(si);
        }
      }
      Subproblem sub = make_subproblem(cfg, geo, beams, m, j, rr.epsilon_k);
      rep.state = rr.am.state;
      rep.epsilon_k = rr.epsilon_k;
      rep.achieved_sop = rr.achieved_sop;
      rep.kappa = sub.kappa;
      rep.xi_ub = sub.xi_ub;
      rep.trace = rr.am.trace;
      rep.alg1_trace = rr.am.alg1_trace;
      rep.pg_trace = rr.am.pg_trace;
      rep.objective = objective(sub, rr.am.state, true);
      rep.am_rounds = rr.am.rounds;
      rep.refine_rounds = rr.rounds;
      rep.converged = rr.am.converged;
      rep.tightening_failed = rr.tightening_failed;
    } catch (const InfeasibleError&) {
      rep.infeasible = true;  // contributes zero
      rep.objective = 0.0;
    }
    reports[static_cast<std::size_t>(t)] = std::move(rep);
  });

  // per-Eve totals; the operating point is the worst Eve's
  std::vector<double> totals(static_cast<std::size_t>(cfg.eves), 0.0);
  for (const auto& rep : reports) {
    totals[static_cast<std::size_t>(rep.j)] += rep.objective;
  }
  int jhat = 0;
  for (int j = 1; j < cfg.eves; ++j) {
    if (totals[static_cast<std::size_t>(j)] <
        totals[static_cast<std::size_t>(jhat)]) {
      jhat = j;
    }
  }

  sol.chosen_eve = jhat;
  sol.objective = totals[static_cast<std::size_t>(jhat)];
  for (const auto& rep : reports) {
    if (rep.j != jhat) continue;
    const int kk = geo.cluster_size(rep.m);
    for (int k = 0; k < kk; ++k) {
      UserAllocation row;
      row.m = rep.m;
      row.k = k;
      if (!rep.infeasible) {
        try {
          row.xi = rep.state.xi[k];
          row.theta = rep.state.theta[k];
          row.rate = recovered_rate(row.xi, rep.state.theta, k);
          row.redundancy = outage::d_tilde(rep.state.theta, rep.kappa[k], k);
          Subproblem sub;  // only the weight pieces are needed here
          sub.gamma = geo.gamma_users[rep.m];
          sub.cluster_power = cfg.cluster_power[rep.m];
          sub.clusters = cfg.clusters;
          sub.quant_scale = cfg.quant_error_scale();
          row.secure_term = connection_weight(sub, k, row.xi) *
                            std::max(row.rate - row.redundancy, 0.0);
        } catch (const InfeasibleError&) {
          row = UserAllocation{};
          row.m = rep.m;
          row.k = k;
        }
      }
      sol.rows.push_back(row);
    }
  }
  sol.reports = std::move(reports);
  sol.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

namespace detail {
void run_tasks_for_baselines(int count, int workers,
                             const std::function<void(int)>& fn) {
  run_tasks(count, workers, fn);
}
double uncapped_xi_edge(double gamma) { return kUncappedXiFactor * gamma; }
}  // namespace detail

}  // namespace secnoma::optimizer
