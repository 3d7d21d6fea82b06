#include <cmath>

#include "doctest.h"
#include "secnoma/optimizer.hpp"
#include "testutil.hpp"

using namespace secnoma;
using channel::BeamformerSet;
using channel::NetworkGeometry;
using channel::SystemConfig;
using mathkit::Rng;
using optimizer::SolverOptions;
using optimizer::Subproblem;
using optimizer::SubproblemState;

namespace {

// hand-built subproblem with direct control over every constant
Subproblem toy_subproblem(std::vector<double> gamma, std::vector<double> kappa,
                          double cluster_power = 1.0, int clusters = 2,
                          double qscale = 0.5, double delta = 0.5) {
  Subproblem sp;
  sp.gamma = std::move(gamma);
  sp.kappa = std::move(kappa);
  sp.cluster_power = cluster_power;
  sp.clusters = clusters;
  sp.quant_scale = qscale;
  sp.delta = delta;
  sp.gamma_e = 1.0;
  // back out feedback bits/antennas consistent with qscale = 2^{-B/(N-1)}
  int b = 0;
  while ((1 << b) < clusters) ++b;
  const int n = 16;
  for (double g : sp.gamma) {
    sp.xi_ub.push_back(
        optimizer::xi_upper_bound(g, cluster_power, clusters, b, n, delta));
  }
  // xi_upper_bound above used 2^{-B/(N-1)} from (b, n); recompute against the
  // requested qscale by solving the defining equation directly when they differ
  const double native = std::exp2(-double(b) / (n - 1));
  if (std::abs(native - qscale) > 1e-15 && clusters > 1) {
    for (std::size_t k = 0; k < sp.gamma.size(); ++k) {
      auto q = [&](double xi) {
        return std::exp(-xi / (2.0 * sp.gamma[k])) *
                   std::pow(1.0 + xi * cluster_power * qscale / 2.0,
                            1.0 - clusters) -
               (1.0 - delta);
      };
      double hi = 1.0;
      while (q(hi) > 0.0) hi *= 2.0;
      sp.xi_ub[k] = mathkit::bisect(q, {0.0, hi, 1e-13, 400});
    }
  }
  return sp;
}

SystemConfig small_config(int n, int b, int eves) {
  SystemConfig cfg;
  cfg.n_antennas = n;
  cfg.feedback_bits = b;
  cfg.clusters = 1 << b;
  cfg.eves = eves;
  cfg.power = 10.0;
  cfg.noise_user = 1.0;
  cfg.noise_eve = 3.162;
  cfg.delta = 0.5;
  cfg.epsilon = 0.1;
  cfg.cluster_power.assign(static_cast<std::size_t>(cfg.clusters),
                           1.0 / cfg.clusters);
  return cfg;
}

struct SmallSystem {
  SystemConfig cfg;
  NetworkGeometry geo;
  BeamformerSet beams;
};

SmallSystem small_system(std::uint64_t seed, int eves = 2) {
  SmallSystem sys;
  sys.cfg = small_config(8, 1, eves);
  Rng rng(seed);
  sys.beams = channel::generate_codebook_and_beamformers(sys.cfg, rng);
  std::vector<double> eve_d;
  for (int j = 0; j < eves; ++j) eve_d.push_back(10.0 / (j + 1));
  sys.geo = channel::build_geometry(sys.cfg, {{4.0, 9.0}, {6.0}}, eve_d);
  return sys;
}

double brute_force_best_g(const Subproblem& sub, const std::vector<double>& theta,
                          int k, double y, long points) {
  // dense scan of g over [0, xi_ub]; independent of the bisection path
  double best = -1e300;
  for (long i = 0; i <= points; ++i) {
    const double xi = sub.xi_ub[static_cast<std::size_t>(k)] * i / points;
    double f = optimizer::rate_term(sub, theta, k, xi);
    if (f < 0.0) f = 0.0;
    const double g = 2.0 * y * std::sqrt(f) -
                     y * y / optimizer::connection_weight(sub, k, xi);
    best = std::max(best, g);
  }
  return best;
}

}  // namespace

TEST_CASE("xi_upper_bound satisfies its defining equation") {
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    const double gamma = std::pow(10.0, -4.0 + 7.0 * rng.uniform01());
    const int m = 1 << (rng.next_u64() % 4);  // 1, 2, 4, 8
    const double pm = 1.0 / m;
    const int b = std::max(1, static_cast<int>(rng.next_u64() % 4));
    const int n = 8 + static_cast<int>(rng.next_u64() % 9);
    const double delta = 0.01 + 0.94 * rng.uniform01();
    const double xi = optimizer::xi_upper_bound(gamma, pm, m, b, n, delta);
    CHECK(xi >= 0.0);
    const double q =
        std::exp(-xi / (2.0 * gamma)) *
        std::pow(1.0 + xi * pm * std::exp2(-double(b) / (n - 1)) / 2.0, 1.0 - m);
    CHECK(std::abs(q - (1.0 - delta)) <= 1e-10);
  }
}

TEST_CASE("xi_upper_bound anchors") {
  // vanishing outage budget forces a vanishing box
  CHECK(optimizer::xi_upper_bound(10.0, 0.25, 4, 2, 16, 1e-12) <= 1e-9);

  // reference instance against an independent bisection root
  const double gamma = 10.0, pm = 0.25, delta = 0.5;
  const double got = optimizer::xi_upper_bound(gamma, pm, 4, 2, 16, delta);
  const double scale = std::exp2(-2.0 / 15.0);
  auto q = [&](double xi) {
    return std::exp(-xi / (2.0 * gamma)) *
               std::pow(1.0 + xi * pm * scale / 2.0, -3.0) -
           (1.0 - delta);
  };
  double hi = 1.0;
  while (q(hi) > 0.0) hi *= 2.0;
  const double root = mathkit::bisect(q, {0.0, hi, 1e-13, 400});
  CHECK(std::abs(got - root) <= 1e-9 * std::max(1.0, got));

  // single-cluster branch solves the exponential-only equation
  const double m1 = optimizer::xi_upper_bound(3.0, 1.0, 1, 1, 8, 0.3);
  CHECK(m1 == doctest::Approx(-2.0 * 3.0 * std::log1p(-0.3)).epsilon(1e-12));
}

TEST_CASE("objective anchors and the outage-rate identity") {
  Subproblem sub = toy_subproblem({5.0, 2.0}, {0.8, 0.6});
  SubproblemState st;
  st.theta = {0.4, 0.6};

  st.xi = {0.0, 0.0};
  CHECK(optimizer::objective(sub, st, true) == 0.0);

  // each term is (1 - cop) * (R - Dtilde) with the auxiliary as outage ratio
  st.xi = {0.7 * sub.xi_ub[0], 0.5 * sub.xi_ub[1]};
  double hand = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double rate =
        optimizer::recovered_rate(st.xi[static_cast<std::size_t>(k)], st.theta, k);
    outage::CopInput ci;
    ci.rate = rate;
    ci.theta = st.theta;
    ci.k = k;
    ci.gamma = sub.gamma[static_cast<std::size_t>(k)];
    ci.cluster_power = sub.cluster_power;
    ci.clusters = sub.clusters;
    ci.feedback_bits = 1;
    ci.n_antennas = 2;  // 2^{-1/1} = 0.5 matches the toy quantization scale
    const double dt =
        outage::d_tilde(st.theta, sub.kappa[static_cast<std::size_t>(k)], k);
    hand += (1.0 - outage::cop_closed_form(ci)) * std::max(rate - dt, 0.0);
  }
  CHECK(optimizer::objective(sub, st, true) == doctest::Approx(hand).epsilon(1e-12));
}

TEST_CASE("update_y anchors and the ratio-transform tightness") {
  // kappa large enough that both users have a positive-rate region in the box
  Subproblem sub = toy_subproblem({5.0, 2.0}, {1.5, 2.0}, 1.0, 2, 0.5, 0.7);
  SubproblemState st;
  st.theta = {0.4, 0.6};
  st.xi = {0.0, 0.6 * sub.xi_ub[1]};
  optimizer::update_y(sub, st);
  CHECK(st.y[0] == 0.0);  // zero rate term at xi = 0
  CHECK(st.y[1] > 0.0);

  // sum of g at the optimal auxiliaries equals the weighted objective exactly
  st.xi = {0.5 * sub.xi_ub[0], 0.9 * sub.xi_ub[1]};
  optimizer::update_y(sub, st);
  double q2 = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    double f = optimizer::rate_term(sub, st.theta, static_cast<int>(k), st.xi[k]);
    if (f < 0.0) f = 0.0;
    const double b =
        1.0 / optimizer::connection_weight(sub, static_cast<int>(k), st.xi[k]);
    q2 += 2.0 * st.y[k] * std::sqrt(f) - st.y[k] * st.y[k] * b;
  }
  CHECK(q2 == doctest::Approx(optimizer::objective(sub, st, true)).epsilon(1e-12));
}

TEST_CASE("update_xi maximizes each concave coordinate") {
  Subproblem sub = toy_subproblem({8.0}, {0.9}, 1.0, 2, 0.5, 0.6);
  SubproblemState st;
  st.theta = {1.0};
  st.xi = {0.3 * sub.xi_ub[0]};
  optimizer::update_y(sub, st);
  REQUIRE(st.y[0] > 0.0);
  const double y = st.y[0];
  optimizer::update_xi(sub, st, 1e-12);

  const double got =
      2.0 * y *
          std::sqrt(std::max(optimizer::rate_term(sub, st.theta, 0, st.xi[0]), 0.0)) -
      y * y / optimizer::connection_weight(sub, 0, st.xi[0]);
  const double best = brute_force_best_g(sub, st.theta, 0, y, 1000000);
  CHECK(got >= best - 1e-8);

  // flat coordinate keeps its incumbent
  SubproblemState frozen;
  frozen.theta = {1.0};
  frozen.xi = {0.2};
  frozen.y = {0.0};
  optimizer::update_xi(sub, frozen, 1e-12);
  CHECK(frozen.xi[0] == 0.2);
}

TEST_CASE("gradient matches hand derivatives for one user") {
  Subproblem sub = toy_subproblem({5.0}, {0.9}, 1.0, 2);
  SubproblemState st;
  st.theta = {1.0};
  st.xi = {1.3};
  const auto g = optimizer::gradient_theta(sub, st);
  CHECK(g[0] == doctest::Approx(st.xi[0] / (1.0 + st.xi[0] * st.theta[0]) /
                                std::log(2.0))
                    .epsilon(1e-12));
}

TEST_CASE("gradient reduces to the secrecy pieces at xi = 0") {
  Subproblem sub = toy_subproblem({5.0, 3.0, 2.0}, {0.9, 0.7, 0.5});
  SubproblemState st;
  st.theta = {0.2, 0.3, 0.5};
  st.xi = {0.0, 0.0, 0.0};
  const auto g = optimizer::gradient_theta(sub, st);
  for (int i = 0; i < 3; ++i) {
    double hand = 0.0;
    for (int k = 0; k < 3; ++k) {
      if (k == i) continue;
      hand += 1.0 / (sub.kappa[static_cast<std::size_t>(k)] +
                     (1.0 - st.theta[static_cast<std::size_t>(k)]));
    }
    CHECK(g[static_cast<std::size_t>(i)] ==
          doctest::Approx(hand / std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("gradient matches central finite differences") {
  Rng rng(61);
  for (int trial = 0; trial < 30; ++trial) {
    const int kk = 2 + static_cast<int>(rng.next_u64() % 4);  // 2..5
    std::vector<double> gamma, kap, theta;
    double sum = 0.0;
    for (int k = 0; k < kk; ++k) {
      gamma.push_back(std::pow(10.0, 2.0 * rng.uniform01()));
      kap.push_back(0.1 + 5.0 * rng.uniform01());
      const double t = 0.05 + rng.uniform01();
      theta.push_back(t);
      sum += t;
    }
    for (auto& t : theta) t /= sum;
    Subproblem sub = toy_subproblem(gamma, kap);
    SubproblemState st;
    st.theta = theta;
    for (int k = 0; k < kk; ++k) st.xi.push_back(0.1 + 20.0 * rng.uniform01());

    const auto grad = optimizer::gradient_theta(sub, st);
    // the sum form whose gradient is piecewise in the user index: the
    // log(kappa + P_m) piece is a constant there, so the secrecy term enters
    // as +log(kappa_k + sum_{i != k} theta_i)
    const auto fd = mathkit::finite_difference_gradient(
        [&](const std::vector<double>& th) {
          double total = 0.0;
          double all = 0.0;
          for (double t : th) all += t;
          for (std::size_t k = 0; k < static_cast<std::size_t>(kk); ++k) {
            double below = 0.0;
            for (std::size_t i = 0; i < k; ++i) below += th[i];
            const double xi = st.xi[k];
            total += std::log1p(xi * (below + th[k])) - std::log1p(xi * below) +
                     std::log(sub.kappa[k] + (all - th[k]));
          }
          return total / std::log(2.0);
        },
        st.theta, 1e-6);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(kk); ++i) {
      num += (grad[i] - fd[i]) * (grad[i] - fd[i]);
      den += grad[i] * grad[i];
    }
    CHECK(std::sqrt(num) <= 1e-5 * std::max(1.0, std::sqrt(den)));
  }
}

TEST_CASE("simplex projection") {
  const auto same = optimizer::project_simplex({0.25, 0.75}, 1.0);
  CHECK(same[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(same[1] == doctest::Approx(0.75).epsilon(1e-15));

  const auto sym = optimizer::project_simplex({0.6, 0.6}, 1.0);
  CHECK(sym[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sym[1] == doctest::Approx(0.5).epsilon(1e-12));

  const auto clipped = optimizer::project_simplex({1.0, -0.5, 0.1}, 1.0);
  const auto oracle = testutil::simplex_projection_sorted({1.0, -0.5, 0.1}, 1.0);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(clipped[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
  }

  Rng rng(71);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 6);
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(-1.0 + 3.0 * rng.uniform01());
    const double total = 0.25 + rng.uniform01();
    const auto got = optimizer::project_simplex(v, total);
    const auto want = testutil::simplex_projection_sorted(v, total);
    double sum = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
      CHECK(std::abs(got[i] - want[i]) <= 1e-10);
      CHECK(got[i] >= 0.0);
      sum += got[i];
    }
    CHECK(sum == doctest::Approx(total).epsilon(1e-10));
  }
}

TEST_CASE("projected gradient on the power split") {
  SolverOptions opts;

  // K = 1: the simplex is a single point
  Subproblem one = toy_subproblem({5.0}, {0.9});
  SubproblemState st1;
  st1.theta = {1.0};
  st1.xi = {1.0};
  const auto r1 = optimizer::update_theta_pg(one, st1, opts);
  CHECK(r1.converged);
  CHECK(r1.theta[0] == doctest::Approx(1.0).epsilon(1e-15));

  // K = 2 random instance against a dense grid on the 1-simplex
  Subproblem sub = toy_subproblem({6.0, 2.5}, {0.9, 0.7});
  SubproblemState st;
  st.theta = {0.5, 0.5};
  st.xi = {0.8 * sub.xi_ub[0], 0.6 * sub.xi_ub[1]};
  const auto res = optimizer::update_theta_pg(sub, st, opts);
  CHECK_FALSE(res.stalled);
  double pg_val = 0.0;
  for (int k = 0; k < 2; ++k) {
    pg_val += optimizer::rate_term(sub, res.theta, k, st.xi[static_cast<std::size_t>(k)]);
  }
  double grid_best = -1e300;
  const long points = 100000;
  for (long i = 0; i <= points; ++i) {
    const double t0 = static_cast<double>(i) / points;
    const std::vector<double> th{t0, 1.0 - t0};
    bool ok = true;
    double v = 0.0;
    for (int k = 0; k < 2; ++k) {
      if (sub.kappa[static_cast<std::size_t>(k)] +
              (1.0 - th[static_cast<std::size_t>(k)]) <=
          0.0) {
        ok = false;
        break;
      }
      v += optimizer::rate_term(sub, th, k, st.xi[static_cast<std::size_t>(k)]);
    }
    if (ok) grid_best = std::max(grid_best, v);
  }
  CHECK(pg_val >= grid_best - 1e-3);

  // restarting at the solution moves at most residual-scale
  SubproblemState at_opt;
  at_opt.theta = res.theta;
  at_opt.xi = st.xi;
  const auto res2 = optimizer::update_theta_pg(sub, at_opt, opts);
  CHECK(res2.converged);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(std::abs(res2.theta[k] - res.theta[k]) <= 2e-3);
  }

  // an exactly stationary start returns unchanged: by symmetry the gradient
  // of a fully symmetric instance is uniform, which the projection annihilates
  Subproblem symm = toy_subproblem({3.0, 3.0}, {0.9, 0.9});
  SubproblemState st_sym;
  st_sym.theta = {0.5, 0.5};
  st_sym.xi = {1.0, 1.0};
  const auto rs = optimizer::update_theta_pg(symm, st_sym, opts);
  CHECK(rs.converged);
  CHECK(rs.iterations <= 1);
  CHECK(rs.theta[0] == 0.5);
  CHECK(rs.theta[1] == 0.5);

  // the projected-gradient residual is small at termination
  SubproblemState fin;
  fin.theta = res.theta;
  fin.xi = st.xi;
  const auto grad = optimizer::gradient_theta(sub, fin);
  std::vector<double> probe(2);
  for (std::size_t i = 0; i < 2; ++i) {
    probe[i] = res.theta[i] + 1e-4 * grad[i];
  }
  const auto proj = optimizer::project_simplex(probe, 1.0);
  double resid = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const double d = proj[i] - res.theta[i];
    resid += d * d;
  }
  CHECK(std::sqrt(resid) / 1e-4 <= 1e-3);
}

TEST_CASE("alternating solve: one user converges in one round") {
  Subproblem sub = toy_subproblem({4.0}, {0.8});
  SolverOptions opts;
  const auto res = optimizer::solve_subproblem_am(sub, opts);
  CHECK(res.converged);
  CHECK(res.rounds == 1);
  CHECK(res.state.theta[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(res.state.xi[0] <= sub.xi_ub[0] + 1e-12);
}

TEST_CASE("alternating solve: monotone trace on seeded instances") {
  Rng rng(81);
  SolverOptions opts;
  for (int trial = 0; trial < 25; ++trial) {
    const int kk = 1 + static_cast<int>(rng.next_u64() % 4);
    std::vector<double> gamma, kap;
    for (int k = 0; k < kk; ++k) {
      gamma.push_back(std::pow(10.0, -1.0 + 3.0 * rng.uniform01()));
      kap.push_back(0.3 + 3.0 * rng.uniform01());
    }
    Subproblem sub = toy_subproblem(gamma, kap, 1.0, 4, 0.7, 0.5);
    const auto res = optimizer::solve_subproblem_am(sub, opts);
    CHECK(res.converged);
    CHECK(res.rounds <= opts.am_cap);
    for (std::size_t i = 1; i < res.trace.size(); ++i) {
      CHECK(res.trace[i] >= res.trace[i - 1] - 1e-9);
    }
  }
}

TEST_CASE("connection-outage budget holds at the solution") {
  Rng rng(82);
  SolverOptions opts;
  for (int trial = 0; trial < 10; ++trial) {
    const int kk = 1 + static_cast<int>(rng.next_u64() % 3);
    std::vector<double> gamma, kap;
    for (int k = 0; k < kk; ++k) {
      gamma.push_back(std::pow(10.0, 2.0 * rng.uniform01()));
      kap.push_back(0.3 + 2.0 * rng.uniform01());
    }
    const double delta = 0.4;
    Subproblem sub = toy_subproblem(gamma, kap, 1.0, 4, 0.7, delta);
    const auto res = optimizer::solve_subproblem_am(sub, opts);
    for (std::size_t k = 0; k < static_cast<std::size_t>(kk); ++k) {
      const double xi = res.state.xi[k];
      CHECK(xi <= sub.xi_ub[k] * (1.0 + 1e-12));
      const double cop = 1.0 - optimizer::connection_weight(sub, static_cast<int>(k), xi);
      if (std::abs(xi - sub.xi_ub[k]) <= 1e-9 * std::max(1.0, sub.xi_ub[k])) {
        CHECK(cop == doctest::Approx(delta).epsilon(1e-6));
      } else {
        CHECK(cop <= delta + 1e-9);
      }
    }
  }
}

TEST_CASE("refinement drives the achieved secrecy outage to the target") {
  SmallSystem sys = small_system(5, 1);
  SolverOptions opts;
  const auto rr =
      optimizer::refine_epsilon_k(sys.cfg, sys.geo, sys.beams, 0, 0, opts);
  CHECK(rr.rounds <= opts.refine_cap);
  for (std::size_t k = 0; k < rr.achieved_sop.size(); ++k) {
    if (rr.converged) {
      CHECK(std::abs(rr.achieved_sop[k] - sys.cfg.epsilon) <=
            opts.refine_resolution + 1e-12);
    }
    CHECK(rr.epsilon_k[k] >= sys.cfg.epsilon - 1e-12);
    CHECK(rr.epsilon_k[k] <= 1.0);
  }
}

TEST_CASE("achieved secrecy outage is nondecreasing in the tunable") {
  SmallSystem sys = small_system(6, 1);
  SolverOptions opts;
  opts.refine = false;
  double prev = -1.0;
  for (double eps_k : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
    std::vector<double> eps(2, eps_k);
    const auto sub =
        optimizer::make_subproblem(sys.cfg, sys.geo, sys.beams, 0, 0, eps);
    const auto am = optimizer::solve_subproblem_am(sub, opts);
    const double dt = outage::d_tilde(am.state.theta, sub.kappa[0], 0);
    outage::SopInput si;
    si.redundancy = dt;
    si.theta = am.state.theta;
    si.k = 0;
    si.gamma_e = sub.gamma_e;
    si.beams = &sys.beams;
    si.m = 0;
    si.cluster_power = sub.cluster_power;
    const double p = outage::sop_closed_form(si);
    CHECK(p >= prev - 0.01);
    prev = p;
  }
}

TEST_CASE("full solve: single Eve, rows, and worker determinism") {
  SmallSystem sys = small_system(7, 1);
  SolverOptions opts;
  const auto sol = optimizer::solve_p2(sys.cfg, sys.geo, sys.beams, opts);
  CHECK(sol.chosen_eve == 0);
  CHECK(sol.objective >= 0.0);
  REQUIRE(sol.rows.size() == 3);
  for (const auto& row : sol.rows) {
    CHECK(row.rate >= 0.0);
    CHECK(row.secure_term >= 0.0);
  }

  SmallSystem sys2 = small_system(8, 2);
  SolverOptions opt1 = opts;
  opt1.workers = 1;
  SolverOptions opt4 = opts;
  opt4.workers = 4;
  const auto a = optimizer::solve_p2(sys2.cfg, sys2.geo, sys2.beams, opt1);
  const auto b = optimizer::solve_p2(sys2.cfg, sys2.geo, sys2.beams, opt4);
  CHECK(a.objective == b.objective);
  CHECK(a.chosen_eve == b.chosen_eve);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].xi == b.rows[i].xi);
    CHECK(a.rows[i].theta == b.rows[i].theta);
    CHECK(a.rows[i].rate == b.rows[i].rate);
  }
}

TEST_CASE("duplicate Eves tie toward the lowest index") {
  SmallSystem sys = small_system(9, 2);
  sys.geo.eve_distances[1] = sys.geo.eve_distances[0];
  sys.geo.gamma_eves[1] = sys.geo.gamma_eves[0];
  SolverOptions opts;
  const auto sol = optimizer::solve_p2(sys.cfg, sys.geo, sys.beams, opts);
  CHECK(sol.chosen_eve == 0);
}

TEST_CASE("empty clusters are skipped") {
  SmallSystem sys = small_system(10, 1);
  sys.geo.user_distances = {{4.0, 9.0}, {}};
  sys.geo.gamma_users[1].clear();
  SolverOptions opts;
  const auto sol = optimizer::solve_p2(sys.cfg, sys.geo, sys.beams, opts);
  CHECK(sol.rows.size() == 2);
  for (const auto& rep : sol.reports) CHECK(rep.m == 0);
}
