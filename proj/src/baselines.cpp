#include "secnoma/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace secnoma::baselines {

using channel::InfeasibleError;
using optimizer::SubproblemReport;
using optimizer::SubproblemState;
using optimizer::UserAllocation;

namespace {

long lattice_count(int n, int k) {
  // compositions of n into k nonnegative parts: C(n+k-1, k-1)
  long c = 1;
  for (int i = 1; i < k; ++i) c = c * (n + i) / i;
  return c;
}

template <typename Fn>
void for_each_composition(int n, int k, Fn&& fn) {
  std::vector<int> c(static_cast<std::size_t>(k), 0);
  c[0] = n;
  for (;;) {
    fn(c);
    // next composition in colex order
    int i = 0;
    while (i < k - 1 && c[i] == 0) ++i;
    if (i == k - 1) break;
    const int head = c[i];
    c[i] = 0;
    c[0] = head - 1;
    ++c[i + 1];
  }
}

}  // namespace

GridBest grid_oracle(const Subproblem& sub, const GridSpec& grid) {
  const int kk = sub.users();
  if (kk < 1 || kk > 3) {
    throw std::invalid_argument("grid_oracle: supports clusters of up to 3 users");
  }
  const int n = grid.points_per_axis;
  if (n < 1) throw std::invalid_argument("grid_oracle: points_per_axis >= 1");

  const long lattice = grid.grid_theta ? lattice_count(n, kk) : 1;
  const long xi_points = grid.grid_xi ? (n + 1) : 1;
  if (lattice * kk * xi_points > 100'000'000L) {
    throw std::length_error("grid_oracle: grid exceeds the evaluation budget");
  }

  GridBest best;
  best.objective = -1.0;

  std::vector<double> theta(static_cast<std::size_t>(kk));
  std::vector<double> xi_best(static_cast<std::size_t>(kk));
  long evals = 0;

  auto scan_theta = [&](const std::vector<double>& th) {
    // kappa feasibility at this lattice point
    double total = 0.0;
    for (double t : th) total += t;
    for (int k = 0; k < kk; ++k) {
      if (sub.kappa[k] + (total - th[k]) <= 0.0) return;  // skipped
    }
    double value = 0.0;
    for (int k = 0; k < kk; ++k) {
      double bk = 0.0, bx = 0.0;
      if (grid.grid_xi) {
        for (int i = 0; i <= n; ++i) {
          const double x = sub.xi_ub[k] * i / n;
          ++evals;
          const double f = optimizer::rate_term(sub, th, k, x);
          if (f <= 0.0) continue;
          const double term = f * optimizer::connection_weight(sub, k, x);
          if (term > bk) {
            bk = term;
            bx = x;
          }
        }
      } else {
        bx = sub.xi_ub[k] / 2.0;
        ++evals;
        const double f = optimizer::rate_term(sub, th, k, bx);
        bk = f > 0.0 ? f * optimizer::connection_weight(sub, k, bx) : 0.0;
      }
      value += bk;
      xi_best[static_cast<std::size_t>(k)] = bx;
    }
    if (value > best.objective) {
      best.objective = value;
      best.theta = th;
      best.xi = xi_best;
    }
  };

  if (grid.grid_theta) {
    for_each_composition(n, kk, [&](const std::vector<int>& c) {
      for (int k = 0; k < kk; ++k) {
        theta[static_cast<std::size_t>(k)] =
            sub.cluster_power * c[static_cast<std::size_t>(k)] / n;
      }
      scan_theta(theta);
    });
  } else {
    std::fill(theta.begin(), theta.end(), sub.cluster_power / kk);
    scan_theta(theta);
  }

  best.evaluations = evals;
  if (best.objective < 0.0) best.objective = 0.0;
  return best;
}

namespace {

optimizer::Subproblem single_user_subproblem(const SystemConfig& cfg,
                                             const NetworkGeometry& geo,
                                             const BeamformerSet& beams, int m,
                                             int j, int k, double epsilon_k) {
  optimizer::Subproblem sp;
  sp.m = m;
  sp.j = j;
  sp.gamma = {geo.gamma_users[m][static_cast<std::size_t>(k)]};
  sp.gamma_e = geo.gamma_eves[static_cast<std::size_t>(j)];
  sp.cluster_power = cfg.cluster_power[static_cast<std::size_t>(m)];
  sp.clusters = cfg.clusters;
  sp.quant_scale = cfg.quant_error_scale();
  sp.delta = cfg.delta;
  sp.kappa = {outage::kappa(beams, cfg, sp.gamma_e, m, epsilon_k)};
  sp.xi_ub = {optimizer::xi_upper_bound(sp.gamma[0], sp.cluster_power,
                                        cfg.clusters, cfg.feedback_bits,
                                        cfg.n_antennas, cfg.delta)};
  return sp;
}

}  // namespace

Solution tdma_baseline(const SystemConfig& cfg, const NetworkGeometry& geo,
                       const BeamformerSet& beams, const SolverOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  geo.validate();

  struct Task {
    int m, j, k;
  };
  std::vector<Task> tasks;
  for (int m = 0; m < cfg.clusters; ++m) {
    for (int k = 0; k < geo.cluster_size(m); ++k) {
      for (int j = 0; j < cfg.eves; ++j) tasks.push_back({m, j, k});
    }
  }

  struct UserResult {
    double xi = 0.0, term = 0.0, rate = 0.0, redundancy = 0.0;
    bool infeasible = false;
  };
  std::vector<UserResult> results(tasks.size());

  optimizer::detail::run_tasks_for_baselines(
      static_cast<int>(tasks.size()), opts.workers, [&](int t) {
        const Task& task = tasks[static_cast<std::size_t>(t)];
        UserResult ur;
        try {
          auto factory = [&](const std::vector<double>& eps) {
            const double e = eps.empty() ? 1.0 : eps[0];
            return single_user_subproblem(cfg, geo, beams, task.m, task.j,
                                          task.k, e);
          };
          optimizer::RefineResult rr;
          if (opts.refine) {
            rr = optimizer::refine_epsilon_k_driver(factory, cfg, beams, opts);
          } else {
            optimizer::Subproblem sub = factory({opts.fixed_epsilon_k});
            rr.am = optimizer::solve_subproblem_am(sub, opts);
            rr.epsilon_k = {opts.fixed_epsilon_k};
          }
          optimizer::Subproblem sub = factory(rr.epsilon_k);
          ur.xi = rr.am.state.xi[0];
          ur.term = optimizer::objective(sub, rr.am.state, true);
          ur.rate = optimizer::recovered_rate(ur.xi, rr.am.state.theta, 0);
          ur.redundancy = outage::d_tilde(rr.am.state.theta, sub.kappa[0], 0);
        } catch (const InfeasibleError&) {
          ur.infeasible = true;
        }
        results[static_cast<std::size_t>(t)] = ur;
      });

  // per-Eve totals with the 1/K_m time share
  std::vector<double> totals(static_cast<std::size_t>(cfg.eves), 0.0);
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const Task& task = tasks[t];
    const double share = 1.0 / geo.cluster_size(task.m);
    totals[static_cast<std::size_t>(task.j)] += share * results[t].term;
  }
  int jhat = 0;
  for (int j = 1; j < cfg.eves; ++j) {
    if (totals[static_cast<std::size_t>(j)] <
        totals[static_cast<std::size_t>(jhat)]) {
      jhat = j;
    }
  }

  Solution sol;
  sol.chosen_eve = jhat;
  sol.objective = totals[static_cast<std::size_t>(jhat)];
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (tasks[t].j != jhat) continue;
    const UserResult& ur = results[t];
    UserAllocation row;
    row.m = tasks[t].m;
    row.k = tasks[t].k;
    row.xi = ur.xi;
    row.theta = cfg.cluster_power[static_cast<std::size_t>(tasks[t].m)];
    row.rate = ur.rate;
    row.redundancy = ur.redundancy;
    row.secure_term = ur.term / geo.cluster_size(tasks[t].m);
    sol.rows.push_back(row);
  }
  sol.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

double naive_solve_and_evaluate(const Subproblem& sub_true,
                                const Subproblem& sub_naive,
                                const SolverOptions& opts,
                                optimizer::SubproblemState* state_out) {
  optimizer::AmResult am = optimizer::solve_subproblem_am(sub_naive, opts);
  if (state_out) *state_out = am.state;
  return optimizer::objective(sub_true, am.state, true);
}

Solution naive_noma_baseline(const SystemConfig& cfg, const NetworkGeometry& geo,
                             const BeamformerSet& beams,
                             const SolverOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  geo.validate();

  std::vector<std::pair<int, int>> tasks;
  for (int m = 0; m < cfg.clusters; ++m) {
    if (geo.cluster_size(m) == 0) continue;
    for (int j = 0; j < cfg.eves; ++j) tasks.emplace_back(m, j);
  }

  std::vector<SubproblemReport> reports(tasks.size());
  optimizer::detail::run_tasks_for_baselines(
      static_cast<int>(tasks.size()), opts.workers, [&](int t) {
        const auto [m, j] = tasks[static_cast<std::size_t>(t)];
        SubproblemReport rep;
        rep.m = m;
        rep.j = j;
        const int kk = geo.cluster_size(m);
        try {
          auto naive_factory = [&](const std::vector<double>& eps) {
            std::vector<double> use = eps;
            if (use.empty()) use.assign(static_cast<std::size_t>(kk), 1.0);
            optimizer::Subproblem sp =
                optimizer::make_subproblem(cfg, geo, beams, m, j, use);
            sp.quant_scale = 0.0;  // fed-back directions treated as exact
            for (int k = 0; k < kk; ++k) {
              sp.xi_ub[static_cast<std::size_t>(k)] =
                  optimizer::detail::uncapped_xi_edge(sp.gamma[static_cast<std::size_t>(k)]);
            }
            return sp;
          };
          optimizer::RefineResult rr;
          if (opts.refine) {
            rr = optimizer::refine_epsilon_k_driver(naive_factory, cfg, beams, opts);
          } else {
            std::vector<double> eps(static_cast<std::size_t>(kk), opts.fixed_epsilon_k);
            optimizer::Subproblem sub = naive_factory(eps);
            rr.am = optimizer::solve_subproblem_am(sub, opts);
            rr.epsilon_k = eps;
          }
          optimizer::Subproblem sub_true =
              optimizer::make_subproblem(cfg, geo, beams, m, j, rr.epsilon_k);
          rep.state = rr.am.state;
          rep.epsilon_k = rr.epsilon_k;
          rep.kappa = sub_true.kappa;
          rep.xi_ub = sub_true.xi_ub;
          rep.objective = optimizer::objective(sub_true, rr.am.state, true);
          rep.converged = rr.am.converged;
        } catch (const InfeasibleError&) {
          rep.infeasible = true;
          rep.objective = 0.0;
        }
        reports[static_cast<std::size_t>(t)] = std::move(rep);
      });

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

  Solution sol;
  sol.chosen_eve = jhat;
  sol.objective = totals[static_cast<std::size_t>(jhat)];
  for (const auto& rep : reports) {
    if (rep.j != jhat || rep.infeasible) continue;
    for (int k = 0; k < static_cast<int>(rep.state.xi.size()); ++k) {
      UserAllocation row;
      row.m = rep.m;
      row.k = k;
      row.xi = rep.state.xi[static_cast<std::size_t>(k)];
      row.theta = rep.state.theta[static_cast<std::size_t>(k)];
      row.rate = optimizer::recovered_rate(row.xi, rep.state.theta, k);
      try {
        row.redundancy = outage::d_tilde(rep.state.theta,
                                         rep.kappa[static_cast<std::size_t>(k)], k);
      } catch (const InfeasibleError&) {
        row.redundancy = 0.0;
      }
      sol.rows.push_back(row);
    }
  }
  sol.reports = std::move(reports);
  sol.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

}  // namespace secnoma::baselines
