#include "secnoma/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace secnoma::harness {

using channel::BeamformerSet;
using channel::NetworkGeometry;
using channel::SystemConfig;
using mathkit::Rng;
using optimizer::SolverOptions;
using optimizer::Solution;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& s, const std::string& ctx, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ParseError(ctx + ":" + std::to_string(line) + ": expected a number, got '" + s + "'");
  }
}

std::vector<double> parse_list(const std::string& s, const std::string& ctx, int line) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_number(item, ctx, line));
  }
  if (out.empty()) {
    throw ParseError(ctx + ":" + std::to_string(line) + ": expected a list");
  }
  return out;
}

PlacementSpec parse_placement(const std::string& s, const std::string& ctx, int line) {
  PlacementSpec spec;
  if (s.rfind("uniform(", 0) == 0 && s.back() == ')') {
    const auto args = parse_list(s.substr(8, s.size() - 9), ctx, line);
    if (args.size() != 2 || !(args[0] > 0.0) || !(args[1] > args[0])) {
      throw ParseError(ctx + ":" + std::to_string(line) + ": uniform(lo,hi) needs 0 < lo < hi");
    }
    spec.kind = PlacementSpec::Kind::kUniform;
    spec.lo = args[0];
    spec.hi = args[1];
    return spec;
  }
  if (s.rfind("harmonic(", 0) == 0 && s.back() == ')') {
    const auto args = parse_list(s.substr(9, s.size() - 10), ctx, line);
    if (args.size() != 1 || !(args[0] > 0.0)) {
      throw ParseError(ctx + ":" + std::to_string(line) + ": harmonic(scale) needs scale > 0");
    }
    spec.kind = PlacementSpec::Kind::kHarmonic;
    spec.scale = args[0];
    return spec;
  }
  spec.kind = PlacementSpec::Kind::kExplicit;
  spec.values = parse_list(s, ctx, line);
  for (double d : spec.values) {
    if (!(d > 0.0)) {
      throw ParseError(ctx + ":" + std::to_string(line) + ": distances must be positive");
    }
  }
  return spec;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

void append_num(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 12);
  out.append(buf, res.ptr);
}

}  // namespace

Scenario parse_scenario(std::istream& in, const std::string& name) {
  Scenario scn;
  std::string line;
  int lineno = 0;
  bool have_users_list = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(name + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "n_antennas") {
      scn.n_antennas = static_cast<int>(parse_number(val, name, lineno));
    } else if (key == "feedback_bits") {
      scn.feedback_bits = static_cast<int>(parse_number(val, name, lineno));
    } else if (key == "n_eves") {
      scn.n_eves = static_cast<int>(parse_number(val, name, lineno));
    } else if (key == "power_db") {
      scn.power_db = parse_number(val, name, lineno);
    } else if (key == "path_loss_exponent") {
      scn.path_loss_exponent = parse_number(val, name, lineno);
    } else if (key == "noise_user_db") {
      scn.noise_user_db = parse_number(val, name, lineno);
    } else if (key == "noise_eve_db") {
      scn.noise_eve_db = parse_number(val, name, lineno);
    } else if (key == "delta") {
      scn.delta = parse_number(val, name, lineno);
    } else if (key == "epsilon") {
      scn.epsilon = parse_number(val, name, lineno);
    } else if (key == "n_users") {
      scn.n_users = static_cast<int>(parse_number(val, name, lineno));
    } else if (key == "user_distances") {
      scn.users = parse_placement(val, name, lineno);
      have_users_list = scn.users.kind == PlacementSpec::Kind::kExplicit;
    } else if (key == "eve_distances") {
      scn.eves = parse_placement(val, name, lineno);
    } else if (key == "cluster_power") {
      if (val == "uniform") {
        scn.cluster_power.clear();
      } else {
        scn.cluster_power = parse_list(val, name, lineno);
      }
    } else {
      throw ParseError(name + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (have_users_list) scn.n_users = static_cast<int>(scn.users.values.size());
  if (scn.n_users < 1) throw ParseError(name + ": n_users must be >= 1");
  return scn;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open scenario file");
  return parse_scenario(in, path);
}

void ExperimentPlan::validate() const {
  static const char* ids[] = {"convergence",     "sweep-delta", "sweep-M",
                              "sweep-epsilon",   "sweep-P",     "validate-outage",
                              "oracle-check",    "timing"};
  bool ok = false;
  for (const char* i : ids) {
    if (id == i) ok = true;
  }
  if (!ok) throw ParseError("plan: unknown experiment id '" + id + "'");
  if (trials < 1) throw ParseError("plan: trials >= 1");
  const bool needs_sweep = id == "sweep-delta" || id == "sweep-M" ||
                           id == "sweep-epsilon" || id == "sweep-P" ||
                           id == "timing";
  if (needs_sweep && sweep.empty()) {
    throw ParseError("plan: experiment '" + id + "' needs a sweep grid");
  }
  if (samples < 10000) throw ParseError("plan: samples >= 10^4");
}

ExperimentPlan parse_plan(std::istream& in, const std::string& name) {
  ExperimentPlan plan;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(name + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "experiment") {
      plan.id = val;
    } else if (key == "scenario") {
      plan.scenario_path = val;
    } else if (key == "sweep") {
      plan.sweep = parse_list(val, name, lineno);
    } else if (key == "trials") {
      plan.trials = static_cast<int>(parse_number(val, name, lineno));
    } else if (key == "samples") {
      plan.samples = static_cast<long>(parse_number(val, name, lineno));
    } else if (key == "out") {
      plan.out = val;
    } else {
      throw ParseError(name + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  plan.validate();
  return plan;
}

ExperimentPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open plan file");
  return parse_plan(in, path);
}

AssembledSystem assemble(const Scenario& scn, std::uint64_t master_seed) {
  AssembledSystem sys;
  SystemConfig& cfg = sys.cfg;
  cfg.n_antennas = scn.n_antennas;
  cfg.feedback_bits = scn.feedback_bits;
  cfg.clusters = 1 << scn.feedback_bits;
  cfg.eves = scn.n_eves;
  cfg.power = db_to_linear(scn.power_db);
  cfg.path_loss_exponent = scn.path_loss_exponent;
  cfg.noise_user = db_to_linear(scn.noise_user_db);
  cfg.noise_eve = db_to_linear(scn.noise_eve_db);
  cfg.delta = scn.delta;
  cfg.epsilon = scn.epsilon;
  if (scn.cluster_power.empty()) {
    cfg.cluster_power.assign(static_cast<std::size_t>(cfg.clusters),
                             1.0 / cfg.clusters);
  } else {
    cfg.cluster_power = scn.cluster_power;
  }
  cfg.validate();

  // placement
  Rng rng_place(Rng::derive(master_seed, {11}));
  std::vector<double> user_dist;
  switch (scn.users.kind) {
    case PlacementSpec::Kind::kExplicit:
      user_dist = scn.users.values;
      break;
    case PlacementSpec::Kind::kUniform:
      for (int u = 0; u < scn.n_users; ++u) {
        user_dist.push_back(scn.users.lo +
                            (scn.users.hi - scn.users.lo) * rng_place.uniform01());
      }
      break;
    case PlacementSpec::Kind::kHarmonic:
      for (int u = 0; u < scn.n_users; ++u) {
        user_dist.push_back(scn.users.scale / (u + 1));
      }
      break;
  }
  std::vector<double> eve_dist;
  switch (scn.eves.kind) {
    case PlacementSpec::Kind::kExplicit:
      eve_dist = scn.eves.values;
      break;
    case PlacementSpec::Kind::kUniform:
      for (int j = 0; j < scn.n_eves; ++j) {
        eve_dist.push_back(scn.eves.lo +
                           (scn.eves.hi - scn.eves.lo) * rng_place.uniform01());
      }
      break;
    case PlacementSpec::Kind::kHarmonic:
      for (int j = 0; j < scn.n_eves; ++j) {
        eve_dist.push_back(scn.eves.scale / (j + 1));
      }
      break;
  }
  if (static_cast<int>(eve_dist.size()) != scn.n_eves) {
    throw ParseError("scenario: eve_distances length must match n_eves");
  }

  // codebook, then clustering by direction
  Rng rng_code(Rng::derive(master_seed, {13}));
  sys.beams = channel::generate_codebook_and_beamformers(cfg, rng_code);

  Rng rng_vec(Rng::derive(master_seed, {12}));
  std::vector<mathkit::cvec> small_scale;
  small_scale.reserve(user_dist.size());
  for (std::size_t u = 0; u < user_dist.size(); ++u) {
    small_scale.push_back(
        mathkit::sample_complex_gaussian_vector(cfg.n_antennas, rng_vec));
  }
  sys.assignment = channel::assign_users_to_clusters(small_scale, sys.beams.codebook);

  std::vector<std::vector<double>> per_cluster(static_cast<std::size_t>(cfg.clusters));
  for (std::size_t u = 0; u < user_dist.size(); ++u) {
    per_cluster[static_cast<std::size_t>(sys.assignment[u])].push_back(user_dist[u]);
  }
  sys.geo = channel::build_geometry(cfg, std::move(per_cluster), eve_dist);
  return sys;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

namespace {

Table convergence_experiment(const Scenario& scn, std::uint64_t seed,
                             const SolverOptions& base) {
  Table t;
  t.header = {"loop", "iter", "value"};
  AssembledSystem sys = assemble(scn, Rng::derive(seed, {1, 0}));
  SolverOptions opts = base;
  opts.refine = false;
  int m0 = 0;
  while (m0 < sys.cfg.clusters && sys.geo.cluster_size(m0) == 0) ++m0;
  if (m0 == sys.cfg.clusters) throw std::runtime_error("convergence: no users");
  std::vector<double> eps(static_cast<std::size_t>(sys.geo.cluster_size(m0)),
                          opts.fixed_epsilon_k);
  optimizer::Subproblem sub =
      optimizer::make_subproblem(sys.cfg, sys.geo, sys.beams, m0, 0, eps);
  optimizer::AmResult am = optimizer::solve_subproblem_am(sub, opts, true);
  for (std::size_t i = 0; i < am.alg1_trace.size(); ++i) {
    t.rows.push_back({1.0, static_cast<double>(i + 1), am.alg1_trace[i]});
  }
  for (std::size_t i = 0; i < am.pg_trace.size(); ++i) {
    t.rows.push_back({2.0, static_cast<double>(i + 1), am.pg_trace[i]});
  }
  for (std::size_t i = 0; i < am.trace.size(); ++i) {
    t.rows.push_back({3.0, static_cast<double>(i + 1), am.trace[i]});
  }
  return t;
}

Table sweep_vs_tdma(const Scenario& scn, const ExperimentPlan& plan,
                    std::uint64_t seed, const SolverOptions& opts, bool sweep_m) {
  Table t;
  t.header = {sweep_m ? "clusters" : "delta", "trial", "proposed", "tdma"};
  for (int trial = 0; trial < plan.trials; ++trial) {
    const std::uint64_t trial_seed = Rng::derive(seed, {2, static_cast<std::uint64_t>(trial)});
    for (double x : plan.sweep) {
      Scenario s2 = scn;
      if (sweep_m) {
        const int m = static_cast<int>(x);
        int b = 0;
        while ((1 << b) < m) ++b;
        if ((1 << b) != m) throw ParseError("sweep-M: cluster counts must be powers of 2");
        s2.feedback_bits = b;
      } else {
        s2.delta = x;
      }
      AssembledSystem sys = assemble(s2, trial_seed);
      const Solution prop = optimizer::solve_p2(sys.cfg, sys.geo, sys.beams, opts);
      const Solution tdma = baselines::tdma_baseline(sys.cfg, sys.geo, sys.beams, opts);
      t.rows.push_back({x, static_cast<double>(trial), prop.objective, tdma.objective});
    }
  }
  return t;
}

Table sweep_vs_naive(const Scenario& scn, const ExperimentPlan& plan,
                     std::uint64_t seed, const SolverOptions& opts, bool sweep_p) {
  Table t;
  t.header = {sweep_p ? "power_db" : "epsilon", "trial", "proposed", "naive"};
  for (int trial = 0; trial < plan.trials; ++trial) {
    const std::uint64_t trial_seed = Rng::derive(seed, {3, static_cast<std::uint64_t>(trial)});
    for (double x : plan.sweep) {
      Scenario s2 = scn;
      s2.n_eves = 1;  // single-Eve comparison
      if (sweep_p) {
        s2.power_db = x;
      } else {
        s2.epsilon = x;
      }
      AssembledSystem sys = assemble(s2, trial_seed);
      const Solution prop = optimizer::solve_p2(sys.cfg, sys.geo, sys.beams, opts);
      const Solution naive =
          baselines::naive_noma_baseline(sys.cfg, sys.geo, sys.beams, opts);
      t.rows.push_back({x, static_cast<double>(trial), prop.objective, naive.objective});
    }
  }
  return t;
}

Table validate_outage_experiment(const Scenario& scn, const ExperimentPlan& plan,
                                 std::uint64_t seed) {
  Table t;
  t.header = {"kind", "index", "closed_form", "estimate", "stderr", "dev_over_se"};
  AssembledSystem sys = assemble(scn, Rng::derive(seed, {4}));
  const int per_kind = 10 * plan.trials;
  Rng rng(Rng::derive(seed, {5}));

  for (int idx = 0; idx < per_kind; ++idx) {
    // connection outage instance
    outage::CopInput ci;
    ci.n_antennas = sys.cfg.n_antennas;
    ci.feedback_bits = sys.cfg.feedback_bits;
    ci.clusters = sys.cfg.clusters;
    const int m = static_cast<int>(rng.next_u64() % sys.cfg.clusters);
    ci.cluster_power = sys.cfg.cluster_power[static_cast<std::size_t>(m)];
    ci.gamma = std::pow(10.0, -1.0 + 3.0 * rng.uniform01());
    const int kk = 1 + static_cast<int>(rng.next_u64() % 3);
    ci.theta.resize(static_cast<std::size_t>(kk));
    double sum = 0.0;
    for (double& th : ci.theta) {
      th = rng.uniform01();
      sum += th;
    }
    for (double& th : ci.theta) th *= ci.cluster_power / sum;
    ci.k = static_cast<int>(rng.next_u64() % kk);
    ci.rate = 0.1 + 1.9 * rng.uniform01();
    const double cf = outage::cop_closed_form(ci);
    Rng mc_rng(Rng::derive(seed, {6, static_cast<std::uint64_t>(idx)}));
    const outage::McEstimate mc = outage::cop_monte_carlo(ci, plan.samples, mc_rng);
    const double se = std::max(std::sqrt(cf * (1.0 - cf) / plan.samples), 1e-12);
    t.rows.push_back({0.0, static_cast<double>(idx), cf, mc.estimate, mc.stderr_,
                      (mc.estimate - cf) / se});
  }
  for (int idx = 0; idx < per_kind; ++idx) {
    outage::SopInput si;
    si.beams = &sys.beams;
    si.m = static_cast<int>(rng.next_u64() % sys.cfg.clusters);
    si.cluster_power = sys.cfg.cluster_power[static_cast<std::size_t>(si.m)];
    si.gamma_e = std::pow(10.0, -2.0 + 3.0 * rng.uniform01());
    const int kk = 1 + static_cast<int>(rng.next_u64() % 3);
    si.theta.resize(static_cast<std::size_t>(kk));
    double sum = 0.0;
    for (double& th : si.theta) {
      th = rng.uniform01();
      sum += th;
    }
    for (double& th : si.theta) th *= si.cluster_power / sum;
    si.k = static_cast<int>(rng.next_u64() % kk);
    si.redundancy = 3.0 * rng.uniform01();
    const double cf = outage::sop_closed_form(si);
    Rng mc_rng(Rng::derive(seed, {7, static_cast<std::uint64_t>(idx)}));
    const outage::McEstimate mc = outage::sop_monte_carlo(si, plan.samples, mc_rng);
    const double se = std::max(std::sqrt(cf * (1.0 - cf) / plan.samples), 1e-12);
    t.rows.push_back({1.0, static_cast<double>(idx), cf, mc.estimate, mc.stderr_,
                      (mc.estimate - cf) / se});
  }
  return t;
}

Table oracle_check_experiment(const Scenario& scn, std::uint64_t seed,
                              const SolverOptions& base) {
  Table t;
  t.header = {"m", "j", "solver", "oracle", "rel_gap"};
  AssembledSystem sys = assemble(scn, Rng::derive(seed, {8}));
  SolverOptions opts = base;
  opts.refine = false;
  baselines::GridSpec grid;
  grid.points_per_axis = 200;
  for (int m = 0; m < sys.cfg.clusters; ++m) {
    const int kk = sys.geo.cluster_size(m);
    if (kk == 0 || kk > 3) continue;
    for (int j = 0; j < sys.cfg.eves; ++j) {
      std::vector<double> eps(static_cast<std::size_t>(kk), opts.fixed_epsilon_k);
      optimizer::Subproblem sub =
          optimizer::make_subproblem(sys.cfg, sys.geo, sys.beams, m, j, eps);
      double solver_obj = 0.0;
      try {
        optimizer::AmResult am = optimizer::solve_subproblem_am(sub, opts);
        solver_obj = optimizer::objective(sub, am.state, true);
      } catch (const channel::InfeasibleError&) {
        continue;
      }
      const baselines::GridBest best = baselines::grid_oracle(sub, grid);
      const double gap = (best.objective - solver_obj) / std::max(best.objective, 1e-12);
      t.rows.push_back({static_cast<double>(m), static_cast<double>(j), solver_obj,
                        best.objective, gap});
    }
  }
  if (t.rows.empty()) {
    throw std::runtime_error("oracle-check: no cluster with 1..3 users; use a smaller scenario");
  }
  return t;
}

Table timing_experiment(const Scenario& scn, const ExperimentPlan& plan,
                        std::uint64_t seed, const SolverOptions& opts) {
  Table t;
  t.header = {"users", "trials", "mean_seconds", "sd_seconds"};
  for (std::size_t si = 0; si < plan.sweep.size(); ++si) {
    std::vector<double> times;
    for (int trial = 0; trial < plan.trials; ++trial) {
      Scenario s2 = scn;
      s2.n_users = static_cast<int>(plan.sweep[si]);
      AssembledSystem sys = assemble(
          s2, Rng::derive(seed, {9, si, static_cast<std::uint64_t>(trial)}));
      const auto t0 = std::chrono::steady_clock::now();
      const Solution sol = optimizer::solve_p2(sys.cfg, sys.geo, sys.beams, opts);
      (void)sol;
      times.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    double mean = 0.0;
    for (double x : times) mean += x;
    mean /= times.size();
    double var = 0.0;
    for (double x : times) var += (x - mean) * (x - mean);
    const double sd = times.size() > 1 ? std::sqrt(var / (times.size() - 1)) : 0.0;
    t.rows.push_back({plan.sweep[si], static_cast<double>(plan.trials), mean, sd});
  }
  return t;
}

}  // namespace

Table run_experiment(const Scenario& scn, const ExperimentPlan& plan,
                     std::uint64_t master_seed,
                     const optimizer::SolverOptions& base_opts) {
  plan.validate();
  if (plan.id == "convergence") {
    return convergence_experiment(scn, master_seed, base_opts);
  }
  if (plan.id == "sweep-delta") {
    return sweep_vs_tdma(scn, plan, master_seed, base_opts, false);
  }
  if (plan.id == "sweep-M") {
    return sweep_vs_tdma(scn, plan, master_seed, base_opts, true);
  }
  if (plan.id == "sweep-epsilon") {
    return sweep_vs_naive(scn, plan, master_seed, base_opts, false);
  }
  if (plan.id == "sweep-P") {
    return sweep_vs_naive(scn, plan, master_seed, base_opts, true);
  }
  if (plan.id == "validate-outage") {
    return validate_outage_experiment(scn, plan, master_seed);
  }
  if (plan.id == "oracle-check") {
    return oracle_check_experiment(scn, master_seed, base_opts);
  }
  if (plan.id == "timing") {
    return timing_experiment(scn, plan, master_seed, base_opts);
  }
  throw ParseError("run_experiment: unknown id '" + plan.id + "'");
}

std::string format_csv(const Table& table) {
  if (table.rows.empty()) throw std::invalid_argument("emit_csv: empty table");
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out.push_back(',');
    out += table.header[i];
  }
  out.push_back('\n');
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw std::invalid_argument("emit_csv: ragged row");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out.push_back(',');
      append_num(out, row[i]);
    }
    out.push_back('\n');
  }
  return out;
}

void emit_csv(const Table& table, const std::string& path) {
  const std::string data = format_csv(table);  // formats (and validates) first
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_csv: cannot open " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("emit_csv: write failed for " + path);
}

Table solution_table(const optimizer::Solution& sol) {
  Table t;
  t.header = {"m", "k", "xi", "theta", "rate", "redundancy", "secure_term"};
  for (const auto& row : sol.rows) {
    t.rows.push_back({static_cast<double>(row.m), static_cast<double>(row.k),
                      row.xi, row.theta, row.rate, row.redundancy,
                      row.secure_term});
  }
  return t;
}

}  // namespace secnoma::harness
