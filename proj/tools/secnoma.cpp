#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "secnoma/baselines.hpp"
#include "secnoma/harness.hpp"
#include "secnoma/optimizer.hpp"

namespace {

using namespace secnoma;

struct CommonFlags {
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out;
  double tol = 1e-4;
  bool no_refine = false;
  double fixed_eps = 0.1;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--seed", flags.seed, "master seed");
  cmd->add_option("--workers", flags.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", flags.out, "write the result table to this CSV file");
  cmd->add_option("--tol", flags.tol, "relative-change stopping tolerance")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--no-refine", flags.no_refine,
                "skip the epsilon_k refinement (use --fixed-eps)");
  cmd->add_option("--fixed-eps", flags.fixed_eps,
                  "epsilon_k used when refinement is off");
}

optimizer::SolverOptions make_opts(const CommonFlags& flags) {
  optimizer::SolverOptions opts;
  opts.tol = flags.tol;
  opts.workers = flags.workers;
  opts.refine = !flags.no_refine;
  opts.fixed_epsilon_k = flags.fixed_eps;
  return opts;
}

void deliver(const harness::Table& table, const std::string& out) {
  if (out.empty()) {
    std::cout << harness::format_csv(table);
  } else {
    harness::emit_csv(table, out);
    std::cout << "wrote " << table.rows.size() << " rows to " << out << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"secure-NOMA power allocation: solver, baselines and experiments"};
  app.require_subcommand(1);

  CommonFlags flags;

  std::string scenario_path;
  auto* solve = app.add_subcommand("solve", "solve one scenario and print the allocation");
  solve->add_option("scenario", scenario_path, "scenario file")->required();
  add_common(solve, flags);

  std::string plan_path;
  auto* exper = app.add_subcommand("experiment", "run an experiment plan");
  exper->add_option("plan", plan_path, "plan file")->required();
  add_common(exper, flags);

  long samples = 1000000;
  auto* validate = app.add_subcommand(
      "validate", "closed-form outage vs Monte Carlo on random instances");
  validate->add_option("scenario", scenario_path, "scenario file")->required();
  validate->add_option("--samples", samples, "Monte Carlo samples per instance")
      ->check(CLI::Range(10000L, 1000000000L));
  add_common(validate, flags);

  auto* oracle = app.add_subcommand(
      "oracle-check", "solver vs exhaustive grid search on small clusters");
  oracle->add_option("scenario", scenario_path, "scenario file")->required();
  add_common(oracle, flags);

  std::string users_list;
  int bench_trials = 3;
  auto* bench = app.add_subcommand("bench", "solve time versus user count");
  bench->add_option("scenario", scenario_path, "scenario file")->required();
  bench->add_option("--users", users_list, "comma-separated user counts")->required();
  bench->add_option("--trials", bench_trials, "repetitions per point")
      ->check(CLI::PositiveNumber);
  add_common(bench, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    const optimizer::SolverOptions opts = make_opts(flags);

    if (solve->parsed()) {
      const harness::Scenario scn = harness::load_scenario(scenario_path);
      const harness::AssembledSystem sys = harness::assemble(scn, flags.seed);
      const optimizer::Solution sol =
          optimizer::solve_p2(sys.cfg, sys.geo, sys.beams, opts);
      std::cout << "objective " << sol.objective << " bits/s/Hz (worst Eve " << sol.chosen_eve + 1
                << ", " << sol.wall_seconds << " s)\n";
      deliver(harness::solution_table(sol), flags.out);
      return 0;
    }

    harness::ExperimentPlan plan;
    if (exper->parsed()) {
      plan = harness::load_plan(plan_path);
      if (plan.scenario_path.empty()) {
        std::cerr << "plan has no scenario path\n";
        return 1;
      }
    } else if (validate->parsed()) {
      plan.id = "validate-outage";
      plan.scenario_path = scenario_path;
      plan.samples = samples;
    } else if (oracle->parsed()) {
      plan.id = "oracle-check";
      plan.scenario_path = scenario_path;
    } else if (bench->parsed()) {
      plan.id = "timing";
      plan.scenario_path = scenario_path;
      plan.trials = bench_trials;
      std::stringstream ss(users_list);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) plan.sweep.push_back(std::stod(item));
      }
    }
    if (!flags.out.empty()) plan.out = flags.out;

    const harness::Scenario scn = harness::load_scenario(plan.scenario_path);
    const harness::Table table =
        harness::run_experiment(scn, plan, flags.seed, opts);
    deliver(table, plan.out);
    return 0;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
