#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "secnoma/baselines.hpp"
#include "secnoma/optimizer.hpp"

namespace secnoma::harness {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Where the user or Eve terminals sit: an explicit list of distances, a
/// uniform(lo,hi) draw, or the harmonic layout d_j = scale/j.
struct PlacementSpec {
  enum class Kind { kExplicit, kUniform, kHarmonic };
  Kind kind = Kind::kUniform;
  std::vector<double> values;
  double lo = 1.0, hi = 100.0;
  double scale = 10.0;
};

/// Flat key-value scenario. Powers enter in dB and are converted to linear
/// exactly once, at assembly.
struct Scenario {
  int n_antennas = 16;
  int feedback_bits = 2;
  int n_eves = 3;
  double power_db = 10.0;
  double path_loss_exponent = 2.5;
  double noise_user_db = 0.0;
  double noise_eve_db = 5.0;
  double delta = 0.5;
  double epsilon = 0.1;
  int n_users = 20;
  PlacementSpec users;
  PlacementSpec eves{PlacementSpec::Kind::kHarmonic, {}, 1.0, 100.0, 10.0};
  std::vector<double> cluster_power;  // empty = 1/M each
};

Scenario parse_scenario(std::istream& in, const std::string& name);
Scenario load_scenario(const std::string& path);

struct AssembledSystem {
  channel::SystemConfig cfg;
  channel::NetworkGeometry geo;
  channel::BeamformerSet beams;
  std::vector<int> assignment;  // cluster of each drawn user, pre-sorting
};

/// Deterministic build: placement, small-scale draws for clustering, and the
/// codebook each use their own stream derived from the master seed.
AssembledSystem assemble(const Scenario& scn, std::uint64_t master_seed);

struct ExperimentPlan {
  std::string id;  // convergence | sweep-delta | sweep-M | sweep-epsilon |
                   // sweep-P | validate-outage | oracle-check | timing
  std::string scenario_path;
  std::vector<double> sweep;
  int trials = 1;
  long samples = 1000000;
  std::string out;

  void validate() const;
};

ExperimentPlan parse_plan(std::istream& in, const std::string& name);
ExperimentPlan load_plan(const std::string& path);

/// Numeric result table; the column schema per experiment id is documented in
/// the README.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table run_experiment(const Scenario& scn, const ExperimentPlan& plan,
                     std::uint64_t master_seed,
                     const optimizer::SolverOptions& base_opts);

/// 12 significant digits, '.' decimal point regardless of locale, LF endings.
std::string format_csv(const Table& table);
void emit_csv(const Table& table, const std::string& path);

/// One row per (m,k): xi, theta, rate, redundancy, secure term.
Table solution_table(const optimizer::Solution& sol);

}  // namespace secnoma::harness
