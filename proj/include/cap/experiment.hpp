#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cap/agents.hpp"
#include "cap/capability.hpp"

namespace cap {

/// Invalid configuration; the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PlayerConfig {
  Strategy strategy = Strategy::OBL;
  int depth = 1;
  double inference_budget = 1.0;
};

struct Composition {
  std::string label;
  std::vector<PlayerConfig> team_a;
  std::vector<PlayerConfig> team_b;          // checkers team-vs-team
  std::optional<PlayerConfig> opponent;      // checkers team-vs-single
};

struct ExperimentConfig {
  std::string environment;  // wall_of_fire | narrow_tunnel | checkers
  std::vector<int> capability_set;
  SearchParams search;
  TemperConfig temper;
  int games_per_cell = 5;
  std::uint64_t seed_base = 1000;
  int workers = 1;
  bool enumerate_orders = false;  // color and in-team order permutations
  std::vector<Composition> compositions;
  std::string map_override;  // optional grid map path
};

struct MatchRecord {
  std::string env;
  std::string team_a;
  std::string team_b;
  std::uint64_t seed = 0;
  double reward_a = 0.0;
  double reward_b = 0.0;
  std::string winner;  // "A" | "B" | "Draw"
  int moves = 0;
  std::optional<double> dev_expert;
  std::optional<double> dev_novice;
};

struct ExperimentResult {
  std::vector<MatchRecord> records;
  std::string csv;
  std::string summary_json;
};

/// (#wins - #losses) / #games, as a fraction.
double score(int wins, int losses, int games);

/// sqrt(sum_d p(d) (d - d_star)^2) over capability labels.
double deviation(const std::vector<double>& posterior, const CapabilitySet& caps, double d_star);

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

/// Runs every composition x order-variant x seed; deterministic given the
/// seed base (matches are parallel but merged by index).
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Re-aggregates a records CSV into the summary JSON; run_experiment feeds
/// its own CSV through this, so recomputed aggregates match by construction.
std::string summarize_csv(const std::string& csv_text);

std::string records_to_csv(const std::vector<MatchRecord>& records);

}  // namespace cap
