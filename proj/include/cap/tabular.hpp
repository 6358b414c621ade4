#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "cap/capability.hpp"
#include "cap/exact.hpp"
#include "cap/game.hpp"
#include "cap/tempered.hpp"

namespace cap {

/// Fully enumerable turn game: explicit states, enumerated transitions, one
/// cooperative team. The verification substrate for the belief-update
/// theorems; small enough for exhaustive play.
class TabularGame : public TransitionModel {
 public:
  using Outcome = TransitionModel::Outcome;
  struct StateRow {
    int actor = 0;
    bool terminal = false;
    std::vector<std::vector<Outcome>> actions;
  };
  using State = std::int32_t;

  TabularGame(std::vector<StateRow> states, int num_players, double gamma, int horizon);

  int num_states() const { return static_cast<int>(states_.size()); }
  double gamma() const { return gamma_; }
  int horizon() const { return horizon_; }
  const StateRow& row(int s) const { return states_.at(s); }

  // TransitionModel
  int num_actions(int state) const override;
  const std::vector<Outcome>& outcomes(int state, int action) const override;

  // TurnGame surface (deterministic games only for step()).
  State initial_state() const { return 0; }
  int num_players() const { return num_players_; }
  int num_teams() const { return 1; }
  int team_of(int) const { return 0; }
  int current_actor(State s) const { return states_.at(s).actor; }
  bool is_terminal(State s) const { return states_.at(s).terminal; }
  int num_legal_actions(State s) const;
  StepOutcome<State> step(State s, int action) const;
  std::uint64_t state_key(State s) const { return static_cast<std::uint64_t>(s); }
  State planning_view(State s) const { return s; }
  std::string action_name(State, int action) const { return "a" + std::to_string(action); }

 private:
  std::vector<StateRow> states_;
  int num_players_;
  double gamma_;
  int horizon_;
};

/// Q tables of a depth-c lookahead: a type-c player optimizes the next c
/// steps by backward induction, modeling every actor as a maximizer.
using QTable = std::vector<std::vector<double>>;  // [state][action]
QTable value_iteration_typed(const TabularGame& game, int depth);

/// Typed Q provider backed by precomputed lookahead tables; ignores beliefs.
class TabularTypedQ : public TypedQProvider {
 public:
  TabularTypedQ(const TabularGame& game, const CapabilitySet& caps);
  int num_actions(int state) const override { return game_->num_actions(state); }
  double q(int cap_label, int state, const BeliefBank&, int action) const override;
  const QTable& table(int cap_label) const { return tables_.at(cap_label); }

 private:
  const TabularGame* game_;
  std::map<int, QTable> tables_;
};

/// Value of the joint typed policy for one capability assignment, evaluated
/// over `horizon` steps: each actor plays the uniform mixture over its own
/// depth-c argmax set.
std::vector<double> assignment_policy_values(const TabularGame& game, const CapabilitySet& caps,
                                             const Assignment& assignment, int horizon);

/// V^C tables for every assignment in caps^N, optionally perturbed per entry.
class TabularAssignmentValues : public AssignmentValueProvider {
 public:
  TabularAssignmentValues(const TabularGame& game, const CapabilitySet& caps, int n_players,
                          int horizon);
  double value(const Assignment& assignment, int state) const override;

  /// Number of (assignment, state) table entries; used by noise injectors.
  int num_entries() const { return static_cast<int>(by_assignment_.size() * n_states_); }

 private:
  friend class PerturbedAssignmentValues;
  std::map<Assignment, std::vector<double>> by_assignment_;
  int n_states_;
};

/// A player's private view of the public tables: fixed additive perturbation
/// (adversarial regime) or fresh iid noise per query (stochastic regime).
class PerturbedAssignmentValues : public AssignmentValueProvider {
 public:
  enum class Kind { FixedTable, PerQuery };
  PerturbedAssignmentValues(const TabularAssignmentValues& base, Kind kind, double amplitude,
                            std::uint64_t seed);
  double value(const Assignment& assignment, int state) const override;

 private:
  const TabularAssignmentValues* base_;
  Kind kind_;
  double amplitude_;
  std::map<Assignment, std::vector<double>> offsets_;  // FixedTable
  mutable std::mt19937_64 rng_;                        // PerQuery
};

struct HistoryStep {
  int state;
  int actor;
  int action;
};

/// Exact Bayes over each player's type from a uniform prior, using the
/// uniform-over-argmax action likelihood. Returns the unnormalized
/// likelihood vector per player; an impossible history yields all zeros.
std::vector<std::vector<double>> brute_force_posterior(const TabularGame& game,
                                                       const CapabilitySet& caps,
                                                       const TabularTypedQ& q,
                                                       const std::vector<HistoryStep>& history);

/// Seeded generator for small verification games. Rewards are nonnegative
/// and drawn from a coarse grid so argmax ties actually occur.
TabularGame random_tabular_game(std::mt19937_64& rng, int max_states = 20, int num_actions = 2,
                                int num_players = 2, double reward_scale = 1.0,
                                double gamma = 0.9);

enum class TheoremId { T1, T2, T3, T4, Lemma };

struct TheoremReport {
  std::string name;
  int trials = 0;
  int violations = 0;
  std::vector<std::uint64_t> violation_seeds;
  double max_deviation = 0.0;
  double bound = 0.0;
  bool passed = false;
  double elapsed_seconds = 0.0;
};

/// Runs one theorem's verification suite at desk scale.
TheoremReport verify_theorem(TheoremId which, int trials, std::uint64_t seed);
std::string theorem_report_to_json(const std::vector<TheoremReport>& reports);

}  // namespace cap
