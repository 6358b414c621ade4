#pragma once

#include <array>
#include <concepts>
#include <cstdint>
#include <string>

namespace cap {

/// Result of applying one action: the successor state and the reward earned
/// by each team (index = team id; unused slots stay zero).
template <class State>
struct StepOutcome {
  State next;
  std::array<double, 2> team_reward{0.0, 0.0};
};

/// Turn-based, fully observable, single-actor-per-timestep game. Actions are
/// dense indices 0..num_legal_actions(s)-1 into a deterministic per-state
/// enumeration; step is deterministic. planning_view strips any state the
/// planner must not condition on (move counters in checkers).
template <class G>
concept TurnGame = requires(const G& g, const typename G::State& s, int a) {
  typename G::State;
  { g.initial_state() } -> std::same_as<typename G::State>;
  { g.num_players() } -> std::convertible_to<int>;
  { g.num_teams() } -> std::convertible_to<int>;
  { g.team_of(a) } -> std::convertible_to<int>;
  { g.current_actor(s) } -> std::convertible_to<int>;
  { g.is_terminal(s) } -> std::convertible_to<bool>;
  { g.num_legal_actions(s) } -> std::convertible_to<int>;
  { g.step(s, a) } -> std::same_as<StepOutcome<typename G::State>>;
  { g.state_key(s) } -> std::convertible_to<std::uint64_t>;
  { g.planning_view(s) } -> std::same_as<typename G::State>;
  { g.action_name(s, a) } -> std::convertible_to<std::string>;
};

inline std::uint64_t mix_u64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace cap
