#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cap/game.hpp"

namespace cap {

/// Which avatar may bank a coin's value; anyone stepping on a coin removes it.
enum class CoinOwner { Any, Blue, Red };

struct CoinRule {
  double value = 0.0;
  CoinOwner owner = CoinOwner::Any;
};

/// Per-environment knobs for the plain-text map format:
///   '.' neutral, 'F' fire, '#' wall, 'c'/'C' blue/red coin, 'b'/'r' starts.
struct GridParams {
  CoinRule blue_coin;   // 'c'
  CoinRule red_coin;    // 'C'
  double fire_penalty = -2.0;
  bool shared_avatar = false;  // both players move avatar 0
  bool allow_stay = false;
  int horizon = 20;
};

enum class Tile : std::uint8_t { Neutral, Fire, Wall, CoinBlue, CoinRed };

/// Turn-based gridworld: two players alternate, rewards accrue to one shared
/// team. States are value snapshots; step never mutates.
class GridGame {
 public:
  struct State {
    std::array<std::uint8_t, 2> avatar{0, 0};  // cell index; [1] unused when shared
    std::uint32_t collected = 0;               // bit per coin in map order
    std::uint8_t ply = 0;
    bool operator==(const State&) const = default;
  };

  GridGame(const std::string& map_text, GridParams params);

  int width() const { return width_; }
  int height() const { return height_; }
  const GridParams& params() const { return params_; }
  int num_coins() const { return static_cast<int>(coin_cells_.size()); }
  Tile tile(int cell) const { return tiles_.at(cell); }
  int cell(int row, int col) const { return row * width_ + col; }

  State initial_state() const;
  int num_players() const { return 2; }
  int num_teams() const { return 1; }
  int team_of(int) const { return 0; }
  int current_actor(const State& s) const { return s.ply % 2; }
  bool is_terminal(const State& s) const { return s.ply >= params_.horizon; }
  int num_legal_actions(const State& s) const;
  StepOutcome<State> step(const State& s, int action) const;
  std::uint64_t state_key(const State& s) const;
  State planning_view(const State& s) const { return s; }
  std::string action_name(const State& s, int action) const;

  /// Avatar moved by `player` (shared maps both players onto avatar 0).
  int avatar_of(int player) const { return params_.shared_avatar ? 0 : player; }

 private:
  struct MoveOption {
    int delta;
    const char* name;
  };
  int legal_moves(const State& s, std::array<int, 5>& targets) const;

  int width_ = 0, height_ = 0;
  GridParams params_;
  std::vector<Tile> tiles_;
  std::vector<int> coin_cells_;              // map order
  std::vector<int> coin_index_by_cell_;      // -1 when no coin
  std::array<int, 2> start_cell_{-1, -1};    // blue, red (shared: single start)
};

/// Shared-avatar task: a one-wide fire band of depth 5 guards a 15-coin
/// pocket; crossing costs -10 and a perfect 20-turn run scores 1490.
GridGame wall_of_fire();

/// Two avatars start on opposite sides of a one-wide tunnel with their coins
/// across it; only one can transit within the horizon.
GridGame narrow_tunnel();

const std::string& wall_of_fire_map();
const std::string& narrow_tunnel_map();
GridParams wall_of_fire_params();
GridParams narrow_tunnel_params();

}  // namespace cap
