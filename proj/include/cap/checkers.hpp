#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cap/game.hpp"

namespace cap {

/// English draughts on the 32 dark squares. Square s sits on row s/4 (row 0
/// at the bottom); even rows occupy odd visual columns, odd rows even ones.
/// Side 0 starts on squares 0..11 and moves up; side 1 on 20..31 moves down.
struct CheckersMove {
  std::uint32_t from = 0;      // single bit
  std::uint32_t to = 0;        // single bit
  std::uint32_t captured = 0;  // bits of removed enemy pieces
  bool promotes = false;
};

struct CheckersState {
  std::uint32_t pieces[2] = {0x00000FFFu, 0xFFF00000u};
  std::uint32_t kings = 0;
  std::uint8_t side = 0;  // side to move
  std::uint8_t mover[2] = {0, 0};
  std::uint8_t total_moves = 0;
  std::uint8_t rewardless_moves = 0;
  std::int16_t cum_reward[2] = {0, 0};
  bool operator==(const CheckersState&) const = default;
};

/// Cooperative checkers: teammates on a side alternate picking the side's
/// moves. Material events pay the moving team: +1 per captured man, +2 per
/// captured king, +1 for a promotion. A side with no pieces or no moves
/// loses; 120 total moves or 40 rewardless moves end the game with the
/// higher-scoring team winning.
class CheckersGame {
 public:
  using State = CheckersState;
  static constexpr int kMaxTotalMoves = 120;
  static constexpr int kMaxRewardlessMoves = 40;

  explicit CheckersGame(int players_side_a = 2, int players_side_b = 2);

  State initial_state() const { return State{}; }
  int num_players() const { return players_[0] + players_[1]; }
  int num_teams() const { return 2; }
  int team_of(int player) const { return player < players_[0] ? 0 : 1; }
  int current_actor(const State& s) const;
  bool is_terminal(const State& s) const;
  int num_legal_actions(const State& s) const;
  StepOutcome<State> step(const State& s, int action) const;
  std::uint64_t state_key(const State& s) const;
  /// Copy with move counters and running scores masked out; planners never
  /// see the artificial termination rules.
  State planning_view(const State& s) const;
  std::string action_name(const State& s, int action) const;

  void generate_moves(const State& s, std::vector<CheckersMove>& out) const;
  /// Winning team of a terminal state; nullopt for a draw.
  std::optional<int> winner(const State& s) const;

 private:
  int players_[2];
};

/// Leaf count of complete move sequences to `depth` (a multi-jump is one move).
std::uint64_t perft(const CheckersGame& game, const CheckersState& s, int depth);

/// One-line state serialization, e.g. "B:W21,K30:B1,5:0 0 0 0 0 0".
std::string checkers_to_string(const CheckersState& s);
CheckersState checkers_from_string(const std::string& text);

std::string checkers_board_diagram(const CheckersState& s);

}  // namespace cap
