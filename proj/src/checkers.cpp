#include "cap/checkers.hpp"

#include <array>
#include <bit>
#include <sstream>
#include <stdexcept>

namespace cap {

namespace {

// Directions: 0 up-left, 1 up-right, 2 down-left, 3 down-right.
struct Tables {
  std::array<std::array<int, 4>, 32> nb;    // adjacent square or -1
  std::array<std::array<int, 4>, 32> jump;  // landing square or -1
};

int square_of(int row, int col) {
  if (row < 0 || row > 7 || col < 0 || col > 7) return -1;
  if ((row + col) % 2 == 0) return -1;  // light square
  return row * 4 + col / 2;
}

int col_of(int square) {
  const int row = square / 4;
  return 2 * (square % 4) + (row % 2 == 0 ? 1 : 0);
}

Tables build_tables() {
  Tables t;
  const int drow[4] = {1, 1, -1, -1};
  const int dcol[4] = {-1, 1, -1, 1};
  for (int s = 0; s < 32; ++s) {
    const int row = s / 4, col = col_of(s);
    for (int d = 0; d < 4; ++d) {
      t.nb[s][d] = square_of(row + drow[d], col + dcol[d]);
      t.jump[s][d] = square_of(row + 2 * drow[d], col + 2 * dcol[d]);
    }
  }
  return t;
}

const Tables kTables = build_tables();

constexpr std::uint32_t kPromotionRow[2] = {0xF0000000u, 0x0000000Fu};

bool forward_dir(int side, int dir) { return side == 0 ? dir < 2 : dir >= 2; }

// Emits every complete jump sequence starting at `at` with `captured` already
// taken. English rules: captured pieces leave the board as the sequence runs,
// the sequence ends on promotion, and it must continue while a jump exists.
// Returns true when at least one jump was available from `at`.
bool emit_jumps(int side, bool king, int at, std::uint32_t from_bit, std::uint32_t captured,
                std::uint32_t own, std::uint32_t enemy, std::vector<CheckersMove>& out) {
  bool found = false;
  const std::uint32_t occupied = (own & ~from_bit) | (enemy & ~captured);
  for (int d = 0; d < 4; ++d) {
    if (!king && !forward_dir(side, d)) continue;
    const int over = kTables.nb[at][d];
    const int land = kTables.jump[at][d];
    if (over < 0 || land < 0) continue;
    const std::uint32_t over_bit = 1u << over;
    const std::uint32_t land_bit = 1u << land;
    if (!(enemy & ~captured & over_bit)) continue;
    if (occupied & land_bit) continue;
    found = true;
    const std::uint32_t now_captured = captured | over_bit;
    if (!king && (land_bit & kPromotionRow[side])) {
      out.push_back({from_bit, land_bit, now_captured, true});
      continue;
    }
    if (!emit_jumps(side, king, land, from_bit, now_captured, own, enemy, out))
      out.push_back({from_bit, land_bit, now_captured, false});
  }
  return found;
}

}  // namespace

CheckersGame::CheckersGame(int players_side_a, int players_side_b)
    : players_{players_side_a, players_side_b} {
  if (players_side_a < 1 || players_side_b < 1)
    throw std::invalid_argument("each side needs at least one player");
}

int CheckersGame::current_actor(const State& s) const {
  return s.side == 0 ? s.mover[0] : players_[0] + s.mover[1];
}

void CheckersGame::generate_moves(const State& s, std::vector<CheckersMove>& out) const {
  out.clear();
  const int side = s.side;
  const std::uint32_t own = s.pieces[side];
  const std::uint32_t enemy = s.pieces[1 - side];
  const std::uint32_t occupied = own | enemy;

  // Forced captures: when any jump exists only jumps are legal.
  std::uint32_t remaining = own;
  while (remaining) {
    const int from = std::countr_zero(remaining);
    remaining &= remaining - 1;
    const std::uint32_t from_bit = 1u << from;
    emit_jumps(side, s.kings & from_bit, from, from_bit, 0, own, enemy, out);
  }
  if (!out.empty()) return;

  remaining = own;
  while (remaining) {
    const int from = std::countr_zero(remaining);
    remaining &= remaining - 1;
    const std::uint32_t from_bit = 1u << from;
    const bool king = s.kings & from_bit;
    for (int d = 0; d < 4; ++d) {
      if (!king && !forward_dir(side, d)) continue;
      const int to = kTables.nb[from][d];
      if (to < 0) continue;
      const std::uint32_t to_bit = 1u << to;
      if (occupied & to_bit) continue;
      const bool promotes = !king && (to_bit & kPromotionRow[side]);
      out.push_back({from_bit, to_bit, 0, promotes});
    }
  }
}

bool CheckersGame::is_terminal(const State& s) const {
  if (s.pieces[s.side] == 0) return true;
  if (s.total_moves >= kMaxTotalMoves || s.rewardless_moves >= kMaxRewardlessMoves) return true;
  std::vector<CheckersMove> moves;
  generate_moves(s, moves);
  return moves.empty();
}

int CheckersGame::num_legal_actions(const State& s) const {
  if (s.pieces[s.side] == 0 || s.total_moves >= kMaxTotalMoves ||
      s.rewardless_moves >= kMaxRewardlessMoves)
    return 0;
  std::vector<CheckersMove> moves;
  generate_moves(s, moves);
  return static_cast<int>(moves.size());
}

StepOutcome<CheckersState> CheckersGame::step(const State& s, int action) const {
  std::vector<CheckersMove> moves;
  generate_moves(s, moves);
  if (action < 0 || action >= static_cast<int>(moves.size()))
    throw std::out_of_range("illegal checkers action");
  const CheckersMove& m = moves[action];
  const int side = s.side;

  StepOutcome<State> out;
  out.next = s;
  State& n = out.next;
  n.pieces[side] = (n.pieces[side] & ~m.from) | m.to;
  const bool was_king = s.kings & m.from;
  n.kings &= ~m.from;
  if (was_king || m.promotes) n.kings |= m.to;

  double reward = 0.0;
  if (m.captured) {
    const std::uint32_t captured_kings = m.captured & s.kings;
    const int kings_taken = std::popcount(captured_kings);
    const int men_taken = std::popcount(m.captured) - kings_taken;
    reward += men_taken + 2 * kings_taken;
    n.pieces[1 - side] &= ~m.captured;
    n.kings &= ~m.captured;
  }
  if (m.promotes) reward += 1.0;

  n.side = static_cast<std::uint8_t>(1 - side);
  n.mover[side] = static_cast<std::uint8_t>((s.mover[side] + 1) % players_[side]);
  n.total_moves = static_cast<std::uint8_t>(s.total_moves + 1);
  n.rewardless_moves = reward > 0 ? 0 : static_cast<std::uint8_t>(s.rewardless_moves + 1);
  n.cum_reward[side] = static_cast<std::int16_t>(s.cum_reward[side] + reward);

  out.team_reward[side] = reward;
  return out;
}

std::uint64_t CheckersGame::state_key(const State& s) const {
  std::uint64_t a = (static_cast<std::uint64_t>(s.pieces[0]) << 32) | s.pieces[1];
  std::uint64_t b = (static_cast<std::uint64_t>(s.kings) << 32) | (s.side << 24) |
                    (s.mover[0] << 16) | (s.mover[1] << 8) | s.total_moves;
  return mix_u64(a) ^ mix_u64(b ^ 0x5bf03635ULL) ^ mix_u64(s.rewardless_moves);
}

CheckersState CheckersGame::planning_view(const State& s) const {
  State masked = s;
  masked.total_moves = 0;
  masked.rewardless_moves = 0;
  masked.cum_reward[0] = masked.cum_reward[1] = 0;
  return masked;
}

std::string CheckersGame::action_name(const State& s, int action) const {
  std::vector<CheckersMove> moves;
  generate_moves(s, moves);
  if (action < 0 || action >= static_cast<int>(moves.size())) return "?";
  const CheckersMove& m = moves[action];
  std::ostringstream os;
  os << std::countr_zero(m.from) + 1 << (m.captured ? "x" : "-") << std::countr_zero(m.to) + 1;
  return os.str();
}

std::optional<int> CheckersGame::winner(const State& s) const {
  if (s.pieces[s.side] == 0) return 1 - s.side;
  if (s.total_moves >= kMaxTotalMoves || s.rewardless_moves >= kMaxRewardlessMoves) {
    if (s.cum_reward[0] > s.cum_reward[1]) return 0;
    if (s.cum_reward[1] > s.cum_reward[0]) return 1;
    return std::nullopt;
  }
  std::vector<CheckersMove> moves;
  generate_moves(s, moves);
  if (moves.empty()) return 1 - s.side;
  return std::nullopt;
}

std::uint64_t perft(const CheckersGame& game, const CheckersState& s, int depth) {
  if (depth <= 0) return 1;
  std::vector<CheckersMove> moves;
  game.generate_moves(s, moves);
  if (depth == 1) return moves.size();
  std::uint64_t total = 0;
  for (int a = 0; a < static_cast<int>(moves.size()); ++a)
    total += perft(game, game.step(s, a).next, depth - 1);
  return total;
}

std::string checkers_to_string(const CheckersState& s) {
  std::ostringstream os;
  os << (s.side == 0 ? 'B' : 'W');
  for (int side = 1; side >= 0; --side) {
    os << (side == 1 ? ":W" : ":B");
    bool first = true;
    for (int sq = 0; sq < 32; ++sq) {
      const std::uint32_t bit = 1u << sq;
      if (!(s.pieces[side] & bit)) continue;
      if (!first) os << ',';
      first = false;
      if (s.kings & bit) os << 'K';
      os << sq + 1;
    }
  }
  os << ':' << int(s.total_moves) << ' ' << int(s.rewardless_moves) << ' ' << s.cum_reward[0]
     << ' ' << s.cum_reward[1] << ' ' << int(s.mover[0]) << ' ' << int(s.mover[1]);
  return os.str();
}

CheckersState checkers_from_string(const std::string& text) {
  CheckersState s;
  s.pieces[0] = s.pieces[1] = s.kings = 0;
  std::istringstream in(text);
  std::string part;
  if (!std::getline(in, part, ':')) throw std::invalid_argument("bad checkers string");
  if (part != "B" && part != "W") throw std::invalid_argument("bad side-to-move");
  s.side = part == "B" ? 0 : 1;
  for (int i = 0; i < 2; ++i) {
    if (!std::getline(in, part, ':')) throw std::invalid_argument("missing piece list");
    if (part.empty() || (part[0] != 'W' && part[0] != 'B'))
      throw std::invalid_argument("bad piece list");
    const int side = part[0] == 'W' ? 1 : 0;
    std::istringstream items(part.substr(1));
    std::string item;
    while (std::getline(items, item, ',')) {
      if (item.empty()) continue;
      bool king = item[0] == 'K';
      const int sq = std::stoi(king ? item.substr(1) : item) - 1;
      if (sq < 0 || sq > 31) throw std::invalid_argument("square out of range");
      s.pieces[side] |= 1u << sq;
      if (king) s.kings |= 1u << sq;
    }
  }
  std::getline(in, part);
  std::istringstream tail(part);
  int total, rewardless, ca, cb, ma, mb;
  if (tail >> total >> rewardless >> ca >> cb >> ma >> mb) {
    s.total_moves = static_cast<std::uint8_t>(total);
    s.rewardless_moves = static_cast<std::uint8_t>(rewardless);
    s.cum_reward[0] = static_cast<std::int16_t>(ca);
    s.cum_reward[1] = static_cast<std::int16_t>(cb);
    s.mover[0] = static_cast<std::uint8_t>(ma);
    s.mover[1] = static_cast<std::uint8_t>(mb);
  }
  return s;
}

std::string checkers_board_diagram(const CheckersState& s) {
  std::string out;
  for (int row = 7; row >= 0; --row) {
    for (int col = 0; col < 8; ++col) {
      const int sq = square_of(row, col);
      if (sq < 0) {
        out += ' ';
        continue;
      }
      const std::uint32_t bit = 1u << sq;
      char ch = '.';
      if (s.pieces[0] & bit) ch = (s.kings & bit) ? 'B' : 'b';
      if (s.pieces[1] & bit) ch = (s.kings & bit) ? 'W' : 'w';
      out += ch;
    }
    out += '\n';
  }
  return out;
}

}  // namespace cap
