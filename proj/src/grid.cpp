#include "cap/grid.hpp"

#include <sstream>
#include <stdexcept>

namespace cap {

GridGame::GridGame(const std::string& map_text, GridParams params) : params_(params) {
  std::vector<std::string> rows;
  std::istringstream in(map_text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.empty()) throw std::invalid_argument("empty map");
  height_ = static_cast<int>(rows.size());
  width_ = static_cast<int>(rows.front().size());
  tiles_.assign(width_ * height_, Tile::Neutral);
  coin_index_by_cell_.assign(width_ * height_, -1);

  for (int r = 0; r < height_; ++r) {
    if (static_cast<int>(rows[r].size()) != width_)
      throw std::invalid_argument("ragged map rows");
    for (int c = 0; c < width_; ++c) {
      const int at = cell(r, c);
      switch (rows[r][c]) {
        case '.': break;
        case 'F': tiles_[at] = Tile::Fire; break;
        case '#': tiles_[at] = Tile::Wall; break;
        case 'c':
          tiles_[at] = Tile::CoinBlue;
          coin_index_by_cell_[at] = static_cast<int>(coin_cells_.size());
          coin_cells_.push_back(at);
          break;
        case 'C':
          tiles_[at] = Tile::CoinRed;
          coin_index_by_cell_[at] = static_cast<int>(coin_cells_.size());
          coin_cells_.push_back(at);
          break;
        case 'b': start_cell_[0] = at; break;
        case 'r': start_cell_[1] = at; break;
        default:
          throw std::invalid_argument(std::string("unknown map character '") + rows[r][c] + "'");
      }
    }
  }
  if (coin_cells_.size() > 32) throw std::invalid_argument("too many coins for the state mask");
  if (params_.horizon <= 0) throw std::invalid_argument("horizon must be positive");
  if (params_.shared_avatar) {
    if (start_cell_[0] < 0 && start_cell_[1] < 0)
      throw std::invalid_argument("shared-avatar map needs one start");
    if (start_cell_[0] < 0) start_cell_[0] = start_cell_[1];
  } else {
    if (start_cell_[0] < 0 || start_cell_[1] < 0)
      throw std::invalid_argument("map needs 'b' and 'r' starts");
  }
}

GridGame::State GridGame::initial_state() const {
  State s;
  s.avatar[0] = static_cast<std::uint8_t>(start_cell_[0]);
  s.avatar[1] = static_cast<std::uint8_t>(params_.shared_avatar ? start_cell_[0] : start_cell_[1]);
  return s;
}

int GridGame::legal_moves(const State& s, std::array<int, 5>& targets) const {
  const int mover = avatar_of(current_actor(s));
  const int from = s.avatar[mover];
  const int row = from / width_, col = from % width_;
  const int other = params_.shared_avatar ? -1 : s.avatar[1 - mover];
  int n = 0;
  if (params_.allow_stay) targets[n++] = from;
  const int drow[4] = {-1, 1, 0, 0};
  const int dcol[4] = {0, 0, -1, 1};
  for (int d = 0; d < 4; ++d) {
    const int r = row + drow[d], c = col + dcol[d];
    if (r < 0 || r >= height_ || c < 0 || c >= width_) continue;
    const int to = cell(r, c);
    if (tiles_[to] == Tile::Wall) continue;
    if (to == other) continue;  // avatars never co-occupy
    targets[n++] = to;
  }
  return n;
}

int GridGame::num_legal_actions(const State& s) const {
  if (is_terminal(s)) return 0;
  std::array<int, 5> targets;
  return legal_moves(s, targets);
}

StepOutcome<GridGame::State> GridGame::step(const State& s, int action) const {
  std::array<int, 5> targets;
  const int n = legal_moves(s, targets);
  if (action < 0 || action >= n) throw std::out_of_range("illegal grid action");
  const int actor = current_actor(s);
  const int mover = avatar_of(actor);
  const int to = targets[action];

  StepOutcome<State> out;
  out.next = s;
  out.next.avatar[mover] = static_cast<std::uint8_t>(to);
  if (params_.shared_avatar) out.next.avatar[1] = out.next.avatar[0];
  out.next.ply = static_cast<std::uint8_t>(s.ply + 1);

  double reward = 0.0;
  const Tile t = tiles_[to];
  if (t == Tile::Fire) {
    reward = params_.fire_penalty;
  } else if (t == Tile::CoinBlue || t == Tile::CoinRed) {
    const int idx = coin_index_by_cell_[to];
    const std::uint32_t bit = 1u << idx;
    if (!(s.collected & bit)) {
      out.next.collected = s.collected | bit;
      const CoinRule& rule = t == Tile::CoinBlue ? params_.blue_coin : params_.red_coin;
      const bool owner_ok = rule.owner == CoinOwner::Any ||
                            (rule.owner == CoinOwner::Blue && mover == 0) ||
                            (rule.owner == CoinOwner::Red && mover == 1);
      if (owner_ok) reward = rule.value;
      // Mismatched collector: the coin disappears and is worth nothing.
    }
  }
  out.team_reward[0] = reward;
  return out;
}

std::uint64_t GridGame::state_key(const State& s) const {
  std::uint64_t packed = s.avatar[0];
  packed = packed << 8 | s.avatar[1];
  packed = packed << 32 | s.collected;
  packed = packed << 8 | s.ply;
  return mix_u64(packed);
}

std::string GridGame::action_name(const State& s, int action) const {
  std::array<int, 5> targets;
  const int n = legal_moves(s, targets);
  if (action < 0 || action >= n) return "?";
  const int mover = avatar_of(current_actor(s));
  const int from = s.avatar[mover];
  const int to = targets[action];
  if (to == from) return "stay";
  const int diff = to - from;
  if (diff == -width_) return "up";
  if (diff == width_) return "down";
  if (diff == -1) return "left";
  return "right";
}

namespace {

const std::string kWallOfFireMap =
    "#############\n"
    "#...FFFFFccc#\n"
    "#...FFFFF##c#\n"
    "#...FFFFFccc#\n"
    "#...FFFFFc###\n"
    "#...FFFFFccc#\n"
    "#...FFFFF##c#\n"
    "#..bFFFFFccc#\n"
    "#############\n";

const std::string kNarrowTunnelMap =
    "############\n"
    "#.cc###CCC.#\n"
    "#.r....b...#\n"
    "#.cc###....#\n"
    "############\n";

}  // namespace

const std::string& wall_of_fire_map() { return kWallOfFireMap; }
const std::string& narrow_tunnel_map() { return kNarrowTunnelMap; }

GridParams wall_of_fire_params() {
  GridParams p;
  p.blue_coin = {100.0, CoinOwner::Any};
  p.red_coin = {100.0, CoinOwner::Any};
  p.fire_penalty = -2.0;
  p.shared_avatar = true;
  p.allow_stay = false;
  p.horizon = 20;
  return p;
}

GridParams narrow_tunnel_params() {
  GridParams p;
  p.blue_coin = {1.0, CoinOwner::Blue};
  p.red_coin = {30.0, CoinOwner::Red};
  p.fire_penalty = -2.0;
  p.shared_avatar = false;
  p.allow_stay = true;
  p.horizon = 20;
  return p;
}

GridGame wall_of_fire() { return GridGame(kWallOfFireMap, wall_of_fire_params()); }
GridGame narrow_tunnel() { return GridGame(kNarrowTunnelMap, narrow_tunnel_params()); }

}  // namespace cap
