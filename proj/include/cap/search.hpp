#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <ostream>
#include <random>
#include <vector>

#include "cap/capability.hpp"
#include "cap/game.hpp"

namespace cap {

struct SearchParams {
  int n = 200;  // iterations-per-level base
  int d = 1;    // depth capability: progressive levels 1..d
  int m = 5;    // rollouts per simulate
  double gamma = 0.9;
  double uct_c = 1.4142135623730951;
};

struct SearchCounters {
  std::int64_t iterations = 0;
  std::int64_t base_simulates = 0;
  std::int64_t recursive_simulates = 0;
};

enum class TeammateModel { Cooperative, Minimizing };

/// Game tree with per-capability-type statistics. A node stores one
/// (visit, value-sum) pair per touched depth level; reads fall back to the
/// deepest level at or below the query, which realizes the
/// initialize-from-previous-depth rule lazily.
template <TurnGame G>
class SearchTree {
 public:
  struct LevelStat {
    std::int32_t level;
    std::int64_t visits = 0;
    double value_sum = 0.0;
    std::int64_t simulates = 0;
  };

  struct Node {
    typename G::State state;
    double edge_reward = 0.0;  // margin collected on entering this node
    std::int32_t depth = 0;
    std::int16_t actor = -1;
    bool terminal = false;
    bool expanded = false;
    std::vector<std::unique_ptr<Node>> children;  // index == action
    std::vector<LevelStat> stats;                 // ascending by level

    const LevelStat* read(int level) const {
      const LevelStat* best = nullptr;
      for (const auto& s : stats) {
        if (s.level > level) break;
        best = &s;
      }
      return best;
    }
    std::int64_t visits_at(int level) const {
      const auto* s = read(level);
      return s ? s->visits : 0;
    }
    double mean_at(int level) const {
      const auto* s = read(level);
      return s && s->visits > 0 ? s->value_sum / static_cast<double>(s->visits) : 0.0;
    }
    LevelStat& write(int level) {
      size_t pos = 0;
      while (pos < stats.size() && stats[pos].level < level) ++pos;
      if (pos < stats.size() && stats[pos].level == level) return stats[pos];
      LevelStat fresh{level, 0, 0.0, 0};
      if (pos > 0) {  // inherit the previous depth's estimates
        fresh.visits = stats[pos - 1].visits;
        fresh.value_sum = stats[pos - 1].value_sum;
        fresh.simulates = stats[pos - 1].simulates;
      }
      return *stats.insert(stats.begin() + pos, fresh);
    }
  };

  SearchTree(const G& game, const typename G::State& root_state, int self_player)
      : game_(&game), self_player_(self_player), self_team_(game.team_of(self_player)) {
    root_ = std::make_unique<Node>();
    root_->state = root_state;
    root_->actor = static_cast<std::int16_t>(game.current_actor(root_state));
    root_->terminal = game.is_terminal(root_state);
  }

  const G& game() const { return *game_; }
  Node& root() { return *root_; }
  const Node& root() const { return *root_; }
  int self_player() const { return self_player_; }
  const SearchCounters& counters() const { return counters_; }
  bool level_completed(int level) const {
    return std::find(completed_levels_.begin(), completed_levels_.end(), level) !=
           completed_levels_.end();
  }

  // Internal to the pass drivers below.
  SearchCounters& mutable_counters() { return counters_; }
  void mark_completed(int level) {
    if (!level_completed(level)) completed_levels_.push_back(level);
  }

 private:
  const G* game_;
  int self_player_;
  int self_team_;
  std::unique_ptr<Node> root_;
  SearchCounters counters_;
  std::vector<int> completed_levels_;

 public:
  int self_team() const { return self_team_; }
};

namespace search_detail {

constexpr int kUnboundedDepth = std::numeric_limits<std::int32_t>::max() / 2;

inline double unit_draw(std::mt19937_64& rng) {
  return (rng() >> 11) * 0x1.0p-53;
}

/// Draws a capability label <= depth_bound from the tempered belief (softmax
/// of negated losses, as per_player_likelihood); the bound itself when no
/// label qualifies. Consumes exactly one rng draw.
inline int sample_capped_depth(const Belief& b, int depth_bound, double T,
                               std::mt19937_64& rng) {
  const double u = unit_draw(rng);
  const auto& caps = b.caps();
  double lo = kInf;
  int last = -1;
  for (int i = 0; i < caps.size() && caps.label(i) <= depth_bound; ++i) {
    lo = std::min(lo, b.at(i));
    last = i;
  }
  if (last < 0 || std::isinf(lo)) return depth_bound;
  double total = 0.0;
  for (int i = 0; i <= last; ++i)
    total += std::isinf(b.at(i)) ? 0.0 : std::exp(-(b.at(i) - lo) / T);
  double acc = 0.0;
  for (int i = 0; i <= last; ++i) {
    acc += std::isinf(b.at(i)) ? 0.0 : std::exp(-(b.at(i) - lo) / T);
    if (u * total < acc) return caps.label(i);
  }
  return caps.label(last);
}

template <TurnGame G>
double margin(const SearchTree<G>& tree, const std::array<double, 2>& team_reward) {
  if (tree.game().num_teams() == 1) return team_reward[0];
  const int mine = tree.self_team();
  return team_reward[mine] - team_reward[1 - mine];
}

enum class PassMode { Oblivious, ObliviousMin, CapabilityAware };

/// Per-pass context: the stat level written, the select depth cap, rollout
/// depth, and (CA only) the sampled depth per player for this iteration.
/// The protagonist is the player whose planning the pass embodies: its nodes
/// follow the progressive level while its team members' depths are sampled
/// from the (reduced) beliefs. Acting passes cast the agent itself as the
/// protagonist; inference passes cast the observed teammate.
template <TurnGame G>
struct PassConfig {
  PassMode mode = PassMode::Oblivious;
  int level = 1;         // stats written here
  int depth_cap = 1;     // no node created beyond this tree depth
  int rollout_depth = 1;
  int protagonist = 0;
  const SearchParams* params = nullptr;
  const BeliefBank* bank = nullptr;  // CA passes
  double temperature = 0.1;
  bool top_level = true;  // recursive teammate passes never spawn more
};

template <TurnGame G>
void expand(SearchTree<G>& tree, typename SearchTree<G>::Node& node) {
  const G& game = tree.game();
  const int n = game.num_legal_actions(node.state);
  node.children.reserve(n);
  for (int a = 0; a < n; ++a) {
    auto out = game.step(node.state, a);
    auto child = std::make_unique<typename SearchTree<G>::Node>();
    child->state = out.next;
    child->edge_reward = margin(tree, out.team_reward);
    child->depth = node.depth + 1;
    child->terminal = game.is_terminal(out.next);
    child->actor = child->terminal ? -1 : static_cast<std::int16_t>(game.current_actor(out.next));
    node.children.push_back(std::move(child));
  }
  node.expanded = true;
}

template <TurnGame G>
double simulate(SearchTree<G>& tree, const typename SearchTree<G>::Node& node, int rollout_depth,
                int m, double gamma, std::mt19937_64& rng) {
  if (node.terminal || m <= 0) return 0.0;
  const G& game = tree.game();
  double total = 0.0;
  for (int r = 0; r < m; ++r) {
    typename G::State s = node.state;
    double acc = 0.0, g = 1.0;
    for (int k = 0; k < rollout_depth; ++k) {
      if (game.is_terminal(s)) break;
      const int na = game.num_legal_actions(s);
      if (na <= 0) break;
      const int a = static_cast<int>(rng() % static_cast<std::uint64_t>(na));
      auto out = game.step(s, a);
      acc += g * margin(tree, out.team_reward);
      g *= gamma;
      s = out.next;
    }
    total += acc;
  }
  return total / static_cast<double>(m);
}

// Actor kinds are relative to the searching agent.
enum class NodeKind { Self, Teammate, Opponent };

template <TurnGame G>
NodeKind kind_of(const SearchTree<G>& tree, const typename SearchTree<G>::Node& node) {
  if (node.actor == tree.self_player()) return NodeKind::Self;
  if (node.actor >= 0 && tree.game().team_of(node.actor) == tree.self_team())
    return NodeKind::Teammate;
  return NodeKind::Opponent;
}

/// True when the pass models this node's actor through sampled beliefs: a
/// team member other than the protagonist.
template <TurnGame G>
bool modeled_as_teammate(const SearchTree<G>& tree, const PassConfig<G>& cfg, int actor) {
  return actor >= 0 && actor != cfg.protagonist &&
         tree.game().team_of(actor) == tree.self_team();
}

/// Level whose statistics drive selection at `node`'s children, given this
/// iteration's sampled depths. The protagonist's and the opponents' nodes use
/// the deepest estimates of the pass; other team members use their sampled
/// type.
template <TurnGame G>
int selection_level(const SearchTree<G>& tree, const typename SearchTree<G>::Node& node,
                    const PassConfig<G>& cfg, const std::vector<int>& sampled_depths) {
  if (cfg.mode != PassMode::CapabilityAware) return cfg.level;
  if (modeled_as_teammate(tree, cfg, node.actor))
    return std::min(sampled_depths[static_cast<int>(node.actor)], cfg.level);
  return cfg.level;
}

template <TurnGame G>
int select_child(SearchTree<G>& tree, typename SearchTree<G>::Node& node, int stat_level,
                 const PassConfig<G>& cfg) {
  const NodeKind kind = kind_of(tree, node);
  const bool minimize = kind == NodeKind::Opponent ||
                        (cfg.mode == PassMode::ObliviousMin && kind == NodeKind::Teammate);
  const double sign = minimize ? -1.0 : 1.0;
  const double gamma = cfg.params->gamma;
  const double uct_c = cfg.params->uct_c;

  const std::int64_t parent_visits = std::max<std::int64_t>(node.visits_at(stat_level), 1);
  const double log_parent = std::log(static_cast<double>(parent_visits));
  int best = -1;
  double best_score = -kInf;
  for (int a = 0; a < static_cast<int>(node.children.size()); ++a) {
    const auto& child = *node.children[a];
    const std::int64_t visits = child.visits_at(stat_level);
    if (visits == 0) return a;  // unvisited children first, in action order
    const double exploit = sign * (child.edge_reward + gamma * child.mean_at(stat_level));
    const double score = exploit + uct_c * std::sqrt(log_parent / static_cast<double>(visits));
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  }
  return best;
}

/// Policy prediction at a modeled-teammate node: the child the sampled-type
/// mate would play, i.e. the most visited at its level (the standard UCT
/// action choice), without an exploration bonus. Exploring the mate's subtree
/// is the recursive teammate passes' job, where the mate is the protagonist
/// and full UCB applies at its nodes.
template <TurnGame G>
int predict_teammate_choice(const typename SearchTree<G>::Node& node, int stat_level) {
  int best = -1;
  std::int64_t best_visits = -1;
  for (int a = 0; a < static_cast<int>(node.children.size()); ++a) {
    const std::int64_t visits = node.children[a]->visits_at(stat_level);
    if (visits == 0) return a;  // grow unvisited children before predicting
    if (visits > best_visits) {
      best_visits = visits;
      best = a;
    }
  }
  return best;
}

template <TurnGame G>
void backpropagate(std::vector<typename SearchTree<G>::Node*>& path, double leaf_value, int level,
                   double gamma, bool count_simulate) {
  double value = leaf_value;
  for (int i = static_cast<int>(path.size()) - 1; i >= 0; --i) {
    auto& stat = path[i]->write(level);
    stat.visits += 1;
    stat.value_sum += value;
    if (count_simulate && i == static_cast<int>(path.size()) - 1) stat.simulates += 1;
    if (i > 0) value = path[i]->edge_reward + gamma * value;
  }
}

template <TurnGame G>
void run_iteration(SearchTree<G>& tree, typename SearchTree<G>::Node& from,
                   const PassConfig<G>& cfg, const std::vector<int>& sampled_depths,
                   std::mt19937_64& rng);

/// One bounded iteration exploring as the hypothesized depth-D teammate at
/// `node`: every actor is evaluated at the teammate's level except other team
/// members, whose depths are drawn from the bank reduced to D (the teammate's
/// view of the type structure).
template <TurnGame G>
void spawn_teammate_pass(SearchTree<G>& tree, typename SearchTree<G>::Node& node,
                         int teammate_depth, const PassConfig<G>& cfg, std::mt19937_64& rng) {
  PassConfig<G> sub = cfg;
  sub.level = teammate_depth;
  sub.depth_cap = std::min(node.depth + teammate_depth, cfg.depth_cap);
  sub.rollout_depth = teammate_depth;
  sub.protagonist = node.actor;
  sub.top_level = false;

  std::vector<int> sub_depths(tree.game().num_players(), teammate_depth);
  for (int p = 0; p < tree.game().num_players(); ++p) {
    if (!modeled_as_teammate(tree, sub, p)) continue;
    sub_depths[p] =
        sample_capped_depth(cfg.bank->about(p), teammate_depth, cfg.temperature, rng);
  }
  run_iteration(tree, node, sub, sub_depths, rng);
}

template <TurnGame G>
void run_iteration(SearchTree<G>& tree, typename SearchTree<G>::Node& from,
                   const PassConfig<G>& cfg, const std::vector<int>& sampled_depths,
                   std::mt19937_64& rng) {
  std::vector<typename SearchTree<G>::Node*> path;
  path.push_back(&from);
  typename SearchTree<G>::Node* node = &from;

  while (true) {
    if (cfg.mode == PassMode::CapabilityAware && cfg.top_level &&
        modeled_as_teammate(tree, cfg, node->actor)) {
      spawn_teammate_pass(tree, *node, sampled_depths[static_cast<int>(node->actor)], cfg, rng);
    }
    if (node->terminal || node->depth >= cfg.depth_cap) break;
    if (!node->expanded) {
      expand(tree, *node);
      break;
    }
    if (node->children.empty()) break;
    const int stat_level = selection_level(tree, *node, cfg, sampled_depths);
    const bool predictive =
        cfg.mode == PassMode::CapabilityAware && modeled_as_teammate(tree, cfg, node->actor);
    const int a = predictive ? predict_teammate_choice<G>(*node, stat_level)
                             : select_child(tree, *node, stat_level, cfg);
    node = node->children[a].get();
    path.push_back(node);
  }

  const double value =
      simulate(tree, *node, cfg.rollout_depth, cfg.params->m, cfg.params->gamma, rng);
  auto& counters = tree.mutable_counters();
  if (cfg.top_level)
    counters.base_simulates += 1;
  else
    counters.recursive_simulates += 1;
  backpropagate<G>(path, value, cfg.level, cfg.params->gamma, true);
}

template <TurnGame G>
void run_pass(SearchTree<G>& tree, int iterations, const PassConfig<G>& cfg,
              std::mt19937_64& rng) {
  if (tree.root().terminal) throw std::domain_error("search requires a non-terminal root");
  std::vector<int> sampled(tree.game().num_players(), cfg.level);
  for (int it = 0; it < iterations; ++it) {
    if (cfg.mode == PassMode::CapabilityAware) {
      for (int p = 0; p < tree.game().num_players(); ++p) {
        sampled[p] = cfg.level;
        if (!modeled_as_teammate(tree, cfg, p)) continue;
        sampled[p] = sample_capped_depth(cfg.bank->about(p), cfg.level, cfg.temperature, rng);
      }
    }
    run_iteration(tree, tree.root(), cfg, sampled, rng);
    tree.mutable_counters().iterations += 1;
  }
}

}  // namespace search_detail

/// Plain MCTS: n iterations of select/expand/simulate/backpropagate with
/// unbounded select depth and rollouts of params.d steps.
template <TurnGame G>
void mcts(SearchTree<G>& tree, const SearchParams& params, std::mt19937_64& rng) {
  search_detail::PassConfig<G> cfg;
  cfg.mode = search_detail::PassMode::Oblivious;
  cfg.level = params.d;
  cfg.depth_cap = search_detail::kUnboundedDepth;
  cfg.rollout_depth = params.d;
  cfg.params = &params;
  search_detail::run_pass(tree, params.n, cfg, rng);
  tree.mark_completed(params.d);
}

/// Depth-bounded MCTS: select stops at depth params.d; otherwise identical to
/// mcts under the same seed.
template <TurnGame G>
void bounded_mcts(SearchTree<G>& tree, const SearchParams& params, std::mt19937_64& rng,
                  TeammateModel teammates = TeammateModel::Cooperative) {
  search_detail::PassConfig<G> cfg;
  cfg.mode = teammates == TeammateModel::Cooperative ? search_detail::PassMode::Oblivious
                                                     : search_detail::PassMode::ObliviousMin;
  cfg.level = params.d;
  cfg.depth_cap = params.d;
  cfg.rollout_depth = params.d;
  cfg.params = &params;
  search_detail::run_pass(tree, params.n, cfg, rng);
  tree.mark_completed(params.d);
}

/// Progressive deepening: level i runs n*i bounded iterations, so a depth-d
/// agent searches n*d*(d+1)/2 iterations in total.
template <TurnGame G>
SearchTree<G> oblivious_search(const G& game, const typename G::State& root_state,
                               int self_player, const SearchParams& params, std::mt19937_64& rng,
                               TeammateModel teammates = TeammateModel::Cooperative) {
  SearchTree<G> tree(game, root_state, self_player);
  for (int level = 1; level <= params.d; ++level) {
    SearchParams level_params = params;
    level_params.n = params.n * level;
    level_params.d = level;
    bounded_mcts(tree, level_params, rng, teammates);
  }
  return tree;
}

/// Capability-aware progressive search. Each iteration samples teammate
/// depths from the bank reduced to the current level; selection uses the
/// deepest statistics at the protagonist's and opponents' nodes and
/// sampled-type statistics at other team members' nodes. The top-level call
/// spawns one recursive bounded iteration per modeled-teammate node on the
/// selected path, exploring as the hypothesized teammate; recursive passes
/// never spawn further ones. Acting searches leave `protagonist` at its
/// default (the searching agent); inference searches pass the observed
/// teammate, so that level c captures the behavior of a capability-aware
/// type-c actor using the reduced type structure.
template <TurnGame G>
SearchTree<G> ca_mcts(const G& game, const typename G::State& root_state, int self_player,
                      const SearchParams& params, const BeliefBank& bank, double temperature,
                      std::mt19937_64& rng, int protagonist = -1) {
  if (bank.mode() != BeliefMode::Tempered)
    throw std::invalid_argument("ca_mcts requires a Tempered-mode bank");
  SearchTree<G> tree(game, root_state, self_player);
  for (int level = 1; level <= params.d; ++level) {
    search_detail::PassConfig<G> cfg;
    cfg.mode = search_detail::PassMode::CapabilityAware;
    cfg.level = level;
    cfg.depth_cap = level;
    cfg.rollout_depth = level;
    cfg.protagonist = protagonist < 0 ? self_player : protagonist;
    cfg.params = &params;
    cfg.bank = &bank;
    cfg.temperature = temperature;
    search_detail::run_pass(tree, params.n * level, cfg, rng);
    tree.mark_completed(level);
  }
  return tree;
}

/// Per-action normalized visit counts at the requested depth level; the value
/// surrogate read off for loss computation.
template <TurnGame G>
std::vector<double> typed_action_values(const SearchTree<G>& tree, int level) {
  if (!tree.level_completed(level))
    throw std::domain_error("requested level has not been searched");
  const auto& root = tree.root();
  std::vector<double> out(root.children.size(), 0.0);
  double total = 0.0;
  for (size_t a = 0; a < root.children.size(); ++a) {
    out[a] = static_cast<double>(root.children[a]->visits_at(level));
    total += out[a];
  }
  if (total > 0)
    for (auto& v : out) v /= total;
  return out;
}

/// Most-visited root action at the given level, ties broken uniformly.
template <TurnGame G>
int pick_action(const SearchTree<G>& tree, int level, std::mt19937_64& rng) {
  if (!tree.level_completed(level))
    throw std::domain_error("requested level has not been searched");
  const auto& root = tree.root();
  if (root.children.empty()) throw std::domain_error("root was never expanded");
  std::int64_t best = -1;
  std::vector<int> tied;
  for (size_t a = 0; a < root.children.size(); ++a) {
    const std::int64_t visits = root.children[a]->visits_at(level);
    if (visits > best) {
      best = visits;
      tied.clear();
    }
    if (visits == best) tied.push_back(static_cast<int>(a));
  }
  return tied[rng() % tied.size()];
}

/// Line-oriented debug dump: node key, depth, then level:visits:mean triples.
template <TurnGame G>
void dump_tree(const SearchTree<G>& tree, std::ostream& os, int max_depth = 2) {
  struct Walker {
    const SearchTree<G>* tree;
    std::ostream* os;
    int max_depth;
    void walk(const typename SearchTree<G>::Node& node, const std::string& path) {
      *os << path << " key=" << tree->game().state_key(node.state) << " depth=" << node.depth;
      for (const auto& s : node.stats) {
        const double mean = s.visits > 0 ? s.value_sum / static_cast<double>(s.visits) : 0.0;
        *os << " L" << s.level << ":" << s.visits << ":" << mean;
      }
      *os << "\n";
      if (node.depth >= max_depth) return;
      for (size_t a = 0; a < node.children.size(); ++a)
        walk(*node.children[a], path + "/" + std::to_string(a));
    }
  };
  Walker{&tree, &os, max_depth}.walk(tree.root(), "root");
}

}  // namespace cap
