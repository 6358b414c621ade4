#include <functional>
#include <random>
#include <sstream>

#include "cap/checkers.hpp"
#include "cap/grid.hpp"
#include "cap/search.hpp"
#include "cap/tabular.hpp"
#include "doctest.h"

using namespace cap;

namespace {

// Two-armed deterministic bandit: arm 0 pays 1, arm 1 pays 0.
TabularGame bandit_game() {
  std::vector<TabularGame::StateRow> rows(2);
  rows[0].actor = 0;
  rows[0].actions = {{{1, 1.0, 1.0}}, {{1, 1.0, 0.0}}};
  rows[1].actor = 0;
  rows[1].terminal = true;
  return TabularGame(std::move(rows), 2, 0.9, 4);
}

// Reward-free two-player chain.
TabularGame reward_free_game() {
  std::vector<TabularGame::StateRow> rows(3);
  for (int s = 0; s < 3; ++s) {
    rows[s].actor = s % 2;
    rows[s].actions = {{{(s + 1) % 3, 1.0, 0.0}}, {{(s + 2) % 3, 1.0, 0.0}}};
  }
  return TabularGame(std::move(rows), 2, 0.9, 4);
}

template <TurnGame G>
void collect_depths(const typename SearchTree<G>::Node& node, int& max_depth) {
  max_depth = std::max(max_depth, static_cast<int>(node.depth));
  for (const auto& child : node.children)
    if (child) collect_depths<G>(*child, max_depth);
}

// Visit-count conservation at one level: a node's visits equal the sum of its
// children's visits plus its own simulate count, throughout the tree.
template <TurnGame G>
void check_conservation(const typename SearchTree<G>::Node& node, int level) {
  const auto* stat = node.read(level);
  if (!stat) return;
  std::int64_t child_sum = 0;
  for (const auto& child : node.children) child_sum += child->visits_at(level);
  std::int64_t sims = 0;
  for (const auto& s : node.stats)
    if (s.level <= level) sims = s.simulates;
  CHECK(stat->visits == child_sum + sims);
  for (const auto& child : node.children) check_conservation<G>(*child, level);
}

}  // namespace

TEST_CASE("single mcts iteration expands the root and simulates once") {
  const auto game = bandit_game();
  SearchTree<TabularGame> tree(game, game.initial_state(), 0);
  SearchParams params;
  params.n = 1;
  params.d = 2;
  std::mt19937_64 rng(1);
  mcts(tree, params, rng);
  CHECK(tree.root().expanded);
  CHECK(tree.root().children.size() == 2);
  CHECK(tree.root().visits_at(2) == 1);
  CHECK(tree.counters().base_simulates == 1);
  CHECK(tree.counters().iterations == 1);
}

TEST_CASE("mcts finds the better bandit arm") {
  const auto game = bandit_game();
  SearchParams params;
  params.n = 500;
  params.d = 2;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SearchTree<TabularGame> tree(game, game.initial_state(), 0);
    std::mt19937_64 rng(seed);
    mcts(tree, params, rng);
    std::mt19937_64 pick_rng(seed);
    CHECK(pick_action(tree, 2, pick_rng) == 0);
    CHECK(tree.root().children[0]->visits_at(2) > tree.root().children[1]->visits_at(2));
  }
}

TEST_CASE("reward-free simulate yields exactly zero estimates") {
  const auto game = reward_free_game();
  SearchTree<TabularGame> tree(game, game.initial_state(), 0);
  SearchParams params;
  params.n = 50;
  params.d = 3;
  std::mt19937_64 rng(3);
  mcts(tree, params, rng);
  CHECK(tree.root().mean_at(3) == doctest::Approx(0.0));
}

TEST_CASE("terminal root is an error") {
  std::vector<TabularGame::StateRow> rows(1);
  rows[0].actor = 0;
  rows[0].terminal = true;
  const TabularGame game(std::move(rows), 1, 0.9, 1);
  SearchTree<TabularGame> tree(game, 0, 0);
  SearchParams params;
  std::mt19937_64 rng(0);
  CHECK_THROWS_AS(mcts(tree, params, rng), std::domain_error);
}

TEST_CASE("bounded select never creates nodes past the depth cap") {
  const auto game = wall_of_fire();
  SearchParams params;
  params.n = 300;
  params.m = 2;
  for (int d : {1, 3, 5}) {
    SearchTree<GridGame> tree(game, game.initial_state(), 0);
    SearchParams p = params;
    p.d = d;
    std::mt19937_64 rng(7);
    bounded_mcts(tree, p, rng);
    int max_depth = 0;
    collect_depths<GridGame>(tree.root(), max_depth);
    CHECK(max_depth <= d);
    if (d == 1) {
      // Only the root's children exist.
      for (const auto& child : tree.root().children) CHECK(child->children.empty());
    }
  }
}

TEST_CASE("bounded mcts with a slack cap equals plain mcts under the same seed") {
  const auto game = bandit_game();  // terminates in one step, any cap is slack
  SearchParams params;
  params.n = 200;
  params.d = 4;
  SearchTree<TabularGame> plain(game, game.initial_state(), 0);
  SearchTree<TabularGame> bounded(game, game.initial_state(), 0);
  std::mt19937_64 rng_a(11), rng_b(11);
  mcts(plain, params, rng_a);
  bounded_mcts(bounded, params, rng_b);
  REQUIRE(plain.root().children.size() == bounded.root().children.size());
  for (size_t a = 0; a < plain.root().children.size(); ++a) {
    CHECK(plain.root().children[a]->visits_at(4) == bounded.root().children[a]->visits_at(4));
    CHECK(plain.root().children[a]->mean_at(4) ==
          doctest::Approx(bounded.root().children[a]->mean_at(4)));
  }
}

TEST_CASE("progressive search iteration accounting") {
  const auto game = wall_of_fire();
  SearchParams params;
  params.n = 200;
  params.m = 1;
  SUBCASE("d=1 is a single base pass") {
    SearchParams p = params;
    p.d = 1;
    std::mt19937_64 rng(2);
    const auto tree = oblivious_search(game, game.initial_state(), 0, p, rng);
    CHECK(tree.counters().iterations == 200);
  }
  SUBCASE("totals follow n*d*(d+1)/2") {
    for (int d : {2, 4}) {
      SearchParams p = params;
      p.d = d;
      std::mt19937_64 rng(2);
      const auto tree = oblivious_search(game, game.initial_state(), 0, p, rng);
      CHECK(tree.counters().iterations == 100 * d * (d + 1));
      CHECK(tree.counters().base_simulates == tree.counters().iterations);
      CHECK(tree.counters().recursive_simulates == 0);
    }
  }
}

TEST_CASE("backpropagation conserves visit counts level by level") {
  const auto game = wall_of_fire();
  SearchParams params;
  params.n = 60;
  params.m = 2;
  params.d = 4;
  std::mt19937_64 rng(9);
  const auto tree = oblivious_search(game, game.initial_state(), 0, params, rng);
  for (int level = 1; level <= 4; ++level) check_conservation<GridGame>(tree.root(), level);
}

TEST_CASE("completing a level never mutates shallower levels") {
  const auto game = wall_of_fire();
  SearchParams params;
  params.n = 80;
  params.m = 2;
  SearchTree<GridGame> tree(game, game.initial_state(), 0);
  std::mt19937_64 rng(4);
  SearchParams p1 = params;
  p1.d = 1;
  bounded_mcts(tree, p1, rng);
  std::vector<std::int64_t> level1_visits;
  for (const auto& child : tree.root().children) level1_visits.push_back(child->visits_at(1));

  SearchParams p2 = params;
  p2.d = 2;
  p2.n = params.n * 2;
  bounded_mcts(tree, p2, rng);
  for (size_t a = 0; a < tree.root().children.size(); ++a)
    CHECK(tree.root().children[a]->visits_at(1) == level1_visits[a]);
}

TEST_CASE("seed determinism for capability-aware search") {
  const auto game = narrow_tunnel();
  SearchParams params;
  params.n = 40;
  params.m = 2;
  params.d = 4;
  auto caps = std::make_shared<const CapabilitySet>(std::vector<int>{2, 4});
  auto bank = BeliefBank::initial(caps, BeliefMode::Tempered, 4, 2);
  bank = intervene(bank, 0, 4);

  auto run_once = [&](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto tree = ca_mcts(game, game.initial_state(), 0, params, bank, 0.1, rng);
    std::mt19937_64 pick_rng(seed + 1);
    std::vector<std::int64_t> visits;
    for (const auto& child : tree.root().children) visits.push_back(child->visits_at(4));
    return std::make_pair(visits, pick_action(tree, 4, pick_rng));
  };
  const auto a = run_once(123);
  const auto b = run_once(123);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("sampled teammate depths follow the reduced beliefs") {
  auto caps = std::make_shared<const CapabilitySet>(std::vector<int>{2, 4});
  SUBCASE("delta belief always samples the pinned depth") {
    Belief b(caps, BeliefMode::Tempered, {kInf, 0.0});
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i)
      CHECK(search_detail::sample_capped_depth(b, 4, 0.1, rng) == 4);
  }
  SUBCASE("uniform belief samples about half each over 10000 draws") {
    Belief b(caps, BeliefMode::Tempered, {0.0, 0.0});
    std::mt19937_64 rng(6);
    int lo = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
      if (search_detail::sample_capped_depth(b, 4, 0.1, rng) == 2) ++lo;
    CHECK(std::abs(lo / static_cast<double>(n) - 0.5) < 0.02);
  }
  SUBCASE("bound excludes deeper labels and falls back when empty") {
    Belief b(caps, BeliefMode::Tempered, {0.7, 0.0});
    std::mt19937_64 rng(7);
    for (int i = 0; i < 50; ++i) CHECK(search_detail::sample_capped_depth(b, 2, 0.1, rng) == 2);
    for (int i = 0; i < 50; ++i) CHECK(search_detail::sample_capped_depth(b, 1, 0.1, rng) == 1);
  }
}

TEST_CASE("capability-aware recursion overhead is at most d times the base work") {
  const auto game = narrow_tunnel();
  auto caps = std::make_shared<const CapabilitySet>(std::vector<int>{2, 4});
  auto bank = BeliefBank::initial(caps, BeliefMode::Tempered, 4, 2);
  SearchParams params;
  params.n = 50;
  params.m = 2;
  params.d = 4;
  std::mt19937_64 rng(8);
  const auto tree = ca_mcts(game, game.initial_state(), 0, params, bank, 0.1, rng);
  CHECK(tree.counters().base_simulates == tree.counters().iterations);
  CHECK(tree.counters().recursive_simulates <= params.d * tree.counters().base_simulates);
  CHECK(tree.counters().recursive_simulates > 0);  // teammate nodes do spawn work
}

TEST_CASE("typed action values normalize level visits") {
  const auto game = bandit_game();
  SearchParams params;
  params.n = 100;
  params.d = 2;
  SearchTree<TabularGame> tree(game, game.initial_state(), 0);
  std::mt19937_64 rng(10);
  mcts(tree, params, rng);
  const auto values = typed_action_values(tree, 2);
  REQUIRE(values.size() == 2);
  CHECK(values[0] + values[1] == doctest::Approx(1.0));
  CHECK(values[0] > values[1]);
  CHECK_THROWS_AS(typed_action_values(tree, 1), std::domain_error);
}

TEST_CASE("pick_action prefers visits and splits ties uniformly") {
  const auto game = bandit_game();
  SearchTree<TabularGame> tree(game, game.initial_state(), 0);
  search_detail::expand(tree, tree.root());
  tree.mark_completed(1);
  auto& a0 = tree.root().children[0]->write(1);
  auto& a1 = tree.root().children[1]->write(1);
  SUBCASE("strict visit order wins") {
    a0.visits = 10;
    a1.visits = 3;
    std::mt19937_64 rng(0);
    for (int i = 0; i < 20; ++i) CHECK(pick_action(tree, 1, rng) == 0);
  }
  SUBCASE("ties split near 50/50 over 10000 draws") {
    a0.visits = 5;
    a1.visits = 5;
    std::mt19937_64 rng(12);
    int zero = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
      if (pick_action(tree, 1, rng) == 0) ++zero;
    CHECK(std::abs(zero / static_cast<double>(n) - 0.5) < 0.02);
  }
  SUBCASE("single legal action") {
    std::vector<TabularGame::StateRow> rows(2);
    rows[0].actor = 0;
    rows[0].actions = {{{1, 1.0, 0.0}}};
    rows[1].actor = 0;
    rows[1].terminal = true;
    const TabularGame single(std::move(rows), 1, 0.9, 2);
    SearchTree<TabularGame> t(single, single.initial_state(), 0);
    SearchParams params;
    params.n = 5;
    params.d = 1;
    std::mt19937_64 rng(3);
    bounded_mcts(t, params, rng);
    CHECK(pick_action(t, 1, rng) == 0);
  }
}

TEST_CASE("level stats inherit from the previous depth on first touch") {
  const auto game = bandit_game();
  SearchTree<TabularGame> tree(game, game.initial_state(), 0);
  auto& node = tree.root();
  auto& l1 = node.write(1);
  l1.visits = 10;
  l1.value_sum = 5.0;
  const auto& l3 = node.write(3);
  CHECK(l3.visits == 10);
  CHECK(l3.value_sum == doctest::Approx(5.0));
  // Reads between levels fall back to the deepest level at or below.
  CHECK(node.visits_at(2) == 10);
  CHECK(node.read(0) == nullptr);
}

TEST_CASE("opponent nodes minimize: the searcher avoids gifting captures") {
  // Checkers position where one of black's moves hands white a jump.
  const CheckersGame game(1, 1);
  CheckersState s;
  s.pieces[0] = (1u << 9) | (1u << 2);    // b at (2,3) and (0,5)
  s.pieces[1] = (1u << 17) | (1u << 22);  // w at (4,3) and (5,4)
  s.kings = 0;
  s.side = 0;
  REQUIRE_FALSE(game.is_terminal(s));
  SearchParams params;
  params.n = 400;
  params.m = 3;
  params.d = 4;
  std::mt19937_64 rng(21);
  const auto tree = oblivious_search(game, s, 0, params, rng);
  std::mt19937_64 pick_rng(1);
  const int chosen = pick_action(tree, 4, pick_rng);
  const auto nxt = game.step(s, chosen).next;
  std::vector<CheckersMove> replies;
  game.generate_moves(nxt, replies);
  bool gifts_capture = false;
  for (const auto& r : replies)
    if (r.captured) gifts_capture = true;
  CHECK_FALSE(gifts_capture);
}

TEST_CASE("tree dump emits one line per node with level stats") {
  const auto game = bandit_game();
  SearchTree<TabularGame> tree(game, game.initial_state(), 0);
  SearchParams params;
  params.n = 20;
  params.d = 1;
  std::mt19937_64 rng(2);
  bounded_mcts(tree, params, rng);
  std::ostringstream os;
  dump_tree(tree, os, 2);
  const auto text = os.str();
  CHECK(text.find("root key=") != std::string::npos);
  CHECK(text.find("L1:") != std::string::npos);
}
