#include <random>

#include "cap/tabular.hpp"
#include "doctest.h"

using namespace cap;

namespace {

CapabilitySetPtr caps123() {
  return std::make_shared<const CapabilitySet>(std::vector<int>{1, 2, 3});
}

// Memoless recursive lookahead, the oracle for the table-based solver.
double recursive_value(const TabularGame& game, int state, int depth) {
  if (depth == 0 || game.row(state).terminal) return 0.0;
  double best = -1e100;
  for (int a = 0; a < game.num_actions(state); ++a) {
    double acc = 0.0;
    for (const auto& o : game.outcomes(state, a))
      acc += o.prob * (o.reward + game.gamma() * recursive_value(game, o.next_state, depth - 1));
    best = std::max(best, acc);
  }
  return best;
}

}  // namespace

TEST_CASE("one-step lookahead is the immediate reward") {
  std::vector<TabularGame::StateRow> rows(2);
  rows[0].actor = 0;
  rows[0].actions = {{{1, 1.0, 1.0}}, {{1, 1.0, 0.0}}};
  rows[1].actor = 1;
  rows[1].terminal = true;
  const TabularGame game(std::move(rows), 2, 0.9, 4);
  const auto q = value_iteration_typed(game, 1);
  CHECK(q[0][0] == doctest::Approx(1.0));
  CHECK(q[0][1] == doctest::Approx(0.0));
}

TEST_CASE("lookahead beyond the horizon saturates at the full optimum") {
  // Finite episode: a 4-chain that terminates, so depth >= 4 is exact.
  std::vector<TabularGame::StateRow> rows(5);
  for (int s = 0; s < 4; ++s) {
    rows[s].actor = s % 2;
    rows[s].actions = {{{s + 1, 1.0, 0.1 * (s + 1)}}, {{4, 1.0, 0.05}}};
  }
  rows[4].actor = 0;
  rows[4].terminal = true;
  const TabularGame game(std::move(rows), 2, 0.9, 4);
  const auto q4 = value_iteration_typed(game, 4);
  const auto q9 = value_iteration_typed(game, 9);
  for (int a = 0; a < 2; ++a) CHECK(q4[0][a] == doctest::Approx(q9[0][a]));
}

TEST_CASE("typed tables match the recursive enumeration on random games") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 25; ++trial) {
    const TabularGame game = random_tabular_game(rng, 20, 3, 2);
    for (int depth : {1, 2, 3}) {
      const auto q = value_iteration_typed(game, depth);
      for (int s = 0; s < game.num_states(); ++s) {
        if (game.row(s).terminal) continue;
        double best = -1e100;
        for (int a = 0; a < game.num_actions(s); ++a) best = std::max(best, q[s][a]);
        CHECK(best == doctest::Approx(recursive_value(game, s, depth)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("deeper capability never lowers the optimal root value") {
  std::mt19937_64 rng(321);
  for (int trial = 0; trial < 30; ++trial) {
    const TabularGame game = random_tabular_game(rng, 15, 2, 2);
    double prev = 0.0;
    for (int depth = 1; depth <= 4; ++depth) {
      const auto q = value_iteration_typed(game, depth);
      double best = 0.0;
      if (!game.row(0).terminal)
        for (int a = 0; a < game.num_actions(0); ++a) best = std::max(best, q[0][a]);
      CHECK(best >= prev - 1e-12);
      prev = best;
    }
  }
}

TEST_CASE("brute-force posterior") {
  auto caps = caps123();
  // State 0: action 0 optimal only for depth >= 2; action 1 the myopic pick.
  std::vector<TabularGame::StateRow> rows(3);
  rows[0].actor = 0;
  rows[0].actions = {{{1, 1.0, 0.0}}, {{2, 1.0, 0.3}}};
  rows[1].actor = 0;
  rows[1].actions = {{{2, 1.0, 1.0}}, {{2, 1.0, 0.0}}};
  rows[2].actor = 0;
  rows[2].terminal = true;
  const TabularGame game(std::move(rows), 1, 0.9, 4);
  const TabularTypedQ q(game, *caps);

  SUBCASE("empty history keeps the uniform prior") {
    const auto post = brute_force_posterior(game, *caps, q, {});
    CHECK(post[0] == std::vector<double>{1.0, 1.0, 1.0});
  }
  SUBCASE("deep-only action induces a posterior over deep types") {
    // Depth 1 prefers the 0.3 reward now; depths 2 and 3 see 0.9*1.0 later.
    const auto post = brute_force_posterior(game, *caps, q, {{0, 0, 0}});
    CHECK(post[0][0] == 0.0);
    CHECK(post[0][1] == doctest::Approx(1.0));
    CHECK(post[0][2] == doctest::Approx(1.0));
  }
  SUBCASE("impossible history zeroes every type") {
    // No depth plays action 1 at state 1 (reward 0 vs 1 and same successor).
    const auto post = brute_force_posterior(game, *caps, q, {{1, 0, 1}});
    CHECK(post[0] == std::vector<double>{0.0, 0.0, 0.0});
  }
}

TEST_CASE("theorem reports at reduced scale") {
  SUBCASE("T1") {
    const auto r = verify_theorem(TheoremId::T1, 10, 42);
    CHECK(r.passed);
    CHECK(r.trials == 10);
    CHECK(r.violations == 0);
  }
  SUBCASE("T2") {
    const auto r = verify_theorem(TheoremId::T2, 10, 42);
    CHECK(r.passed);
    CHECK(r.max_deviation <= 1e-9);
  }
  SUBCASE("T3") {
    const auto r = verify_theorem(TheoremId::T3, 5, 42);
    CHECK(r.passed);
    CHECK(r.bound == doctest::Approx(0.15 * 1.05));
  }
  SUBCASE("T4") {
    const auto r = verify_theorem(TheoremId::T4, 10, 42);
    CHECK(r.passed);
  }
  SUBCASE("Lemma") {
    const auto r = verify_theorem(TheoremId::Lemma, 20, 42);
    CHECK(r.passed);
  }
  SUBCASE("json shape") {
    const auto r = verify_theorem(TheoremId::T1, 2, 7);
    const auto json = theorem_report_to_json({r});
    CHECK(json.find("\"name\"") != std::string::npos);
    CHECK(json.find("\"violations\"") != std::string::npos);
  }
}
