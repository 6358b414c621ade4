#include <cmath>
#include <random>

#include "cap/tabular.hpp"
#include "cap/tempered.hpp"
#include "doctest.h"

using namespace cap;

namespace {

CapabilitySetPtr caps123() {
  return std::make_shared<const CapabilitySet>(std::vector<int>{1, 2, 3});
}

CapabilitySetPtr caps24() {
  return std::make_shared<const CapabilitySet>(std::vector<int>{2, 4});
}

// Fixed values per assignment, independent of state.
class MapValues : public AssignmentValueProvider {
 public:
  explicit MapValues(std::map<Assignment, double> values) : values_(std::move(values)) {}
  double value(const Assignment& a, int) const override {
    auto it = values_.find(a);
    return it == values_.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
  }

 private:
  std::map<Assignment, double> values_;
};

// One state, configurable deterministic rewards per action.
class OneStepModel : public TransitionModel {
 public:
  explicit OneStepModel(std::vector<double> rewards) {
    for (double r : rewards) outcomes_.push_back({{0, 1.0, r}});
  }
  int num_actions(int) const override { return static_cast<int>(outcomes_.size()); }
  const std::vector<Outcome>& outcomes(int, int action) const override {
    return outcomes_.at(action);
  }

 private:
  std::vector<std::vector<Outcome>> outcomes_;
};

}  // namespace

TEST_CASE("temperature schedules") {
  CHECK(temperature(NoiseRegime::Adversarial, 5, 2, 4, 0.1) == doctest::Approx(60.0));
  CHECK(temperature(NoiseRegime::FixedPractical, 123, 2, 4, 0.1, 0.1) == doctest::Approx(0.1));

  // Stochastic constant evaluated directly from its definition.
  const double d = stochastic_schedule_constant(2, 4, 0.05);
  CHECK(d == doctest::Approx(288.0 * std::log(320.0 / 0.45)).epsilon(1e-12));
  CHECK(d == doctest::Approx(1891.3).epsilon(1e-4));
  CHECK(temperature(NoiseRegime::Stochastic, 1, 2, 4, 0.05) == doctest::Approx(std::sqrt(d)));
  CHECK(temperature(NoiseRegime::Stochastic, 8, 2, 4, 0.05) ==
        doctest::Approx(std::sqrt(d) * 4.0));
  CHECK_THROWS_AS(temperature(NoiseRegime::Stochastic, 1, 2, 4, 1.5), std::invalid_argument);
}

TEST_CASE("per player likelihood is a softmax over the predecessor set") {
  auto caps = caps123();
  SUBCASE("all-zero losses give the uniform distribution") {
    const Belief b(caps, BeliefMode::Tempered, {0, 0, 0});
    const auto p = per_player_likelihood(b, 2, 0.1);
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));
    CHECK(p[2] == 0.0);
  }
  SUBCASE("low temperature concentrates on the min-loss entry") {
    const Belief b(caps, BeliefMode::Tempered, {0, 10, 0});
    const auto p = per_player_likelihood(b, 2, 0.1);
    CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(std::exp(-100.0)).epsilon(1e-6));
  }
  SUBCASE("infinite entries carry exactly zero mass") {
    const Belief b(caps, BeliefMode::Tempered, {kInf, 0.2, kInf});
    const auto p = per_player_likelihood(b, 3, 0.1);
    CHECK(p[0] == 0.0);
    CHECK(p[1] == doctest::Approx(1.0));
    CHECK(p[2] == 0.0);
  }
  SUBCASE("huge accumulated losses do not underflow to 0/0") {
    const Belief b(caps, BeliefMode::Tempered, {5000.0, 5000.5, 6000.0});
    const auto p = per_player_likelihood(b, 3, 0.1);
    CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-5.0))).epsilon(1e-9));
    CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0));
  }
}

TEST_CASE("temperature limits") {
  auto caps = caps123();
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> losses = {u(rng), u(rng), u(rng)};
    const Belief b(caps, BeliefMode::Tempered, losses);

    // T -> 0: mass vanishes wherever the loss is not minimal.
    const auto cold = per_player_likelihood(b, 3, 1e-6);
    const double lo = std::min({losses[0], losses[1], losses[2]});
    for (int i = 0; i < 3; ++i)
      if (losses[i] > lo + 1e-3) CHECK(cold[i] < 1e-12);

    // T -> inf: uniform over the predecessor set within 1e-6 TV.
    const auto hot = per_player_likelihood(b, 3, 1e6);
    double tv = 0.0;
    for (int i = 0; i < 3; ++i) tv += std::abs(hot[i] - 1.0 / 3.0) / 2.0;
    CHECK(tv < 1e-6);
  }
}

TEST_CASE("generalized likelihood is the normalized product measure") {
  auto caps = caps24();
  SUBCASE("all-zero bank is uniform over the four assignments") {
    const auto bank = BeliefBank::initial(caps, BeliefMode::Tempered, 4, 2);
    const auto phi = generalized_likelihood(bank, 4, 0.1);
    REQUIRE(phi.support.size() == 4);
    for (double p : phi.probs) CHECK(p == doctest::Approx(0.25));
  }
  SUBCASE("delta times uniform preserves the product structure") {
    auto bank = BeliefBank::initial(caps, BeliefMode::Tempered, 4, 2);
    bank = intervene(bank, 0, 2);
    const auto phi = generalized_likelihood(bank, 4, 0.1);
    for (size_t k = 0; k < phi.support.size(); ++k) {
      if (phi.support[k][0] == 2)
        CHECK(phi.probs[k] == doctest::Approx(0.5));
      else
        CHECK(phi.probs[k] == 0.0);
    }
  }
  SUBCASE("random losses match the explicit enumeration") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.5);
    for (int trial = 0; trial < 25; ++trial) {
      auto bank = BeliefBank::initial(caps, BeliefMode::Tempered, 4, 2);
      for (int p = 0; p < 2; ++p)
        bank = bank.with_belief(p, bank.about(p).with_values({u(rng), u(rng)}));
      const double T = 0.3;
      const auto phi = generalized_likelihood(bank, 4, T);

      // Explicit product over the enumerated support.
      std::vector<double> expect;
      double total = 0.0;
      for (const auto& assignment : feasible_assignments(*caps, 4, 2)) {
        double w = 1.0;
        for (int p = 0; p < 2; ++p)
          w *= std::exp(-bank.about(p).at_label(assignment[p]) / T);
        expect.push_back(w);
        total += w;
      }
      double sum = 0.0;
      for (size_t k = 0; k < expect.size(); ++k) {
        CHECK(phi.probs[k] == doctest::Approx(expect[k] / total).epsilon(1e-12));
        sum += phi.probs[k];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

      // Product measure: marginals equal the per-player likelihoods.
      for (int p = 0; p < 2; ++p) {
        const auto marginal_ref = per_player_likelihood(bank.about(p), 4, T);
        std::vector<double> marginal(caps->size(), 0.0);
        for (size_t k = 0; k < phi.support.size(); ++k)
          marginal[caps->index(phi.support[k][p])] += phi.probs[k];
        for (int i = 0; i < caps->size(); ++i)
          CHECK(std::abs(marginal[i] - marginal_ref[i]) < 1e-12);
      }
    }
  }
}

TEST_CASE("phi value and phi q") {
  auto caps = caps24();
  SUBCASE("delta phi returns the assignment value exactly") {
    auto bank = BeliefBank::initial(caps, BeliefMode::Tempered, 4, 2);
    bank = intervene(bank, 0, 4);
    bank = intervene(bank, 1, 2);
    MapValues values({{{2, 2}, 1.0}, {{2, 4}, 2.0}, {{4, 2}, 3.0}, {{4, 4}, 4.0}});
    CHECK(phi_value(4, 0, bank, values, 0.1) == doctest::Approx(3.0));
  }
  SUBCASE("uniform phi over two assignments averages their values") {
    auto bank = BeliefBank::initial(caps, BeliefMode::Tempered, 4, 2);
    bank = intervene(bank, 1, 2);  // player 1 pinned, player 0 uniform
    MapValues values({{{2, 2}, 2.0}, {{4, 2}, 4.0}, {{2, 4}, 99.0}, {{4, 4}, 99.0}});
    CHECK(phi_value(4, 0, bank, values, 0.1) == doctest::Approx(3.0));
  }
  SUBCASE("one-step backup discounts the next value") {
    auto bank = BeliefBank::initial(caps, BeliefMode::Tempered, 4, 2);
    MapValues values({{{2, 2}, 10.0}, {{2, 4}, 10.0}, {{4, 2}, 10.0}, {{4, 4}, 10.0}});
    OneStepModel model({1.0});
    CHECK(phi_q(4, 0, bank, 0, values, model, 0.9, 0.1) == doctest::Approx(10.0));
  }
  SUBCASE("missing assignment value is an error") {
    auto bank = BeliefBank::initial(caps, BeliefMode::Tempered, 4, 2);
    MapValues values({{{2, 2}, 1.0}});
    CHECK_THROWS_AS(phi_value(4, 0, bank, values, 0.1), std::domain_error);
  }
}

TEST_CASE("loss is the clipped regret of the observed action") {
  auto caps = caps24();
  const auto bank = BeliefBank::initial(caps, BeliefMode::Tempered, 4, 2);
  MapValues zero({{{2, 2}, 0.0}, {{2, 4}, 0.0}, {{4, 2}, 0.0}, {{4, 4}, 0.0}});

  SUBCASE("argmax action has zero loss") {
    OneStepModel model({1.0, 0.2});
    CHECK(loss(4, 0, bank, 0, 0, zero, model, 0.0, 0.1) == doctest::Approx(0.0));
  }
  SUBCASE("regret clipped at 0.5") {
    OneStepModel model({1.0, 0.2});
    CHECK(loss(4, 0, bank, 0, 1, zero, model, 0.0, 0.1, 0.5) == doctest::Approx(0.5));
    CHECK(loss(4, 0, bank, 0, 1, zero, model, 0.0, 0.1) == doctest::Approx(0.8));
  }
  SUBCASE("matches brute-force max-minus-value on a tabular game") {
    std::mt19937_64 rng(13);
    const TabularGame game = random_tabular_game(rng, 10, 3, 2);
    auto caps3 = caps123();
    const TabularAssignmentValues values(game, *caps3, 2, game.horizon());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto bank3 = BeliefBank::initial(caps3, BeliefMode::Tempered, 3, 2);
    for (int p = 0; p < 2; ++p)
      bank3 = bank3.with_belief(p, bank3.about(p).with_values({u(rng), u(rng), u(rng)}));
    const double T = 0.7;

    // Independent route: expand the phi expectation and the one-step backup
    // by hand over feasible assignments, pinning the actor's type at c.
    auto brute_phi_q = [&](int c, int s, int actor, int a) {
      double acc = 0.0, total = 0.0;
      for (int i = 0; i <= caps3->index(c); ++i) {
        for (int j = 0; j <= caps3->index(c); ++j) {
          const Assignment assignment{caps3->label(i), caps3->label(j)};
          double w = 1.0;
          for (int p = 0; p < 2; ++p) {
            if (p == actor)
              w *= assignment[p] == c ? 1.0 : 0.0;
            else
              w *= std::exp(-bank3.about(p).at_label(assignment[p]) / T);
          }
          if (w == 0.0) continue;
          double q = 0.0;
          for (const auto& o : game.outcomes(s, a))
            q += o.prob * (o.reward + game.gamma() * values.value(assignment, o.next_state));
          acc += w * q;
          total += w;
        }
      }
      return acc / total;
    };

    for (int s = 0; s < game.num_states(); ++s) {
      if (game.row(s).terminal) continue;
      const int actor = game.current_actor(s);
      for (int c : caps3->labels()) {
        std::vector<double> row;
        for (int a = 0; a < game.num_actions(s); ++a) row.push_back(brute_phi_q(c, s, actor, a));
        const double best = *std::max_element(row.begin(), row.end());
        for (int a = 0; a < game.num_actions(s); ++a) {
          const double expect = best - row[a];
          CHECK(loss(c, s, bank3, actor, a, values, game, game.gamma(), T) ==
                doctest::Approx(expect).epsilon(1e-9));
        }
      }
    }
  }
}

TEST_CASE("tempered update accumulates losses below the observer type") {
  auto caps = caps123();
  auto bank = BeliefBank::initial(caps, BeliefMode::Tempered, 2, 2);
  SUBCASE("zero losses leave the bank unchanged") {
    const auto before = bank.about(1).values();
    bank = tempered_update(bank, 1, {0.0, 0.0, 0.0}, 2);
    CHECK(bank.about(1).values() == before);
  }
  SUBCASE("fresh bank accumulates from zero, above-type entries untouched") {
    bank = tempered_update(bank, 1, {0.1, 0.3, 9.9}, 2);
    CHECK(bank.about(1).values() == std::vector<double>{0.1, 0.3, 0.0});
  }
  SUBCASE("two updates sum the loss vectors") {
    bank = tempered_update(bank, 1, {0.1, 0.3, 0.0}, 2);
    bank = tempered_update(bank, 1, {0.2, 0.1, 0.0}, 2);
    CHECK(bank.about(1).at(0) == doctest::Approx(0.3));
    CHECK(bank.about(1).at(1) == doctest::Approx(0.4));
  }
  SUBCASE("negative losses are rejected") {
    CHECK_THROWS_AS(tempered_update(bank, 1, {-0.1, 0.0, 0.0}, 2), std::invalid_argument);
  }
  SUBCASE("exact bank is rejected") {
    auto exact = BeliefBank::initial(caps, BeliefMode::Exact, 2, 2);
    CHECK_THROWS_AS(tempered_update(exact, 1, {0.1, 0.0, 0.0}, 2), std::invalid_argument);
  }
}

TEST_CASE("phi greedy policy") {
  auto caps = caps24();
  const auto bank = BeliefBank::initial(caps, BeliefMode::Tempered, 4, 2);
  MapValues zero({{{2, 2}, 0.0}, {{2, 4}, 0.0}, {{4, 2}, 0.0}, {{4, 4}, 0.0}});
  SUBCASE("single action") {
    OneStepModel model({0.3});
    std::mt19937_64 rng(2);
    CHECK(phi_greedy_policy(4, 0, 0, bank, zero, model, 0.9, 0.1, rng).action == 0);
  }
  SUBCASE("matches enumeration argmax on a tabular game") {
    std::mt19937_64 rng(31);
    const TabularGame game = random_tabular_game(rng, 8, 3, 2);
    auto caps3 = caps123();
    const TabularAssignmentValues values(game, *caps3, 2, game.horizon());
    const auto bank3 = BeliefBank::initial(caps3, BeliefMode::Tempered, 3, 2);
    for (int s = 0; s < game.num_states(); ++s) {
      if (game.row(s).terminal) continue;
      const int actor = game.current_actor(s);
      const auto view = intervene(bank3, actor, 3);
      std::vector<double> row;
      for (int a = 0; a < game.num_actions(s); ++a)
        row.push_back(phi_q(3, s, view, a, values, game, game.gamma(), 0.7));
      const double best = *std::max_element(row.begin(), row.end());
      std::mt19937_64 draw_rng(s);
      const auto draw =
          phi_greedy_policy(3, s, actor, bank3, values, game, game.gamma(), 0.7, draw_rng);
      CHECK(row[draw.action] == doctest::Approx(best).epsilon(1e-9));
    }
  }
}

TEST_CASE("delta beliefs reduce phi play to the known-assignment greedy") {
  auto caps = caps24();
  auto bank = BeliefBank::initial(caps, BeliefMode::Tempered, 4, 2);
  bank = intervene(bank, 1, 2);
  std::map<Assignment, double> table{{{4, 2}, 1.0}, {{4, 4}, -1.0}, {{2, 2}, 0.0}, {{2, 4}, 0.0}};
  MapValues values(std::move(table));
  std::mt19937_64 rng(4);
  // With the partner pinned at 2, phi-Q is V({4,2}) plus the per-action
  // reward, so the reward difference decides the argmax.
  OneStepModel skewed({0.2, 0.0});
  const auto draw = phi_greedy_policy(4, 0, 0, bank, values, skewed, 0.9, 0.1, rng);
  CHECK(draw.action == 0);
}
