#include "cap/tabular.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "json.hpp"

namespace cap {

TabularGame::TabularGame(std::vector<StateRow> states, int num_players, double gamma, int horizon)
    : states_(std::move(states)), num_players_(num_players), gamma_(gamma), horizon_(horizon) {
  if (states_.empty()) throw std::invalid_argument("tabular game needs at least one state");
  for (const auto& row : states_) {
    if (row.actor < 0 || row.actor >= num_players_)
      throw std::invalid_argument("actor out of range");
    if (!row.terminal && row.actions.empty())
      throw std::invalid_argument("non-terminal state without actions");
    for (const auto& outs : row.actions) {
      double mass = 0.0;
      for (const auto& o : outs) {
        if (o.next_state < 0 || o.next_state >= static_cast<int>(states_.size()))
          throw std::invalid_argument("transition target out of range");
        mass += o.prob;
      }
      if (std::abs(mass - 1.0) > 1e-9)
        throw std::invalid_argument("transition probabilities must sum to 1");
    }
  }
}

int TabularGame::num_actions(int state) const {
  const auto& row = states_.at(state);
  return row.terminal ? 0 : static_cast<int>(row.actions.size());
}

const std::vector<TabularGame::Outcome>& TabularGame::outcomes(int state, int action) const {
  return states_.at(state).actions.at(action);
}

int TabularGame::num_legal_actions(State s) const { return num_actions(s); }

StepOutcome<TabularGame::State> TabularGame::step(State s, int action) const {
  const auto& outs = outcomes(s, action);
  if (outs.size() != 1)
    throw std::logic_error("step requires deterministic transitions; use outcomes()");
  StepOutcome<State> r;
  r.next = outs.front().next_state;
  r.team_reward[0] = outs.front().reward;
  return r;
}

QTable value_iteration_typed(const TabularGame& game, int depth) {
  if (depth < 1) throw std::invalid_argument("lookahead depth must be >= 1");
  const int n = game.num_states();
  std::vector<double> v_prev(n, 0.0);  // V^0
  QTable q;
  for (int k = 1; k <= depth; ++k) {
    q.assign(n, {});
    std::vector<double> v_cur(n, 0.0);
    for (int s = 0; s < n; ++s) {
      if (game.row(s).terminal) continue;
      const int na = game.num_actions(s);
      q[s].resize(na);
      double best = -kInf;
      for (int a = 0; a < na; ++a) {
        double acc = 0.0;
        for (const auto& o : game.outcomes(s, a))
          acc += o.prob * (o.reward + game.gamma() * v_prev[o.next_state]);
        q[s][a] = acc;
        best = std::max(best, acc);
      }
      v_cur[s] = best;
    }
    v_prev = std::move(v_cur);
  }
  return q;
}

TabularTypedQ::TabularTypedQ(const TabularGame& game, const CapabilitySet& caps) : game_(&game) {
  for (int label : caps.labels()) tables_[label] = value_iteration_typed(game, label);
}

double TabularTypedQ::q(int cap_label, int state, const BeliefBank&, int action) const {
  return tables_.at(cap_label).at(state).at(action);
}

namespace {

std::vector<int> table_argmax(const std::vector<double>& row, double tau = 1e-12) {
  const double best = *std::max_element(row.begin(), row.end());
  std::vector<int> out;
  for (int a = 0; a < static_cast<int>(row.size()); ++a)
    if (row[a] >= best - tau) out.push_back(a);
  return out;
}

}  // namespace

std::vector<double> assignment_policy_values(const TabularGame& game, const CapabilitySet& caps,
                                             const Assignment& assignment, int horizon) {
  const int n = game.num_states();
  std::map<int, QTable> tables;
  for (int label : assignment)
    if (!tables.count(label)) tables[label] = value_iteration_typed(game, label);

  std::vector<double> v(n, 0.0);
  for (int h = 1; h <= horizon; ++h) {
    std::vector<double> next(n, 0.0);
    for (int s = 0; s < n; ++s) {
      if (game.row(s).terminal) continue;
      const int depth = assignment.at(game.row(s).actor);
      const auto greedy = table_argmax(tables.at(depth).at(s));
      double acc = 0.0;
      for (int a : greedy) {
        for (const auto& o : game.outcomes(s, a))
          acc += o.prob * (o.reward + game.gamma() * v[o.next_state]);
      }
      next[s] = acc / static_cast<double>(greedy.size());
    }
    v = std::move(next);
  }
  (void)caps;
  return v;
}

TabularAssignmentValues::TabularAssignmentValues(const TabularGame& game,
                                                 const CapabilitySet& caps, int n_players,
                                                 int horizon)
    : n_states_(game.num_states()) {
  for (const auto& assignment : feasible_assignments(caps, caps.max_label(), n_players))
    by_assignment_[assignment] = assignment_policy_values(game, caps, assignment, horizon);
}

double TabularAssignmentValues::value(const Assignment& assignment, int state) const {
  auto it = by_assignment_.find(assignment);
  if (it == by_assignment_.end()) return std::numeric_limits<double>::quiet_NaN();
  return it->second.at(state);
}

PerturbedAssignmentValues::PerturbedAssignmentValues(const TabularAssignmentValues& base,
                                                     Kind kind, double amplitude,
                                                     std::uint64_t seed)
    : base_(&base), kind_(kind), amplitude_(amplitude), rng_(seed) {
  if (kind_ == Kind::FixedTable) {
    std::mt19937_64 gen(seed);
    for (const auto& [assignment, values] : base_->by_assignment_) {
      std::vector<double> offs(values.size());
      for (auto& o : offs) o = (gen() & 1) ? amplitude_ : -amplitude_;
      offsets_[assignment] = std::move(offs);
    }
  }
}

double PerturbedAssignmentValues::value(const Assignment& assignment, int state) const {
  const double base = base_->value(assignment, state);
  if (kind_ == Kind::FixedTable) return base + offsets_.at(assignment).at(state);
  std::uniform_real_distribution<double> u(-amplitude_, amplitude_);
  return base + u(rng_);
}

std::vector<std::vector<double>> brute_force_posterior(const TabularGame& game,
                                                       const CapabilitySet& caps,
                                                       const TabularTypedQ& q,
                                                       const std::vector<HistoryStep>& history) {
  const int k = caps.size();
  std::vector<std::vector<double>> out(game.num_players(), std::vector<double>(k, 1.0));
  for (const auto& step : history) {
    for (int i = 0; i < k; ++i) {
      const int label = caps.label(i);
      const auto optimal = table_argmax(q.table(label).at(step.state));
      const bool in_set =
          std::find(optimal.begin(), optimal.end(), step.action) != optimal.end();
      auto& cell = out.at(step.actor)[i];
      cell = in_set ? cell / static_cast<double>(optimal.size()) : 0.0;
    }
  }
  return out;
}

TabularGame random_tabular_game(std::mt19937_64& rng, int max_states, int num_actions,
                                int num_players, double reward_scale, double gamma) {
  std::uniform_int_distribution<int> size_dist(3, max_states);
  const int n = size_dist(rng);
  std::uniform_int_distribution<int> state_dist(0, n - 1);
  std::uniform_int_distribution<int> actor_dist(0, num_players - 1);
  std::uniform_int_distribution<int> reward_dist(0, 4);
  std::vector<TabularGame::StateRow> rows(n);
  for (int s = 0; s < n; ++s) {
    rows[s].actor = actor_dist(rng);
    rows[s].terminal = s > 0 && (rng() % 10 == 0);
    if (rows[s].terminal) continue;
    rows[s].actions.resize(num_actions);
    for (int a = 0; a < num_actions; ++a) {
      TabularGame::Outcome o;
      o.next_state = state_dist(rng);
      o.prob = 1.0;
      o.reward = reward_scale * 0.05 * reward_dist(rng);  // coarse grid, ties occur
      rows[s].actions[a] = {o};
    }
  }
  return TabularGame(std::move(rows), num_players, gamma, 8);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Replays every action sequence of length <= max_len, invoking `check` after
// each exact belief update; returns the number of violations found.
template <class CheckFn>
void exhaustive_replay(const TabularGame& game, const CapabilitySet& caps,
                       const TabularTypedQ& q, std::vector<BeliefBank>& banks,
                       const std::vector<int>& types, int state, int steps_left,
                       std::vector<HistoryStep>& history, const CheckFn& check) {
  if (steps_left == 0 || game.row(state).terminal) return;
  const int actor = game.current_actor(state);
  const int na = game.num_actions(state);
  for (int a = 0; a < na; ++a) {
    std::vector<BeliefBank> updated;
    updated.reserve(banks.size());
    for (size_t j = 0; j < banks.size(); ++j)
      updated.push_back(exact_update(banks[j], actor, a, state, q, types[j]));
    history.push_back({state, actor, a});
    check(updated, history, actor);
    const int next = game.outcomes(state, a).front().next_state;
    exhaustive_replay(game, caps, q, updated, types, next, steps_left - 1, history, check);
    history.pop_back();
  }
}

TheoremReport run_t1_t2(TheoremId which, int trials, std::uint64_t seed) {
  TheoremReport report;
  report.name = which == TheoremId::T1 ? "T1_consistency" : "T2_correctness";
  report.trials = trials;
  report.bound = 1e-9;
  const auto start = Clock::now();

  for (int trial = 0; trial < trials; ++trial) {
    const std::uint64_t trial_seed = seed + trial;
    std::mt19937_64 rng(trial_seed);
    const TabularGame game = random_tabular_game(rng, 12, 2, 2);
    auto caps = std::make_shared<const CapabilitySet>(std::vector<int>{1, 2, 3});
    const TabularTypedQ q(game, *caps);

    std::uniform_int_distribution<int> type_dist(0, caps->size() - 1);
    std::vector<int> types = {caps->label(type_dist(rng)), caps->label(type_dist(rng))};
    std::vector<BeliefBank> banks;
    for (int j = 0; j < 2; ++j)
      banks.push_back(BeliefBank::initial(caps, BeliefMode::Exact, types[j], 2));

    bool violated = false;
    double worst = 0.0;
    auto check = [&](const std::vector<BeliefBank>& updated,
                     const std::vector<HistoryStep>& history, int actor) {
      if (which == TheoremId::T1) {
        for (int subject = 0; subject < 2; ++subject) {
          std::vector<std::pair<int, Belief>> views;
          for (size_t j = 0; j < updated.size(); ++j)
            views.emplace_back(types[j], updated[j].about(subject));
          if (!is_type_structure(views, 1e-9)) violated = true;
        }
      } else {
        const auto brute = brute_force_posterior(game, *caps, q, history);
        for (size_t j = 0; j < updated.size(); ++j) {
          for (int ci = 0; ci < caps->size(); ++ci) {
            const int c = caps->label(ci);
            if (c > types[j]) break;
            const auto mine = conditional_likelihood(updated[j].about(actor), c);
            // Brute-force posterior about the actor conditioned on type <= c.
            double mass = 0.0;
            for (int i = 0; i <= ci; ++i) mass += brute[actor][i];
            if (!mine.has_value()) {
              if (mass > 0.0) violated = true;
              continue;
            }
            if (mass <= 0.0) {
              violated = true;
              continue;
            }
            for (int i = 0; i <= ci; ++i) {
              const double gap = std::abs((*mine)[i] - brute[actor][i] / mass);
              worst = std::max(worst, gap);
              if (gap > 1e-9) violated = true;
            }
          }
        }
      }
    };

    std::vector<HistoryStep> history;
    exhaustive_replay(game, *caps, q, banks, types, game.initial_state(), 4, history, check);
    report.max_deviation = std::max(report.max_deviation, worst);
    if (violated) {
      ++report.violations;
      report.violation_seeds.push_back(trial_seed);
    }
  }

  report.passed = report.violations == 0;
  report.elapsed_seconds = seconds_since(start);
  return report;
}

// Shared dynamics for the noisy-update theorems: two observers watch the same
// seeded action stream and accumulate tempered losses from their private
// (perturbed) value tables.
struct NoisyTrialResult {
  double max_norm_dev = 0.0;  // max over t, c of |B^j - B^k| / denom(t)
};

template <class DenomFn>
NoisyTrialResult run_noisy_trial(std::uint64_t trial_seed, NoiseRegime regime, double epsilon,
                                 double delta, int updates, const DenomFn& denom) {
  std::mt19937_64 rng(trial_seed);
  // Rewards scaled down so the value range stays within the lemma's budget.
  const TabularGame game = random_tabular_game(rng, 10, 2, 2, 0.2);
  auto caps = std::make_shared<const CapabilitySet>(std::vector<int>{1, 2, 3});
  const int n_players = 2;
  const int observer_type = caps->max_label();
  const TabularAssignmentValues base(game, *caps, n_players, game.horizon());

  const auto kind = regime == NoiseRegime::Adversarial
                        ? PerturbedAssignmentValues::Kind::FixedTable
                        : PerturbedAssignmentValues::Kind::PerQuery;
  // Adversarial: opposite-sign table offsets, pairwise gap exactly epsilon.
  // Stochastic: independent per-query draws, pairwise gap at most epsilon.
  const double amp = epsilon / 2.0;
  PerturbedAssignmentValues v_j(base, kind, amp, trial_seed * 2 + 1);
  PerturbedAssignmentValues v_k(base, kind,
                                kind == PerturbedAssignmentValues::Kind::FixedTable ? -amp : amp,
                                kind == PerturbedAssignmentValues::Kind::FixedTable
                                    ? trial_seed * 2 + 1
                                    : trial_seed * 2 + 2);

  BeliefBank bank_j = BeliefBank::initial(caps, BeliefMode::Tempered, observer_type, n_players);
  BeliefBank bank_k = bank_j;

  NoisyTrialResult result;
  int state = game.initial_state();
  const int c_max = caps->size();
  for (int t = 1; t <= updates; ++t) {
    if (game.row(state).terminal) state = game.initial_state();
    const int actor = game.current_actor(state);
    const int action = static_cast<int>(rng() % game.num_actions(state));
    const double T = temperature(regime, t, n_players, c_max, delta);

    std::vector<double> losses_j(caps->size(), 0.0), losses_k(caps->size(), 0.0);
    for (int ci = 0; ci < caps->size(); ++ci) {
      const int c = caps->label(ci);
      losses_j[ci] = loss(c, state, bank_j, actor, action, v_j, game, game.gamma(), T);
      losses_k[ci] = loss(c, state, bank_k, actor, action, v_k, game, game.gamma(), T);
    }
    bank_j = tempered_update(bank_j, actor, losses_j, observer_type);
    bank_k = tempered_update(bank_k, actor, losses_k, observer_type);

    for (int ci = 0; ci < caps->size(); ++ci) {
      const double gap = std::abs(bank_j.about(actor).at(ci) - bank_k.about(actor).at(ci));
      result.max_norm_dev = std::max(result.max_norm_dev, gap / denom(t));
    }
    state = game.outcomes(state, action).front().next_state;
  }
  return result;
}

TheoremReport run_t3(int trials, std::uint64_t seed) {
  TheoremReport report;
  report.name = "T3_adversarial";
  report.trials = trials;
  const double epsilon = 0.05;
  report.bound = 3.0 * epsilon * 1.05;  // 5% slack for the lemma's approximation step
  const auto start = Clock::now();
  for (int trial = 0; trial < trials; ++trial) {
    const std::uint64_t trial_seed = seed + trial;
    const auto r = run_noisy_trial(trial_seed, NoiseRegime::Adversarial, epsilon, 0.1, 200,
                                   [](int t) { return static_cast<double>(t); });
    report.max_deviation = std::max(report.max_deviation, r.max_norm_dev);
    if (r.max_norm_dev > report.bound) {
      ++report.violations;
      report.violation_seeds.push_back(trial_seed);
    }
  }
  report.passed = report.violations == 0;
  report.elapsed_seconds = seconds_since(start);
  return report;
}

TheoremReport run_t4(int trials, std::uint64_t seed) {
  TheoremReport report;
  report.name = "T4_stochastic";
  report.trials = trials;
  const double epsilon = 0.05;
  const double delta = 0.1;
  const int n_players = 2;
  const int c_max = 3;
  report.bound =
      std::sqrt(stochastic_schedule_constant(n_players, c_max, delta)) * epsilon / (2 * n_players);
  const auto start = Clock::now();
  for (int trial = 0; trial < trials; ++trial) {
    const std::uint64_t trial_seed = seed + trial;
    const auto r = run_noisy_trial(trial_seed, NoiseRegime::Stochastic, epsilon, delta, 200,
                                   [](int t) { return std::pow(static_cast<double>(t), 2.0 / 3.0); });
    report.max_deviation = std::max(report.max_deviation, r.max_norm_dev);
    if (r.max_norm_dev > report.bound) {
      ++report.violations;
      report.violation_seeds.push_back(trial_seed);
    }
  }
  // PAC guarantee: violations allowed on at most a delta fraction of trials.
  report.passed = report.violations <= static_cast<int>(delta * trials);
  report.elapsed_seconds = seconds_since(start);
  return report;
}

TheoremReport run_lemma(int trials, std::uint64_t seed) {
  TheoremReport report;
  report.name = "Lemma_loss_gap";
  report.trials = trials;
  const double epsilon = 0.05;
  report.bound = 3.0 * epsilon * 1.05;
  const auto start = Clock::now();
  for (int trial = 0; trial < trials; ++trial) {
    const std::uint64_t trial_seed = seed + trial;
    std::mt19937_64 rng(trial_seed);
    const TabularGame game = random_tabular_game(rng, 10, 2, 2, 0.2);
    auto caps = std::make_shared<const CapabilitySet>(std::vector<int>{1, 2, 3});
    const int n_players = 2;
    const TabularAssignmentValues base(game, *caps, n_players, game.horizon());
    PerturbedAssignmentValues v_j(base, PerturbedAssignmentValues::Kind::FixedTable, epsilon / 2,
                                  trial_seed * 2 + 1);
    PerturbedAssignmentValues v_k(base, PerturbedAssignmentValues::Kind::FixedTable, -epsilon / 2,
                                  trial_seed * 2 + 1);

    // Banks satisfying the premise: |B_j - B_k| / T <= epsilon / 2N entrywise.
    const double T = 1.0;
    const double slack = T * epsilon / (2 * n_players);
    std::uniform_real_distribution<double> loss_dist(0.0, 2.0);
    std::uniform_real_distribution<double> gap_dist(-slack, slack);
    const int observer_type = caps->max_label();
    BeliefBank bank_j = BeliefBank::initial(caps, BeliefMode::Tempered, observer_type, n_players);
    BeliefBank bank_k = bank_j;
    for (int p = 0; p < n_players; ++p) {
      std::vector<double> vj(caps->size()), vk(caps->size());
      for (int i = 0; i < caps->size(); ++i) {
        vj[i] = loss_dist(rng);
        vk[i] = std::max(0.0, vj[i] + gap_dist(rng));
      }
      bank_j = bank_j.with_belief(p, bank_j.about(p).with_values(vj));
      bank_k = bank_k.with_belief(p, bank_k.about(p).with_values(vk));
    }

    const int state = game.initial_state();
    const int actor = game.current_actor(state);
    double trial_max = 0.0;
    for (int a = 0; a < game.num_actions(state); ++a) {
      for (int label : caps->labels()) {
        const double lj = loss(label, state, bank_j, actor, a, v_j, game, game.gamma(), T);
        const double lk = loss(label, state, bank_k, actor, a, v_k, game, game.gamma(), T);
        trial_max = std::max(trial_max, std::abs(lj - lk));
      }
    }
    report.max_deviation = std::max(report.max_deviation, trial_max);
    if (trial_max > report.bound) {
      ++report.violations;
      report.violation_seeds.push_back(trial_seed);
    }
  }
  report.passed = report.violations == 0;
  report.elapsed_seconds = seconds_since(start);
  return report;
}

}  // namespace

TheoremReport verify_theorem(TheoremId which, int trials, std::uint64_t seed) {
  switch (which) {
    case TheoremId::T1:
    case TheoremId::T2:
      return run_t1_t2(which, trials, seed);
    case TheoremId::T3:
      return run_t3(trials, seed);
    case TheoremId::T4:
      return run_t4(trials, seed);
    case TheoremId::Lemma:
      return run_lemma(trials, seed);
  }
  throw std::logic_error("unknown theorem id");
}

std::string theorem_report_to_json(const std::vector<TheoremReport>& reports) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json j;
    j["name"] = r.name;
    j["trials"] = r.trials;
    j["violations"] = r.violations;
    j["violation_seeds"] = r.violation_seeds;
    j["max_deviation"] = r.max_deviation;
    j["bound"] = r.bound;
    j["passed"] = r.passed;
    j["elapsed_seconds"] = r.elapsed_seconds;
    out.push_back(std::move(j));
  }
  return out.dump(2);
}

}  // namespace cap
