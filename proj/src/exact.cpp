#include "cap/exact.hpp"

#include <algorithm>
#include <cmath>

namespace cap {

namespace {

// Entries below this are semantically exact zeros after an update.
constexpr double kUnderflowFloor = 1e-300;

BeliefBank hypothesis_view(const BeliefBank& bank, int actor, int cap_label) {
  // B_{[actor=c]} reduced to c: the public view a type-c actor would plan with.
  BeliefBank conditioned = intervene(bank, actor, cap_label);
  std::vector<Belief> reduced;
  reduced.reserve(conditioned.num_players());
  for (int j = 0; j < conditioned.num_players(); ++j)
    reduced.push_back(reduce(conditioned.about(j), cap_label));
  return BeliefBank(conditioned.owner_label(), std::move(reduced));
}

std::vector<int> argmax_set(const std::vector<double>& values, double tau_q) {
  const double best = *std::max_element(values.begin(), values.end());
  std::vector<int> out;
  for (int a = 0; a < static_cast<int>(values.size()); ++a)
    if (values[a] >= best - tau_q) out.push_back(a);
  return out;
}

std::vector<double> q_row(int cap_label, int state, const BeliefBank& view,
                          const TypedQProvider& q) {
  const int n = q.num_actions(state);
  if (n <= 0) throw std::domain_error("empty action set");
  std::vector<double> values(n);
  for (int a = 0; a < n; ++a) values[a] = q.q(cap_label, state, view, a);
  return values;
}

}  // namespace

double optimal_value(int cap_label, int state, int actor, const BeliefBank& bank,
                     const TypedQProvider& q) {
  const BeliefBank view = hypothesis_view(bank, actor, cap_label);
  const auto values = q_row(cap_label, state, view, q);
  return *std::max_element(values.begin(), values.end());
}

std::vector<int> optimal_action_set(int cap_label, int state, int actor, const BeliefBank& bank,
                                    const TypedQProvider& q, double tau_q) {
  const BeliefBank view = hypothesis_view(bank, actor, cap_label);
  return argmax_set(q_row(cap_label, state, view, q), tau_q);
}

BeliefBank exact_update(const BeliefBank& bank, int actor, int action, int state,
                        const TypedQProvider& q, int observer_type, double tau_q) {
  if (bank.mode() != BeliefMode::Exact)
    throw std::invalid_argument("exact_update requires an Exact-mode bank");
  const auto& caps = bank.caps();
  const int cut = caps.index(observer_type);
  std::vector<double> values = bank.about(actor).values();
  for (int i = 0; i <= cut; ++i) {
    const int c = caps.label(i);
    const auto optimal = optimal_action_set(c, state, actor, bank, q, tau_q);
    const bool in_set = std::find(optimal.begin(), optimal.end(), action) != optimal.end();
    values[i] = in_set ? values[i] / static_cast<double>(optimal.size()) : 0.0;
    if (values[i] < kUnderflowFloor) values[i] = 0.0;
  }
  return bank.with_belief(actor, bank.about(actor).with_values(std::move(values)));
}

std::optional<std::vector<double>> conditional_likelihood(const Belief& b, int cap_label) {
  if (b.mode() != BeliefMode::Exact)
    throw std::invalid_argument("conditional_likelihood requires an Exact-mode belief");
  const int cut = b.caps().index(cap_label);
  double total = 0.0;
  for (int i = 0; i <= cut; ++i) total += b.at(i);
  if (total <= 0.0) return std::nullopt;
  std::vector<double> out(b.size(), 0.0);
  for (int i = 0; i <= cut; ++i) out[i] = b.at(i) / total;
  return out;
}

PolicyDraw greedy_policy(int cap_label, int state, int self_player, const BeliefBank& bank,
                         const TypedQProvider& q, std::mt19937_64& rng, double tau_q) {
  const BeliefBank view = intervene(bank, self_player, cap_label);
  const auto values = q_row(cap_label, state, view, q);
  PolicyDraw draw;
  draw.tie_set = argmax_set(values, tau_q);
  draw.rng_draw = rng();
  draw.action = draw.tie_set[draw.rng_draw % draw.tie_set.size()];
  return draw;
}

}  // namespace cap
