#include "cap/tempered.hpp"

#include <algorithm>
#include <cmath>

namespace cap {

double stochastic_schedule_constant(int n_players, int c_max, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
  const double n2 = static_cast<double>(n_players) * n_players;
  return 72.0 * n2 * std::log(20.0 * n2 * c_max / (9.0 * delta));
}

double temperature(NoiseRegime regime, int t, int n_players, int c_max, double delta,
                   double fixed_T) {
  switch (regime) {
    case NoiseRegime::Adversarial:
      return 6.0 * t * n_players;
    case NoiseRegime::Stochastic:
      return std::sqrt(stochastic_schedule_constant(n_players, c_max, delta)) *
             std::pow(static_cast<double>(t), 2.0 / 3.0);
    case NoiseRegime::FixedPractical:
      return fixed_T;
  }
  throw std::logic_error("unknown regime");
}

std::vector<double> per_player_likelihood(const Belief& b, int observer_type, double T) {
  if (b.mode() != BeliefMode::Tempered)
    throw std::invalid_argument("per_player_likelihood requires a Tempered-mode belief");
  if (!(T > 0.0)) throw std::invalid_argument("temperature must be positive");
  const int cut = b.caps().index(observer_type);
  // Shift by the minimum loss before exponentiating; identical after
  // normalization and immune to underflow as accumulated losses grow.
  double lo = kInf;
  for (int i = 0; i <= cut; ++i) lo = std::min(lo, b.at(i));
  if (std::isinf(lo))
    throw std::domain_error("no finite loss entry within the predecessor set");
  std::vector<double> out(b.size(), 0.0);
  double total = 0.0;
  for (int i = 0; i <= cut; ++i) {
    const double w = std::isinf(b.at(i)) ? 0.0 : std::exp(-(b.at(i) - lo) / T);
    out[i] = w;
    total += w;
  }
  for (int i = 0; i <= cut; ++i) out[i] /= total;
  return out;
}

AssignmentDistribution generalized_likelihood(const BeliefBank& bank, int observer_type,
                                              double T) {
  const auto& caps = bank.caps();
  const int n = bank.num_players();
  std::vector<std::vector<double>> per_player(n);
  for (int j = 0; j < n; ++j) per_player[j] = per_player_likelihood(bank.about(j), observer_type, T);

  AssignmentDistribution dist;
  dist.support = feasible_assignments(caps, observer_type, n);
  dist.probs.reserve(dist.support.size());
  double total = 0.0;
  for (const auto& assignment : dist.support) {
    double p = 1.0;
    for (int j = 0; j < n; ++j) p *= per_player[j][caps.index(assignment[j])];
    dist.probs.push_back(p);
    total += p;
  }
  if (total <= 0.0) throw std::domain_error("generalized likelihood has zero mass");
  for (double& p : dist.probs) p /= total;
  return dist;
}

namespace {

double expected_value(const AssignmentDistribution& phi, const AssignmentValueProvider& values,
                      int state) {
  double acc = 0.0;
  for (size_t k = 0; k < phi.support.size(); ++k) {
    const double v = values.value(phi.support[k], state);
    if (!std::isfinite(v)) throw std::domain_error("missing value for a feasible assignment");
    acc += phi.probs[k] * v;
  }
  return acc;
}

double phi_q_with(const AssignmentDistribution& phi, int state, int action,
                  const AssignmentValueProvider& values, const TransitionModel& model,
                  double gamma) {
  double acc = 0.0;
  for (const auto& outcome : model.outcomes(state, action))
    acc += outcome.prob * (outcome.reward + gamma * expected_value(phi, values, outcome.next_state));
  return acc;
}

std::vector<double> phi_q_row(int cap_label, int state, const BeliefBank& view,
                              const AssignmentValueProvider& values, const TransitionModel& model,
                              double gamma, double T) {
  const int n = model.num_actions(state);
  if (n <= 0) throw std::domain_error("empty action set");
  const auto phi = generalized_likelihood(view, cap_label, T);
  std::vector<double> row(n);
  for (int a = 0; a < n; ++a) row[a] = phi_q_with(phi, state, a, values, model, gamma);
  return row;
}

}  // namespace

double phi_value(int cap_label, int state, const BeliefBank& bank,
                 const AssignmentValueProvider& values, double T) {
  return expected_value(generalized_likelihood(bank, cap_label, T), values, state);
}

double phi_q(int cap_label, int state, const BeliefBank& bank, int action,
             const AssignmentValueProvider& values, const TransitionModel& model, double gamma,
             double T) {
  return phi_q_with(generalized_likelihood(bank, cap_label, T), state, action, values, model,
                    gamma);
}

double loss_from_values(const std::vector<double>& action_values, int action,
                        std::optional<double> loss_clip) {
  if (action_values.empty()) throw std::domain_error("empty action set");
  const double best = *std::max_element(action_values.begin(), action_values.end());
  double regret = best - action_values.at(action);
  if (regret < 0.0) regret = 0.0;  // guards float jitter; regret of the max is 0
  if (loss_clip) regret = std::min(regret, *loss_clip);
  return regret;
}

double loss(int cap_label, int state, const BeliefBank& bank, int actor, int action,
            const AssignmentValueProvider& values, const TransitionModel& model, double gamma,
            double T, std::optional<double> loss_clip) {
  if (bank.mode() != BeliefMode::Tempered)
    throw std::invalid_argument("loss requires a Tempered-mode bank");
  const BeliefBank view = intervene(bank, actor, cap_label);
  const auto row = phi_q_row(cap_label, state, view, values, model, gamma, T);
  return loss_from_values(row, action, loss_clip);
}

BeliefBank tempered_update(const BeliefBank& bank, int actor,
                           const std::vector<double>& loss_by_capability, int observer_type) {
  if (bank.mode() != BeliefMode::Tempered)
    throw std::invalid_argument("tempered_update requires a Tempered-mode bank");
  const auto& caps = bank.caps();
  const int cut = caps.index(observer_type);
  if (static_cast<int>(loss_by_capability.size()) <= cut)
    throw std::invalid_argument("loss vector shorter than the observer's predecessor set");
  std::vector<double> values = bank.about(actor).values();
  for (int i = 0; i <= cut; ++i) {
    const double l = loss_by_capability[i];
    if (std::isnan(l) || l < 0.0) throw std::invalid_argument("losses must be nonnegative");
    values[i] += l;
  }
  return bank.with_belief(actor, bank.about(actor).with_values(std::move(values)));
}

PolicyDraw phi_greedy_policy(int cap_label, int state, int self_player, const BeliefBank& bank,
                             const AssignmentValueProvider& values, const TransitionModel& model,
                             double gamma, double T, std::mt19937_64& rng, double tau_q) {
  const BeliefBank view = intervene(bank, self_player, cap_label);
  const auto row = phi_q_row(cap_label, state, view, values, model, gamma, T);
  const double best = *std::max_element(row.begin(), row.end());
  PolicyDraw draw;
  for (int a = 0; a < static_cast<int>(row.size()); ++a)
    if (row[a] >= best - tau_q) draw.tie_set.push_back(a);
  draw.rng_draw = rng();
  draw.action = draw.tie_set[draw.rng_draw % draw.tie_set.size()];
  return draw;
}

}  // namespace cap
