#pragma once

#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "cap/capability.hpp"
#include "cap/exact.hpp"

namespace cap {

enum class NoiseRegime { Adversarial, Stochastic, FixedPractical };

/// Bounded-noise model: pairwise value-function deviations are at most
/// epsilon; delta is the PAC failure probability for the stochastic regime.
struct NoiseConfig {
  double epsilon = 0.0;
  double delta = 0.1;
  NoiseRegime regime = NoiseRegime::FixedPractical;
};

struct TemperConfig {
  NoiseRegime regime = NoiseRegime::FixedPractical;
  double fixed_T = 0.1;
  std::optional<double> loss_clip = 0.5;
};

/// Distribution over feasible capability assignments n(c) = p(c)^N.
struct AssignmentDistribution {
  std::vector<Assignment> support;
  std::vector<double> probs;
};

/// Public collection of solved value functions V^C indexed by a joint
/// capability assignment, evaluated at enumerated states.
class AssignmentValueProvider {
 public:
  virtual ~AssignmentValueProvider() = default;
  virtual double value(const Assignment& assignment, int state) const = 0;
};

/// Enumerated one-step model used to take exact expectations in phi_q.
class TransitionModel {
 public:
  struct Outcome {
    int next_state;
    double prob;
    double reward;
  };
  virtual ~TransitionModel() = default;
  virtual int num_actions(int state) const = 0;
  virtual const std::vector<Outcome>& outcomes(int state, int action) const = 0;
};

/// T(t): Adversarial -> 6tN; Stochastic -> sqrt(d) t^{2/3} with
/// d = 72 N^2 ln(20 N^2 c_max / (9 delta)); FixedPractical -> fixed_T.
/// c_max is the largest predecessor-set size among the players.
double temperature(NoiseRegime regime, int t, int n_players, int c_max, double delta,
                   double fixed_T = 0.1);
double stochastic_schedule_constant(int n_players, int c_max, double delta);

/// Softmax of negated losses over the closed predecessor set p(observer).
/// Returns a full-length vector with zero mass above the observer's type.
std::vector<double> per_player_likelihood(const Belief& b, int observer_type, double T);

/// Product of per-player likelihoods over each feasible assignment,
/// normalized over n(observer_type).
AssignmentDistribution generalized_likelihood(const BeliefBank& bank, int observer_type,
                                              double T);

/// V^c_phi(s, B) = E_{C ~ phi}[V^C(s)].
double phi_value(int cap_label, int state, const BeliefBank& bank,
                 const AssignmentValueProvider& values, double T);

/// Q^c_phi(s, B, a): one-step Bellman backup of the phi-value with discount
/// gamma, exact over the model's outcome distribution.
double phi_q(int cap_label, int state, const BeliefBank& bank, int action,
             const AssignmentValueProvider& values, const TransitionModel& model, double gamma,
             double T);

/// Regret of `action` against the best action under the type-c phi-Q of the
/// hypothesized actor, clipped when configured.
double loss(int cap_label, int state, const BeliefBank& bank, int actor, int action,
            const AssignmentValueProvider& values, const TransitionModel& model, double gamma,
            double T, std::optional<double> loss_clip = std::nullopt);

/// Regret against precomputed per-action values (the search-backed path).
double loss_from_values(const std::vector<double>& action_values, int action,
                        std::optional<double> loss_clip = std::nullopt);

/// Additive loss accumulation: entry c of the belief about the actor grows by
/// loss_by_capability[index(c)] for every c <= observer_type.
BeliefBank tempered_update(const BeliefBank& bank, int actor,
                           const std::vector<double>& loss_by_capability, int observer_type);

/// Uniform draw from the phi-Q argmax set under the self-intervened bank.
PolicyDraw phi_greedy_policy(int cap_label, int state, int self_player, const BeliefBank& bank,
                             const AssignmentValueProvider& values, const TransitionModel& model,
                             double gamma, double T, std::mt19937_64& rng, double tau_q = 1e-9);

}  // namespace cap
