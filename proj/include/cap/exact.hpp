#pragma once

#include <random>
#include <vector>

#include "cap/capability.hpp"

namespace cap {

/// Abstract typed Q-function collection (Q^c)_{c in C} over enumerated states
/// and actions. Implementations must be deterministic: identical arguments
/// yield identical values.
class TypedQProvider {
 public:
  virtual ~TypedQProvider() = default;
  virtual int num_actions(int state) const = 0;
  virtual double q(int cap_label, int state, const BeliefBank& bank, int action) const = 0;
};

/// Outcome of one greedy draw: the chosen action, the argmax set it was drawn
/// from, and the raw rng draw that broke the tie.
struct PolicyDraw {
  int action = -1;
  std::vector<int> tie_set;
  std::uint64_t rng_draw = 0;
};

/// v*(c): max over actions of Q^c evaluated on the intervene-then-reduce bank
/// for the hypothesized actor type c.
double optimal_value(int cap_label, int state, int actor, const BeliefBank& bank,
                     const TypedQProvider& q);

/// A*(c): all actions within tau_q of v*(c); never empty.
std::vector<int> optimal_action_set(int cap_label, int state, int actor, const BeliefBank& bank,
                                    const TypedQProvider& q, double tau_q = 1e-9);

/// Multiplicative likelihood update after observing `action` by `actor`:
/// for every c <= observer_type, entry c of the belief about the actor is
/// multiplied by 1/|A*(c)| if the action is optimal at c, else zeroed.
/// Entries above the observer's type are untouched; no renormalization.
BeliefBank exact_update(const BeliefBank& bank, int actor, int action, int state,
                        const TypedQProvider& q, int observer_type, double tau_q = 1e-9);

/// Normalized restriction of b to p(c). Empty optional when the restricted
/// mass is zero (the observed history rules out every type <= c).
std::optional<std::vector<double>> conditional_likelihood(const Belief& b, int cap_label);

/// Greedy typed policy: uniform draw from A*(c) under the self-intervened
/// bank (the actor knows its own type).
PolicyDraw greedy_policy(int cap_label, int state, int self_player, const BeliefBank& bank,
                         const TypedQProvider& q, std::mt19937_64& rng, double tau_q = 1e-9);

}  // namespace cap
