#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cap {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Totally ordered set of capability labels (search depths in all shipped
/// environments). Labels are strictly increasing small nonnegative integers.
class CapabilitySet {
 public:
  explicit CapabilitySet(std::vector<int> labels);

  int size() const { return static_cast<int>(labels_.size()); }
  int label(int index) const { return labels_.at(index); }
  const std::vector<int>& labels() const { return labels_; }
  int max_label() const { return labels_.back(); }

  /// Position of a label in the order; throws on unknown labels.
  int index(int label) const;
  std::optional<int> try_index(int label) const;
  bool contains(int label) const { return try_index(label).has_value(); }

  /// Size of the predecessor set p(c) = {c' | c' <= c}.
  int predecessor_count(int label) const { return index(label) + 1; }

  bool operator==(const CapabilitySet& other) const { return labels_ == other.labels_; }

 private:
  std::vector<int> labels_;
};

using CapabilitySetPtr = std::shared_ptr<const CapabilitySet>;

enum class BeliefMode { Exact, Tempered };

/// Real vector indexed by capability types. Entries are unnormalized
/// likelihoods in Exact mode and accumulated losses in Tempered mode.
class Belief {
 public:
  Belief(CapabilitySetPtr caps, BeliefMode mode, std::vector<double> values);

  /// Exact: likelihood 1 on p(owner), 0 above. Tempered: all zeros.
  static Belief initial(CapabilitySetPtr caps, BeliefMode mode, int owner_label);

  const CapabilitySet& caps() const { return *caps_; }
  CapabilitySetPtr caps_ptr() const { return caps_; }
  BeliefMode mode() const { return mode_; }
  int size() const { return static_cast<int>(values_.size()); }
  double at(int index) const { return values_.at(index); }
  double at_label(int label) const { return values_.at(caps_->index(label)); }
  const std::vector<double>& values() const { return values_; }

  Belief with_value(int index, double v) const;
  Belief with_values(std::vector<double> values) const;

 private:
  CapabilitySetPtr caps_;
  BeliefMode mode_;
  std::vector<double> values_;
};

/// One player's beliefs about every player of the cooperative game,
/// B^i = (B^i_j)_{j in N}. Immutable; operations return new banks.
class BeliefBank {
 public:
  BeliefBank(int owner_label, std::vector<Belief> per_player);

  /// Bank with every member belief at its initial value for the owner's type.
  static BeliefBank initial(CapabilitySetPtr caps, BeliefMode mode, int owner_label,
                            int num_players);

  int owner_label() const { return owner_label_; }
  int num_players() const { return static_cast<int>(per_player_.size()); }
  const Belief& about(int player) const { return per_player_.at(player); }
  const CapabilitySet& caps() const { return per_player_.front().caps(); }
  BeliefMode mode() const { return per_player_.front().mode(); }

  BeliefBank with_belief(int player, Belief b) const;

 private:
  int owner_label_;
  std::vector<Belief> per_player_;
};

/// Hidden capability assignment, visible only to the verification oracle.
struct PlayerRoster {
  int n_players = 0;
  std::vector<int> types;  // capability label per player
};

/// Zeroes every entry at capability strictly above c; entries <= c unchanged.
Belief reduce(const Belief& b, int cap_label);

/// Conditions the bank on player j's type being exactly c. Tempered mode uses
/// the loss delta (0 at c, +inf elsewhere); Exact mode the likelihood delta
/// (1 at c, 0 elsewhere).
BeliefBank intervene(const BeliefBank& bank, int player, int cap_label);

/// Capability-type-structure predicate over beliefs about one subject:
/// equal owner types must hold equal beliefs, and the reduction of the
/// stronger owner's belief to the weaker type must equal the weaker belief,
/// entrywise within tau.
bool is_type_structure(const std::vector<std::pair<int, Belief>>& beliefs_by_owner,
                       double tau = 1e-9);

using Assignment = std::vector<int>;  // capability label per player

/// Cartesian power p(c)^n in lexicographic order; size |p(c)|^n.
std::vector<Assignment> feasible_assignments(const CapabilitySet& caps, int cap_label,
                                             int n_players);

// JSON wire format: capability sets as arrays of increasing integers; beliefs
// as {"mode", "values"} with infinity spelled "inf".
std::string capability_set_to_json(const CapabilitySet& caps);
CapabilitySet capability_set_from_json(const std::string& text);
std::string belief_to_json(const Belief& b);
Belief belief_from_json(const std::string& text, CapabilitySetPtr caps);

}  // namespace cap
