#include "cap/capability.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace cap {

CapabilitySet::CapabilitySet(std::vector<int> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw std::invalid_argument("capability set must be nonempty");
  for (size_t i = 1; i < labels_.size(); ++i) {
    if (labels_[i] <= labels_[i - 1])
      throw std::invalid_argument("capability labels must be strictly increasing");
  }
}

int CapabilitySet::index(int label) const {
  auto idx = try_index(label);
  if (!idx) throw std::invalid_argument("unknown capability label " + std::to_string(label));
  return *idx;
}

std::optional<int> CapabilitySet::try_index(int label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) return std::nullopt;
  return static_cast<int>(it - labels_.begin());
}

Belief::Belief(CapabilitySetPtr caps, BeliefMode mode, std::vector<double> values)
    : caps_(std::move(caps)), mode_(mode), values_(std::move(values)) {
  if (!caps_) throw std::invalid_argument("belief requires a capability set");
  if (static_cast<int>(values_.size()) != caps_->size())
    throw std::invalid_argument("belief length must match capability set size");
  for (double v : values_) {
    if (std::isnan(v) || v < 0.0)
      throw std::invalid_argument("belief entries must be nonnegative");
    if (mode_ == BeliefMode::Exact && !std::isfinite(v))
      throw std::invalid_argument("exact beliefs must be finite");
  }
}

Belief Belief::initial(CapabilitySetPtr caps, BeliefMode mode, int owner_label) {
  const int k = caps->size();
  const int cut = caps->index(owner_label);
  std::vector<double> v(k, 0.0);
  if (mode == BeliefMode::Exact) {
    for (int i = 0; i <= cut; ++i) v[i] = 1.0;
  }
  return Belief(std::move(caps), mode, std::move(v));
}

Belief Belief::with_value(int index, double v) const {
  std::vector<double> copy = values_;
  copy.at(index) = v;
  return Belief(caps_, mode_, std::move(copy));
}

Belief Belief::with_values(std::vector<double> values) const {
  return Belief(caps_, mode_, std::move(values));
}

BeliefBank::BeliefBank(int owner_label, std::vector<Belief> per_player)
    : owner_label_(owner_label), per_player_(std::move(per_player)) {
  if (per_player_.empty()) throw std::invalid_argument("bank requires at least one belief");
  const auto& caps = per_player_.front().caps();
  const auto mode = per_player_.front().mode();
  for (const auto& b : per_player_) {
    if (!(b.caps() == caps) || b.mode() != mode)
      throw std::invalid_argument("bank members must share capability set and mode");
  }
  caps.index(owner_label_);  // validates the owner label
}

BeliefBank BeliefBank::initial(CapabilitySetPtr caps, BeliefMode mode, int owner_label,
                               int num_players) {
  if (num_players < 1) throw std::invalid_argument("bank requires at least one player");
  std::vector<Belief> members;
  members.reserve(num_players);
  for (int j = 0; j < num_players; ++j) members.push_back(Belief::initial(caps, mode, owner_label));
  return BeliefBank(owner_label, std::move(members));
}

BeliefBank BeliefBank::with_belief(int player, Belief b) const {
  std::vector<Belief> copy = per_player_;
  copy.at(player) = std::move(b);
  return BeliefBank(owner_label_, std::move(copy));
}

Belief reduce(const Belief& b, int cap_label) {
  const int cut = b.caps().index(cap_label);
  std::vector<double> v = b.values();
  for (int i = cut + 1; i < b.size(); ++i) v[i] = 0.0;
  return b.with_values(std::move(v));
}

BeliefBank intervene(const BeliefBank& bank, int player, int cap_label) {
  const auto& caps = bank.about(0).caps();
  const int at = caps.index(cap_label);
  const int k = caps.size();
  std::vector<double> v;
  if (bank.mode() == BeliefMode::Tempered) {
    v.assign(k, kInf);
    v[at] = 0.0;
  } else {
    v.assign(k, 0.0);
    v[at] = 1.0;
  }
  return bank.with_belief(player, bank.about(player).with_values(std::move(v)));
}

namespace {

bool entries_equal(const Belief& a, const Belief& b, double tau) {
  for (int i = 0; i < a.size(); ++i) {
    const double x = a.at(i), y = b.at(i);
    if (std::isinf(x) || std::isinf(y)) {
      if (x != y) return false;
      continue;
    }
    if (std::abs(x - y) > tau) return false;
  }
  return true;
}

}  // namespace

bool is_type_structure(const std::vector<std::pair<int, Belief>>& beliefs_by_owner, double tau) {
  if (beliefs_by_owner.empty()) throw std::invalid_argument("no beliefs to compare");
  const auto& caps = beliefs_by_owner.front().second.caps();
  for (const auto& [owner, b] : beliefs_by_owner) {
    if (!(b.caps() == caps)) throw std::invalid_argument("mismatched capability sets");
    (void)owner;
  }
  const size_t n = beliefs_by_owner.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const auto& [ci, bi] = beliefs_by_owner[i];
      const auto& [cj, bj] = beliefs_by_owner[j];
      if (ci == cj) {
        if (!entries_equal(bi, bj, tau)) return false;
      } else if (cj < ci) {
        if (!entries_equal(reduce(bi, cj), bj, tau)) return false;
      } else {
        if (!entries_equal(reduce(bj, ci), bi, tau)) return false;
      }
    }
  }
  return true;
}

std::vector<Assignment> feasible_assignments(const CapabilitySet& caps, int cap_label,
                                             int n_players) {
  if (n_players < 1) throw std::invalid_argument("need at least one player");
  const int p = caps.predecessor_count(cap_label);
  size_t total = 1;
  for (int i = 0; i < n_players; ++i) total *= static_cast<size_t>(p);
  std::vector<Assignment> out;
  out.reserve(total);
  Assignment current(n_players, caps.label(0));
  std::vector<int> digits(n_players, 0);
  for (size_t k = 0; k < total; ++k) {
    for (int i = 0; i < n_players; ++i) current[i] = caps.label(digits[i]);
    out.push_back(current);
    for (int i = n_players - 1; i >= 0; --i) {
      if (++digits[i] < p) break;
      digits[i] = 0;
    }
  }
  return out;
}

std::string capability_set_to_json(const CapabilitySet& caps) {
  return nlohmann::json(caps.labels()).dump();
}

CapabilitySet capability_set_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  return CapabilitySet(j.get<std::vector<int>>());
}

std::string belief_to_json(const Belief& b) {
  nlohmann::json j;
  j["mode"] = b.mode() == BeliefMode::Exact ? "exact" : "tempered";
  nlohmann::json vals = nlohmann::json::array();
  for (double v : b.values()) {
    if (std::isinf(v))
      vals.push_back("inf");
    else
      vals.push_back(v);
  }
  j["values"] = std::move(vals);
  return j.dump();
}

Belief belief_from_json(const std::string& text, CapabilitySetPtr caps) {
  auto j = nlohmann::json::parse(text);
  const auto mode = j.at("mode").get<std::string>() == "exact" ? BeliefMode::Exact
                                                               : BeliefMode::Tempered;
  std::vector<double> vals;
  for (const auto& v : j.at("values")) {
    if (v.is_string()) {
      if (v.get<std::string>() != "inf") throw std::invalid_argument("bad belief entry");
      vals.push_back(kInf);
    } else {
      vals.push_back(v.get<double>());
    }
  }
  return Belief(std::move(caps), mode, std::move(vals));
}

}  // namespace cap
