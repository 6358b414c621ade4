#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "cap/capability.hpp"
#include "cap/search.hpp"
#include "cap/tempered.hpp"

namespace cap {

enum class Strategy { OBL, CA_MA, SA, ORA, NU, MIN };
enum class AgentPrior { Uniform, Truth };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct AgentSpec {
  Strategy strategy = Strategy::OBL;
  int depth = 1;  // capability label; also the search depth bound
  SearchParams search;
  TemperConfig temper;
  double inference_budget = 1.0;  // multiplier on n for observation searches
  AgentPrior prior = AgentPrior::Uniform;  // ORA always uses the truth prior
};

/// One player: a search strategy plus (for the adaptive strategies) a
/// tempered belief bank over every player, updated after teammate actions.
/// Acting and inference draw from separate seeded streams so strategies that
/// skip inference stay move-for-move comparable with those that run it.
template <TurnGame G>
class Agent {
 public:
  Agent(AgentSpec spec, CapabilitySetPtr caps, int player, const G& game, std::uint64_t seed,
        const std::vector<int>* truth_types = nullptr)
      : spec_(std::move(spec)),
        caps_(std::move(caps)),
        player_(player),
        bank_(BeliefBank::initial(caps_, BeliefMode::Tempered, spec_.depth, game.num_players())),
        act_rng_(mix_u64(seed ^ 0x61637452ULL)),
        infer_rng_(mix_u64(seed ^ 0x6f627352ULL)) {
    spec_.search.d = spec_.depth;
    // A player knows its own capability.
    bank_ = intervene(bank_, player_, spec_.depth);
    const bool wants_truth = spec_.strategy == Strategy::ORA || spec_.prior == AgentPrior::Truth;
    if (wants_truth) {
      if (!truth_types) throw std::invalid_argument("truth prior requires the true assignment");
      for (int p = 0; p < game.num_players(); ++p) {
        if (p == player_ || game.team_of(p) != game.team_of(player_)) continue;
        bank_ = intervene(bank_, p, (*truth_types)[p]);
      }
    }
  }

  const AgentSpec& spec() const { return spec_; }
  int player() const { return player_; }
  const BeliefBank& bank() const { return bank_; }

  int act(const G& game, const typename G::State& state) {
    if (game.current_actor(state) != player_)
      throw std::logic_error("act called out of turn");
    const auto view = game.planning_view(state);
    switch (spec_.strategy) {
      case Strategy::OBL: {
        auto tree = oblivious_search(game, view, player_, spec_.search, act_rng_);
        return pick_action(tree, spec_.depth, act_rng_);
      }
      case Strategy::MIN: {
        auto tree = oblivious_search(game, view, player_, spec_.search, act_rng_,
                                     TeammateModel::Minimizing);
        return pick_action(tree, spec_.depth, act_rng_);
      }
      case Strategy::CA_MA:
      case Strategy::SA:
      case Strategy::NU:
      case Strategy::ORA: {
        auto tree =
            ca_mcts(game, view, player_, spec_.search, bank_, spec_.temper.fixed_T, act_rng_);
        return pick_action(tree, spec_.depth, act_rng_);
      }
    }
    throw std::logic_error("unknown strategy");
  }

  /// Belief update after watching `actor` pick `action` in `pre_state`.
  /// CA_MA models the teammate as capability-aware via the reduced type
  /// structure inside ca_mcts; SA models it as an oblivious agent, reading
  /// the same per-level values off a plain progressive tree. Everyone else,
  /// and every self- or opponent-observation, is a no-op.
  void observe(const G& game, const typename G::State& pre_state, int actor, int action) {
    if (actor == player_) return;
    if (spec_.strategy != Strategy::CA_MA && spec_.strategy != Strategy::SA) return;
    if (game.team_of(actor) != game.team_of(player_)) return;

    SearchParams inf = spec_.search;
    inf.n = std::max(1, static_cast<int>(std::lround(inf.n * spec_.inference_budget)));
    const auto view = game.planning_view(pre_state);
    std::vector<double> losses(caps_->size(), 0.0);
    if (spec_.strategy == Strategy::CA_MA) {
      // The observed teammate is the protagonist: level c of this tree is the
      // play of a capability-aware type-c actor under the reduced structure.
      auto tree = ca_mcts(game, view, player_, inf, bank_, spec_.temper.fixed_T, infer_rng_,
                          /*protagonist=*/actor);
      fill_losses(tree, action, losses);
    } else {
      auto tree = oblivious_search(game, view, player_, inf, infer_rng_);
      fill_losses(tree, action, losses);
    }
    bank_ = tempered_update(bank_, actor, losses, spec_.depth);
  }

  /// Posterior over the teammate's type from the current bank, or nullopt for
  /// strategies that do not track one.
  std::optional<std::vector<double>> posterior_about(int teammate) const {
    if (spec_.strategy != Strategy::CA_MA && spec_.strategy != Strategy::SA) return std::nullopt;
    return per_player_likelihood(bank_.about(teammate), spec_.depth, spec_.temper.fixed_T);
  }

 private:
  template <class Tree>
  void fill_losses(const Tree& tree, int action, std::vector<double>& losses) const {
    for (int i = 0; i < caps_->size(); ++i) {
      const int label = caps_->label(i);
      if (label > spec_.depth) break;
      const auto values = typed_action_values(tree, label);
      losses[i] = loss_from_values(values, action, spec_.temper.loss_clip);
    }
  }

  AgentSpec spec_;
  CapabilitySetPtr caps_;
  int player_;
  BeliefBank bank_;
  std::mt19937_64 act_rng_;
  std::mt19937_64 infer_rng_;
};

}  // namespace cap
