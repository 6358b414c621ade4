#include "cap/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "cap/checkers.hpp"
#include "cap/grid.hpp"
#include "json.hpp"

namespace cap {

double score(int wins, int losses, int games) {
  if (games <= 0) throw std::invalid_argument("score requires at least one game");
  if (wins < 0 || losses < 0 || wins + losses > games)
    throw std::invalid_argument("inconsistent tallies");
  return static_cast<double>(wins - losses) / static_cast<double>(games);
}

double deviation(const std::vector<double>& posterior, const CapabilitySet& caps, double d_star) {
  if (static_cast<int>(posterior.size()) != caps.size())
    throw std::invalid_argument("posterior length must match the capability set");
  double mass = 0.0;
  for (double p : posterior) mass += p;
  if (std::abs(mass - 1.0) > 1e-9) throw std::invalid_argument("posterior is not normalized");
  double acc = 0.0;
  for (int i = 0; i < caps.size(); ++i) {
    const double gap = caps.label(i) - d_star;
    acc += posterior[i] * gap * gap;
  }
  return std::sqrt(acc);
}

namespace {

PlayerConfig parse_player(const nlohmann::json& j) {
  PlayerConfig p;
  p.strategy = strategy_from_name(j.at("strategy").get<std::string>());
  p.depth = j.at("depth").get<int>();
  if (j.contains("inference_budget")) p.inference_budget = j.at("inference_budget").get<double>();
  return p;
}

std::string player_token(const PlayerConfig& p) {
  return strategy_name(p.strategy) + std::to_string(p.depth);
}

std::string lineup_label(const std::vector<PlayerConfig>& lineup) {
  std::string out;
  for (size_t i = 0; i < lineup.size(); ++i) {
    if (i) out += '+';
    out += player_token(lineup[i]);
  }
  return out;
}

struct MatchTask {
  const Composition* comp;
  std::vector<PlayerConfig> team_a;  // acting order after permutation
  std::vector<PlayerConfig> team_b;  // empty for single-team envs
  bool team_a_first = true;          // checkers: team A plays side 0
  std::uint64_t seed = 0;
};

struct PlayedMatch {
  double reward_a = 0.0, reward_b = 0.0;
  std::string winner = "Draw";
  int moves = 0;
  std::optional<double> dev_expert, dev_novice;
};

AgentSpec make_spec(const PlayerConfig& p, const ExperimentConfig& cfg) {
  AgentSpec spec;
  spec.strategy = p.strategy;
  spec.depth = p.depth;
  spec.search = cfg.search;
  spec.search.d = p.depth;
  spec.temper = cfg.temper;
  spec.inference_budget = p.inference_budget;
  return spec;
}

// Deviations of the final posteriors held by team A's adaptive members. The
// deeper member's target is the teammate's true depth; the shallower member
// targets its own depth (its best-effort approximation of a stronger mate).
template <class AgentT>
void fill_deviations(const std::vector<PlayerConfig>& team, const std::vector<int>& players,
                     std::vector<AgentT>& agents, const CapabilitySet& caps, PlayedMatch& out) {
  if (team.size() != 2) return;
  int expert_slot = team[0].depth >= team[1].depth ? 0 : 1;
  const int novice_slot = 1 - expert_slot;
  const int expert_player = players[expert_slot];
  const int novice_player = players[novice_slot];
  const auto expert_post = agents[expert_player].posterior_about(novice_player);
  if (expert_post)
    out.dev_expert = deviation(*expert_post, caps, team[novice_slot].depth);
  const auto novice_post = agents[novice_player].posterior_about(expert_player);
  if (novice_post)
    out.dev_novice = deviation(
        *novice_post, caps, std::min(team[novice_slot].depth, team[expert_slot].depth));
}

template <TurnGame G>
PlayedMatch play_match(const G& game, const std::vector<AgentSpec>& specs,
                       const std::vector<int>& truth, CapabilitySetPtr caps,
                       const std::vector<PlayerConfig>& team_a,
                       const std::vector<int>& team_a_players, int team_a_id,
                       std::uint64_t seed) {
  std::vector<Agent<G>> agents;
  agents.reserve(specs.size());
  for (size_t p = 0; p < specs.size(); ++p)
    agents.emplace_back(specs[p], caps, static_cast<int>(p), game,
                        mix_u64(seed) ^ mix_u64(p * 0x9e37ULL + 1), &truth);

  auto state = game.initial_state();
  std::array<double, 2> totals{0.0, 0.0};
  PlayedMatch out;
  const int safety_cap = 500;
  while (!game.is_terminal(state) && out.moves < safety_cap) {
    const int actor = game.current_actor(state);
    const int action = agents[actor].act(game, state);
    for (auto& agent : agents) agent.observe(game, state, actor, action);
    auto step = game.step(state, action);
    totals[0] += step.team_reward[0];
    totals[1] += step.team_reward[1];
    state = step.next;
    ++out.moves;
  }

  const int a_team = team_a_id;
  out.reward_a = totals[a_team];
  out.reward_b = game.num_teams() > 1 ? totals[1 - a_team] : 0.0;
  std::optional<int> winning_team;
  if constexpr (std::is_same_v<G, CheckersGame>) {
    winning_team = game.winner(state);
  } else {
    if (totals[0] > 0) winning_team = 0;
  }
  if (!winning_team)
    out.winner = "Draw";
  else
    out.winner = *winning_team == a_team ? "A" : "B";

  fill_deviations(team_a, team_a_players, agents, *caps, out);
  return out;
}

PlayedMatch run_task(const ExperimentConfig& cfg, const MatchTask& task) {
  auto caps = std::make_shared<const CapabilitySet>(cfg.capability_set);

  if (cfg.environment == "wall_of_fire" || cfg.environment == "narrow_tunnel") {
    GridParams params =
        cfg.environment == "wall_of_fire" ? wall_of_fire_params() : narrow_tunnel_params();
    std::string map_text =
        cfg.environment == "wall_of_fire" ? wall_of_fire_map() : narrow_tunnel_map();
    if (!cfg.map_override.empty()) {
      std::ifstream in(cfg.map_override);
      if (!in) throw ConfigError("cannot open map file " + cfg.map_override);
      std::stringstream buf;
      buf << in.rdbuf();
      map_text = buf.str();
    }
    const GridGame game(map_text, params);
    std::vector<AgentSpec> specs;
    std::vector<int> truth;
    for (const auto& p : task.team_a) {
      specs.push_back(make_spec(p, cfg));
      truth.push_back(p.depth);
    }
    return play_match(game, specs, truth, caps, task.team_a, {0, 1}, 0, task.seed);
  }

  // checkers: team A on side 0 when team_a_first, else side 1.
  const auto& first_team = task.team_a_first ? task.team_a : task.team_b;
  const auto& second_team = task.team_a_first ? task.team_b : task.team_a;
  const CheckersGame game(static_cast<int>(first_team.size()),
                          static_cast<int>(second_team.size()));
  std::vector<AgentSpec> specs;
  std::vector<int> truth;
  std::vector<int> team_a_players;
  for (const auto& p : first_team) {
    specs.push_back(make_spec(p, cfg));
    truth.push_back(p.depth);
  }
  for (const auto& p : second_team) {
    specs.push_back(make_spec(p, cfg));
    truth.push_back(p.depth);
  }
  const int base = task.team_a_first ? 0 : static_cast<int>(first_team.size());
  for (size_t i = 0; i < task.team_a.size(); ++i)
    team_a_players.push_back(base + static_cast<int>(i));
  return play_match(game, specs, truth, caps, task.team_a, team_a_players,
                    task.team_a_first ? 0 : 1, task.seed);
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.environment != "wall_of_fire" && cfg.environment != "narrow_tunnel" &&
      cfg.environment != "checkers")
    throw ConfigError("unknown environment '" + cfg.environment + "'");
  if (cfg.games_per_cell < 1) throw ConfigError("games_per_cell must be >= 1");
  if (cfg.capability_set.empty()) throw ConfigError("capability_set must be nonempty");
  CapabilitySet caps(cfg.capability_set);
  if (cfg.compositions.empty()) throw ConfigError("no compositions configured");
  for (const auto& comp : cfg.compositions) {
    if (comp.team_a.size() != 2) throw ConfigError("team_a must have exactly two players");
    const bool is_checkers = cfg.environment == "checkers";
    if (!is_checkers && (comp.opponent || !comp.team_b.empty()))
      throw ConfigError("toy environments take a single cooperative team");
    if (is_checkers && comp.team_b.empty() && !comp.opponent)
      throw ConfigError("checkers needs team_b or an opponent");
    if (is_checkers && !comp.team_b.empty() && comp.team_b.size() != 2)
      throw ConfigError("team_b must have exactly two players");
    auto check_players = [&](const std::vector<PlayerConfig>& ps) {
      for (const auto& p : ps) {
        if (!caps.contains(p.depth))
          throw ConfigError("depth " + std::to_string(p.depth) + " not in the capability set");
        const bool adaptive = p.strategy == Strategy::CA_MA || p.strategy == Strategy::SA ||
                              p.strategy == Strategy::NU || p.strategy == Strategy::ORA;
        if (adaptive && ps.size() > 2)
          throw ConfigError("capability-aware strategies support teams of at most two");
      }
    };
    check_players(comp.team_a);
    check_players(comp.team_b);
    if (comp.opponent) check_players({*comp.opponent});
  }
}

std::vector<MatchTask> build_tasks(const ExperimentConfig& cfg) {
  std::vector<MatchTask> tasks;
  std::uint64_t k = 0;
  for (const auto& comp : cfg.compositions) {
    std::vector<std::vector<PlayerConfig>> a_orders{comp.team_a};
    if (cfg.enumerate_orders && comp.team_a.size() == 2 &&
        !(comp.team_a[0].strategy == comp.team_a[1].strategy &&
          comp.team_a[0].depth == comp.team_a[1].depth))
      a_orders.push_back({comp.team_a[1], comp.team_a[0]});

    std::vector<PlayerConfig> opponent_team = comp.team_b;
    if (comp.opponent) opponent_team = {*comp.opponent};
    std::vector<std::vector<PlayerConfig>> b_orders{opponent_team};
    if (cfg.enumerate_orders && opponent_team.size() == 2 &&
        !(opponent_team[0].strategy == opponent_team[1].strategy &&
          opponent_team[0].depth == opponent_team[1].depth))
      b_orders.push_back({opponent_team[1], opponent_team[0]});

    std::vector<bool> colors{true};
    if (cfg.environment == "checkers" && cfg.enumerate_orders) colors = {true, false};

    for (const auto& a : a_orders) {
      for (const auto& b : b_orders) {
        for (bool a_first : colors) {
          for (int g = 0; g < cfg.games_per_cell; ++g) {
            MatchTask task;
            task.comp = &comp;
            task.team_a = a;
            task.team_b = b;
            task.team_a_first = a_first;
            task.seed = cfg.seed_base + k;
            ++k;
            tasks.push_back(std::move(task));
          }
        }
      }
    }
  }
  return tasks;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::string records_to_csv(const std::vector<MatchRecord>& records) {
  std::string out = "env,teamA,teamB,seed,rewardA,rewardB,winner,moves,dev_expert,dev_novice\n";
  for (const auto& r : records) {
    out += r.env + ',' + r.team_a + ',' + r.team_b + ',' + std::to_string(r.seed) + ',' +
           format_double(r.reward_a) + ',' + format_double(r.reward_b) + ',' + r.winner + ',' +
           std::to_string(r.moves) + ',';
    if (r.dev_expert) out += format_double(*r.dev_expert);
    out += ',';
    if (r.dev_novice) out += format_double(*r.dev_novice);
    out += '\n';
  }
  return out;
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    cfg.environment = j.at("environment").get<std::string>();
    cfg.capability_set = j.at("capability_set").get<std::vector<int>>();
    if (j.contains("search")) {
      const auto& s = j["search"];
      if (s.contains("n")) cfg.search.n = s["n"].get<int>();
      if (s.contains("m")) cfg.search.m = s["m"].get<int>();
      if (s.contains("gamma")) cfg.search.gamma = s["gamma"].get<double>();
      if (s.contains("uct_c")) cfg.search.uct_c = s["uct_c"].get<double>();
    }
    if (j.contains("temper")) {
      const auto& t = j["temper"];
      if (t.contains("fixed_T")) cfg.temper.fixed_T = t["fixed_T"].get<double>();
      if (t.contains("loss_clip")) {
        if (t["loss_clip"].is_null())
          cfg.temper.loss_clip.reset();
        else
          cfg.temper.loss_clip = t["loss_clip"].get<double>();
      }
    }
    if (j.contains("games_per_cell")) cfg.games_per_cell = j["games_per_cell"].get<int>();
    if (j.contains("seed_base")) cfg.seed_base = j["seed_base"].get<std::uint64_t>();
    if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
    if (j.contains("enumerate_orders")) cfg.enumerate_orders = j["enumerate_orders"].get<bool>();
    if (j.contains("map")) cfg.map_override = j["map"].get<std::string>();
    for (const auto& c : j.at("compositions")) {
      Composition comp;
      comp.label = c.value("label", "");
      for (const auto& p : c.at("team_a")) comp.team_a.push_back(parse_player(p));
      if (c.contains("team_b"))
        for (const auto& p : c["team_b"]) comp.team_b.push_back(parse_player(p));
      if (c.contains("opponent")) comp.opponent = parse_player(c["opponent"]);
      if (comp.label.empty()) comp.label = lineup_label(comp.team_a);
      cfg.compositions.push_back(std::move(comp));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  const auto tasks = build_tasks(config);
  std::vector<MatchRecord> records(tasks.size());

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      const MatchTask& task = tasks[k];
      const PlayedMatch played = run_task(config, task);
      MatchRecord rec;
      rec.env = config.environment;
      rec.team_a = lineup_label(task.team_a);
      rec.team_b = task.team_b.empty() ? "" : lineup_label(task.team_b);
      rec.seed = task.seed;
      rec.reward_a = played.reward_a;
      rec.reward_b = played.reward_b;
      rec.winner = played.winner;
      rec.moves = played.moves;
      rec.dev_expert = played.dev_expert;
      rec.dev_novice = played.dev_novice;
      records[k] = std::move(rec);
    }
  };

  const int n_workers = std::max(1, config.workers);
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ExperimentResult result;
  result.records = std::move(records);
  result.csv = records_to_csv(result.records);
  result.summary_json = summarize_csv(result.csv);
  return result;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

// Depths from a lineup label such as "CA_MA8+OBL2" -> {8, 2}.
std::vector<int> label_depths(const std::string& label) {
  std::vector<int> out;
  for (const auto& token : split(label, '+')) {
    std::string digits;
    for (char ch : token)
      if (std::isdigit(static_cast<unsigned char>(ch))) digits += ch;
    if (!digits.empty()) out.push_back(std::stoi(digits));
  }
  return out;
}

double lower_median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

}  // namespace

std::string summarize_csv(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty csv");

  struct Cell {
    int games = 0, wins = 0, losses = 0, draws = 0;
    std::vector<double> rewards_a;
    std::vector<double> dev_expert, dev_novice;
  };
  std::map<std::pair<std::string, std::string>, Cell> cells;
  std::string env;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 10) throw std::invalid_argument("malformed csv row: " + line);
    env = f[0];
    Cell& cell = cells[{f[1], f[2]}];
    cell.games += 1;
    if (f[6] == "A") cell.wins += 1;
    else if (f[6] == "B") cell.losses += 1;
    else cell.draws += 1;
    cell.rewards_a.push_back(std::stod(f[4]));
    if (!f[8].empty()) cell.dev_expert.push_back(std::stod(f[8]));
    if (!f[9].empty()) cell.dev_novice.push_back(std::stod(f[9]));
  }

  auto mean = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
  };

  nlohmann::json rows = nlohmann::json::array();
  std::map<int, std::pair<int, int>> delta_tally;  // delta -> (net wins, games)
  for (const auto& [key, cell] : cells) {
    nlohmann::json row;
    row["teamA"] = key.first;
    row["teamB"] = key.second;
    row["games"] = cell.games;
    row["wins"] = cell.wins;
    row["losses"] = cell.losses;
    row["draws"] = cell.draws;
    row["score"] = score(cell.wins, cell.losses, cell.games);
    row["median_rewardA"] = lower_median(cell.rewards_a);
    row["mean_rewardA"] = mean(cell.rewards_a);
    if (!cell.dev_expert.empty()) row["dev_expert"] = mean(cell.dev_expert);
    if (!cell.dev_novice.empty()) row["dev_novice"] = mean(cell.dev_novice);
    rows.push_back(std::move(row));

    const auto depths = label_depths(key.first);
    if (depths.size() == 2 && !key.second.empty()) {
      const int delta = std::abs(depths[0] - depths[1]);
      delta_tally[delta].first += cell.wins - cell.losses;
      delta_tally[delta].second += cell.games;
    }
  }

  nlohmann::json summary;
  summary["env"] = env;
  summary["rows"] = std::move(rows);
  if (!delta_tally.empty()) {
    nlohmann::json deltas = nlohmann::json::array();
    int total_net = 0, total_games = 0;
    for (const auto& [delta, tally] : delta_tally) {
      nlohmann::json d;
      d["delta"] = delta;
      d["runs"] = tally.second;
      d["score"] = static_cast<double>(tally.first) / tally.second;
      deltas.push_back(std::move(d));
      total_net += tally.first;
      total_games += tally.second;
    }
    nlohmann::json total;
    total["delta"] = "total";
    total["runs"] = total_games;
    total["score"] = total_games > 0 ? static_cast<double>(total_net) / total_games : 0.0;
    deltas.push_back(std::move(total));
    summary["delta_rows"] = std::move(deltas);
  }
  return summary.dump(2);
}

}  // namespace cap
