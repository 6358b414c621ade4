#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "cap/checkers.hpp"
#include "cap/experiment.hpp"
#include "cap/grid.hpp"
#include "cap/search.hpp"
#include "cap/tabular.hpp"

namespace {

int write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot write " << path << "\n";
    return 1;
  }
  out << content;
  return 0;
}

// Debug dump of one search tree from the configured environment's opening
// position, using the first composition's first player.
void dump_opening_tree(const cap::ExperimentConfig& cfg, const std::string& path, int max_depth) {
  std::ofstream out(path);
  const auto& player = cfg.compositions.front().team_a.front();
  cap::SearchParams params = cfg.search;
  params.d = player.depth;
  std::mt19937_64 rng(cfg.seed_base);
  auto caps = std::make_shared<const cap::CapabilitySet>(cfg.capability_set);

  auto dump_for = [&](const auto& game) {
    using Game = std::decay_t<decltype(game)>;
    if (player.strategy == cap::Strategy::OBL || player.strategy == cap::Strategy::MIN) {
      auto tree = cap::oblivious_search(game, game.initial_state(), 0, params, rng);
      cap::dump_tree(tree, out, max_depth);
    } else {
      auto bank = cap::BeliefBank::initial(caps, cap::BeliefMode::Tempered, player.depth,
                                           game.num_players());
      bank = cap::intervene(bank, 0, player.depth);
      auto tree = cap::ca_mcts(game, game.initial_state(), 0, params, bank, cfg.temper.fixed_T,
                               rng);
      cap::dump_tree(tree, out, max_depth);
    }
  };

  if (cfg.environment == "wall_of_fire")
    dump_for(cap::wall_of_fire());
  else if (cfg.environment == "narrow_tunnel")
    dump_for(cap::narrow_tunnel());
  else
    dump_for(cap::CheckersGame(2, 2));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capability-aware ad hoc teamwork experiments"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "run an experiment from a JSON config");
  std::string config_path, out_dir = "out";
  int workers_override = 0;
  std::int64_t seed_override = -1;
  std::string dump_path;
  int dump_depth = 2;
  run_cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
  run_cmd->add_option("--out", out_dir, "output directory");
  run_cmd->add_option("--workers", workers_override, "parallel match workers");
  run_cmd->add_option("--seed", seed_override, "seed base override");
  run_cmd->add_option("--dump-tree", dump_path, "write an opening search-tree dump here");
  run_cmd->add_option("--dump-tree-depth", dump_depth, "tree dump depth limit");

  auto* verify_cmd = app.add_subcommand("verify", "run the theorem verification suite");
  std::string verify_out;
  std::uint64_t verify_seed = 7;
  int t1 = 50, t2 = 50, t3 = 100, t4 = 500, lemma = 200;
  verify_cmd->add_option("--out", verify_out, "write the JSON report here (default stdout)");
  verify_cmd->add_option("--seed", verify_seed, "seed base");
  verify_cmd->add_option("--trials-t1", t1, "games for the exact-consistency check");
  verify_cmd->add_option("--trials-t2", t2, "games for the exact-correctness check");
  verify_cmd->add_option("--trials-t3", t3, "seeds for the adversarial-noise check");
  verify_cmd->add_option("--trials-t4", t4, "trials for the stochastic-noise check");
  verify_cmd->add_option("--trials-lemma", lemma, "trials for the loss-gap lemma check");

  auto* report_cmd = app.add_subcommand("report", "re-aggregate a records CSV");
  std::string csv_path, report_out;
  report_cmd->add_option("--csv", csv_path, "records.csv from a previous run")->required();
  report_cmd->add_option("--out", report_out, "write the summary here (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      cap::ExperimentConfig cfg = cap::load_experiment_config(config_path);
      if (workers_override > 0) cfg.workers = workers_override;
      if (seed_override >= 0) cfg.seed_base = static_cast<std::uint64_t>(seed_override);
      if (!dump_path.empty()) dump_opening_tree(cfg, dump_path, dump_depth);
      const auto result = cap::run_experiment(cfg);
      std::filesystem::create_directories(out_dir);
      if (write_file(out_dir + "/records.csv", result.csv)) return 1;
      if (write_file(out_dir + "/summary.json", result.summary_json)) return 1;
      std::cout << result.summary_json << "\n";
      return 0;
    }
    if (*verify_cmd) {
      std::vector<cap::TheoremReport> reports;
      reports.push_back(cap::verify_theorem(cap::TheoremId::T1, t1, verify_seed));
      reports.push_back(cap::verify_theorem(cap::TheoremId::T2, t2, verify_seed + 1000));
      reports.push_back(cap::verify_theorem(cap::TheoremId::T3, t3, verify_seed + 2000));
      reports.push_back(cap::verify_theorem(cap::TheoremId::T4, t4, verify_seed + 3000));
      reports.push_back(cap::verify_theorem(cap::TheoremId::Lemma, lemma, verify_seed + 4000));
      const std::string json = cap::theorem_report_to_json(reports);
      if (verify_out.empty())
        std::cout << json << "\n";
      else if (write_file(verify_out, json))
        return 1;
      for (const auto& r : reports) {
        std::cerr << (r.passed ? "PASS " : "FAIL ") << r.name << " trials=" << r.trials
                  << " violations=" << r.violations << " max_dev=" << r.max_deviation
                  << " bound=" << r.bound << "\n";
        if (!r.passed) return 3;
      }
      return 0;
    }
    if (*report_cmd) {
      std::ifstream in(csv_path, std::ios::binary);
      if (!in) throw cap::ConfigError("cannot open " + csv_path);
      std::stringstream buf;
      buf << in.rdbuf();
      const std::string json = cap::summarize_csv(buf.str());
      if (report_out.empty())
        std::cout << json << "\n";
      else if (write_file(report_out, json))
        return 1;
      return 0;
    }
  } catch (const cap::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
