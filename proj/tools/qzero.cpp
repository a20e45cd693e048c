#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "qzero/checkpoint.hpp"
#include "qzero/pipeline.hpp"
#include "qzero/qbf.hpp"
#include "qzero/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

qzero::Qbf load_qdimacs(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return qzero::parse_qdimacs(in);
}

qzero::RunConfig load_run_config(const std::string& config_path,
                                 bool* has_seed) {
  if (config_path.empty()) {
    if (has_seed) *has_seed = false;
    return qzero::RunConfig{};
  }
  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot open " + config_path);
  return qzero::parse_run_config(in, has_seed);
}

json ratio_json(const std::optional<double>& ratio, long long eligible,
                long long total) {
  json j;
  j["ratio"] = ratio ? json(*ratio) : json(nullptr);
  j["eligible"] = eligible;
  j["total"] = total;
  return j;
}

int run_gen(int vars, int clauses, int count, std::uint64_t seed,
            const std::string& truth, const std::string& out_dir,
            const qzero::GenConfig& gen_cfg) {
  fs::create_directories(out_dir);
  for (int i = 0; i < count; ++i) {
    std::optional<bool> target;
    std::string suffix;
    if (truth == "true") {
      target = true;
    } else if (truth == "false") {
      target = false;
    } else if (truth == "balanced") {
      target = i < (count + 1) / 2;
    }
    if (target) suffix = *target ? "_true" : "_false";

    const qzero::Qbf q = qzero::random_qbf(
        vars, clauses, qzero::mix_seed(seed, static_cast<std::uint64_t>(i)),
        target, gen_cfg);
    char name[64];
    std::snprintf(name, sizeof(name), "qbf_%03d%s.qdimacs", i, suffix.c_str());
    const fs::path path = fs::path(out_dir) / name;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << qzero::serialize_qdimacs(q);
    std::cout << path.string() << '\n';
  }
  return 0;
}

int run_train(const qzero::Qbf& q, qzero::RunConfig cfg,
              const std::string& out_dir, bool quiet) {
  qzero::RunOptions opts;
  if (!out_dir.empty()) opts.out_dir = out_dir;
  if (!quiet) opts.progress = &std::cerr;
  const qzero::RunResult result = qzero::run_training(q, cfg, opts);
  for (const qzero::EpochReport& report : result.reports)
    std::cout << report.to_json_line() << '\n';
  return 0;
}

int run_solve(const qzero::Qbf& q, qzero::RunConfig cfg,
              const std::string& out_dir, double threshold, bool quiet) {
  qzero::RunOptions opts;
  if (!out_dir.empty()) opts.out_dir = out_dir;
  if (!quiet) opts.progress = &std::cerr;
  const qzero::RunResult result = qzero::run_training(q, cfg, opts);
  const qzero::EpochReport& last = result.reports.back();
  const double p_ratio =
      static_cast<double>(last.wins_p) / (last.wins_p + last.wins_op);
  if (!quiet) {
    std::cerr << "final arena: P " << last.wins_p << "/" << cfg.arena_rounds
              << '\n';
  }
  std::cout << (p_ratio > threshold ? "true" : "false") << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabula-rasa QSAT solver: self-play neural MCTS over QBF graphs"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate random QDIMACS instances");
  int gen_vars = 21, gen_clauses = 9, gen_count = 1;
  std::uint64_t gen_seed = 0;
  std::string gen_truth = "any", gen_out = ".";
  qzero::GenConfig gen_cfg;
  gen->add_option("--vars", gen_vars, "Variables per instance")
      ->check(CLI::PositiveNumber);
  gen->add_option("--clauses", gen_clauses, "Clauses per instance")
      ->check(CLI::PositiveNumber);
  gen->add_option("--count", gen_count, "Number of instances")
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Generator seed")->required();
  gen->add_option("--truth", gen_truth, "Target truth: true|false|balanced|any")
      ->check(CLI::IsMember({"true", "false", "balanced", "any"}));
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--min-width", gen_cfg.min_clause_width, "Min clause width");
  gen->add_option("--max-width", gen_cfg.max_clause_width, "Max clause width");
  gen->add_option("--alternation", gen_cfg.alternation_bias,
                  "Quantifier alternation bias in [0,1]");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Print the exact truth value");
  std::string oracle_file;
  int oracle_bound = qzero::kDefaultOracleBound;
  oracle->add_option("file", oracle_file, "QDIMACS file")->required();
  oracle->add_option("--bound", oracle_bound, "Oracle variable bound");

  // stats
  auto* stats = app.add_subcommand("stats", "Instance statistics");
  std::string stats_file;
  int stats_bound = qzero::kDefaultOracleBound;
  stats->add_option("file", stats_file, "QDIMACS file")->required();
  stats->add_option("--bound", stats_bound, "Oracle variable bound");

  // encode
  auto* enc = app.add_subcommand("encode", "Dump the graph encoding as JSON");
  std::string enc_file;
  enc->add_option("file", enc_file, "QDIMACS file")->required();

  // train
  auto* train = app.add_subcommand("train", "Run the self-play training loop");
  std::string train_file, train_config, train_out;
  std::uint64_t train_seed = 0;
  bool train_seed_given = false, train_quiet = false, train_keep = false;
  int train_threads = 1;
  train->add_option("file", train_file, "QDIMACS file")->required();
  train->add_option("--config", train_config, "Flat key = value config file");
  train->add_option("--seed", train_seed, "Seed (overrides config)")
      ->each([&](const std::string&) { train_seed_given = true; });
  train->add_option("--out", train_out, "Output directory for reports/checkpoints");
  train->add_option("--threads", train_threads, "Parallel self-play episodes");
  train->add_flag("--keep-epoch-checkpoints", train_keep,
                  "Keep a checkpoint per epoch");
  train->add_flag("--quiet", train_quiet, "Suppress progress output");

  // solve
  auto* solve = app.add_subcommand(
      "solve", "Train, then report the dominant side as the verdict");
  std::string solve_file, solve_config, solve_out;
  std::uint64_t solve_seed = 0;
  bool solve_seed_given = false, solve_quiet = false;
  int solve_threads = 1;
  double solve_threshold = 0.5;
  solve->add_option("file", solve_file, "QDIMACS file")->required();
  solve->add_option("--config", solve_config, "Flat key = value config file");
  solve->add_option("--seed", solve_seed, "Seed (overrides config)")
      ->each([&](const std::string&) { solve_seed_given = true; });
  solve->add_option("--out", solve_out, "Output directory");
  solve->add_option("--threads", solve_threads, "Parallel self-play episodes");
  solve->add_option("--threshold", solve_threshold,
                    "Win-ratio threshold for declaring the proponent dominant");
  solve->add_flag("--quiet", solve_quiet, "Suppress progress output");

  // arena
  auto* arena_cmd =
      app.add_subcommand("arena", "Play checkpointed networks against each other");
  std::string arena_file, arena_ckpt_p, arena_ckpt_op, arena_log;
  int arena_rounds = 20, arena_iterations = 25;
  double arena_c_puct = 1.0;
  std::uint64_t arena_seed = 0;
  bool arena_argmax = false;
  arena_cmd->add_option("file", arena_file, "QDIMACS file")->required();
  arena_cmd->add_option("--ckpt-p", arena_ckpt_p, "Proponent checkpoint")
      ->required();
  arena_cmd->add_option("--ckpt-op", arena_ckpt_op, "Opponent checkpoint")
      ->required();
  arena_cmd->add_option("--rounds", arena_rounds, "Rounds to play");
  arena_cmd->add_option("--seed", arena_seed, "Seed")->required();
  arena_cmd->add_option("--iterations", arena_iterations, "Search iterations");
  arena_cmd->add_option("--c-puct", arena_c_puct, "Exploration constant");
  arena_cmd->add_flag("--argmax", arena_argmax, "Deterministic move selection");
  arena_cmd->add_option("--log", arena_log, "Move log output (JSON lines)");
  std::string arena_dump;
  arena_cmd->add_option("--search-dump", arena_dump,
                        "Per-move root search statistics (JSON lines)");

  // verify-local
  auto* vlocal = app.add_subcommand(
      "verify-local", "Local-correctness ratio of an arena move log");
  std::string vlocal_log, vlocal_player = "both";
  bool vlocal_all_moves = false;
  int vlocal_bound = qzero::kDefaultOracleBound;
  vlocal->add_option("log", vlocal_log, "Arena move log (JSON lines)")
      ->required();
  vlocal->add_option("--player", vlocal_player, "P, OP, or both")
      ->check(CLI::IsMember({"P", "OP", "both"}));
  vlocal->add_flag("--all-moves", vlocal_all_moves,
                   "Count moves from lost positions in the denominator");
  vlocal->add_option("--bound", vlocal_bound, "Oracle variable bound");

  // verify-global
  auto* vglobal = app.add_subcommand(
      "verify-global", "Enumerate the losing side against a checkpointed policy");
  std::string vglobal_file, vglobal_ckpt, vglobal_side = "auto";
  int vglobal_iterations = 25, vglobal_bound = qzero::kDefaultOracleBound;
  vglobal->add_option("file", vglobal_file, "QDIMACS file")->required();
  vglobal->add_option("--ckpt", vglobal_ckpt, "Policy checkpoint")->required();
  vglobal->add_option("--side", vglobal_side, "P, OP, or auto (oracle-favored)")
      ->check(CLI::IsMember({"P", "OP", "auto"}));
  vglobal->add_option("--iterations", vglobal_iterations, "Search iterations");
  vglobal->add_option("--bound", vglobal_bound, "Oracle variable bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      return run_gen(gen_vars, gen_clauses, gen_count, gen_seed, gen_truth,
                     gen_out, gen_cfg);
    }
    if (oracle->parsed()) {
      std::cout << (qzero::oracle_truth(load_qdimacs(oracle_file), oracle_bound)
                        ? "true"
                        : "false")
                << '\n';
      return 0;
    }
    if (stats->parsed()) {
      const qzero::Qbf q = load_qdimacs(stats_file);
      json j{{"vars", q.var_count()},
             {"clauses", q.clause_count()},
             {"game_states", qzero::count_game_states(q, stats_bound)}};
      if (!q.decided() && !q.prefix.empty()) {
        const qzero::QbfGraph g = qzero::encode(q);
        j["graph_nodes"] = g.node_count();
        j["graph_edges"] = g.edge_count();
      } else {
        j["graph_nodes"] = nullptr;
        j["graph_edges"] = nullptr;
      }
      std::cout << j.dump() << '\n';
      return 0;
    }
    if (enc->parsed()) {
      std::cout << qzero::graph_json(qzero::encode(load_qdimacs(enc_file)))
                << '\n';
      return 0;
    }
    if (train->parsed()) {
      bool has_seed = false;
      qzero::RunConfig cfg = load_run_config(train_config, &has_seed);
      if (train_seed_given) cfg.seed = train_seed;
      if (!train_seed_given && !has_seed) {
        std::cerr << "train: provide --seed or a config file with a seed\n";
        return 1;
      }
      cfg.threads = train_threads;
      cfg.keep_epoch_checkpoints = train_keep;
      return run_train(load_qdimacs(train_file), cfg, train_out, train_quiet);
    }
    if (solve->parsed()) {
      bool has_seed = false;
      qzero::RunConfig cfg = load_run_config(solve_config, &has_seed);
      if (solve_seed_given) cfg.seed = solve_seed;
      if (!solve_seed_given && !has_seed) {
        std::cerr << "solve: provide --seed or a config file with a seed\n";
        return 1;
      }
      cfg.threads = solve_threads;
      return run_solve(load_qdimacs(solve_file), cfg, solve_out,
                       solve_threshold, solve_quiet);
    }
    if (arena_cmd->parsed()) {
      const qzero::Qbf q = load_qdimacs(arena_file);
      const qzero::Checkpoint ck_p = qzero::load_checkpoint(arena_ckpt_p);
      const qzero::Checkpoint ck_op = qzero::load_checkpoint(arena_ckpt_op);
      qzero::SearchConfig cfg;
      cfg.iterations = arena_iterations;
      cfg.c_puct = arena_c_puct;
      cfg.mode = arena_argmax ? qzero::SearchConfig::Mode::Argmax
                              : qzero::SearchConfig::Mode::Sample;
      qzero::EvalCache cache_p, cache_op;
      const qzero::PlayerEvaluators evals{
          qzero::make_network_evaluator(ck_p.params, &cache_p),
          qzero::make_network_evaluator(ck_op.params, &cache_op)};
      std::ofstream dump;
      if (!arena_dump.empty()) {
        dump.open(arena_dump, std::ios::trunc);
        if (!dump) throw std::runtime_error("cannot write " + arena_dump);
      }
      const qzero::Mover mover = qzero::search_mover(
          evals, cfg, arena_dump.empty() ? nullptr : &dump);
      const qzero::ArenaResult result =
          qzero::arena(q, mover, mover, arena_rounds, arena_seed);
      if (!arena_log.empty()) {
        std::ofstream log(arena_log, std::ios::trunc);
        if (!log) throw std::runtime_error("cannot write " + arena_log);
        for (const auto& move : result.moves)
          log << qzero::arena_move_json(move) << '\n';
      }
      std::cout << json{{"wins_p", result.wins_p}, {"wins_op", result.wins_op}}
                       .dump()
                << '\n';
      return 0;
    }
    if (vlocal->parsed()) {
      std::ifstream in(vlocal_log);
      if (!in) throw std::runtime_error("cannot open " + vlocal_log);
      std::vector<qzero::MoveRecord> records;
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const qzero::ArenaResult::Move move = qzero::parse_arena_move_json(line);
        records.push_back({move.state, move.value, move.player});
      }
      const auto denom = vlocal_all_moves ? qzero::RatioDenominator::AllMoves
                                          : qzero::RatioDenominator::WinnablePositions;
      long long correct = 0, eligible = 0, total = 0;
      for (const qzero::Player player :
           {qzero::Player::Proponent, qzero::Player::Opponent}) {
        if (vlocal_player == "P" && player != qzero::Player::Proponent) continue;
        if (vlocal_player == "OP" && player != qzero::Player::Opponent) continue;
        const qzero::RatioSummary s =
            qzero::local_correctness_ratio(records, player, denom, vlocal_bound);
        correct += s.correct;
        eligible += s.eligible;
        total += s.total;
      }
      const long long denom_count = vlocal_all_moves ? total : eligible;
      std::optional<double> ratio;
      if (denom_count > 0)
        ratio = static_cast<double>(correct) / static_cast<double>(denom_count);
      std::cout << ratio_json(ratio, eligible, total).dump() << '\n';
      return 0;
    }
    if (vglobal->parsed()) {
      const qzero::Qbf q = load_qdimacs(vglobal_file);
      const qzero::Checkpoint ck = qzero::load_checkpoint(vglobal_ckpt);
      qzero::SearchConfig cfg;
      cfg.iterations = vglobal_iterations;
      cfg.mode = qzero::SearchConfig::Mode::Argmax;
      qzero::Player side;
      if (vglobal_side == "auto") {
        side = qzero::oracle_truth(q, vglobal_bound) ? qzero::Player::Proponent
                                                     : qzero::Player::Opponent;
      } else {
        side = vglobal_side == "P" ? qzero::Player::Proponent
                                   : qzero::Player::Opponent;
      }
      const qzero::GlobalResult r = qzero::global_correctness(
          q, qzero::network_policy_fn(ck.params, cfg), side, vglobal_bound);
      std::cout << ratio_json(r.ratio, r.won, r.leaves).dump() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
