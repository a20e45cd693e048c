#include "qzero/pipeline.hpp"

#include <atomic>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_set>

namespace qzero {

std::optional<PolicyValue> EvalCache::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  const auto it = map_.find(key);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

void EvalCache::put(const std::string& key, const PolicyValue& value) {
  std::lock_guard lock(mu_);
  map_.emplace(key, value);
}

void EvalCache::clear() {
  std::lock_guard lock(mu_);
  map_.clear();
}

std::size_t EvalCache::size() const {
  std::lock_guard lock(mu_);
  return map_.size();
}

Evaluator make_network_evaluator(const GgnnParams& params, EvalCache* cache) {
  return [&params, cache](const GameState& s) {
    if (cache) {
      if (auto hit = cache->get(state_key(s))) return *hit;
    }
    const PolicyValue pv = forward(params, encode(s.residual()));
    if (cache) cache->put(state_key(s), pv);
    return pv;
  };
}

Episode self_play_episode(const Qbf& q, const PlayerEvaluators& evals,
                          const SearchConfig& cfg, Rng& rng) {
  Episode episode;
  std::unordered_set<std::string> touched;

  GameState state = initial_state(q);
  while (!state.terminal()) {
    Search search(evals, cfg);
    const ActionDistribution pi = search.run(state);
    search.tree().for_each_key(
        [&](const std::string& key) { touched.insert(key); });
    const int action = sample_action(pi, cfg.mode, rng);
    episode.steps.push_back({state, pi, state.to_move(), action});
    state = apply_action(state, action);
  }
  touched.insert(state_key(state));
  episode.outcome = *terminal_outcome(state);
  episode.states_accessed = static_cast<long long>(touched.size());
  return episode;
}

std::pair<std::vector<TrainingExample>, std::vector<TrainingExample>>
label_examples(const Episode& episode) {
  std::pair<std::vector<TrainingExample>, std::vector<TrainingExample>> buffers;
  for (const Episode::Step& step : episode.steps) {
    TrainingExample ex;
    ex.graph = encode(step.state.residual());
    ex.target_policy = step.pi.pi;
    ex.target_value = step.player == episode.outcome.winner ? 1.0 : -1.0;
    (step.player == Player::Proponent ? buffers.first : buffers.second)
        .push_back(std::move(ex));
  }
  return buffers;
}

namespace {

std::optional<double> train_player(PlayerNet& net,
                                   const std::vector<TrainingExample>& buffer,
                                   int batch_size, Rng& rng) {
  if (buffer.empty()) return std::nullopt;
  std::vector<std::size_t> order(buffer.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  double total_loss = 0.0;
  std::size_t seen = 0;
  for (std::size_t start = 0; start < order.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<TrainingExample> batch;
    batch.reserve(end - start);
    for (std::size_t i = start; i < end; ++i)
      batch.push_back(buffer[order[i]]);
    double batch_loss = 0.0;
    const GgnnParams grads = gradients(net.params, batch, &batch_loss);
    optimizer_step(net.params, grads, net.opt);
    total_loss += batch_loss * static_cast<double>(batch.size());
    seen += batch.size();
  }
  return total_loss / static_cast<double>(seen);
}

}  // namespace

TrainResult train_epoch(
    PlayerNet& net_p, PlayerNet& net_op,
    const std::pair<std::vector<TrainingExample>, std::vector<TrainingExample>>&
        buffers,
    int batch_size, Rng& rng) {
  if (batch_size < 1) throw std::invalid_argument("train_epoch: batch_size < 1");
  TrainResult result;
  result.loss_p = train_player(net_p, buffers.first, batch_size, rng);
  result.loss_op = train_player(net_op, buffers.second, batch_size, rng);
  return result;
}

Mover search_mover(PlayerEvaluators evals, SearchConfig cfg,
                   std::ostream* search_dump) {
  return [evals = std::move(evals), cfg, search_dump,
          moves = std::make_shared<int>(0)](const GameState& s, Rng& rng) {
    Search search(evals, cfg);
    const ActionDistribution pi = search.run(s);
    if (search_dump) {
      *search_dump << search_dump_json((*moves)++, search.root_stats())
                   << '\n';
    }
    return sample_action(pi, cfg.mode, rng);
  };
}

ArenaResult arena(const Qbf& q, const Mover& mover_p, const Mover& mover_op,
                  int rounds, std::uint64_t seed) {
  if (rounds < 1) throw std::invalid_argument("arena: rounds < 1");
  ArenaResult result;
  for (int round = 0; round < rounds; ++round) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(round), 0xA7E7AULL));
    GameState state = initial_state(q);
    int move_index = 0;
    while (!state.terminal()) {
      const Player mover = state.to_move();
      const int action =
          (mover == Player::Proponent ? mover_p : mover_op)(state, rng);
      result.moves.push_back({round, move_index, state.residual(),
                              state.residual().prefix.front().var, action,
                              mover});
      state = apply_action(state, action);
      ++move_index;
    }
    if (terminal_outcome(state)->winner == Player::Proponent) {
      ++result.wins_p;
    } else {
      ++result.wins_op;
    }
  }
  return result;
}

ArenaResult arena(const Qbf& q, const PlayerEvaluators& evals, int rounds,
                  const SearchConfig& cfg, std::uint64_t seed) {
  const Mover mover = search_mover(evals, cfg);
  return arena(q, mover, mover, rounds, seed);
}

std::string arena_move_json(const ArenaResult::Move& move) {
  nlohmann::json j{{"round", move.round},
                   {"move_index", move.move_index},
                   {"variable", move.variable},
                   {"value", move.value},
                   {"player", player_name(move.player)},
                   {"state", serialize_qdimacs(move.state)}};
  return j.dump();
}

ArenaResult::Move parse_arena_move_json(const std::string& line) {
  const nlohmann::json j = nlohmann::json::parse(line);
  ArenaResult::Move move;
  move.round = j.value("round", 0);
  move.move_index = j.value("move_index", 0);
  move.variable = j.at("variable").get<int>();
  move.value = j.at("value").get<int>();
  const std::string player = j.at("player").get<std::string>();
  if (player != "P" && player != "OP")
    throw ParseError("arena log: unknown player '" + player + "'");
  move.player = player == "P" ? Player::Proponent : Player::Opponent;
  move.state = parse_qdimacs(j.at("state").get<std::string>());
  return move;
}

void RunConfig::validate() const {
  if (epochs < 1 || episodes_per_epoch < 1 || arena_rounds < 1 ||
      batch_size < 1 || threads < 1) {
    throw std::invalid_argument("RunConfig: counts must be positive");
  }
  if (search.iterations < 1 || search.c_puct <= 0.0)
    throw std::invalid_argument("RunConfig: bad search settings");
  if (oracle_bound < 1)
    throw std::invalid_argument("RunConfig: oracle_bound must be positive");
  ggnn.validate();
}

RunConfig parse_run_config(std::istream& in, bool* has_seed) {
  RunConfig cfg;
  if (has_seed) *has_seed = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    std::istringstream ls(line);
    std::string key, eq, value;
    if (!(ls >> key)) continue;
    if (!(ls >> eq >> value) || eq != "=")
      throw ParseError("config line " + std::to_string(lineno) +
                       ": expected 'key = value'");
    try {
      if (key == "epochs") cfg.epochs = std::stoi(value);
      else if (key == "episodes_per_epoch") cfg.episodes_per_epoch = std::stoi(value);
      else if (key == "arena_rounds") cfg.arena_rounds = std::stoi(value);
      else if (key == "batch_size") cfg.batch_size = std::stoi(value);
      else if (key == "iterations") cfg.search.iterations = std::stoi(value);
      else if (key == "c_puct") cfg.search.c_puct = std::stod(value);
      else if (key == "hidden_size") {
        cfg.ggnn.hidden_size = std::stoi(value);
        cfg.ggnn.mlp_hidden = cfg.ggnn.hidden_size;
      } else if (key == "passes") cfg.ggnn.passes = std::stoi(value);
      else if (key == "learning_rate") cfg.ggnn.learning_rate = std::stod(value);
      else if (key == "weight_decay") cfg.ggnn.weight_decay = std::stod(value);
      else if (key == "optimizer") {
        if (value == "plain-gradient" || value == "sgd" || value == "plain")
          cfg.ggnn.optimizer = GgnnConfig::Optimizer::PlainGradient;
        else if (value == "adaptive-moment" || value == "adam" ||
                 value == "adaptive")
          cfg.ggnn.optimizer = GgnnConfig::Optimizer::AdaptiveMoment;
        else
          throw ParseError("config: unknown optimizer '" + value + "'");
      } else if (key == "seed") {
        cfg.seed = std::stoull(value);
        if (has_seed) *has_seed = true;
      } else if (key == "oracle_bound") cfg.oracle_bound = std::stoi(value);
      else
        throw ParseError("config line " + std::to_string(lineno) +
                         ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ParseError("config line " + std::to_string(lineno) +
                       ": bad value for '" + key + "'");
    }
  }
  return cfg;
}

RunConfig parse_run_config(const std::string& text, bool* has_seed) {
  std::istringstream in(text);
  return parse_run_config(in, has_seed);
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

}  // namespace

std::string EpochReport::to_json_line() const {
  nlohmann::json j{{"epoch", epoch},
                   {"wins_p", wins_p},
                   {"wins_op", wins_op},
                   {"local_p", opt_json(local_p)},
                   {"local_op", opt_json(local_op)},
                   {"local_mean", opt_json(local_mean)},
                   {"loss_p", opt_json(loss_p)},
                   {"loss_op", opt_json(loss_op)},
                   {"coverage_ma", coverage_ma}};
  return j.dump();
}

std::vector<double> coverage_moving_average(
    const std::vector<long long>& per_episode_counts, int window) {
  if (window < 1) throw std::invalid_argument("coverage: window < 1");
  std::vector<double> out;
  out.reserve(per_episode_counts.size());
  long long running = 0;
  for (std::size_t i = 0; i < per_episode_counts.size(); ++i) {
    running += per_episode_counts[i];
    if (i >= static_cast<std::size_t>(window))
      running -= per_episode_counts[i - static_cast<std::size_t>(window)];
    const auto denom = std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
    out.push_back(static_cast<double>(running) / static_cast<double>(denom));
  }
  return out;
}

namespace {

std::vector<MoveRecord> to_move_records(const std::vector<ArenaResult::Move>& moves) {
  std::vector<MoveRecord> records;
  records.reserve(moves.size());
  for (const auto& m : moves) records.push_back({m.state, m.value, m.player});
  return records;
}

std::optional<double> mean_of(const std::optional<double>& a,
                              const std::optional<double>& b) {
  if (a && b) return (*a + *b) / 2.0;
  if (a) return a;
  return b;
}

}  // namespace

RunResult run_training(const Qbf& q, const RunConfig& cfg,
                       const RunOptions& opts) {
  cfg.validate();
  if (initial_state(q).terminal())
    throw std::invalid_argument("run_training: instance already decided");

  RunResult result;
  result.net_p.params = init_params(cfg.ggnn, mix_seed(cfg.seed, 0x9E7ULL, 0));
  result.net_op.params = init_params(cfg.ggnn, mix_seed(cfg.seed, 0x9E7ULL, 1));

  EvalCache cache_p, cache_op;
  const PlayerEvaluators evals{
      make_network_evaluator(result.net_p.params, &cache_p),
      make_network_evaluator(result.net_op.params, &cache_op)};

  std::ofstream reports_out;
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    reports_out.open(opts.out_dir / "reports.jsonl", std::ios::trunc);
    if (!reports_out)
      throw std::runtime_error("run_training: cannot write to " +
                               opts.out_dir.string());
  }

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Self-play. Episodes get independent seed streams so the outcome is
    // identical however they are scheduled; results merge in episode order.
    std::vector<Episode> episodes(
        static_cast<std::size_t>(cfg.episodes_per_epoch));
    const auto play_episode = [&](int index) {
      Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch),
                       static_cast<std::uint64_t>(index), 0x5E1FULL));
      episodes[static_cast<std::size_t>(index)] =
          self_play_episode(q, evals, cfg.search, rng);
    };
    if (cfg.threads <= 1) {
      for (int i = 0; i < cfg.episodes_per_epoch; ++i) play_episode(i);
    } else {
      std::vector<std::thread> workers;
      std::atomic<int> next{0};
      const int nworkers = std::min(cfg.threads, cfg.episodes_per_epoch);
      for (int w = 0; w < nworkers; ++w) {
        workers.emplace_back([&] {
          for (int i = next.fetch_add(1); i < cfg.episodes_per_epoch;
               i = next.fetch_add(1))
            play_episode(i);
        });
      }
      for (auto& t : workers) t.join();
    }

    std::pair<std::vector<TrainingExample>, std::vector<TrainingExample>> buffers;
    for (const Episode& episode : episodes) {
      auto [p_buf, op_buf] = label_examples(episode);
      std::move(p_buf.begin(), p_buf.end(), std::back_inserter(buffers.first));
      std::move(op_buf.begin(), op_buf.end(),
                std::back_inserter(buffers.second));
      result.episode_states.push_back(episode.states_accessed);
    }

    Rng train_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0x7EA1ULL));
    const TrainResult losses =
        train_epoch(result.net_p, result.net_op, buffers, cfg.batch_size,
                    train_rng);
    cache_p.clear();
    cache_op.clear();

    const ArenaResult ar =
        arena(q, evals, cfg.arena_rounds, cfg.search,
              mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0xA3EAULL));

    const std::vector<MoveRecord> records = to_move_records(ar.moves);
    const RatioSummary local_p = local_correctness_ratio(
        records, Player::Proponent, RatioDenominator::WinnablePositions,
        cfg.oracle_bound);
    const RatioSummary local_op = local_correctness_ratio(
        records, Player::Opponent, RatioDenominator::WinnablePositions,
        cfg.oracle_bound);

    EpochReport report;
    report.epoch = epoch;
    report.wins_p = ar.wins_p;
    report.wins_op = ar.wins_op;
    report.local_p = local_p.ratio;
    report.local_op = local_op.ratio;
    report.local_mean = mean_of(local_p.ratio, local_op.ratio);
    report.loss_p = losses.loss_p;
    report.loss_op = losses.loss_op;
    report.coverage_ma = coverage_moving_average(result.episode_states).back();
    result.reports.push_back(report);

    if (!opts.out_dir.empty()) {
      reports_out << report.to_json_line() << '\n';
      reports_out.flush();
      save_checkpoint(opts.out_dir / "ckpt_p.bin", result.net_p.params,
                      &result.net_p.opt);
      save_checkpoint(opts.out_dir / "ckpt_op.bin", result.net_op.params,
                      &result.net_op.opt);
      if (cfg.keep_epoch_checkpoints) {
        const std::string tag = "_epoch" + std::to_string(epoch) + ".bin";
        save_checkpoint(opts.out_dir / ("ckpt_p" + tag), result.net_p.params,
                        &result.net_p.opt);
        save_checkpoint(opts.out_dir / ("ckpt_op" + tag), result.net_op.params,
                        &result.net_op.opt);
      }
    }
    if (opts.progress) {
      *opts.progress << "epoch " << epoch << ": wins P " << ar.wins_p << "/"
                     << cfg.arena_rounds << ", coverage "
                     << report.coverage_ma << '\n';
      opts.progress->flush();
    }
  }
  return result;
}

}  // namespace qzero
