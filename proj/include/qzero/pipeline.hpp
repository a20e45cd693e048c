#pragma once

#include <filesystem>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qzero/checkpoint.hpp"
#include "qzero/ggnn.hpp"
#include "qzero/mcts.hpp"
#include "qzero/verify.hpp"

namespace qzero {

// Memoizes network evaluations by state key. Forward is pure, so caching is
// value-transparent; the cache must be cleared whenever the parameters
// change. Safe for concurrent lookups.
class EvalCache {
 public:
  std::optional<PolicyValue> get(const std::string& key) const;
  void put(const std::string& key, const PolicyValue& value);
  void clear();
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, PolicyValue> map_;
};

// Encode-then-forward evaluator over `params`, which must outlive the
// returned callable.
Evaluator make_network_evaluator(const GgnnParams& params,
                                 EvalCache* cache = nullptr);

struct Episode {
  struct Step {
    GameState state;
    ActionDistribution pi;
    Player player = Player::Proponent;
    int action = 0;
  };
  std::vector<Step> steps;
  Outcome outcome;
  // Distinct states touched by all searches of the episode (by state key).
  long long states_accessed = 0;
};

// Plays one game with sampled search moves, recording the visit-count
// distribution at every step.
Episode self_play_episode(const Qbf& q, const PlayerEvaluators& evals,
                          const SearchConfig& cfg, Rng& rng);

// Splits an episode into per-player buffers; target value is +1 when the
// step's mover won the episode, -1 otherwise.
std::pair<std::vector<TrainingExample>, std::vector<TrainingExample>>
label_examples(const Episode& episode);

struct PlayerNet {
  GgnnParams params;
  OptimState opt;
};

struct TrainResult {
  std::optional<double> loss_p, loss_op;  // absent when a buffer was empty
};

// One full pass over each player's shuffled buffer in mini-batches.
TrainResult train_epoch(
    PlayerNet& net_p, PlayerNet& net_op,
    const std::pair<std::vector<TrainingExample>, std::vector<TrainingExample>>&
        buffers,
    int batch_size, Rng& rng);

struct ArenaResult {
  int wins_p = 0;
  int wins_op = 0;
  struct Move {
    int round = 0;
    int move_index = 0;
    Qbf state;
    int variable = 0;
    int value = 0;
    Player player = Player::Proponent;
  };
  std::vector<Move> moves;
};

// How one side picks a move during evaluation play.
using Mover = std::function<int(const GameState&, Rng&)>;

// Fresh search per move, action sampled per cfg.mode. With `search_dump`
// set, each move appends one JSON line of root visit counts, Q, and priors.
Mover search_mover(PlayerEvaluators evals, SearchConfig cfg,
                   std::ostream* search_dump = nullptr);

// `rounds` evaluation games; every move is logged for local-correctness
// measurement. Each round draws from its own seed stream.
ArenaResult arena(const Qbf& q, const Mover& mover_p, const Mover& mover_op,
                  int rounds, std::uint64_t seed);
ArenaResult arena(const Qbf& q, const PlayerEvaluators& evals, int rounds,
                  const SearchConfig& cfg, std::uint64_t seed);

std::string arena_move_json(const ArenaResult::Move& move);
ArenaResult::Move parse_arena_move_json(const std::string& line);

struct RunConfig {
  int epochs = 32;
  int episodes_per_epoch = 10;
  int arena_rounds = 20;
  int batch_size = 8;
  SearchConfig search;
  GgnnConfig ggnn;
  std::uint64_t seed = 0;
  int oracle_bound = kDefaultOracleBound;
  int threads = 1;
  bool keep_epoch_checkpoints = false;

  void validate() const;
};

// Flat `key = value` text; '#' starts a comment. Unknown keys are rejected.
RunConfig parse_run_config(std::istream& in, bool* has_seed = nullptr);
RunConfig parse_run_config(const std::string& text, bool* has_seed = nullptr);

struct EpochReport {
  int epoch = 0;
  int wins_p = 0;
  int wins_op = 0;
  std::optional<double> local_p, local_op, local_mean;
  std::optional<double> loss_p, loss_op;
  double coverage_ma = 0.0;

  std::string to_json_line() const;
  friend bool operator==(const EpochReport&, const EpochReport&) = default;
};

// Window-10 moving average; shorter prefixes average what is available.
std::vector<double> coverage_moving_average(
    const std::vector<long long>& per_episode_counts, int window = 10);

struct RunOptions {
  // When set, receives reports.jsonl plus per-player checkpoints each epoch.
  std::filesystem::path out_dir;
  std::ostream* progress = nullptr;
};

struct RunResult {
  std::vector<EpochReport> reports;
  PlayerNet net_p, net_op;
  std::vector<long long> episode_states;  // self-play coverage per episode
};

// The full loop: self-play -> label -> train -> arena, one epoch per
// iteration, deterministic per seed in single-threaded mode.
RunResult run_training(const Qbf& q, const RunConfig& cfg,
                       const RunOptions& opts = {});

}  // namespace qzero
