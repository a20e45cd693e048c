#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qzero/game.hpp"
#include "qzero/ggnn.hpp"
#include "qzero/rng.hpp"

namespace qzero {

struct SearchConfig {
  int iterations = 25;
  double c_puct = 1.0;
  enum class Mode { Sample, Argmax };
  Mode mode = Mode::Sample;
};

// Per-(state, action) statistics. q is Laplace-smoothed: q = w / (n + 1),
// so w is the derived view q * (n + 1).
struct EdgeStats {
  int n = 0;
  double q = 0.0;
  double p = 0.0;  // prior from the policy head

  double w() const { return q * (n + 1); }
};

// q + c * p * sqrt(sum of sibling visits) / (n + 1).
inline double puct_score(const EdgeStats& e, int sibling_visit_sum, double c) {
  return e.q + c * e.p * std::sqrt(static_cast<double>(sibling_visit_sum)) /
                   (e.n + 1);
}

struct ActionDistribution {
  std::array<double, 2> pi{0.0, 0.0};
};

// Sample mode draws from pi; argmax picks the most-visited action
// (tie -> action 0).
int sample_action(const ActionDistribution& dist, SearchConfig::Mode mode,
                  Rng& rng);

using Evaluator = std::function<PolicyValue(const GameState&)>;

struct PlayerEvaluators {
  Evaluator proponent;
  Evaluator opponent;
  const Evaluator& for_player(Player p) const {
    return p == Player::Proponent ? proponent : opponent;
  }
};

struct PathStep {
  std::string key;
  int action = 0;
  Player player = Player::Proponent;  // side to move where the edge starts
};

struct TreeNode {
  std::array<EdgeStats, 2> edges;
  bool expanded = false;
  std::optional<Outcome> terminal;
};

// Nodes keyed by canonical state; identical residuals met through different
// histories share statistics.
class SearchTree {
 public:
  TreeNode& ensure(const std::string& key) { return nodes_[key]; }
  const TreeNode* find(const std::string& key) const;

  // Credits leaf_value (from leaf_player's perspective) to every edge on
  // the path, sign-flipped to each edge's side to move.
  void backup(const std::vector<PathStep>& path, double leaf_value,
              Player leaf_player);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  template <typename Fn>
  void for_each_key(Fn&& fn) const {
    for (const auto& [key, node] : nodes_) fn(key);
  }

 private:
  std::unordered_map<std::string, TreeNode> nodes_;
};

// One PUCT search. Each run() starts from an empty tree, expands the root
// with the mover's network, and returns the visit-count distribution.
// Terminal leaves back up their exact outcome; nonterminal leaves are
// expanded with the leaf mover's network and back up its value estimate.
class Search {
 public:
  Search(PlayerEvaluators evals, SearchConfig cfg)
      : evals_(std::move(evals)), cfg_(cfg) {}

  ActionDistribution run(const GameState& root);

  const SearchTree& tree() const { return tree_; }
  const std::array<EdgeStats, 2>& root_stats() const { return root_stats_; }

  // Instrumentation: called once per iteration with the selected path and
  // the backed-up leaf value.
  std::function<void(const std::vector<PathStep>&, double, Player)> on_iteration;

 private:
  PlayerEvaluators evals_;
  SearchConfig cfg_;
  SearchTree tree_;
  std::array<EdgeStats, 2> root_stats_{};
};

// Root visit counts, Q, and priors as a JSON line (per-move search dump).
std::string search_dump_json(int move_index,
                             const std::array<EdgeStats, 2>& root_stats);

}  // namespace qzero
