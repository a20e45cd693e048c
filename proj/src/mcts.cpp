#include "qzero/mcts.hpp"

#include <sstream>
#include <stdexcept>

namespace qzero {

int sample_action(const ActionDistribution& dist, SearchConfig::Mode mode,
                  Rng& rng) {
  if (mode == SearchConfig::Mode::Argmax)
    return dist.pi[1] > dist.pi[0] ? 1 : 0;
  return rng.real01() < dist.pi[0] ? 0 : 1;
}

const TreeNode* SearchTree::find(const std::string& key) const {
  const auto it = nodes_.find(key);
  return it == nodes_.end() ? nullptr : &it->second;
}

void SearchTree::backup(const std::vector<PathStep>& path, double leaf_value,
                        Player leaf_player) {
  for (const PathStep& step : path) {
    const auto it = nodes_.find(step.key);
    if (it == nodes_.end())
      throw std::runtime_error("backup: unknown edge " + step.key);
    EdgeStats& e = it->second.edges[static_cast<std::size_t>(step.action)];
    const double v = step.player == leaf_player ? leaf_value : -leaf_value;
    e.q = (e.q * e.n + v) / (e.n + 1);
    e.n += 1;
  }
}

namespace {

int select_action(const TreeNode& node, double c) {
  const int visit_sum = node.edges[0].n + node.edges[1].n;
  const double s0 = puct_score(node.edges[0], visit_sum, c);
  const double s1 = puct_score(node.edges[1], visit_sum, c);
  return s1 > s0 ? 1 : 0;  // tie -> lowest action index
}

}  // namespace

ActionDistribution Search::run(const GameState& root) {
  if (root.terminal())
    throw std::invalid_argument("run_search: root is terminal");

  tree_.clear();
  const std::string root_key = state_key(root);

  // Root is expanded before the first iteration with the mover's priors.
  {
    TreeNode& node = tree_.ensure(root_key);
    const PolicyValue pv = evals_.for_player(root.to_move())(root);
    node.edges[0].p = pv.policy[0];
    node.edges[1].p = pv.policy[1];
    node.expanded = true;
  }

  std::vector<PathStep> path;
  for (int it = 0; it < cfg_.iterations; ++it) {
    path.clear();
    GameState state = root;
    std::string key = root_key;
    double leaf_value = 0.0;
    Player leaf_player = Player::Proponent;

    for (;;) {
      TreeNode& node = tree_.ensure(key);
      if (node.terminal) {
        leaf_player = node.terminal->winner;
        leaf_value = 1.0;
        break;
      }
      if (!node.expanded) {
        if (const auto outcome = terminal_outcome(state)) {
          node.terminal = outcome;
          leaf_player = outcome->winner;
          leaf_value = 1.0;
          break;
        }
        const PolicyValue pv = evals_.for_player(state.to_move())(state);
        node.edges[0].p = pv.policy[0];
        node.edges[1].p = pv.policy[1];
        node.expanded = true;
        leaf_player = state.to_move();
        leaf_value = pv.value;
        break;
      }
      const int action = select_action(node, cfg_.c_puct);
      path.push_back({key, action, state.to_move()});
      state = apply_action(state, action);
      key = state_key(state);
    }

    tree_.backup(path, leaf_value, leaf_player);
    if (on_iteration) on_iteration(path, leaf_value, leaf_player);
  }

  const TreeNode* root_node = tree_.find(root_key);
  root_stats_ = root_node->edges;
  const double total =
      static_cast<double>(root_stats_[0].n) + root_stats_[1].n;
  ActionDistribution dist;
  dist.pi[0] = root_stats_[0].n / total;
  dist.pi[1] = root_stats_[1].n / total;
  return dist;
}

std::string search_dump_json(int move_index,
                             const std::array<EdgeStats, 2>& root_stats) {
  std::ostringstream out;
  out << "{\"move_index\":" << move_index << ",\"actions\":[";
  for (int a = 0; a < 2; ++a) {
    const EdgeStats& e = root_stats[static_cast<std::size_t>(a)];
    out << (a == 0 ? "" : ",") << "{\"n\":" << e.n << ",\"q\":" << e.q
        << ",\"p\":" << e.p << "}";
  }
  out << "]}";
  return out.str();
}

}  // namespace qzero
