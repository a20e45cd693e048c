#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "qzero/game.hpp"
#include "qzero/mcts.hpp"
#include "qzero/qbf.hpp"

namespace qzero {

// One move as witnessed in an arena game: the residual it was played in,
// the chosen value, and who moved.
struct MoveRecord {
  Qbf state;
  int action = 0;
  Player player = Player::Proponent;
};

// A move preserves a winning position: for the Proponent the residual after
// the move must be true, for the Opponent false.
bool local_correct(const Qbf& residual, int action,
                   int bound = kDefaultOracleBound);
bool local_correct(const GameState& s, int action,
                   int bound = kDefaultOracleBound);

enum class RatioDenominator {
  WinnablePositions,  // count only moves where a correct option existed
  AllMoves,
};

struct RatioSummary {
  std::optional<double> ratio;  // absent when the denominator is empty
  int correct = 0;              // correct moves (within the denominator)
  int eligible = 0;             // moves made from winnable positions
  int total = 0;                // all moves by the player
};

RatioSummary local_correctness_ratio(
    const std::vector<MoveRecord>& moves, Player player,
    RatioDenominator denom = RatioDenominator::WinnablePositions,
    int bound = kDefaultOracleBound);

// A total deterministic-or-seeded strategy for nonterminal states.
using PolicyFn = std::function<int(const GameState&)>;

PolicyFn oracle_policy_fn(int bound = kDefaultOracleBound);
PolicyFn constant_policy_fn(int action);
PolicyFn seeded_random_policy_fn(std::uint64_t seed);
// Argmax search policy. The checkpointed network answers for both sides'
// leaf evaluations during its own searches, so the strategy is a function
// of one parameter set.
PolicyFn network_policy_fn(GgnnParams params, SearchConfig cfg);

struct GlobalResult {
  double ratio = 0.0;
  long long won = 0;
  long long leaves = 0;
};

// Walks the game tree with the enumerated (losing) side branching over both
// actions and the policy answering at its own turns; ratio = won leaves /
// enumerated leaves. 1.0 certifies a winning strategy. policy_side must be
// the side the oracle favors.
GlobalResult global_correctness(const Qbf& q, const PolicyFn& policy,
                                Player policy_side,
                                int bound = kDefaultOracleBound);

}  // namespace qzero
