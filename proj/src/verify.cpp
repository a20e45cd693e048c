#include "qzero/verify.hpp"

#include <stdexcept>

namespace qzero {

bool local_correct(const Qbf& residual, int action, int bound) {
  if (residual.decided() || residual.prefix.empty())
    throw std::invalid_argument("local_correct: state is terminal");
  const PrefixEntry head = residual.prefix.front();
  const bool truth = oracle_truth(simplify(residual, head.var, action), bound);
  return owner_of(head.quant) == Player::Proponent ? truth : !truth;
}

bool local_correct(const GameState& s, int action, int bound) {
  return local_correct(s.residual(), action, bound);
}

RatioSummary local_correctness_ratio(const std::vector<MoveRecord>& moves,
                                     Player player, RatioDenominator denom,
                                     int bound) {
  RatioSummary out;
  int correct_all = 0;
  int correct_eligible = 0;
  for (const MoveRecord& move : moves) {
    if (move.player != player) continue;
    ++out.total;
    const bool ok = local_correct(move.state, move.action, bound);
    const bool winnable =
        ok || local_correct(move.state, 1 - move.action, bound);
    if (ok) ++correct_all;
    if (winnable) {
      ++out.eligible;
      if (ok) ++correct_eligible;
    }
  }
  if (denom == RatioDenominator::WinnablePositions) {
    out.correct = correct_eligible;
    if (out.eligible > 0) out.ratio = double(out.correct) / out.eligible;
  } else {
    out.correct = correct_all;
    if (out.total > 0) out.ratio = double(out.correct) / out.total;
  }
  return out;
}

PolicyFn oracle_policy_fn(int bound) {
  return [bound](const GameState& s) { return oracle_policy(s.residual(), bound); };
}

PolicyFn constant_policy_fn(int action) {
  return [action](const GameState&) { return action; };
}

PolicyFn seeded_random_policy_fn(std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [rng](const GameState&) { return rng->below(2); };
}

PolicyFn network_policy_fn(GgnnParams params, SearchConfig cfg) {
  cfg.mode = SearchConfig::Mode::Argmax;
  auto shared = std::make_shared<GgnnParams>(std::move(params));
  // Parameters are frozen here, so evaluations can be memoized for good.
  auto cache =
      std::make_shared<std::unordered_map<std::string, PolicyValue>>();
  Evaluator eval = [shared, cache](const GameState& s) {
    const std::string key = state_key(s);
    if (const auto it = cache->find(key); it != cache->end())
      return it->second;
    const PolicyValue pv = forward(*shared, encode(s.residual()));
    cache->emplace(key, pv);
    return pv;
  };
  auto search = std::make_shared<Search>(PlayerEvaluators{eval, eval}, cfg);
  return [search, cfg](const GameState& s) {
    Rng unused(0);
    return sample_action(search->run(s), cfg.mode, unused);
  };
}

namespace {

struct LeafTally {
  long long won = 0;
  long long leaves = 0;
};

void enumerate(const GameState& s, const PolicyFn& policy, Player policy_side,
               LeafTally& tally) {
  if (const auto outcome = terminal_outcome(s)) {
    ++tally.leaves;
    if (outcome->winner == policy_side) ++tally.won;
    return;
  }
  if (s.to_move() == policy_side) {
    enumerate(apply_action(s, policy(s)), policy, policy_side, tally);
    return;
  }
  enumerate(apply_action(s, 0), policy, policy_side, tally);
  enumerate(apply_action(s, 1), policy, policy_side, tally);
}

}  // namespace

GlobalResult global_correctness(const Qbf& q, const PolicyFn& policy,
                                Player policy_side, int bound) {
  const bool truth = oracle_truth(q, bound);
  const Player winning = truth ? Player::Proponent : Player::Opponent;
  if (policy_side != winning) {
    throw std::invalid_argument(
        "global_correctness: policy must play the oracle-favored side");
  }
  LeafTally tally;
  enumerate(initial_state(q), policy, policy_side, tally);
  GlobalResult out;
  out.won = tally.won;
  out.leaves = tally.leaves;
  out.ratio = tally.leaves == 0 ? 0.0 : double(tally.won) / tally.leaves;
  return out;
}

}  // namespace qzero
