#include <doctest.h>

#include "fixtures.hpp"
#include "qzero/verify.hpp"

using namespace qzero;
using namespace qzero::fixtures;

TEST_CASE("local correctness on fig1") {
  const Qbf q = fig1();
  CHECK(local_correct(q, 1));
  CHECK_FALSE(local_correct(q, 0));

  // OP to move with both residuals true: no correct move exists.
  const Qbf lost = simplify(q, 1, 1);
  CHECK_FALSE(local_correct(lost, 0));
  CHECK_FALSE(local_correct(lost, 1));

  CHECK_THROWS_AS(local_correct(simplify(unit1(), 1, 1), 0),
                  std::invalid_argument);
}

namespace {

// local_correct must match the minimax label of the successor at every
// reachable position.
void check_labels_everywhere(const GameState& s) {
  if (s.terminal()) return;
  for (int action = 0; action < 2; ++action) {
    const GameState next = apply_action(s, action);
    const bool winner_is_mover =
        (minimax(next) == 1) == (s.to_move() == Player::Proponent);
    CHECK(local_correct(s, action) == winner_is_mover);
    check_labels_everywhere(next);
  }
}

}  // namespace

TEST_CASE("local correctness agrees with minimax labeling on small instances") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const int vars = 1 + static_cast<int>(seed % 4);
    const Qbf q = random_qbf(vars, 2, seed);
    if (q.decided()) continue;
    check_labels_everywhere(initial_state(q));
  }
}

TEST_CASE("local correctness ratio") {
  const Qbf q = fig1();
  const Qbf lost = simplify(q, 1, 1);  // OP cannot win here

  SUBCASE("all moves correct") {
    const std::vector<MoveRecord> moves{{q, 1, Player::Proponent},
                                        {q, 1, Player::Proponent}};
    const RatioSummary s = local_correctness_ratio(moves, Player::Proponent);
    REQUIRE(s.ratio.has_value());
    CHECK(*s.ratio == doctest::Approx(1.0));
    CHECK(s.eligible == 2);
    CHECK(s.total == 2);
  }

  SUBCASE("no eligible moves reports null") {
    const std::vector<MoveRecord> moves{{lost, 0, Player::Opponent},
                                        {lost, 1, Player::Opponent}};
    const RatioSummary s = local_correctness_ratio(moves, Player::Opponent);
    CHECK_FALSE(s.ratio.has_value());
    CHECK(s.eligible == 0);
    CHECK(s.total == 2);
  }

  SUBCASE("two of three eligible moves correct") {
    const std::vector<MoveRecord> moves{
        {q, 1, Player::Proponent},
        {q, 1, Player::Proponent},
        {q, 0, Player::Proponent},       // wrong in a winnable position
        {lost, 0, Player::Proponent}};   // not this player's record
    const RatioSummary s = local_correctness_ratio(moves, Player::Proponent);
    REQUIRE(s.ratio.has_value());
    CHECK(*s.ratio == doctest::Approx(2.0 / 3.0));
    CHECK(s.eligible == 3);
  }

  SUBCASE("all-moves denominator counts lost positions") {
    const std::vector<MoveRecord> moves{{q, 1, Player::Proponent},
                                        {lost, 0, Player::Opponent}};
    const RatioSummary p = local_correctness_ratio(
        moves, Player::Proponent, RatioDenominator::AllMoves);
    CHECK(*p.ratio == doctest::Approx(1.0));
    const RatioSummary op = local_correctness_ratio(
        moves, Player::Opponent, RatioDenominator::AllMoves);
    CHECK(*op.ratio == doctest::Approx(0.0));
    CHECK(op.total == 1);
    CHECK(op.eligible == 0);
  }
}

TEST_CASE("global correctness of fixture policies") {
  const Qbf q = fig1();

  SUBCASE("oracle as proponent wins every branch") {
    const GlobalResult r =
        global_correctness(q, oracle_policy_fn(), Player::Proponent);
    CHECK(r.ratio == doctest::Approx(1.0));
    CHECK(r.leaves == 2);  // one branch per opponent value of x2
    CHECK(r.won == 2);
  }

  SUBCASE("any policy wins contra as opponent") {
    for (const int action : {0, 1}) {
      const GlobalResult r = global_correctness(
          contra(), constant_policy_fn(action), Player::Opponent);
      CHECK(r.ratio == doctest::Approx(1.0));
    }
  }

  SUBCASE("a flawed proponent wins only half the branches") {
    // Plays x1=0, then x3=1: loses the x2=0 branch.
    const PolicyFn flawed = [](const GameState& s) {
      return s.residual().prefix.front().var == 3 ? 1 : 0;
    };
    const GlobalResult r = global_correctness(q, flawed, Player::Proponent);
    CHECK(r.ratio == doctest::Approx(0.5));
    CHECK(r.leaves == 2);
  }

  SUBCASE("policy must play the oracle-favored side") {
    CHECK_THROWS_AS(
        global_correctness(q, oracle_policy_fn(), Player::Opponent),
        std::invalid_argument);
  }
}

TEST_CASE("oracle policy is a winning strategy on random instances") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Qbf q = random_qbf(4, 3, seed);
    if (q.decided()) continue;
    const Player side =
        oracle_truth(q) ? Player::Proponent : Player::Opponent;
    const GlobalResult r = global_correctness(q, oracle_policy_fn(), side);
    CHECK(r.ratio == doctest::Approx(1.0));
  }
}

namespace {

// Walk the enumeration tree and require every policy move to be locally
// correct; the certificate property behind a 1.0 ratio.
void check_certificate(const GameState& s, const PolicyFn& policy,
                       Player side) {
  if (s.terminal()) return;
  if (s.to_move() == side) {
    const int action = policy(s);
    CHECK(local_correct(s, action));
    check_certificate(apply_action(s, action), policy, side);
    return;
  }
  check_certificate(apply_action(s, 0), policy, side);
  check_certificate(apply_action(s, 1), policy, side);
}

}  // namespace

TEST_CASE("a perfect global score certifies local correctness throughout") {
  for (std::uint64_t seed = 30; seed < 45; ++seed) {
    const Qbf q = random_qbf(4, 3, seed);
    if (q.decided()) continue;
    const Player side =
        oracle_truth(q) ? Player::Proponent : Player::Opponent;
    const PolicyFn policy = oracle_policy_fn();
    const GlobalResult r = global_correctness(q, policy, side);
    REQUIRE(r.ratio == doctest::Approx(1.0));
    check_certificate(initial_state(q), policy, side);
  }
}

TEST_CASE("seeded random policy is reproducible") {
  const GameState s = initial_state(fig1());
  PolicyFn a = seeded_random_policy_fn(42);
  PolicyFn b = seeded_random_policy_fn(42);
  for (int i = 0; i < 20; ++i) CHECK(a(s) == b(s));
}
