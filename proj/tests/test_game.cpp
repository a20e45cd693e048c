#include <doctest.h>

#include "fixtures.hpp"
#include "qzero/game.hpp"

using namespace qzero;
using namespace qzero::fixtures;

TEST_CASE("initial state") {
  const GameState s = initial_state(fig1());
  CHECK(s.to_move() == Player::Proponent);
  CHECK(s.move_index() == 0);
  CHECK_FALSE(s.terminal());

  const Qbf univ_first = parse_qdimacs("p cnf 2 1\na 1 0\ne 2 0\n1 2 0\n");
  CHECK(initial_state(univ_first).to_move() == Player::Opponent);

  Qbf empty_matrix = fig1();
  empty_matrix.matrix.clear();
  CHECK_THROWS_AS(initial_state(empty_matrix), std::invalid_argument);
  Qbf empty_prefix = fig1();
  empty_prefix.prefix.clear();
  CHECK_THROWS_AS(initial_state(empty_prefix), std::invalid_argument);
}

TEST_CASE("apply_action walks the prefix in order") {
  GameState s = initial_state(fig1());
  s = apply_action(s, 1);
  CHECK(s.residual().prefix ==
        std::vector<PrefixEntry>{{Quantifier::ForAll, 2}, {Quantifier::Exists, 3}});
  CHECK(s.to_move() == Player::Opponent);
  CHECK(s.move_index() == 1);
  CHECK(s.history() == Assignment{{1, 1}});

  s = apply_action(s, 0);
  CHECK(s.residual().prefix.front().var == 3);
  s = apply_action(s, 1);
  CHECK(s.terminal());
  CHECK(terminal_outcome(s)->winner == Player::Proponent);
  CHECK_THROWS_AS(apply_action(s, 0), std::invalid_argument);
}

TEST_CASE("terminal outcomes") {
  // Matrix decided with x2 still unassigned: early termination.
  const Qbf q = parse_qdimacs("p cnf 2 1\ne 1 0\na 2 0\n1 0\n");
  const GameState s = apply_action(initial_state(q), 1);
  REQUIRE(s.terminal());
  CHECK(s.residual().matrix.empty());
  CHECK_FALSE(s.residual().prefix.empty());
  CHECK(terminal_outcome(s)->winner == Player::Proponent);

  const GameState lost = apply_action(initial_state(contra()), 1);
  CHECK(terminal_outcome(lost)->winner == Player::Opponent);

  CHECK_FALSE(terminal_outcome(initial_state(fig1())).has_value());
}

TEST_CASE("minimax over the game engine matches the oracle") {
  CHECK(minimax(initial_state(fig1())) == 1);
  CHECK(minimax(initial_state(unit1())) == 1);
  CHECK(minimax(initial_state(contra())) == -1);
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const int vars = 1 + static_cast<int>(seed % 4);
    const Qbf q = random_qbf(vars, 1 + static_cast<int>(seed % 4), seed);
    if (q.decided()) continue;
    CHECK(oracle_truth(q) == (minimax(initial_state(q)) == 1));
  }
}

TEST_CASE("every playout terminates within var_count moves") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Qbf q = random_qbf(5, 3, seed);
    // All-zeros playout.
    GameState s = initial_state(q);
    int moves = 0;
    while (!s.terminal()) {
      s = apply_action(s, 0);
      ++moves;
    }
    CHECK(moves <= q.var_count());
  }
}

namespace {

// Every completion of a decided residual must keep the same winner.
void check_completions(const Qbf& r, Player winner) {
  if (r.prefix.empty()) {
    // Fully assigned: surviving clauses have lost all their literals.
    const bool p_wins = r.matrix.empty();
    CHECK(p_wins == (winner == Player::Proponent));
    return;
  }
  check_completions(simplify(r, r.prefix.front().var, 0), winner);
  check_completions(simplify(r, r.prefix.front().var, 1), winner);
}

void check_early_termination(const GameState& s) {
  if (const auto outcome = terminal_outcome(s)) {
    check_completions(s.residual(), outcome->winner);
    return;
  }
  check_early_termination(apply_action(s, 0));
  check_early_termination(apply_action(s, 1));
}

}  // namespace

TEST_CASE("early termination is sound") {
  check_early_termination(initial_state(fig1()));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Qbf q = random_qbf(3, 3, seed);
    if (!q.decided()) check_early_termination(initial_state(q));
  }
}

TEST_CASE("state keys distinguish residuals") {
  const GameState a = initial_state(fig1());
  const GameState b = apply_action(a, 0);
  CHECK(state_key(a) != state_key(b));
  CHECK(state_key(a) == state_key(initial_state(fig1())));
}

TEST_CASE("trace records render as JSON lines") {
  CHECK(trace_record_json(0, 1, 1, Player::Proponent) ==
        "{\"move_index\":0,\"variable\":1,\"value\":1,\"player\":\"P\"}");
  CHECK(trace_record_json(2, 3, 0, Player::Opponent) ==
        "{\"move_index\":2,\"variable\":3,\"value\":0,\"player\":\"OP\"}");
}
