#pragma once

#include <string>

#include "qzero/game.hpp"
#include "qzero/qbf.hpp"

namespace qzero::fixtures {

// Ex1Ax2Ex3. (x1 | x2 | !x3) & (x2 | x3) & (x1 | x3) — true.
inline const std::string kFig1Text =
    "p cnf 3 3\n"
    "e 1 0\n"
    "a 2 0\n"
    "e 3 0\n"
    "1 2 -3 0\n"
    "2 3 0\n"
    "1 3 0\n";

// Ex1. (x1) — true.
inline const std::string kUnit1Text =
    "p cnf 1 1\n"
    "e 1 0\n"
    "1 0\n";

// Ex1. (x1) & (!x1) — false.
inline const std::string kContraText =
    "p cnf 1 2\n"
    "e 1 0\n"
    "1 0\n"
    "-1 0\n";

inline Qbf fig1() { return parse_qdimacs(kFig1Text); }
inline Qbf unit1() { return parse_qdimacs(kUnit1Text); }
inline Qbf contra() { return parse_qdimacs(kContraText); }

// Independent reference for oracle checks: exhaustive minimax through the
// game engine, Proponent maximizing with win = +1.
inline int minimax(const GameState& s) {
  if (const auto outcome = terminal_outcome(s))
    return outcome->winner == Player::Proponent ? 1 : -1;
  const int v0 = minimax(apply_action(s, 0));
  const int v1 = minimax(apply_action(s, 1));
  return s.to_move() == Player::Proponent ? std::max(v0, v1) : std::min(v0, v1);
}

}  // namespace qzero::fixtures
