#pragma once

#include <optional>
#include <string>

#include "qzero/qbf.hpp"

namespace qzero {

// Proponent assigns existential variables and wants the formula true;
// Opponent assigns universal variables and wants it false.
enum class Player { Proponent, Opponent };

inline Player owner_of(Quantifier q) {
  return q == Quantifier::Exists ? Player::Proponent : Player::Opponent;
}
inline Player other(Player p) {
  return p == Player::Proponent ? Player::Opponent : Player::Proponent;
}
inline const char* player_name(Player p) {
  return p == Player::Proponent ? "P" : "OP";
}

struct Outcome {
  Player winner = Player::Proponent;
  friend bool operator==(const Outcome&, const Outcome&) = default;
};

// One node of the game tree: the residual formula plus how we got there.
// Immutable; apply_action returns a fresh state.
class GameState {
 public:
  explicit GameState(Qbf residual) : residual_(std::move(residual)) {}
  GameState(Qbf residual, Assignment history)
      : residual_(std::move(residual)), history_(std::move(history)) {}

  const Qbf& residual() const { return residual_; }
  const Assignment& history() const { return history_; }
  int move_index() const { return static_cast<int>(history_.size()); }

  // Matrix decided or prefix exhausted; no further moves.
  bool terminal() const {
    return residual_.decided() || residual_.prefix.empty();
  }
  // Owner of the head prefix variable. Only valid on nonterminal states.
  Player to_move() const;

 private:
  Qbf residual_;
  Assignment history_;
};

GameState initial_state(const Qbf& q);

// Assigns `action` (0 or 1) to the head prefix variable.
GameState apply_action(const GameState& s, int action);

// Empty matrix: Proponent wins. Empty clause: Opponent wins. Nonterminal:
// absent. An exhausted prefix with an undecided matrix cannot occur.
std::optional<Outcome> terminal_outcome(const GameState& s);

// Canonical key for transposition tables, caches, and coverage counting:
// the residual's serialization plus the side to move.
std::string state_key(const GameState& s);

// One game-trace record as a JSON line.
std::string trace_record_json(int move_index, int variable, int value,
                              Player player);

}  // namespace qzero
