#include "qzero/game.hpp"

#include <cassert>
#include <sstream>

namespace qzero {

Player GameState::to_move() const {
  if (residual_.prefix.empty())
    throw std::logic_error("to_move: prefix exhausted");
  return owner_of(residual_.prefix.front().quant);
}

GameState initial_state(const Qbf& q) {
  if (q.prefix.empty())
    throw std::invalid_argument("initial_state: empty prefix");
  if (q.matrix.empty())
    throw std::invalid_argument("initial_state: empty matrix");
  return GameState(q);
}

GameState apply_action(const GameState& s, int action) {
  if (s.terminal()) throw std::invalid_argument("apply_action: terminal state");
  const int var = s.residual().prefix.front().var;
  Assignment history = s.history();
  history.push_back({var, action});
  return GameState(simplify(s.residual(), var, action), std::move(history));
}

std::optional<Outcome> terminal_outcome(const GameState& s) {
  const Qbf& r = s.residual();
  if (r.matrix.empty()) return Outcome{Player::Proponent};
  if (r.has_empty_clause()) return Outcome{Player::Opponent};
  // Literals always reference prefix variables, so an exhausted prefix
  // forces a decided matrix.
  assert(!r.prefix.empty());
  return std::nullopt;
}

std::string state_key(const GameState& s) {
  std::string key = serialize_qdimacs(s.residual());
  key += s.terminal() ? '#' : (s.to_move() == Player::Proponent ? 'P' : 'O');
  return key;
}

std::string trace_record_json(int move_index, int variable, int value,
                              Player player) {
  std::ostringstream out;
  out << "{\"move_index\":" << move_index << ",\"variable\":" << variable
      << ",\"value\":" << value << ",\"player\":\"" << player_name(player)
      << "\"}";
  return out.str();
}

}  // namespace qzero
