#include "qzero/qbf.hpp"

#include <algorithm>
#include <istream>
#include <sstream>

#include "qzero/rng.hpp"

namespace qzero {

bool Clause::contains(Literal lit) const {
  return std::find(literals.begin(), literals.end(), lit) != literals.end();
}

bool Clause::tautological() const {
  for (const Literal& lit : literals) {
    if (contains(Literal{lit.var, !lit.negated})) return true;
  }
  return false;
}

bool Qbf::has_empty_clause() const {
  return std::any_of(matrix.begin(), matrix.end(),
                     [](const Clause& c) { return c.empty(); });
}

namespace {

[[noreturn]] void parse_fail(int lineno, const std::string& msg) {
  throw ParseError("qdimacs line " + std::to_string(lineno) + ": " + msg);
}

}  // namespace

Qbf parse_qdimacs(std::istream& in) {
  Qbf q;
  bool saw_header = false;
  bool saw_clause = false;
  int declared_clauses = 0;
  std::vector<bool> in_prefix;
  std::string line;
  int lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;  // blank line
    if (first == "c") continue;    // comment

    if (first == "p") {
      if (saw_header) parse_fail(lineno, "duplicate header");
      std::string fmt;
      int vars = 0, clauses = 0;
      if (!(ls >> fmt >> vars >> clauses) || fmt != "cnf" || vars < 0 ||
          clauses < 0) {
        parse_fail(lineno, "malformed header, expected 'p cnf <vars> <clauses>'");
      }
      saw_header = true;
      q.declared_vars = vars;
      declared_clauses = clauses;
      in_prefix.assign(static_cast<std::size_t>(vars) + 1, false);
      continue;
    }
    if (!saw_header) parse_fail(lineno, "missing 'p cnf' header");

    if (first == "e" || first == "a") {
      if (saw_clause) parse_fail(lineno, "quantifier line after clauses");
      const Quantifier quant =
          first == "e" ? Quantifier::Exists : Quantifier::ForAll;
      int v = 0;
      bool terminated = false;
      int count = 0;
      while (ls >> v) {
        if (v == 0) {
          terminated = true;
          break;
        }
        if (v < 0 || v > q.declared_vars)
          parse_fail(lineno, "prefix variable out of range: " + std::to_string(v));
        if (in_prefix[static_cast<std::size_t>(v)])
          parse_fail(lineno, "duplicate variable in prefix: " + std::to_string(v));
        in_prefix[static_cast<std::size_t>(v)] = true;
        q.prefix.push_back({quant, v});
        ++count;
      }
      if (!terminated) parse_fail(lineno, "quantifier line not 0-terminated");
      if (count == 0) parse_fail(lineno, "empty quantifier block");
      int extra;
      if (ls >> extra) parse_fail(lineno, "tokens after quantifier terminator");
      continue;
    }

    // Clause line: nonzero integers terminated by 0.
    std::istringstream cs(line);
    Clause clause;
    int code = 0;
    bool terminated = false;
    while (cs >> code) {
      if (code == 0) {
        terminated = true;
        break;
      }
      const Literal lit = Literal::from_dimacs(code);
      if (lit.var > q.declared_vars)
        parse_fail(lineno, "clause variable out of range: " + std::to_string(lit.var));
      if (!in_prefix[static_cast<std::size_t>(lit.var)])
        parse_fail(lineno, "unquantified variable in clause: " + std::to_string(lit.var));
      if (!clause.contains(lit)) clause.literals.push_back(lit);
    }
    if (!terminated) {
      if (clause.empty() && cs.fail() && !cs.eof())
        parse_fail(lineno, "unexpected token: " + line);
      parse_fail(lineno, "clause not 0-terminated");
    }
    int extra;
    if (cs >> extra) parse_fail(lineno, "tokens after clause terminator");
    if (clause.empty()) parse_fail(lineno, "empty clause line");
    saw_clause = true;
    q.matrix.push_back(std::move(clause));
  }

  if (!saw_header) throw ParseError("qdimacs: missing 'p cnf' header");
  if (q.clause_count() != declared_clauses) {
    throw ParseError("qdimacs: header declares " +
                     std::to_string(declared_clauses) + " clauses, found " +
                     std::to_string(q.clause_count()));
  }
  return q;
}

Qbf parse_qdimacs(const std::string& text) {
  std::istringstream in(text);
  return parse_qdimacs(in);
}

std::string serialize_qdimacs(const Qbf& q) {
  std::ostringstream out;
  out << "p cnf " << q.declared_vars << ' ' << q.clause_count() << '\n';
  std::size_t i = 0;
  while (i < q.prefix.size()) {
    const Quantifier quant = q.prefix[i].quant;
    out << (quant == Quantifier::Exists ? 'e' : 'a');
    while (i < q.prefix.size() && q.prefix[i].quant == quant) {
      out << ' ' << q.prefix[i].var;
      ++i;
    }
    out << " 0\n";
  }
  for (const Clause& clause : q.matrix) {
    for (const Literal& lit : clause.literals) out << lit.to_dimacs() << ' ';
    out << "0\n";
  }
  return out.str();
}

Qbf simplify(const Qbf& q, int var, int value) {
  if (q.prefix.empty() || q.prefix.front().var != var) {
    throw std::invalid_argument(
        "simplify: variable " + std::to_string(var) +
        " is not the head of the prefix");
  }
  if (value != 0 && value != 1)
    throw std::invalid_argument("simplify: value must be 0 or 1");

  Qbf out;
  out.declared_vars = q.declared_vars;
  out.prefix.assign(q.prefix.begin() + 1, q.prefix.end());
  out.matrix.reserve(q.matrix.size());
  for (const Clause& clause : q.matrix) {
    bool satisfied = false;
    Clause rest;
    rest.literals.reserve(clause.literals.size());
    for (const Literal& lit : clause.literals) {
      if (lit.var == var) {
        if ((value == 1) != lit.negated) {
          satisfied = true;
          break;
        }
        continue;  // falsified literal drops out
      }
      rest.literals.push_back(lit);
    }
    if (!satisfied) out.matrix.push_back(std::move(rest));
  }
  return out;
}

namespace {

bool oracle_truth_rec(const Qbf& q) {
  if (q.has_empty_clause()) return false;
  if (q.matrix.empty()) return true;
  // Undecided implies a nonempty prefix: every literal references a
  // prefix variable.
  const PrefixEntry head = q.prefix.front();
  const bool t0 = oracle_truth_rec(simplify(q, head.var, 0));
  if (head.quant == Quantifier::Exists && t0) return true;
  if (head.quant == Quantifier::ForAll && !t0) return false;
  return oracle_truth_rec(simplify(q, head.var, 1));
}

void check_bound(const Qbf& q, int var_bound, const char* who) {
  if (static_cast<int>(q.prefix.size()) > var_bound) {
    throw BoundExceeded(std::string(who) + ": " +
                        std::to_string(q.prefix.size()) +
                        " variables exceed bound " + std::to_string(var_bound));
  }
}

}  // namespace

bool oracle_truth(const Qbf& q, int var_bound) {
  check_bound(q, var_bound, "oracle_truth");
  return oracle_truth_rec(q);
}

int oracle_policy(const Qbf& q, int var_bound) {
  if (q.decided() || q.prefix.empty())
    throw std::invalid_argument("oracle_policy: formula already decided");
  check_bound(q, var_bound, "oracle_policy");
  const PrefixEntry head = q.prefix.front();
  const bool want = head.quant == Quantifier::Exists;
  if (oracle_truth_rec(simplify(q, head.var, 0)) == want) return 0;
  if (oracle_truth_rec(simplify(q, head.var, 1)) == want) return 1;
  return 0;  // lost position: loser convention
}

namespace {

long long count_states_rec(const Qbf& q) {
  if (q.decided() || q.prefix.empty()) return 1;
  const int head = q.prefix.front().var;
  return 1 + count_states_rec(simplify(q, head, 0)) +
         count_states_rec(simplify(q, head, 1));
}

}  // namespace

long long count_game_states(const Qbf& q, int var_bound) {
  check_bound(q, var_bound, "count_game_states");
  return count_states_rec(q);
}

Qbf random_qbf(int num_vars, int num_clauses, std::uint64_t seed,
               std::optional<bool> target_truth, const GenConfig& cfg) {
  if (num_vars < 1 || num_clauses < 1)
    throw std::invalid_argument("random_qbf: need at least 1 variable and 1 clause");
  if (cfg.min_clause_width < 1 || cfg.max_clause_width < cfg.min_clause_width)
    throw std::invalid_argument("random_qbf: bad clause width range");

  for (int attempt = 0; attempt < cfg.max_tries; ++attempt) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    Qbf q;
    q.declared_vars = num_vars;
    q.prefix.reserve(static_cast<std::size_t>(num_vars));
    for (int v = 1; v <= num_vars; ++v) {
      Quantifier quant;
      if (v > 1 && rng.chance(cfg.alternation_bias)) {
        quant = q.prefix.back().quant == Quantifier::Exists ? Quantifier::ForAll
                                                            : Quantifier::Exists;
      } else {
        quant = rng.chance(0.5) ? Quantifier::Exists : Quantifier::ForAll;
      }
      q.prefix.push_back({quant, v});
    }
    q.matrix.reserve(static_cast<std::size_t>(num_clauses));
    for (int c = 0; c < num_clauses; ++c) {
      int width = cfg.min_clause_width +
                  rng.below(cfg.max_clause_width - cfg.min_clause_width + 1);
      width = std::min(width, num_vars);
      Clause clause;
      std::vector<int> used;
      while (static_cast<int>(clause.literals.size()) < width) {
        const int v = 1 + rng.below(num_vars);
        if (std::find(used.begin(), used.end(), v) != used.end()) continue;
        used.push_back(v);
        clause.literals.push_back(Literal{v, rng.chance(0.5)});
      }
      q.matrix.push_back(std::move(clause));
    }
    if (!target_truth || oracle_truth(q) == *target_truth) return q;
  }
  throw std::runtime_error("random_qbf: rejection budget exhausted (" +
                           std::to_string(cfg.max_tries) + " tries)");
}

}  // namespace qzero
