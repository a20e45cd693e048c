#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qzero {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when an exact (exponential) routine is asked to exceed its
// configured variable bound.
struct BoundExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Quantifier { Exists, ForAll };

struct Literal {
  int var = 0;  // 1-based variable id
  bool negated = false;

  int to_dimacs() const { return negated ? -var : var; }
  static Literal from_dimacs(int code) {
    return Literal{code < 0 ? -code : code, code < 0};
  }
  friend bool operator==(const Literal&, const Literal&) = default;
};

struct Clause {
  std::vector<Literal> literals;

  bool empty() const { return literals.empty(); }
  bool contains(Literal lit) const;
  // Holds a complementary pair. Accepted from external files, never generated.
  bool tautological() const;
  friend bool operator==(const Clause&, const Clause&) = default;
};

struct PrefixEntry {
  Quantifier quant = Quantifier::Exists;
  int var = 0;
  friend bool operator==(const PrefixEntry&, const PrefixEntry&) = default;
};

struct VarAssignment {
  int var = 0;
  int value = 0;  // 0 or 1
  friend bool operator==(const VarAssignment&, const VarAssignment&) = default;
};

// Partial assignment; variables are consumed strictly in prefix order.
using Assignment = std::vector<VarAssignment>;

// Prenex-CNF formula. Residuals of partly played games use the same type:
// simplification keeps empty matrices and empty clauses representable so
// decided formulas can still be inspected.
struct Qbf {
  std::vector<PrefixEntry> prefix;
  std::vector<Clause> matrix;
  int declared_vars = 0;  // from the header; ids are never renumbered

  int var_count() const { return declared_vars; }
  int clause_count() const { return static_cast<int>(matrix.size()); }

  bool has_empty_clause() const;
  // Matrix decided: all clauses satisfied, or some clause falsified.
  bool decided() const { return matrix.empty() || has_empty_clause(); }

  friend bool operator==(const Qbf&, const Qbf&) = default;
};

constexpr int kDefaultOracleBound = 24;

Qbf parse_qdimacs(std::istream& in);
Qbf parse_qdimacs(const std::string& text);

// Canonical QDIMACS: header, maximal same-quantifier blocks, clauses in
// stored order. Decided residuals serialize too (an empty clause prints as
// a bare "0" line) but only undecided output re-parses.
std::string serialize_qdimacs(const Qbf& q);

// Residual after assigning `value` to `var`, which must head the prefix:
// satisfied clauses are dropped, falsified literals are deleted.
Qbf simplify(const Qbf& q, int var, int value);

// Exact truth value by minimax recursion over the prefix.
bool oracle_truth(const Qbf& q, int var_bound = kDefaultOracleBound);

// A winning value for the head variable's owner if one exists, trying 0
// first; 0 when every move loses (fixed loser convention).
int oracle_policy(const Qbf& q, int var_bound = kDefaultOracleBound);

// Number of distinct game-tree nodes reachable when play stops as soon as
// the matrix is decided (root included, terminals childless).
long long count_game_states(const Qbf& q, int var_bound = kDefaultOracleBound);

struct GenConfig {
  int min_clause_width = 2;
  int max_clause_width = 3;
  // 0 = quantifiers i.i.d. uniform, 1 = strict alternation.
  double alternation_bias = 0.0;
  int max_tries = 10000;
};

// Random instance, bit-reproducible per seed. With target_truth set,
// rejection-samples against oracle_truth until the target matches.
Qbf random_qbf(int num_vars, int num_clauses, std::uint64_t seed,
               std::optional<bool> target_truth = std::nullopt,
               const GenConfig& cfg = {});

}  // namespace qzero
