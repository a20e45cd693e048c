#include "qzero/graph.hpp"

#include <json.hpp>

namespace qzero {

QbfGraph encode(const Qbf& q) {
  if (q.prefix.empty() || q.decided())
    throw std::invalid_argument("encode: residual must be nonterminal");

  const int nvars = static_cast<int>(q.prefix.size());
  QbfGraph g;
  g.nodes.reserve(static_cast<std::size_t>(2 * nvars) + q.matrix.size());

  // Positive literals, then negative literals, then clauses.
  std::vector<int> pos_of(static_cast<std::size_t>(q.declared_vars) + 1, -1);
  for (int i = 0; i < nvars; ++i) {
    const PrefixEntry& e = q.prefix[static_cast<std::size_t>(i)];
    pos_of[static_cast<std::size_t>(e.var)] = i;
    const NodeKind kind = e.quant == Quantifier::Exists ? NodeKind::ExistLit
                                                        : NodeKind::UnivLit;
    g.nodes.push_back({kind, e.var, false, -1});
  }
  for (int i = 0; i < nvars; ++i) {
    GraphNode n = g.nodes[static_cast<std::size_t>(i)];
    n.negated = true;
    g.nodes.push_back(n);
  }
  for (int j = 0; j < q.clause_count(); ++j)
    g.nodes.push_back({NodeKind::ClauseNode, 0, false, j});

  const auto lit_node = [&](const Literal& lit) {
    return pos_of[static_cast<std::size_t>(lit.var)] + (lit.negated ? nvars : 0);
  };

  for (int j = 0; j < q.clause_count(); ++j) {
    for (const Literal& lit : q.matrix[static_cast<std::size_t>(j)].literals)
      g.edges.push_back({lit_node(lit), 2 * nvars + j, EdgeType::L2C});
  }
  for (int i = 0; i < nvars; ++i)
    g.edges.push_back({i, nvars + i, EdgeType::Complement});
  for (int i = 0; i + 1 < nvars; ++i) {
    const Quantifier a = q.prefix[static_cast<std::size_t>(i)].quant;
    const Quantifier b = q.prefix[static_cast<std::size_t>(i) + 1].quant;
    if (a == b) continue;
    const EdgeType type =
        a == Quantifier::Exists ? EdgeType::E2A : EdgeType::A2E;
    g.edges.push_back({i, i + 1, type});
  }
  return g;
}

const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::ExistLit: return "exist_lit";
    case NodeKind::UnivLit: return "univ_lit";
    case NodeKind::ClauseNode: return "clause";
  }
  return "?";
}

const char* edge_type_name(EdgeType t) {
  switch (t) {
    case EdgeType::E2A: return "E2A";
    case EdgeType::A2E: return "A2E";
    case EdgeType::L2C: return "L2C";
    case EdgeType::Complement: return "COMPLEMENT";
  }
  return "?";
}

std::string graph_json(const QbfGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (int i = 0; i < g.node_count(); ++i) {
    const GraphNode& n = g.nodes[static_cast<std::size_t>(i)];
    nlohmann::json tag;
    if (n.kind == NodeKind::ClauseNode) {
      tag = {{"clause", n.clause}};
    } else {
      tag = {{"var", n.var}, {"negated", n.negated}};
    }
    nodes.push_back({{"id", i}, {"kind", node_kind_name(n.kind)}, {"tag", tag}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const GraphEdge& e : g.edges) {
    edges.push_back({{"u", e.u}, {"v", e.v}, {"type", edge_type_name(e.type)}});
  }
  return nlohmann::json{{"nodes", nodes}, {"edges", edges}}.dump();
}

}  // namespace qzero
