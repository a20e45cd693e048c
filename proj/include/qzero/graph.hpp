#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "qzero/qbf.hpp"

namespace qzero {

enum class NodeKind { ExistLit, UnivLit, ClauseNode };

// Complement is the literal-to-negation coupling edge; E2A/A2E chain
// consecutive prefix variables whose quantifiers differ; L2C is
// literal-in-clause incidence.
enum class EdgeType { E2A, A2E, L2C, Complement };
constexpr int kEdgeTypeCount = 4;

struct GraphNode {
  NodeKind kind = NodeKind::ExistLit;
  int var = 0;          // literal nodes: variable id, 0 otherwise
  bool negated = false;
  int clause = -1;      // clause nodes: matrix index, -1 otherwise
  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphEdge {
  int u = 0;
  int v = 0;
  EdgeType type = EdgeType::L2C;
  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

// Undirected typed multigraph over a residual formula. Node ids are dense:
// positive literals in prefix order, then negative literals in prefix order,
// then clauses in matrix order.
struct QbfGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int edge_count() const { return static_cast<int>(edges.size()); }
  friend bool operator==(const QbfGraph&, const QbfGraph&) = default;
};

// Graph for a nonterminal residual: 2 literal nodes per prefix variable and
// one node per clause; an L2C edge per literal occurrence, a Complement edge
// per variable, and one chain edge (between positive literal nodes) per
// consecutive prefix pair with differing quantifiers.
QbfGraph encode(const Qbf& q);

// One-hot node-kind rows, zero-padded to hidden_size (>= 3):
// ExistLit -> e1, UnivLit -> e2, ClauseNode -> e3.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> init_features(
    const QbfGraph& g, int hidden_size) {
  if (hidden_size < 3)
    throw std::invalid_argument("init_features: hidden_size must be >= 3");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> h0 =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(
          g.node_count(), hidden_size);
  for (int i = 0; i < g.node_count(); ++i) {
    switch (g.nodes[static_cast<std::size_t>(i)].kind) {
      case NodeKind::ExistLit: h0(i, 0) = Scalar(1); break;
      case NodeKind::UnivLit: h0(i, 1) = Scalar(1); break;
      case NodeKind::ClauseNode: h0(i, 2) = Scalar(1); break;
    }
  }
  return h0;
}

const char* node_kind_name(NodeKind k);
const char* edge_type_name(EdgeType t);

// {nodes:[{id,kind,tag}],edges:[{u,v,type}]} dump for inspection.
std::string graph_json(const QbfGraph& g);

}  // namespace qzero
