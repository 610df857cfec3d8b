#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fairicd/tensor.hpp"

namespace fairicd {

using NodeId = std::uint32_t;

// Immutable sparse adjacency in CSR form. Plain graphs carry unit weights;
// gcn_normalize produces a weighted one. Safe to share across threads.
struct Graph {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> row_offsets;   // num_nodes + 1, monotone
  std::vector<NodeId> col_indices;
  std::vector<double> edge_weights;       // same length as col_indices

  // Builds a CSR graph from directed (src, dst) pairs with unit weights.
  // Duplicate pairs collapse to one edge. Does not symmetrize.
  static Graph from_edges(std::size_t num_nodes,
                          std::vector<std::pair<NodeId, NodeId>> edges);

  // Symmetrized + deduplicated, self-loops dropped.
  static Graph from_undirected_edges(std::size_t num_nodes,
                                     const std::vector<std::pair<NodeId, NodeId>>& edges);

  std::size_t degree(std::size_t i) const { return row_offsets[i + 1] - row_offsets[i]; }
  std::size_t num_directed_edges() const { return col_indices.size(); }

  std::vector<std::pair<NodeId, NodeId>> to_edge_list() const;

  bool is_symmetric() const;

  void validate() const;  // CSR invariants; throws DataError
};

// Symmetric GCN normalization with self-loops: for augmented degrees
// dt(i) = 1 + deg(i), entry (i, j) of the result is (A+I)_ij / sqrt(dt_i dt_j).
// An isolated node keeps a self-loop of weight 1.
Graph gcn_normalize(const Graph& g);

// A + I with unit weights (sum aggregator input for the GIN backbone).
Graph add_self_loops(const Graph& g);

// Row-normalized adjacency D^-1 A; an isolated node keeps an empty row.
Graph row_normalize(const Graph& g);

Graph csr_transpose(const Graph& g);

// Y = A X using the parallel spmm kernel.
void graph_spmm(const Graph& g, const Tensor& x, Tensor& y);

}  // namespace fairicd
