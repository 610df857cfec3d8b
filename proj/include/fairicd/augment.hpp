#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairicd/dataset.hpp"
#include "fairicd/graph.hpp"

namespace fairicd {

// Per-node optional counterfactual: the nearest of the top-k feature-space
// neighbors that carries the opposite sensitive attribute.
struct CounterfactualMap {
  std::size_t k = 0;
  std::vector<std::optional<NodeId>> cf;

  std::size_t num_resolved() const;
  std::string to_csv() const;  // "node,counterfactual", empty field = absent
};

enum class EdgeFlag : std::uint8_t { kept = 0, rewired = 1, unresolved = 2 };

const char* edge_flag_name(EdgeFlag f);

// Directed weighted adjacency produced by bias-offsetting rewiring. Entries
// are kept per provenance flag: an original heterogeneous edge and a rewired
// one landing on the same target stay separate rows in the edge list. Integer
// weights are parallel-edge multiplicities; per-node total out-weight equals
// the original degree.
struct AugmentedGraph {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> row_offsets;
  std::vector<NodeId> col_indices;
  std::vector<std::int64_t> weights;
  std::vector<EdgeFlag> flags;
  std::size_t rewired_count = 0;  // rewiring events before accumulation

  std::int64_t out_weight(std::size_t i) const;
  // Unit-weight-expanded view as a weighted Graph for aggregation kernels.
  Graph as_weighted_graph() const;
  std::string to_edge_list_text() const;  // "src dst weight flag" per line
};

// Top-k gated counterfactual search on standardized features; squared
// Euclidean distance over columns not listed in exclude, ties broken by
// smaller node id. Entries stay empty when no top-k candidate has the
// opposite attribute. Exact blockwise search, parallel over query nodes.
CounterfactualMap find_counterfactuals(const FeatureMatrix& x, const SensitiveVector& s,
                                       std::size_t k,
                                       const std::vector<std::size_t>& exclude = {});

// Heterogeneous edges kept; a homogeneous edge (i, j) becomes (i, cf(j)) when
// j has a counterfactual, else stays and is flagged unresolved.
AugmentedGraph augment_graph(const Graph& g, const SensitiveVector& s,
                             const CounterfactualMap& cf);

// Baseline augmentation strategies.
Graph edge_drop(const Graph& g, double p, std::uint64_t seed);
FeatureMatrix feature_mask(const FeatureMatrix& x, double p, std::uint64_t seed);

}  // namespace fairicd
