#include "fairicd/graph.hpp"

#include <algorithm>
#include <cmath>

#include "fairicd/errors.hpp"
#include "fairicd/kernels.hpp"

namespace fairicd {

Graph Graph::from_edges(std::size_t num_nodes,
                        std::vector<std::pair<NodeId, NodeId>> edges) {
  for (const auto& [s, d] : edges)
    if (s >= num_nodes || d >= num_nodes)
      throw DataError("endpoint out of range");
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  Graph g;
  g.num_nodes = num_nodes;
  g.row_offsets.assign(num_nodes + 1, 0);
  g.col_indices.reserve(edges.size());
  g.edge_weights.assign(edges.size(), 1.0);
  for (const auto& [s, d] : edges) g.row_offsets[s + 1]++;
  for (std::size_t i = 0; i < num_nodes; ++i) g.row_offsets[i + 1] += g.row_offsets[i];
  for (const auto& [s, d] : edges) g.col_indices.push_back(d);
  return g;
}

Graph Graph::from_undirected_edges(std::size_t num_nodes,
                                   const std::vector<std::pair<NodeId, NodeId>>& edges) {
  std::vector<std::pair<NodeId, NodeId>> directed;
  directed.reserve(edges.size() * 2);
  for (const auto& [s, d] : edges) {
    if (s >= num_nodes || d >= num_nodes) throw DataError("endpoint out of range");
    if (s == d) continue;  // self-loops appear only via gcn_normalize
    directed.emplace_back(s, d);
    directed.emplace_back(d, s);
  }
  return from_edges(num_nodes, std::move(directed));
}

std::vector<std::pair<NodeId, NodeId>> Graph::to_edge_list() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(col_indices.size());
  for (std::size_t i = 0; i < num_nodes; ++i)
    for (std::size_t e = row_offsets[i]; e < row_offsets[i + 1]; ++e)
      out.emplace_back(static_cast<NodeId>(i), col_indices[e]);
  return out;
}

bool Graph::is_symmetric() const {
  auto edges = to_edge_list();
  std::vector<std::pair<NodeId, NodeId>> flipped;
  flipped.reserve(edges.size());
  for (const auto& [s, d] : edges) flipped.emplace_back(d, s);
  std::sort(flipped.begin(), flipped.end());
  return edges == flipped;  // edges already sorted by construction
}

void Graph::validate() const {
  if (row_offsets.size() != num_nodes + 1) throw DataError("row_offsets length mismatch");
  if (row_offsets.front() != 0 || row_offsets.back() != col_indices.size())
    throw DataError("row_offsets bounds mismatch");
  for (std::size_t i = 0; i < num_nodes; ++i)
    if (row_offsets[i + 1] < row_offsets[i]) throw DataError("row_offsets not monotone");
  for (NodeId c : col_indices)
    if (c >= num_nodes) throw DataError("col index out of range");
  if (edge_weights.size() != col_indices.size())
    throw DataError("edge_weights length mismatch");
}

Graph add_self_loops(const Graph& g) {
  Graph out;
  out.num_nodes = g.num_nodes;
  out.row_offsets.assign(g.num_nodes + 1, 0);
  out.col_indices.reserve(g.col_indices.size() + g.num_nodes);
  out.edge_weights.reserve(g.col_indices.size() + g.num_nodes);
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    std::size_t e = g.row_offsets[i];
    const std::size_t end = g.row_offsets[i + 1];
    bool placed = false;
    for (; e < end; ++e) {
      if (!placed && g.col_indices[e] >= i) {
        if (g.col_indices[e] != i) {
          out.col_indices.push_back(static_cast<NodeId>(i));
          out.edge_weights.push_back(1.0);
        }
        placed = true;
      }
      out.col_indices.push_back(g.col_indices[e]);
      out.edge_weights.push_back(g.edge_weights[e]);
    }
    if (!placed) {
      out.col_indices.push_back(static_cast<NodeId>(i));
      out.edge_weights.push_back(1.0);
    }
    out.row_offsets[i + 1] = out.col_indices.size();
  }
  return out;
}

Graph gcn_normalize(const Graph& g) {
  Graph with_loops = add_self_loops(g);
  std::vector<double> aug_degree(g.num_nodes, 0.0);
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    double d = 0.0;
    for (std::size_t e = with_loops.row_offsets[i]; e < with_loops.row_offsets[i + 1]; ++e)
      d += with_loops.edge_weights[e];
    aug_degree[i] = d;
  }
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    const double di = std::sqrt(aug_degree[i]);
    for (std::size_t e = with_loops.row_offsets[i]; e < with_loops.row_offsets[i + 1]; ++e) {
      const double dj = std::sqrt(aug_degree[with_loops.col_indices[e]]);
      with_loops.edge_weights[e] /= di * dj;
    }
  }
  return with_loops;
}

Graph row_normalize(const Graph& g) {
  Graph out = g;
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    double d = 0.0;
    for (std::size_t e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e)
      d += g.edge_weights[e];
    if (d == 0.0) continue;
    for (std::size_t e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e)
      out.edge_weights[e] = g.edge_weights[e] / d;
  }
  return out;
}

Graph csr_transpose(const Graph& g) {
  Graph out;
  out.num_nodes = g.num_nodes;
  out.row_offsets.assign(g.num_nodes + 1, 0);
  for (NodeId c : g.col_indices) out.row_offsets[c + 1]++;
  for (std::size_t i = 0; i < g.num_nodes; ++i) out.row_offsets[i + 1] += out.row_offsets[i];
  out.col_indices.assign(g.col_indices.size(), 0);
  out.edge_weights.assign(g.col_indices.size(), 0.0);
  std::vector<std::size_t> cursor(out.row_offsets.begin(), out.row_offsets.end() - 1);
  for (std::size_t i = 0; i < g.num_nodes; ++i)
    for (std::size_t e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e) {
      const NodeId c = g.col_indices[e];
      const std::size_t slot = cursor[c]++;
      out.col_indices[slot] = static_cast<NodeId>(i);
      out.edge_weights[slot] = g.edge_weights[e];
    }
  return out;
}

void graph_spmm(const Graph& g, const Tensor& x, Tensor& y) {
  if (x.rows() != g.num_nodes) throw NumericError("spmm shape mismatch");
  spmm(g.row_offsets, g.col_indices, g.edge_weights, x, y);
}

}  // namespace fairicd
