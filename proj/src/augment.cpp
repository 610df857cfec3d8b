#include "fairicd/augment.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <tuple>

#include "fairicd/errors.hpp"
#include "fairicd/kernels.hpp"
#include "fairicd/rng.hpp"

namespace fairicd {

std::size_t CounterfactualMap::num_resolved() const {
  std::size_t n = 0;
  for (const auto& c : cf) n += c.has_value();
  return n;
}

std::string CounterfactualMap::to_csv() const {
  std::ostringstream os;
  os << "node,counterfactual\n";
  for (std::size_t i = 0; i < cf.size(); ++i) {
    os << i << ',';
    if (cf[i]) os << *cf[i];
    os << '\n';
  }
  return os.str();
}

const char* edge_flag_name(EdgeFlag f) {
  switch (f) {
    case EdgeFlag::kept: return "kept";
    case EdgeFlag::rewired: return "rewired";
    case EdgeFlag::unresolved: return "unresolved";
  }
  return "?";
}

std::int64_t AugmentedGraph::out_weight(std::size_t i) const {
  std::int64_t w = 0;
  for (std::size_t e = row_offsets[i]; e < row_offsets[i + 1]; ++e) w += weights[e];
  return w;
}

Graph AugmentedGraph::as_weighted_graph() const {
  Graph g;
  g.num_nodes = num_nodes;
  g.row_offsets = row_offsets;
  g.col_indices = col_indices;
  g.edge_weights.reserve(weights.size());
  for (std::int64_t w : weights) g.edge_weights.push_back(static_cast<double>(w));
  return g;
}

std::string AugmentedGraph::to_edge_list_text() const {
  std::ostringstream os;
  os << "# src dst weight flag\n";
  for (std::size_t i = 0; i < num_nodes; ++i)
    for (std::size_t e = row_offsets[i]; e < row_offsets[i + 1]; ++e)
      os << i << ' ' << col_indices[e] << ' ' << weights[e] << ' '
         << edge_flag_name(flags[e]) << '\n';
  return os.str();
}

CounterfactualMap find_counterfactuals(const FeatureMatrix& x, const SensitiveVector& s,
                                       std::size_t k,
                                       const std::vector<std::size_t>& exclude) {
  if (k < 1) throw ConfigError("counterfactual search needs k >= 1");
  if (s.size() != x.rows()) throw DataError("sensitive length mismatch");

  std::vector<bool> skip(x.cols(), false);
  for (std::size_t c : exclude)
    if (c < x.cols()) skip[c] = true;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < x.cols(); ++c)
    if (!skip[c]) cols.push_back(c);

  const KnnResult knn = knn_search(x, cols, k);

  CounterfactualMap out;
  out.k = k;
  out.cf.assign(x.rows(), std::nullopt);
  constexpr std::uint32_t kUnused = std::numeric_limits<std::uint32_t>::max();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t r = 0; r < k; ++r) {
      const std::uint32_t id = knn.ids[i * k + r];
      if (id == kUnused) break;
      if (s[id] != s[i]) {
        out.cf[i] = id;
        break;
      }
    }
  }
  return out;
}

namespace {

struct Contribution {
  NodeId dst;
  EdgeFlag flag;
  bool operator<(const Contribution& o) const {
    return std::tie(dst, flag) < std::tie(o.dst, o.flag);
  }
  bool operator==(const Contribution& o) const { return dst == o.dst && flag == o.flag; }
};

}  // namespace

AugmentedGraph augment_graph(const Graph& g, const SensitiveVector& s,
                             const CounterfactualMap& cf) {
  if (s.size() != g.num_nodes || cf.cf.size() != g.num_nodes)
    throw DataError("augment_graph input size mismatch");

  AugmentedGraph out;
  out.num_nodes = g.num_nodes;
  out.row_offsets.assign(g.num_nodes + 1, 0);

  std::vector<Contribution> row;
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    row.clear();
    for (std::size_t e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e) {
      const NodeId j = g.col_indices[e];
      if (s[j] != s[i]) {
        row.push_back({j, EdgeFlag::kept});
      } else if (cf.cf[j]) {
        row.push_back({*cf.cf[j], EdgeFlag::rewired});
        ++out.rewired_count;
      } else {
        row.push_back({j, EdgeFlag::unresolved});
      }
    }
    std::sort(row.begin(), row.end());
    for (std::size_t p = 0; p < row.size();) {
      std::size_t q = p;
      while (q < row.size() && row[q] == row[p]) ++q;
      out.col_indices.push_back(row[p].dst);
      out.weights.push_back(static_cast<std::int64_t>(q - p));
      out.flags.push_back(row[p].flag);
      p = q;
    }
    out.row_offsets[i + 1] = out.col_indices.size();
  }
  return out;
}

Graph edge_drop(const Graph& g, double p, std::uint64_t seed) {
  if (p < 0.0 || p > 1.0) throw ConfigError("edge_drop probability out of [0,1]");
  Rng rng = Rng::derive(seed, "edge_drop");
  std::vector<std::pair<NodeId, NodeId>> kept;
  for (std::size_t i = 0; i < g.num_nodes; ++i)
    for (std::size_t e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e) {
      const NodeId j = g.col_indices[e];
      if (j <= i) continue;  // one decision per undirected edge
      if (!rng.bernoulli(p)) kept.emplace_back(static_cast<NodeId>(i), j);
    }
  return Graph::from_undirected_edges(g.num_nodes, kept);
}

FeatureMatrix feature_mask(const FeatureMatrix& x, double p, std::uint64_t seed) {
  if (p < 0.0 || p > 1.0) throw ConfigError("feature_mask probability out of [0,1]");
  Rng rng = Rng::derive(seed, "feature_mask");
  FeatureMatrix out = x;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    if (!rng.bernoulli(p)) continue;
    for (std::size_t i = 0; i < x.rows(); ++i) out(i, j) = 0.0;
  }
  return out;
}

}  // namespace fairicd
