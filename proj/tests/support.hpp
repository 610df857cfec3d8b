#pragma once

// Shared fixtures and independent reference implementations for the test
// suites. The oracles here deliberately avoid the library's own code paths:
// metrics materialize each conditional subgroup explicitly, and the
// counterfactual oracle is a plain O(N^2) scan.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fairicd/dataset.hpp"
#include "fairicd/graph.hpp"
#include "fairicd/rng.hpp"
#include "fairicd/tensor.hpp"

namespace testsupport {

using namespace fairicd;

inline Mask all_on(std::size_t n) { return Mask(n, 1); }

// ---------------------------------------------------------------------------
// Brute-force metric oracles: materialize subgroups, then count.

inline double oracle_dp(const BinaryVector& pred, const SensitiveVector& s,
                        const Mask& mask) {
  std::vector<std::uint8_t> g0, g1;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    (s[i] ? g1 : g0).push_back(pred[i]);
  }
  double p0 = 0.0, p1 = 0.0;
  for (auto v : g0) p0 += v;
  for (auto v : g1) p1 += v;
  p0 /= static_cast<double>(g0.size());
  p1 /= static_cast<double>(g1.size());
  return std::abs(p0 - p1);
}

inline double oracle_eo(const BinaryVector& pred, const LabelVector& y,
                        const SensitiveVector& s, const Mask& mask) {
  std::vector<std::uint8_t> g0, g1;  // predictions among positives per group
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i] || y[i] != 1) continue;
    (s[i] ? g1 : g0).push_back(pred[i]);
  }
  double p0 = 0.0, p1 = 0.0;
  for (auto v : g0) p0 += v;
  for (auto v : g1) p1 += v;
  p0 /= static_cast<double>(g0.size());
  p1 /= static_cast<double>(g1.size());
  return std::abs(p0 - p1);
}

inline double oracle_accuracy(const BinaryVector& pred, const LabelVector& y,
                              const Mask& mask) {
  std::size_t n = 0, correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    ++n;
    if (pred[i] == static_cast<std::uint8_t>(y[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

inline double oracle_f1(const BinaryVector& pred, const LabelVector& y,
                        const Mask& mask) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    if (pred[i] == 1 && y[i] == 1) ++tp;
    if (pred[i] == 1 && y[i] != 1) ++fp;
    if (pred[i] == 0 && y[i] == 1) ++fn;
  }
  if (tp == 0) return 0.0;
  const double prec = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double rec = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * prec * rec / (prec + rec);
}

inline double oracle_avg_het_degree(const Graph& g, const SensitiveVector& s) {
  std::size_t het = 0;
  for (std::size_t i = 0; i < g.num_nodes; ++i)
    for (std::size_t e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e)
      if (s[i] != s[g.col_indices[e]]) ++het;
  return static_cast<double>(het) / static_cast<double>(g.num_nodes);
}

// ---------------------------------------------------------------------------
// Exhaustive counterfactual search: scan every candidate, keep the nearest
// k by (distance, id), then take the closest opposite-attribute one.

inline std::optional<NodeId> oracle_counterfactual(
    const FeatureMatrix& x, const SensitiveVector& s, std::size_t v, std::size_t k,
    const std::vector<std::size_t>& exclude) {
  std::vector<bool> skip(x.cols(), false);
  for (auto c : exclude) skip[c] = true;
  std::vector<std::pair<double, NodeId>> cand;
  for (std::size_t u = 0; u < x.rows(); ++u) {
    if (u == v) continue;
    double d = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (skip[c]) continue;
      const double diff = x(v, c) - x(u, c);
      d += diff * diff;
    }
    cand.emplace_back(d, static_cast<NodeId>(u));
  }
  std::sort(cand.begin(), cand.end());
  const std::size_t top = std::min(k, cand.size());
  for (std::size_t i = 0; i < top; ++i)
    if (s[cand[i].second] != s[v]) return cand[i].second;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Random instances.

struct RandomInstance {
  Graph graph;
  BinaryVector pred;
  LabelVector y;
  SensitiveVector s;
};

// Guarantees both sensitive groups nonempty and both groups contain a
// positive label, so DP and EO are defined.
inline RandomInstance random_instance(Rng& rng, std::size_t max_n) {
  RandomInstance inst;
  const std::size_t n = 4 + rng.below(max_n - 3);
  inst.pred.resize(n);
  inst.y.resize(n);
  inst.s.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    inst.pred[i] = static_cast<std::uint8_t>(rng.bernoulli(0.5));
    inst.y[i] = static_cast<std::int8_t>(rng.bernoulli(0.5));
    inst.s[i] = static_cast<std::uint8_t>(rng.bernoulli(0.5));
  }
  inst.s[0] = 0;
  inst.s[1] = 1;
  inst.y[0] = 1;
  inst.y[1] = 1;
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(0.2)) edges.emplace_back(static_cast<NodeId>(i),
                                                 static_cast<NodeId>(j));
  inst.graph = Graph::from_undirected_edges(n, edges);
  return inst;
}

inline FeatureMatrix random_features(Rng& rng, std::size_t n, std::size_t d) {
  FeatureMatrix x(n, d);
  for (std::size_t i = 0; i < x.size(); ++i) x.raw()[i] = rng.normal();
  return x;
}

// ---------------------------------------------------------------------------
// File helpers for CLI-facing tests.

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool file_exists(const std::string& path) {
  std::ifstream in(path);
  return in.good();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace testsupport
