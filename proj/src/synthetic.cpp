#include "fairicd/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fairicd/errors.hpp"
#include "fairicd/rng.hpp"

namespace fairicd {

void SyntheticConfig::validate() const {
  if (n < 4) throw ConfigError("synthetic graph needs at least 4 nodes");
  if (homophily < 0.0 || homophily > 1.0) throw ConfigError("homophily must be in [0,1]");
  if (feature_signal < 0.0) throw ConfigError("feature_signal must be non-negative");
  if (bias_strength < 0.0) throw ConfigError("bias_strength must be non-negative");
  if (feature_dim < 2) throw ConfigError("feature_dim must be at least 2");
  if (avg_degree <= 0.0 || avg_degree >= static_cast<double>(n))
    throw ConfigError("avg_degree out of range");
  if (assortativity_scale <= 0.0) throw ConfigError("assortativity_scale must be positive");
}

namespace {

// Random unit vector orthogonalized against `against` (pass empty to skip).
std::vector<double> unit_direction(std::size_t d, Rng& rng,
                                   const std::vector<double>& against) {
  std::vector<double> v(d);
  for (auto& x : v) x = rng.normal();
  if (!against.empty()) {
    double dot = 0.0;
    for (std::size_t i = 0; i < d; ++i) dot += v[i] * against[i];
    for (std::size_t i = 0; i < d; ++i) v[i] -= dot * against[i];
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm < 1e-12) throw NumericError("degenerate direction draw");
  for (auto& x : v) x /= norm;
  return v;
}

}  // namespace

Dataset generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n;
  const std::size_t d = cfg.feature_dim;

  Dataset ds;
  ds.sensitive.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.sensitive[i] = static_cast<std::uint8_t>(i & 1u);

  // Features and labels first, from their own stream, so homophily sweeps on
  // one seed share node attributes.
  Rng feat_rng = Rng::derive(cfg.seed, "synth_features");
  const std::vector<double> w = unit_direction(d, feat_rng, {});
  const std::vector<double> b = unit_direction(d, feat_rng, w);

  // Labeling direction: mostly w, tilted slightly toward b.
  std::vector<double> v(d);
  const double vnorm = std::sqrt(1.0 + cfg.label_bias_mix * cfg.label_bias_mix);
  for (std::size_t j = 0; j < d; ++j) v[j] = (w[j] + cfg.label_bias_mix * b[j]) / vnorm;

  ds.features = FeatureMatrix(n, d);
  ds.labels.resize(n);
  std::vector<double> margin(n);
  for (std::size_t i = 0; i < n; ++i) {
    margin[i] = feat_rng.normal();
    const double noise = cfg.label_noise * feat_rng.normal();
    const double group = ds.sensitive[i] ? 1.0 : -1.0;
    double* row = ds.features.row(i);
    double rule = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = cfg.feature_signal * margin[i] * w[j] + cfg.bias_strength * group * b[j] +
               cfg.residual_scale * feat_rng.normal();
      rule += v[j] * row[j];
    }
    ds.labels[i] = (rule + noise > 0.0) ? 1 : 0;
  }

  // Pairwise Bernoulli edges. Affinity = group factor (homophily vs 1-h)
  // times a Gaussian kernel on the margin gap, normalized so the expected
  // average degree is exactly avg_degree.
  const double inv_two_tau2 =
      1.0 / (2.0 * cfg.assortativity_scale * cfg.assortativity_scale);
  auto affinity = [&](std::size_t i, std::size_t j) {
    const double g = ds.sensitive[i] == ds.sensitive[j] ? cfg.homophily : 1.0 - cfg.homophily;
    const double dm = margin[i] - margin[j];
    return g * std::exp(-dm * dm * inv_two_tau2);
  };
  double affinity_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) affinity_sum += affinity(i, j);
  if (affinity_sum <= 0.0) throw NumericError("degenerate edge affinities");
  const double scale = cfg.avg_degree * static_cast<double>(n) / (2.0 * affinity_sum);

  Rng edge_rng = Rng::derive(cfg.seed, "synth_edges");
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(static_cast<std::size_t>(cfg.avg_degree) * n / 2 + n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = std::min(1.0, scale * affinity(i, j));
      if (edge_rng.next_double() < p)
        edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
    }
  }
  ds.graph = Graph::from_undirected_edges(n, edges);
  ds.validate();
  return ds;
}

Dataset generate_synthetic(std::size_t n, double homophily, double feature_signal,
                           double bias_strength, std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.n = n;
  cfg.homophily = homophily;
  cfg.feature_signal = feature_signal;
  cfg.bias_strength = bias_strength;
  cfg.seed = seed;
  return generate_synthetic(cfg);
}

}  // namespace fairicd
