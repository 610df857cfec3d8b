#include "fairicd/metrics.hpp"

#include <cstdio>

#include <json.hpp>

#include "fairicd/augment.hpp"
#include "fairicd/errors.hpp"

namespace fairicd {

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["acc"] = accuracy;
  j["f1"] = f1;
  j["dp"] = dp;
  j["eo"] = eo;
  j["rate_s0"] = rate_s0;
  j["rate_s1"] = rate_s1;
  return j.dump(2) + "\n";
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MetricsReport r;
  r.accuracy = j.at("acc").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.dp = j.at("dp").get<double>();
  r.eo = j.at("eo").get<double>();
  r.rate_s0 = j.value("rate_s0", 0.0);
  r.rate_s1 = j.value("rate_s1", 0.0);
  return r;
}

std::string MetricsReport::markdown_header() {
  return "| Strategy | F1 | Acc | DP | EO |\n|---|---|---|---|---|\n";
}

std::string MetricsReport::markdown_row(const std::string& label) const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "| %s | %.2f | %.2f | %.2f | %.2f |\n", label.c_str(),
                f1 * 100.0, accuracy * 100.0, dp * 100.0, eo * 100.0);
  return buf;
}

namespace {

struct GroupRates {
  double rate0 = 0.0;
  double rate1 = 0.0;
};

GroupRates positive_rates(const BinaryVector& pred, const SensitiveVector& s,
                          const Mask& mask, const LabelVector* require_positive) {
  std::size_t n0 = 0, n1 = 0, p0 = 0, p1 = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    if (require_positive && (*require_positive)[i] != 1) continue;
    if (s[i] == 0) {
      ++n0;
      p0 += pred[i] != 0;
    } else {
      ++n1;
      p1 += pred[i] != 0;
    }
  }
  if (n0 == 0)
    throw DataError(require_positive ? "no positives in S=0" : "group S=0 empty");
  if (n1 == 0)
    throw DataError(require_positive ? "no positives in S=1" : "group S=1 empty");
  return {static_cast<double>(p0) / static_cast<double>(n0),
          static_cast<double>(p1) / static_cast<double>(n1)};
}

}  // namespace

double demographic_parity(const BinaryVector& pred, const SensitiveVector& s,
                          const Mask& mask) {
  const auto r = positive_rates(pred, s, mask, nullptr);
  return std::abs(r.rate0 - r.rate1);
}

double equality_of_opportunity(const BinaryVector& pred, const LabelVector& y,
                               const SensitiveVector& s, const Mask& mask) {
  const auto r = positive_rates(pred, s, mask, &y);
  return std::abs(r.rate0 - r.rate1);
}

ClassificationMetrics classification_metrics(const BinaryVector& pred,
                                             const LabelVector& y, const Mask& mask) {
  std::size_t n = 0, correct = 0, tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    ++n;
    const bool p = pred[i] != 0;
    const bool t = y[i] == 1;
    correct += p == t;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  if (n == 0) throw DataError("empty evaluation mask");
  ClassificationMetrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  // F1 = 2tp / (2tp + fp + fn); zero by convention when no true positives
  const std::size_t denom = 2 * tp + fp + fn;
  m.f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  return m;
}

MetricsReport full_report(const BinaryVector& pred, const LabelVector& y,
                          const SensitiveVector& s, const Mask& mask) {
  MetricsReport r;
  const auto cm = classification_metrics(pred, y, mask);
  r.accuracy = cm.accuracy;
  r.f1 = cm.f1;
  const auto rates = positive_rates(pred, s, mask, nullptr);
  r.rate_s0 = rates.rate0;
  r.rate_s1 = rates.rate1;
  r.dp = std::abs(rates.rate0 - rates.rate1);
  r.eo = equality_of_opportunity(pred, y, s, mask);
  return r;
}

namespace {

// Integer heterogeneous/total degree sums; division happens only at the end so
// hom + het = total holds exactly.
struct DegreeSums {
  std::int64_t total = 0;
  std::int64_t heterogeneous = 0;
  std::size_t without_het = 0;
};

template <typename EdgeWeightFn>
DegreeSums degree_sums(std::size_t num_nodes, const std::vector<std::size_t>& offs,
                       const std::vector<NodeId>& cols, const SensitiveVector& s,
                       EdgeWeightFn weight) {
  DegreeSums out;
  for (std::size_t i = 0; i < num_nodes; ++i) {
    std::int64_t het = 0;
    for (std::size_t e = offs[i]; e < offs[i + 1]; ++e) {
      const std::int64_t w = weight(e);
      out.total += w;
      if (s[cols[e]] != s[i]) het += w;
    }
    out.heterogeneous += het;
    if (het == 0) ++out.without_het;
  }
  return out;
}

DegreeSums degree_sums(const Graph& g, const SensitiveVector& s) {
  return degree_sums(g.num_nodes, g.row_offsets, g.col_indices, s,
                     [](std::size_t) { return std::int64_t{1}; });
}

DegreeSums degree_sums(const AugmentedGraph& g, const SensitiveVector& s) {
  return degree_sums(g.num_nodes, g.row_offsets, g.col_indices, s,
                     [&](std::size_t e) { return g.weights[e]; });
}

}  // namespace

double avg_heterogeneous_degree(const Graph& g, const SensitiveVector& s) {
  if (g.num_nodes == 0) return 0.0;
  return static_cast<double>(degree_sums(g, s).heterogeneous) /
         static_cast<double>(g.num_nodes);
}

double avg_heterogeneous_degree(const AugmentedGraph& g, const SensitiveVector& s) {
  if (g.num_nodes == 0) return 0.0;
  return static_cast<double>(degree_sums(g, s).heterogeneous) /
         static_cast<double>(g.num_nodes);
}

std::size_t count_nodes_without_heterogeneous_neighbors(const Graph& g,
                                                        const SensitiveVector& s) {
  return degree_sums(g, s).without_het;
}

std::size_t count_nodes_without_heterogeneous_neighbors(const AugmentedGraph& g,
                                                        const SensitiveVector& s) {
  return degree_sums(g, s).without_het;
}

namespace {

template <typename G>
BiasDiagnostics diagnostics_impl(const G& g, const SensitiveVector& s) {
  const auto sums = degree_sums(g, s);
  BiasDiagnostics d;
  if (g.num_nodes > 0) {
    d.avg_degree = static_cast<double>(sums.total) / static_cast<double>(g.num_nodes);
    d.avg_heterogeneous_degree =
        static_cast<double>(sums.heterogeneous) / static_cast<double>(g.num_nodes);
  }
  d.nodes_without_heterogeneous_neighbors = sums.without_het;
  return d;
}

}  // namespace

BiasDiagnostics bias_diagnostics(const Graph& g, const SensitiveVector& s) {
  return diagnostics_impl(g, s);
}

BiasDiagnostics bias_diagnostics(const AugmentedGraph& g, const SensitiveVector& s) {
  return diagnostics_impl(g, s);
}

}  // namespace fairicd
