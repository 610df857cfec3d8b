#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairicd/dataset.hpp"
#include "fairicd/graph.hpp"

namespace fairicd {

struct AugmentedGraph;

// All values stored as fractions in [0,1]; the CLI scales DP/EO (and acc/F1)
// to percentages for table output.
struct MetricsReport {
  double accuracy = 0.0;
  double f1 = 0.0;
  double dp = 0.0;
  double eo = 0.0;
  double rate_s0 = 0.0;  // P(pred=1 | S=0) over the evaluated mask
  double rate_s1 = 0.0;

  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);
  // Single row in the "F1 Acc DP EO" column order, values as percentages.
  std::string markdown_row(const std::string& label) const;
  static std::string markdown_header();
};

struct BiasDiagnostics {
  double avg_degree = 0.0;
  double avg_heterogeneous_degree = 0.0;
  std::size_t nodes_without_heterogeneous_neighbors = 0;
};

// |P(pred=1 | S=0) - P(pred=1 | S=1)| over the mask; throws DataError when a
// group is empty (the metric is undefined, not zero).
double demographic_parity(const BinaryVector& pred, const SensitiveVector& s,
                          const Mask& mask);

// |P(pred=1 | Y=1, S=0) - P(pred=1 | Y=1, S=1)| over the mask; throws
// DataError when a group has no positive labels.
double equality_of_opportunity(const BinaryVector& pred, const LabelVector& y,
                               const SensitiveVector& s, const Mask& mask);

struct ClassificationMetrics {
  double accuracy = 0.0;
  double f1 = 0.0;  // positive class 1; 0 by convention when no TP exist
};

ClassificationMetrics classification_metrics(const BinaryVector& pred,
                                             const LabelVector& y, const Mask& mask);

MetricsReport full_report(const BinaryVector& pred, const LabelVector& y,
                          const SensitiveVector& s, const Mask& mask);

// Mean count of neighbors with a differing sensitive attribute (Table-2 style
// bias diagnostic). Weighted overload counts integer edge multiplicities.
double avg_heterogeneous_degree(const Graph& g, const SensitiveVector& s);
double avg_heterogeneous_degree(const AugmentedGraph& g, const SensitiveVector& s);

std::size_t count_nodes_without_heterogeneous_neighbors(const Graph& g,
                                                        const SensitiveVector& s);
std::size_t count_nodes_without_heterogeneous_neighbors(const AugmentedGraph& g,
                                                        const SensitiveVector& s);

BiasDiagnostics bias_diagnostics(const Graph& g, const SensitiveVector& s);
BiasDiagnostics bias_diagnostics(const AugmentedGraph& g, const SensitiveVector& s);

}  // namespace fairicd
