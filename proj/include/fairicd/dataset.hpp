#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairicd/graph.hpp"
#include "fairicd/tensor.hpp"

namespace fairicd {

using FeatureMatrix = Tensor;
using SensitiveVector = std::vector<std::uint8_t>;  // values in {0,1}
// Per-node class id in {0,1}; kMissingLabel marks unlabeled nodes.
using LabelVector = std::vector<std::int8_t>;
constexpr std::int8_t kMissingLabel = -1;

using Mask = std::vector<std::uint8_t>;
// Binary predictions / targets, one per node.
using BinaryVector = std::vector<std::uint8_t>;

struct SplitMasks {
  Mask train;
  Mask val;
  Mask test;
};

struct Dataset {
  Graph graph;
  FeatureMatrix features;
  SensitiveVector sensitive;
  LabelVector labels;
  SplitMasks splits;
  // Index of a feature column duplicating the sensitive attribute, if any;
  // counterfactual matching excludes it.
  std::optional<std::size_t> sensitive_col;
  // Original file ids in dense-id order; the remap table persisted next to
  // outputs. Empty for synthetic datasets (identity mapping).
  std::vector<std::int64_t> original_ids;
  std::vector<std::string> feature_names;

  std::size_t num_nodes() const { return graph.num_nodes; }
  std::size_t num_labeled() const;
  void validate() const;
};

struct NodeFileSchema {
  std::string id_col = "id";
  std::string sensitive_col = "sensitive";
  std::string label_col = "label";
  // Name of a feature column that duplicates the sensitive attribute.
  std::optional<std::string> sensitive_feature;
};

// Node file: CSV with header (id, feature columns, sensitive, label; label may
// be empty). Edge file: whitespace-separated "src dst" per line, '#' comments.
// Node ids may be arbitrary integers and are remapped to dense 0..N-1 in file
// order; edges are symmetrized and deduplicated, self-loops dropped.
Dataset load_dataset(const std::string& node_file, const std::string& edge_file,
                     const NodeFileSchema& schema = {});

// Inverse of load_dataset: node CSV plus "src dst" edge list (each undirected
// edge once). Feature values are written so a reload is bit-identical.
void save_dataset(const Dataset& ds, const std::string& node_file,
                  const std::string& edge_file);

// Included columns mapped to mean 0, population stdev 1 (zero-variance columns
// to all-zero); excluded columns unchanged.
FeatureMatrix standardize_features(const FeatureMatrix& x,
                                   const std::vector<std::size_t>& exclude = {});

struct SplitRatios {
  double train = 0.5;
  double val = 0.25;
  double test = 0.25;
};

// Deterministic per seed; assigns only labeled nodes.
SplitMasks make_splits(const Dataset& ds, const SplitRatios& ratios, std::uint64_t seed);

std::size_t count_mask(const Mask& m);
std::string splits_to_json(const SplitMasks& splits);
SplitMasks splits_from_json(const std::string& text, std::size_t num_nodes);

}  // namespace fairicd
