#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fairicd/augment.hpp"
#include "fairicd/nn.hpp"
#include "fairicd/tensor.hpp"

namespace fairicd {

// Configuration for the heterogeneous-aggregation regression stage. The MLP
// maps feature dim D back to D so its output can be added to the features.
struct UnbiasTrainConfig {
  double lr = 0.01;
  std::size_t epochs = 300;
  std::size_t hidden_dim = 0;  // 0 = feature dimension
  std::uint64_t seed = 0;
  Activation activation = Activation::relu;

  void validate() const;
};

using UnbiasMlp = Mlp;

// Weighted mean of neighbor features under the augmented adjacency. valid
// holds the nodes with positive total out-weight; targets rows outside valid
// are zero and excluded from the loss.
std::pair<FeatureMatrix, Mask> mean_aggregate_targets(const FeatureMatrix& x,
                                                      const AugmentedGraph& ag);

// Mean squared L2 distance between mlp(x_i) and target_i over valid nodes,
// with gradients for every MLP parameter.
struct UnbiasLoss {
  double loss = 0.0;
  Mlp::Grads grads;
};
UnbiasLoss unbias_loss_and_grads(const UnbiasMlp& mlp, const FeatureMatrix& x,
                                 const FeatureMatrix& targets, const Mask& valid);

// Full-batch Adam on the aggregation regression; deterministic per cfg.seed.
UnbiasMlp train_unbias_mlp(const FeatureMatrix& x, const AugmentedGraph& ag,
                           const UnbiasTrainConfig& cfg);

// X + mlp(X) over all nodes; identity when the MLP is all zeros.
FeatureMatrix debias_features(const FeatureMatrix& x, const UnbiasMlp& mlp);

std::string unbias_mlp_to_json(const UnbiasMlp& mlp, const UnbiasTrainConfig& cfg);
UnbiasMlp unbias_mlp_from_json(const std::string& text);

}  // namespace fairicd
