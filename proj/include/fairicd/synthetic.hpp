#pragma once

#include <cstdint>

#include "fairicd/dataset.hpp"

namespace fairicd {

// Desk-scale biased testbed. Two balanced sensitive groups; edges drawn with
// within-group probability proportional to `homophily`, damped by a Gaussian
// kernel on the label-margin gap (assortativity_scale) so neighbors are
// feature-similar, as in real graphs. Features carry a label-relevant
// direction w plus a group-aligned direction b scaled by `bias_strength`.
// Labels come from a noisy linear rule v.x with v ~ w + label_bias_mix * b,
// so the group channel is genuinely but only weakly predictive: a model that
// drops it loses almost no accuracy, while a model that leans on it
// (homophily amplifies it under aggregation) picks up a large
// demographic-parity gap.
struct SyntheticConfig {
  std::size_t n = 2000;
  double homophily = 0.9;
  double feature_signal = 1.0;
  double bias_strength = 0.6;
  double label_bias_mix = 0.3;
  std::size_t feature_dim = 16;
  double avg_degree = 10.0;
  double residual_scale = 0.5;
  double label_noise = 0.3;
  double assortativity_scale = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

// Splits are left empty; callers derive them per run seed.
Dataset generate_synthetic(const SyntheticConfig& cfg);

Dataset generate_synthetic(std::size_t n, double homophily, double feature_signal,
                           double bias_strength, std::uint64_t seed);

}  // namespace fairicd
