#pragma once

#include <cstdint>
#include <string>

#include "fairicd/dataset.hpp"
#include "fairicd/nn.hpp"

namespace fairicd {

// Sensitive-attribute discriminator: one hidden-layer MLP mapping the
// representation dimension to a single logit, with its own optimizer state so
// alternating updates cannot bleed into the encoder.
struct Discriminator {
  Mlp mlp;
  AdamState opt;
  AdamConfig opt_cfg;

  std::size_t repr_dim() const { return mlp.in_dim(); }

  // n x 1 logits for P(s=1 | z).
  Tensor forward(const Tensor& z) const;

  static Discriminator create(std::size_t repr_dim, std::size_t hidden_dim,
                              double lr, Rng& rng);
};

std::string discriminator_to_json(const Discriminator& disc);
Discriminator discriminator_from_json(const std::string& text);

// Mean BCE of the discriminator over mask rows plus its gradient with respect
// to the representations (the encoder ascent direction).
struct DiscriminatorEval {
  double loss = 0.0;
  Tensor grad_z;
};
DiscriminatorEval discriminator_input_grad(const Discriminator& disc, const Tensor& z,
                                           const SensitiveVector& s, const Mask& mask);

// One Adam update of the discriminator on detached representations; returns
// the loss evaluated before the update.
double discriminator_step(Discriminator& disc, const Tensor& z,
                          const SensitiveVector& s, const Mask& mask);

struct RoundResult {
  double l_cls = 0.0;
  double l_disc = 0.0;
};

// One alternating min-max round on the full graph:
//   (a) discriminator step on the current representations, detached;
//   (b) encoder/classifier step minimizing L_cls - lambda * L_d, with the
//       discriminator gradient flowing back through the representations.
// disc may be null (plain classification training); lambda == 0 skips the
// discriminator tap entirely so the encoder update is bitwise identical to
// vanilla training under the same seeds.
RoundResult adversarial_round(GnnModel& model, AdamState& model_opt,
                              const AdamConfig& model_cfg, Discriminator* disc,
                              const FeatureMatrix& x, const GraphOps& ops,
                              const LabelVector& y, const Mask& train_mask,
                              const SensitiveVector& s, const Mask& disc_mask,
                              double lambda, Rng* dropout_rng);

}  // namespace fairicd
