#include "fairicd/adversarial.hpp"

#include <utility>

#include <json.hpp>

#include "fairicd/errors.hpp"
#include "fairicd/serialize.hpp"

namespace fairicd {

Tensor Discriminator::forward(const Tensor& z) const {
  if (z.cols() != repr_dim()) throw NumericError("discriminator input width mismatch");
  Tensor logits = mlp.forward(z);
  check_finite(logits, "discriminator logits");
  return logits;
}

Discriminator Discriminator::create(std::size_t repr_dim, std::size_t hidden_dim,
                                    double lr, Rng& rng) {
  Discriminator d;
  d.mlp = Mlp::glorot(repr_dim, hidden_dim, 1, rng);
  d.opt_cfg.lr = lr;
  return d;
}

DiscriminatorEval discriminator_input_grad(const Discriminator& disc, const Tensor& z,
                                           const SensitiveVector& s, const Mask& mask) {
  Mlp::Trace tr;
  Tensor logits = disc.mlp.forward(z, tr);
  check_finite(logits, "discriminator logits");
  LossGrad lg = bce_with_logits(logits, s, mask);
  Mlp::Grads grads = disc.mlp.backward(tr, lg.grad, true);
  return {lg.loss, std::move(grads.input)};
}

double discriminator_step(Discriminator& disc, const Tensor& z,
                          const SensitiveVector& s, const Mask& mask) {
  Mlp::Trace tr;
  Tensor logits = disc.mlp.forward(z, tr);
  check_finite(logits, "discriminator logits");
  LossGrad lg = bce_with_logits(logits, s, mask);
  Mlp::Grads g = disc.mlp.backward(tr, lg.grad, false);
  std::vector<Tensor> grads;
  grads.push_back(std::move(g.w1));
  grads.push_back(std::move(g.b1));
  grads.push_back(std::move(g.w2));
  grads.push_back(std::move(g.b2));
  adam_step(disc.mlp.parameters(), grads, disc.opt, disc.opt_cfg);
  return lg.loss;
}

RoundResult adversarial_round(GnnModel& model, AdamState& model_opt,
                              const AdamConfig& model_cfg, Discriminator* disc,
                              const FeatureMatrix& x, const GraphOps& ops,
                              const LabelVector& y, const Mask& train_mask,
                              const SensitiveVector& s, const Mask& disc_mask,
                              double lambda, Rng* dropout_rng) {
  if (lambda < 0.0) throw ConfigError("lambda must be non-negative");

  ForwardTrace trace;
  Tensor logits = model.forward(x, ops, true, dropout_rng, trace);
  LossGrad cls = softmax_cross_entropy(logits, y, train_mask);

  RoundResult result;
  result.l_cls = cls.loss;

  if (disc != nullptr)
    result.l_disc = discriminator_step(*disc, trace.head_input, s, disc_mask);

  std::vector<Tensor> grads;
  if (disc != nullptr && lambda > 0.0) {
    // Encoder ascends the (freshly stepped) discriminator's loss through the
    // representations: objective L_cls - lambda * L_d.
    DiscriminatorEval ev = discriminator_input_grad(*disc, trace.head_input, s, disc_mask);
    Tensor extra = std::move(ev.grad_z);
    for (std::size_t i = 0; i < extra.size(); ++i) extra.raw()[i] *= -lambda;
    grads = model.backward(ops, trace, cls.grad, &extra);
  } else {
    grads = model.backward(ops, trace, cls.grad, nullptr);
  }
  adam_step(model.parameters(), grads, model_opt, model_cfg);
  return result;
}

std::string discriminator_to_json(const Discriminator& disc) {
  nlohmann::ordered_json j;
  j["kind"] = "discriminator";
  j["lr"] = disc.opt_cfg.lr;
  j["w1"] = tensor_to_json(disc.mlp.w1);
  j["b1"] = tensor_to_json(disc.mlp.b1);
  j["w2"] = tensor_to_json(disc.mlp.w2);
  j["b2"] = tensor_to_json(disc.mlp.b2);
  return j.dump(2) + "\n";
}

Discriminator discriminator_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("kind", "") != "discriminator") throw DataError("not a discriminator checkpoint");
  Discriminator d;
  d.opt_cfg.lr = j.at("lr").get<double>();
  d.mlp.w1 = tensor_from_json(j.at("w1"));
  d.mlp.b1 = tensor_from_json(j.at("b1"));
  d.mlp.w2 = tensor_from_json(j.at("w2"));
  d.mlp.b2 = tensor_from_json(j.at("b2"));
  return d;
}

}  // namespace fairicd
