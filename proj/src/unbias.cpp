#include "fairicd/unbias.hpp"

#include <json.hpp>

#include "fairicd/errors.hpp"
#include "fairicd/kernels.hpp"
#include "fairicd/serialize.hpp"

namespace fairicd {

void UnbiasTrainConfig::validate() const {
  if (lr <= 0.0) throw ConfigError("unbias learning rate must be positive");
}

std::pair<FeatureMatrix, Mask> mean_aggregate_targets(const FeatureMatrix& x,
                                                      const AugmentedGraph& ag) {
  if (x.rows() != ag.num_nodes) throw DataError("aggregate targets size mismatch");
  FeatureMatrix targets(x.rows(), x.cols());
  Mask valid(x.rows(), 0);
  for (std::size_t i = 0; i < ag.num_nodes; ++i) {
    const std::int64_t total = ag.out_weight(i);
    if (total <= 0) continue;
    valid[i] = 1;
    double* trow = targets.row(i);
    for (std::size_t e = ag.row_offsets[i]; e < ag.row_offsets[i + 1]; ++e) {
      const double w = static_cast<double>(ag.weights[e]);
      const double* xrow = x.row(ag.col_indices[e]);
      for (std::size_t j = 0; j < x.cols(); ++j) trow[j] += w * xrow[j];
    }
    const double inv = 1.0 / static_cast<double>(total);
    for (std::size_t j = 0; j < x.cols(); ++j) trow[j] *= inv;
  }
  return {std::move(targets), std::move(valid)};
}

UnbiasLoss unbias_loss_and_grads(const UnbiasMlp& mlp, const FeatureMatrix& x,
                                 const FeatureMatrix& targets, const Mask& valid) {
  const std::size_t n_valid = count_mask(valid);
  if (n_valid == 0) throw DataError("no valid nodes for unbias loss");

  Mlp::Trace tr;
  Tensor out = mlp.forward(x, tr);
  if (!out.same_shape(targets)) throw NumericError("unbias target shape mismatch");

  UnbiasLoss result;
  Tensor grad_out(out.rows(), out.cols());
  const double inv = 1.0 / static_cast<double>(n_valid);
  double loss = 0.0;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    if (!valid[i]) continue;
    const double* orow = out.row(i);
    const double* trow = targets.row(i);
    double* grow = grad_out.row(i);
    for (std::size_t j = 0; j < out.cols(); ++j) {
      const double d = orow[j] - trow[j];
      loss += d * d;
      grow[j] = 2.0 * d * inv;
    }
  }
  result.loss = loss * inv;
  check_finite(result.loss, "unbias loss");
  result.grads = mlp.backward(tr, grad_out, false);
  return result;
}

UnbiasMlp train_unbias_mlp(const FeatureMatrix& x, const AugmentedGraph& ag,
                           const UnbiasTrainConfig& cfg) {
  cfg.validate();
  auto [targets, valid] = mean_aggregate_targets(x, ag);
  if (count_mask(valid) == 0) throw DataError("unbias training: every node is isolated");

  const std::size_t d = x.cols();
  const std::size_t hidden = cfg.hidden_dim == 0 ? d : cfg.hidden_dim;
  Rng rng = Rng::derive(cfg.seed, "unbias_init");
  UnbiasMlp mlp = Mlp::glorot(d, hidden, d, rng, cfg.activation);

  AdamState opt;
  AdamConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  auto params = mlp.parameters();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    UnbiasLoss lg = unbias_loss_and_grads(mlp, x, targets, valid);
    std::vector<Tensor> grads;
    grads.push_back(std::move(lg.grads.w1));
    grads.push_back(std::move(lg.grads.b1));
    grads.push_back(std::move(lg.grads.w2));
    grads.push_back(std::move(lg.grads.b2));
    adam_step(params, grads, opt, opt_cfg);
  }
  return mlp;
}

FeatureMatrix debias_features(const FeatureMatrix& x, const UnbiasMlp& mlp) {
  if (mlp.in_dim() != x.cols() || mlp.out_dim() != x.cols())
    throw NumericError("debias dimensions disagree");
  Tensor delta = mlp.forward(x);
  FeatureMatrix out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out.raw()[i] += delta.raw()[i];
  check_finite(out, "debias features");
  return out;
}

std::string unbias_mlp_to_json(const UnbiasMlp& mlp, const UnbiasTrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["kind"] = "unbias_mlp";
  j["activation"] = mlp.act == Activation::relu ? "relu" : "identity";
  j["cfg"] = {{"lr", cfg.lr},
              {"epochs", cfg.epochs},
              {"hidden_dim", cfg.hidden_dim},
              {"seed", cfg.seed}};
  j["w1"] = tensor_to_json(mlp.w1);
  j["b1"] = tensor_to_json(mlp.b1);
  j["w2"] = tensor_to_json(mlp.w2);
  j["b2"] = tensor_to_json(mlp.b2);
  return j.dump(2) + "\n";
}

UnbiasMlp unbias_mlp_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("kind", "") != "unbias_mlp") throw DataError("not an unbias MLP checkpoint");
  UnbiasMlp mlp;
  mlp.act = j.at("activation").get<std::string>() == "relu" ? Activation::relu
                                                            : Activation::identity;
  mlp.w1 = tensor_from_json(j.at("w1"));
  mlp.b1 = tensor_from_json(j.at("b1"));
  mlp.w2 = tensor_from_json(j.at("w2"));
  mlp.b2 = tensor_from_json(j.at("b2"));
  return mlp;
}

}  // namespace fairicd
