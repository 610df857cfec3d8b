#include "fairicd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>

#include <json.hpp>

#include "fairicd/errors.hpp"
#include "fairicd/rng.hpp"
#include "fairicd/serialize.hpp"

namespace fairicd {

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::vanilla: return "vanilla";
    case Strategy::edge_drop: return "edge_drop";
    case Strategy::feature_mask: return "feature_mask";
    case Strategy::fair_icd: return "fair_icd";
  }
  return "?";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "vanilla") return Strategy::vanilla;
  if (name == "edge_drop") return Strategy::edge_drop;
  if (name == "feature_mask") return Strategy::feature_mask;
  if (name == "fair_icd") return Strategy::fair_icd;
  throw ConfigError("unknown strategy: " + name);
}

void ExperimentConfig::validate() const {
  if (k == 0) throw ConfigError("k must be at least 1");
  if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
  if (lr <= 0.0) throw ConfigError("learning rate must be positive");
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (seeds.empty()) throw ConfigError("at least one seed required");
  if (hidden_dim == 0) throw ConfigError("hidden_dim must be at least 1");
  if (num_layers == 0) throw ConfigError("num_layers must be at least 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
  if (drop_p < 0.0 || drop_p > 1.0) throw ConfigError("drop_p must be in [0,1]");
  if (mask_p < 0.0 || mask_p > 1.0) throw ConfigError("mask_p must be in [0,1]");
  if (disc_hidden == 0) throw ConfigError("disc_hidden must be at least 1");
  if (disc_lr <= 0.0) throw ConfigError("disc_lr must be positive");
  if (ratios.train <= 0.0 || ratios.val <= 0.0 || ratios.test <= 0.0)
    throw ConfigError("split ratios must be positive");
  if (ratios.train + ratios.val + ratios.test > 1.0 + 1e-12)
    throw ConfigError("split ratios must sum to at most 1");
  unbias.validate();
}

namespace {

nlohmann::ordered_json config_to_json_obj(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["backbone"] = layer_kind_name(cfg.backbone);
  j["strategy"] = strategy_name(cfg.strategy);
  j["k"] = cfg.k;
  j["lambda"] = cfg.lambda;
  j["lr"] = cfg.lr;
  j["epochs"] = cfg.epochs;
  j["seeds"] = cfg.seeds;
  j["split"] = {{"train", cfg.ratios.train}, {"val", cfg.ratios.val}, {"test", cfg.ratios.test}};
  j["hidden_dim"] = cfg.hidden_dim;
  j["num_layers"] = cfg.num_layers;
  j["dropout"] = cfg.dropout;
  j["patience"] = cfg.patience;
  j["drop_p"] = cfg.drop_p;
  j["mask_p"] = cfg.mask_p;
  j["disc_hidden"] = cfg.disc_hidden;
  j["disc_lr"] = cfg.disc_lr;
  j["unbias"] = {{"lr", cfg.unbias.lr},
                 {"epochs", cfg.unbias.epochs},
                 {"hidden_dim", cfg.unbias.hidden_dim}};
  j["zero_unbias_mlp"] = cfg.zero_unbias_mlp;
  return j;
}

void apply_config_obj(ExperimentConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "backbone") {
        cfg.backbone = layer_kind_from_name(value.get<std::string>());
      } else if (key == "strategy") {
        cfg.strategy = strategy_from_name(value.get<std::string>());
      } else if (key == "k") {
        cfg.k = value.get<std::size_t>();
      } else if (key == "lambda") {
        cfg.lambda = value.get<double>();
      } else if (key == "lr") {
        cfg.lr = value.get<double>();
      } else if (key == "epochs") {
        cfg.epochs = value.get<std::size_t>();
      } else if (key == "seeds") {
        cfg.seeds = value.get<std::vector<std::uint64_t>>();
      } else if (key == "split") {
        for (const auto& [rk, rv] : value.items()) {
          if (rk == "train") cfg.ratios.train = rv.get<double>();
          else if (rk == "val") cfg.ratios.val = rv.get<double>();
          else if (rk == "test") cfg.ratios.test = rv.get<double>();
          else throw ConfigError("unknown split key: " + rk);
        }
      } else if (key == "hidden_dim") {
        cfg.hidden_dim = value.get<std::size_t>();
      } else if (key == "num_layers") {
        cfg.num_layers = value.get<std::size_t>();
      } else if (key == "dropout") {
        cfg.dropout = value.get<double>();
      } else if (key == "patience") {
        cfg.patience = value.get<std::size_t>();
      } else if (key == "drop_p") {
        cfg.drop_p = value.get<double>();
      } else if (key == "mask_p") {
        cfg.mask_p = value.get<double>();
      } else if (key == "disc_hidden") {
        cfg.disc_hidden = value.get<std::size_t>();
      } else if (key == "disc_lr") {
        cfg.disc_lr = value.get<double>();
      } else if (key == "unbias") {
        for (const auto& [uk, uv] : value.items()) {
          if (uk == "lr") cfg.unbias.lr = uv.get<double>();
          else if (uk == "epochs") cfg.unbias.epochs = uv.get<std::size_t>();
          else if (uk == "hidden_dim") cfg.unbias.hidden_dim = uv.get<std::size_t>();
          else throw ConfigError("unknown unbias key: " + uk);
        }
      } else if (key == "zero_unbias_mlp") {
        cfg.zero_unbias_mlp = value.get<bool>();
      } else {
        throw ConfigError("unknown config key: " + key);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("bad value for config key '" + key + "': " + e.what());
    }
  }
}

std::string fmt_g17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_hash(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t parse_hash(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

}  // namespace

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  return config_to_json_obj(cfg).dump(2) + "\n";
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  ExperimentConfig cfg;
  apply_config_json(cfg, text);
  return cfg;
}

void apply_config_json(ExperimentConfig& cfg, const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  apply_config_obj(cfg, j);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string dump = config_to_json_obj(cfg).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

PreparedInputs prepare_inputs(const Dataset& ds, const ExperimentConfig& cfg,
                              std::uint64_t seed, const UnbiasMlp* pretrained) {
  cfg.validate();
  ds.validate();

  std::vector<std::size_t> exclude;
  if (ds.sensitive_col) exclude.push_back(*ds.sensitive_col);

  PreparedInputs prep;
  prep.x = standardize_features(ds.features, exclude);
  prep.graph = ds.graph;

  switch (cfg.strategy) {
    case Strategy::vanilla:
      break;
    case Strategy::edge_drop:
      prep.graph = edge_drop(ds.graph, cfg.drop_p, seed);
      break;
    case Strategy::feature_mask:
      prep.x = feature_mask(prep.x, cfg.mask_p, seed);
      break;
    case Strategy::fair_icd: {
      if (pretrained != nullptr) {
        prep.unbias_mlp = *pretrained;
        prep.x = debias_features(prep.x, *prep.unbias_mlp);
        break;
      }
      prep.cf = find_counterfactuals(prep.x, ds.sensitive, cfg.k, exclude);
      if (prep.cf->num_resolved() == 0) {
        prep.warnings.push_back(
            "no counterfactual found for any node; falling back to vanilla training");
        prep.vanilla_fallback = true;
        break;
      }
      prep.augmented = augment_graph(ds.graph, ds.sensitive, *prep.cf);
      if (cfg.zero_unbias_mlp) {
        const std::size_t d = prep.x.cols();
        const std::size_t hidden = cfg.unbias.hidden_dim == 0 ? d : cfg.unbias.hidden_dim;
        prep.unbias_mlp = Mlp::zeros(d, hidden, d, cfg.unbias.activation);
      } else {
        UnbiasTrainConfig ucfg = cfg.unbias;
        ucfg.seed = seed;
        prep.unbias_mlp = train_unbias_mlp(prep.x, *prep.augmented, ucfg);
      }
      prep.x = debias_features(prep.x, *prep.unbias_mlp);
      break;
    }
  }
  return prep;
}

std::string train_log_to_csv(const std::vector<TrainLogRow>& rows) {
  std::string out = "epoch,l_cls,l_d,val_acc,val_dp\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epoch);
    out += ',';
    out += fmt_g17(r.l_cls);
    out += ',';
    out += fmt_g17(r.l_d);
    out += ',';
    out += fmt_g17(r.val_acc);
    out += ',';
    out += fmt_g17(r.val_dp);
    out += '\n';
  }
  return out;
}

namespace {

// Shared stage-2 loop: alternating rounds with optional discriminator, early
// stopping on validation accuracy, best-checkpoint restore.
void run_training(ModelBundle& bundle, const Dataset& ds, bool with_disc) {
  const ExperimentConfig& cfg = bundle.cfg;
  const double lambda = with_disc ? cfg.lambda : 0.0;
  const GraphOps ops = GraphOps::build(bundle.graph);

  Rng init_rng = Rng::derive(bundle.seed, "model");
  bundle.model = make_model(cfg.backbone, bundle.features.cols(), cfg.hidden_dim,
                            cfg.num_layers, 2, cfg.dropout, init_rng);
  if (with_disc) {
    Rng disc_rng = Rng::derive(bundle.seed, "disc");
    bundle.disc = Discriminator::create(bundle.model.representation_dim(),
                                        cfg.disc_hidden, cfg.disc_lr, disc_rng);
  }

  Rng dropout_rng = Rng::derive(bundle.seed, "dropout");
  AdamState opt;
  AdamConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  const Mask all_nodes(ds.num_nodes(), 1);

  auto params = bundle.model.parameters();
  std::vector<Tensor> best_params;
  double best_val = -1.0;
  std::size_t best_epoch = 0;
  std::size_t stale = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    RoundResult rr = adversarial_round(
        bundle.model, opt, opt_cfg, with_disc ? &*bundle.disc : nullptr, bundle.features,
        ops, ds.labels, bundle.splits.train, ds.sensitive, all_nodes, lambda,
        &dropout_rng);

    const Tensor logits = bundle.model.forward_eval(bundle.features, ops);
    const BinaryVector pred = predict_argmax(logits);
    const double val_acc =
        classification_metrics(pred, ds.labels, bundle.splits.val).accuracy;
    double val_dp = std::numeric_limits<double>::quiet_NaN();
    try {
      val_dp = demographic_parity(pred, ds.sensitive, bundle.splits.val);
    } catch (const DataError&) {
      // undefined on this validation slice; logged as nan
    }
    bundle.log.push_back({epoch, rr.l_cls, rr.l_disc, val_acc, val_dp});

    if (val_acc > best_val) {
      best_val = val_acc;
      best_epoch = epoch;
      best_params.clear();
      for (const Tensor* p : params) best_params.push_back(*p);
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }

  for (std::size_t i = 0; i < params.size(); ++i) *params[i] = best_params[i];
  bundle.best_epoch = best_epoch;
  bundle.best_val_acc = best_val;
}

ModelBundle make_bundle(const Dataset& ds, const ExperimentConfig& cfg,
                        std::uint64_t seed, PreparedInputs&& prep) {
  ModelBundle bundle;
  bundle.cfg = cfg;
  bundle.seed = seed;
  bundle.hash = config_hash(cfg);
  bundle.vanilla_fallback = prep.vanilla_fallback;
  bundle.unbias_mlp = std::move(prep.unbias_mlp);
  bundle.features = std::move(prep.x);
  bundle.graph = std::move(prep.graph);
  bundle.warnings = std::move(prep.warnings);
  bundle.splits = make_splits(ds, cfg.ratios, seed);
  return bundle;
}

}  // namespace

ModelBundle train_fair_icd(const Dataset& ds, const ExperimentConfig& cfg,
                           std::uint64_t seed) {
  if (cfg.strategy != Strategy::fair_icd)
    throw ConfigError("train_fair_icd requires strategy fair_icd");
  ModelBundle bundle = make_bundle(ds, cfg, seed, prepare_inputs(ds, cfg, seed));
  run_training(bundle, ds, !bundle.vanilla_fallback);
  return bundle;
}

ModelBundle train_baseline(const Dataset& ds, const ExperimentConfig& cfg,
                           std::uint64_t seed) {
  if (cfg.strategy == Strategy::fair_icd)
    throw ConfigError("train_baseline cannot run strategy fair_icd");
  ModelBundle bundle = make_bundle(ds, cfg, seed, prepare_inputs(ds, cfg, seed));
  run_training(bundle, ds, false);
  return bundle;
}

ModelBundle train_strategy(const Dataset& ds, const ExperimentConfig& cfg,
                           std::uint64_t seed) {
  return cfg.strategy == Strategy::fair_icd ? train_fair_icd(ds, cfg, seed)
                                            : train_baseline(ds, cfg, seed);
}

MetricsReport evaluate(const ModelBundle& bundle, const Dataset& ds) {
  const GraphOps ops = GraphOps::build(bundle.graph);
  const Tensor logits = bundle.model.forward_eval(bundle.features, ops);
  const BinaryVector pred = predict_argmax(logits);
  return full_report(pred, ds.labels, ds.sensitive, bundle.splits.test);
}

void aggregate_reports(const std::vector<MetricsReport>& reports, MetricsReport& mean,
                       MetricsReport& stddev) {
  if (reports.empty()) throw ConfigError("nothing to aggregate");
  const auto fields = {&MetricsReport::accuracy, &MetricsReport::f1, &MetricsReport::dp,
                       &MetricsReport::eo,       &MetricsReport::rate_s0,
                       &MetricsReport::rate_s1};
  const double n = static_cast<double>(reports.size());
  for (auto f : fields) {
    double sum = 0.0;
    for (const auto& r : reports) sum += r.*f;
    const double mu = sum / n;
    double sq = 0.0;
    for (const auto& r : reports) {
      const double d = r.*f - mu;
      sq += d * d;
    }
    mean.*f = mu;
    stddev.*f = reports.size() < 2 ? 0.0 : std::sqrt(sq / (n - 1.0));
  }
}

ExperimentResult run_experiment(const Dataset& ds, const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  result.cfg = cfg;
  result.hash = config_hash(cfg);
  for (std::uint64_t seed : cfg.seeds) {
    ModelBundle bundle = train_strategy(ds, cfg, seed);
    result.seeds.push_back(seed);
    result.per_seed.push_back(evaluate(bundle, ds));
    for (const auto& w : bundle.warnings)
      result.warnings.push_back("seed " + std::to_string(seed) + ": " + w);
  }
  aggregate_reports(result.per_seed, result.mean, result.stddev);
  result.single_seed = result.per_seed.size() < 2;
  return result;
}

namespace {

nlohmann::ordered_json report_to_obj(const MetricsReport& r) {
  return nlohmann::ordered_json::parse(r.to_json());
}

MetricsReport report_from_obj(const nlohmann::json& j) {
  return MetricsReport::from_json(j.dump());
}

}  // namespace

std::string experiment_result_to_json(const ExperimentResult& r) {
  nlohmann::ordered_json j;
  j["kind"] = "experiment_result";
  j["config"] = config_to_json_obj(r.cfg);
  j["config_hash"] = fmt_hash(r.hash);
  j["seeds"] = r.seeds;
  j["per_seed"] = nlohmann::ordered_json::array();
  for (const auto& m : r.per_seed) j["per_seed"].push_back(report_to_obj(m));
  j["mean"] = report_to_obj(r.mean);
  j["std"] = report_to_obj(r.stddev);
  j["single_seed"] = r.single_seed;
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

ExperimentResult experiment_result_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("result file is not valid JSON: ") + e.what());
  }
  if (j.value("kind", "") != "experiment_result")
    throw DataError("not an experiment result file");
  ExperimentResult r;
  ExperimentConfig cfg;
  apply_config_obj(cfg, j.at("config"));
  r.cfg = cfg;
  r.hash = parse_hash(j.at("config_hash").get<std::string>());
  r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  for (const auto& m : j.at("per_seed")) r.per_seed.push_back(report_from_obj(m));
  r.mean = report_from_obj(j.at("mean"));
  r.stddev = report_from_obj(j.at("std"));
  r.single_seed = j.value("single_seed", r.per_seed.size() < 2);
  if (j.contains("warnings")) r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

std::string experiment_markdown_row(const std::string& label, const ExperimentResult& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "| %s | %.2f±%.2f | %.2f±%.2f | %.2f±%.2f | %.2f±%.2f |",
                label.c_str(), 100.0 * r.mean.f1, 100.0 * r.stddev.f1,
                100.0 * r.mean.accuracy, 100.0 * r.stddev.accuracy, 100.0 * r.mean.dp,
                100.0 * r.stddev.dp, 100.0 * r.mean.eo, 100.0 * r.stddev.eo);
  return buf;
}

namespace {

nlohmann::ordered_json model_to_obj(const GnnModel& model) {
  nlohmann::ordered_json j;
  j["dropout"] = model.dropout;
  j["layers"] = nlohmann::ordered_json::array();
  for (const auto& layer : model.layers) {
    nlohmann::ordered_json lj;
    lj["kind"] = layer_kind_name(layer.kind);
    lj["in_dim"] = layer.in_dim;
    lj["out_dim"] = layer.out_dim;
    lj["w1"] = tensor_to_json(layer.w1);
    lj["b1"] = tensor_to_json(layer.b1);
    lj["w2"] = tensor_to_json(layer.w2);
    lj["b2"] = tensor_to_json(layer.b2);
    j["layers"].push_back(std::move(lj));
  }
  return j;
}

GnnModel model_from_obj(const nlohmann::json& j) {
  GnnModel model;
  model.dropout = j.at("dropout").get<double>();
  for (const auto& lj : j.at("layers")) {
    LayerParams layer;
    layer.kind = layer_kind_from_name(lj.at("kind").get<std::string>());
    layer.in_dim = lj.at("in_dim").get<std::size_t>();
    layer.out_dim = lj.at("out_dim").get<std::size_t>();
    layer.w1 = tensor_from_json(lj.at("w1"));
    layer.b1 = tensor_from_json(lj.at("b1"));
    layer.w2 = tensor_from_json(lj.at("w2"));
    layer.b2 = tensor_from_json(lj.at("b2"));
    model.layers.push_back(std::move(layer));
  }
  if (model.layers.empty()) throw DataError("checkpoint has no layers");
  return model;
}

}  // namespace

std::string bundle_to_json(const ModelBundle& bundle) {
  nlohmann::ordered_json j;
  j["kind"] = "fairicd_checkpoint";
  j["config"] = config_to_json_obj(bundle.cfg);
  j["config_hash"] = fmt_hash(bundle.hash);
  j["seed"] = bundle.seed;
  j["vanilla_fallback"] = bundle.vanilla_fallback;
  j["best_epoch"] = bundle.best_epoch;
  j["best_val_acc"] = bundle.best_val_acc;
  j["splits"] = nlohmann::ordered_json::parse(splits_to_json(bundle.splits));
  j["model"] = model_to_obj(bundle.model);
  if (bundle.disc)
    j["disc"] = nlohmann::ordered_json::parse(discriminator_to_json(*bundle.disc));
  else
    j["disc"] = nullptr;
  if (bundle.unbias_mlp) {
    UnbiasTrainConfig ucfg = bundle.cfg.unbias;
    ucfg.seed = bundle.seed;
    j["unbias_mlp"] =
        nlohmann::ordered_json::parse(unbias_mlp_to_json(*bundle.unbias_mlp, ucfg));
  } else {
    j["unbias_mlp"] = nullptr;
  }
  j["warnings"] = bundle.warnings;
  return j.dump(2) + "\n";
}

ModelBundle bundle_from_json(const std::string& text, const Dataset& ds) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (j.value("kind", "") != "fairicd_checkpoint") throw DataError("not a checkpoint file");

  ModelBundle bundle;
  ExperimentConfig cfg;
  apply_config_obj(cfg, j.at("config"));
  bundle.cfg = cfg;
  bundle.seed = j.at("seed").get<std::uint64_t>();
  bundle.hash = parse_hash(j.at("config_hash").get<std::string>());
  bundle.vanilla_fallback = j.value("vanilla_fallback", false);
  bundle.best_epoch = j.value("best_epoch", std::size_t{0});
  bundle.best_val_acc = j.value("best_val_acc", 0.0);
  bundle.model = model_from_obj(j.at("model"));
  if (j.contains("disc") && !j.at("disc").is_null())
    bundle.disc = discriminator_from_json(j.at("disc").dump());
  if (j.contains("unbias_mlp") && !j.at("unbias_mlp").is_null())
    bundle.unbias_mlp = unbias_mlp_from_json(j.at("unbias_mlp").dump());
  bundle.splits = splits_from_json(j.at("splits").dump(), ds.num_nodes());

  // Rebuild the model inputs; a stored MLP short-circuits the regression
  // stage, and a recorded fallback reproduces the vanilla inputs.
  ExperimentConfig prep_cfg = cfg;
  if (bundle.vanilla_fallback && !bundle.unbias_mlp)
    prep_cfg.strategy = Strategy::vanilla;
  PreparedInputs prep = prepare_inputs(
      ds, prep_cfg, bundle.seed,
      bundle.unbias_mlp ? &*bundle.unbias_mlp : nullptr);
  bundle.features = std::move(prep.x);
  bundle.graph = std::move(prep.graph);
  bundle.warnings = std::move(prep.warnings);

  if (bundle.model.layers.front().in_dim != bundle.features.cols())
    throw DataError("checkpoint model width does not match dataset features");
  return bundle;
}

}  // namespace fairicd
