#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairicd/adversarial.hpp"
#include "fairicd/augment.hpp"
#include "fairicd/dataset.hpp"
#include "fairicd/metrics.hpp"
#include "fairicd/nn.hpp"
#include "fairicd/unbias.hpp"

namespace fairicd {

enum class Strategy { vanilla, edge_drop, feature_mask, fair_icd };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);  // ConfigError on unknown

// Everything a training run depends on. Defaults follow the documented
// experiment protocol: two-layer backbone (one aggregation layer plus a dense
// head), hidden width 16, dropout 0.5, Adam, early stopping on validation
// accuracy with patience 30, seeds {0..4}.
struct ExperimentConfig {
  LayerKind backbone = LayerKind::gcn;
  Strategy strategy = Strategy::vanilla;
  std::size_t k = 10;        // counterfactual top-k gate
  double lambda = 1.0;       // adversary coefficient
  double lr = 0.01;
  std::size_t epochs = 300;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  SplitRatios ratios;

  std::size_t hidden_dim = 16;
  std::size_t num_layers = 1;  // aggregation layers before the dense head
  double dropout = 0.5;
  std::size_t patience = 30;

  double drop_p = 0.3;  // edge_drop strategy
  double mask_p = 0.3;  // feature_mask strategy

  std::size_t disc_hidden = 16;
  double disc_lr = 0.05;
  UnbiasTrainConfig unbias;  // unbias.seed is overridden by the run seed

  // Test knob: substitute an all-zero frozen debiasing MLP (debias becomes
  // the identity) instead of training one.
  bool zero_unbias_mlp = false;

  void validate() const;
};

std::string experiment_config_to_json(const ExperimentConfig& cfg);
// Strict: unknown keys are ConfigErrors so typos fail fast.
ExperimentConfig experiment_config_from_json(const std::string& text);
void apply_config_json(ExperimentConfig& cfg, const std::string& text);

// FNV-1a over the canonical JSON form; stamped into every artifact.
std::uint64_t config_hash(const ExperimentConfig& cfg);

// Model inputs after the strategy's transforms. fair_icd produces debiased
// features but trains on the original graph; the augmented graph only defines
// the aggregation-regression targets.
struct PreparedInputs {
  FeatureMatrix x;
  Graph graph;
  std::optional<CounterfactualMap> cf;
  std::optional<AugmentedGraph> augmented;
  std::optional<UnbiasMlp> unbias_mlp;
  bool vanilla_fallback = false;
  std::vector<std::string> warnings;
};

// Deterministic per (ds, cfg, seed). Passing a pretrained MLP (checkpoint
// reload) skips the regression stage.
PreparedInputs prepare_inputs(const Dataset& ds, const ExperimentConfig& cfg,
                              std::uint64_t seed, const UnbiasMlp* pretrained = nullptr);

struct TrainLogRow {
  std::size_t epoch = 0;
  double l_cls = 0.0;
  double l_d = 0.0;
  double val_acc = 0.0;
  double val_dp = 0.0;  // NaN when undefined on the validation slice
};

std::string train_log_to_csv(const std::vector<TrainLogRow>& rows);

struct ModelBundle {
  ExperimentConfig cfg;
  std::uint64_t seed = 0;
  std::uint64_t hash = 0;
  bool vanilla_fallback = false;

  GnnModel model;
  std::optional<Discriminator> disc;
  std::optional<UnbiasMlp> unbias_mlp;
  SplitMasks splits;

  // Inputs the model was trained on (post strategy transforms); evaluation
  // reuses them so train and eval see the same graph and features.
  FeatureMatrix features;
  Graph graph;

  std::vector<TrainLogRow> log;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
  std::vector<std::string> warnings;
};

// Two-stage run: counterfactual matching, rewiring, and the frozen debiasing
// MLP first; then backbone + discriminator via alternating rounds. Falls back
// to vanilla training (with a logged warning) when no counterfactual exists.
ModelBundle train_fair_icd(const Dataset& ds, const ExperimentConfig& cfg,
                           std::uint64_t seed);

// vanilla trains the backbone directly; edge_drop / feature_mask apply their
// transform once, then train vanilla on the transformed inputs.
ModelBundle train_baseline(const Dataset& ds, const ExperimentConfig& cfg,
                           std::uint64_t seed);

// Dispatch on cfg.strategy.
ModelBundle train_strategy(const Dataset& ds, const ExperimentConfig& cfg,
                           std::uint64_t seed);

// Argmax predictions on the bundle's inputs, metrics over the test mask.
MetricsReport evaluate(const ModelBundle& bundle, const Dataset& ds);

struct ExperimentResult {
  ExperimentConfig cfg;
  std::uint64_t hash = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<MetricsReport> per_seed;
  MetricsReport mean;
  MetricsReport stddev;  // sample std (n-1); zero with single_seed flag for one seed
  bool single_seed = false;
  std::vector<std::string> warnings;
};

ExperimentResult run_experiment(const Dataset& ds, const ExperimentConfig& cfg);

// Metric-wise mean and sample standard deviation in seed order.
void aggregate_reports(const std::vector<MetricsReport>& reports, MetricsReport& mean,
                       MetricsReport& stddev);

std::string experiment_result_to_json(const ExperimentResult& r);
ExperimentResult experiment_result_from_json(const std::string& text);

// "| label | f1 | acc | dp | eo |" row with mean±std percentages, two
// decimals, matching the report table layout.
std::string experiment_markdown_row(const std::string& label, const ExperimentResult& r);

// Full checkpoint: config echo + hash, seed, splits, model, discriminator and
// debiasing MLP when present.
std::string bundle_to_json(const ModelBundle& bundle);
// Rebuilds the runtime bundle; prepared inputs are recomputed from ds (the
// stored MLP is reused rather than retrained).
ModelBundle bundle_from_json(const std::string& text, const Dataset& ds);

}  // namespace fairicd
