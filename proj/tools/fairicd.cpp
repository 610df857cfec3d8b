// Command-line driver: counterfactual augmentation diagnostics, training,
// evaluation, strategy ablations, and report merging. All outputs land inside
// --out and are byte-stable for a fixed seed.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairicd/augment.hpp"
#include "fairicd/dataset.hpp"
#include "fairicd/errors.hpp"
#include "fairicd/metrics.hpp"
#include "fairicd/pipeline.hpp"

namespace fs = std::filesystem;
using namespace fairicd;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << content;
  if (!out) throw DataError("write failed: " + path.string());
}

struct CommonArgs {
  std::string nodes;
  std::string edges;
  std::string config_path;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> backbone;
  std::optional<std::string> strategy;
  std::optional<std::size_t> k;
  std::optional<double> lambda;
};

void add_dataset_flags(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--nodes", a.nodes, "Node CSV (id, features, sensitive, label)")
      ->required();
  cmd->add_option("--edges", a.edges, "Edge list file (src dst per line)")->required();
}

void add_out_flag(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--out", a.out_dir, "Output directory")->required();
}

void add_config_flags(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "JSON config file");
  cmd->add_option("--seed", a.seeds, "Seed override (repeatable)");
  cmd->add_option("--backbone", a.backbone, "gcn | gin | sage");
  cmd->add_option("--strategy", a.strategy,
                  "vanilla | edge_drop | feature_mask | fair_icd");
  cmd->add_option("--k", a.k, "Counterfactual top-k gate");
  cmd->add_option("--lambda", a.lambda, "Adversary coefficient");
}

// Config file first, then flag overrides; the effective config is echoed into
// every artifact.
ExperimentConfig effective_config(const CommonArgs& a) {
  ExperimentConfig cfg;
  if (!a.config_path.empty()) apply_config_json(cfg, read_file(a.config_path));
  if (a.backbone) cfg.backbone = layer_kind_from_name(*a.backbone);
  if (a.strategy) cfg.strategy = strategy_from_name(*a.strategy);
  if (a.k) cfg.k = *a.k;
  if (a.lambda) cfg.lambda = *a.lambda;
  if (!a.seeds.empty()) cfg.seeds = a.seeds;
  cfg.validate();
  return cfg;
}

fs::path ensure_out_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw DataError("cannot create output directory: " + dir);
  return p;
}

std::string id_map_csv(const Dataset& ds) {
  std::string out = "dense_id,original_id\n";
  for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
    const std::int64_t orig =
        i < ds.original_ids.size() ? ds.original_ids[i] : static_cast<std::int64_t>(i);
    out += std::to_string(i);
    out += ',';
    out += std::to_string(orig);
    out += '\n';
  }
  return out;
}

nlohmann::ordered_json diag_to_json(const BiasDiagnostics& d) {
  nlohmann::ordered_json j;
  j["avg_degree"] = d.avg_degree;
  j["avg_heterogeneous_degree"] = d.avg_heterogeneous_degree;
  j["nodes_without_heterogeneous_neighbors"] = d.nodes_without_heterogeneous_neighbors;
  return j;
}

int cmd_augment(const CommonArgs& a) {
  const ExperimentConfig cfg = effective_config(a);
  const Dataset ds = load_dataset(a.nodes, a.edges);

  std::vector<std::size_t> exclude;
  if (ds.sensitive_col) exclude.push_back(*ds.sensitive_col);
  const FeatureMatrix x = standardize_features(ds.features, exclude);
  const CounterfactualMap cf = find_counterfactuals(x, ds.sensitive, cfg.k, exclude);
  const AugmentedGraph ag = augment_graph(ds.graph, ds.sensitive, cf);

  const BiasDiagnostics before = bias_diagnostics(ds.graph, ds.sensitive);
  const BiasDiagnostics after = bias_diagnostics(ag, ds.sensitive);

  const fs::path out = ensure_out_dir(a.out_dir);
  write_file(out / "counterfactuals.csv", cf.to_csv());
  write_file(out / "augmented_edges.txt", ag.to_edge_list_text());
  write_file(out / "id_map.csv", id_map_csv(ds));

  nlohmann::ordered_json j;
  j["kind"] = "bias_diagnostics";
  j["nodes"] = a.nodes;
  j["edges"] = a.edges;
  j["k"] = cfg.k;
  j["num_nodes"] = ds.num_nodes();
  j["counterfactuals_resolved"] = cf.num_resolved();
  j["edges_rewired"] = ag.rewired_count;
  j["original"] = diag_to_json(before);
  j["augmented"] = diag_to_json(after);
  write_file(out / "diagnostics.json", j.dump(2) + "\n");

  char buf[256];
  std::string md = "| Metric | original | augmented |\n|---|---|---|\n";
  std::snprintf(buf, sizeof buf, "| Avg. degree | %.2f | %.2f |\n", before.avg_degree,
                after.avg_degree);
  md += buf;
  std::snprintf(buf, sizeof buf, "| Avg. heterogeneous degree | %.2f | %.2f |\n",
                before.avg_heterogeneous_degree, after.avg_heterogeneous_degree);
  md += buf;
  std::snprintf(buf, sizeof buf, "| Nodes w/o heterogeneous neighbors | %zu | %zu |\n",
                before.nodes_without_heterogeneous_neighbors,
                after.nodes_without_heterogeneous_neighbors);
  md += buf;
  write_file(out / "diagnostics.md", md);

  std::cout << "augment: " << cf.num_resolved() << "/" << ds.num_nodes()
            << " counterfactuals, " << ag.rewired_count << " edges rewired -> "
            << out.string() << "\n";
  return 0;
}

int cmd_train(const CommonArgs& a) {
  const ExperimentConfig cfg = effective_config(a);
  const Dataset ds = load_dataset(a.nodes, a.edges);
  const fs::path out = ensure_out_dir(a.out_dir);

  ExperimentResult result;
  result.cfg = cfg;
  result.hash = config_hash(cfg);
  for (std::uint64_t seed : cfg.seeds) {
    ModelBundle bundle = train_strategy(ds, cfg, seed);
    for (const auto& w : bundle.warnings)
      std::cerr << "warning: seed " << seed << ": " << w << "\n";
    const std::string tag = "seed" + std::to_string(seed);
    write_file(out / ("checkpoint_" + tag + ".json"), bundle_to_json(bundle));
    write_file(out / ("train_log_" + tag + ".csv"), train_log_to_csv(bundle.log));
    result.seeds.push_back(seed);
    result.per_seed.push_back(evaluate(bundle, ds));
    for (const auto& w : bundle.warnings)
      result.warnings.push_back("seed " + std::to_string(seed) + ": " + w);
  }
  aggregate_reports(result.per_seed, result.mean, result.stddev);
  result.single_seed = result.per_seed.size() < 2;

  write_file(out / "config.json", experiment_config_to_json(cfg));
  write_file(out / "id_map.csv", id_map_csv(ds));
  write_file(out / "result.json", experiment_result_to_json(result));
  const std::string label = std::string(layer_kind_name(cfg.backbone)) + "/" +
                            strategy_name(cfg.strategy);
  write_file(out / "result.md", MetricsReport::markdown_header() +
                                    experiment_markdown_row(label, result) + "\n");

  std::cout << "train: " << label << " over " << cfg.seeds.size() << " seed(s)\n"
            << MetricsReport::markdown_header()
            << experiment_markdown_row(label, result) << "\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& a, const std::string& checkpoint) {
  const Dataset ds = load_dataset(a.nodes, a.edges);
  const ModelBundle bundle = bundle_from_json(read_file(checkpoint), ds);
  const MetricsReport report = evaluate(bundle, ds);
  const fs::path out = ensure_out_dir(a.out_dir);

  nlohmann::ordered_json j;
  j["kind"] = "evaluation";
  j["checkpoint"] = checkpoint;
  j["config"] = nlohmann::ordered_json::parse(experiment_config_to_json(bundle.cfg));
  j["seed"] = bundle.seed;
  j["metrics"] = nlohmann::ordered_json::parse(report.to_json());
  write_file(out / "metrics.json", j.dump(2) + "\n");
  const std::string label = std::string(layer_kind_name(bundle.cfg.backbone)) + "/" +
                            strategy_name(bundle.cfg.strategy);
  write_file(out / "metrics.md",
             MetricsReport::markdown_header() + report.markdown_row(label));

  std::cout << MetricsReport::markdown_header() << report.markdown_row(label);
  return 0;
}

int cmd_ablate(const CommonArgs& a) {
  const ExperimentConfig base = effective_config(a);
  const Dataset ds = load_dataset(a.nodes, a.edges);
  const fs::path out = ensure_out_dir(a.out_dir);

  const Strategy order[] = {Strategy::vanilla, Strategy::edge_drop,
                            Strategy::feature_mask, Strategy::fair_icd};
  nlohmann::ordered_json all = nlohmann::ordered_json::array();
  std::string md = MetricsReport::markdown_header();
  for (Strategy s : order) {
    ExperimentConfig cfg = base;
    cfg.strategy = s;
    const ExperimentResult r = run_experiment(ds, cfg);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    all.push_back(nlohmann::ordered_json::parse(experiment_result_to_json(r)));
    md += experiment_markdown_row(strategy_name(s), r) + "\n";
  }
  write_file(out / "config.json", experiment_config_to_json(base));
  write_file(out / "ablation.json", all.dump(2) + "\n");
  write_file(out / "ablation.md", md);

  std::cout << "ablate: " << layer_kind_name(base.backbone) << " over "
            << base.seeds.size() << " seed(s)\n"
            << md;
  return 0;
}

int cmd_report(const std::string& out_dir, const std::vector<std::string>& inputs) {
  if (inputs.empty()) throw ConfigError("report needs at least one result file");
  std::string md = MetricsReport::markdown_header();
  for (const auto& path : inputs) {
    const ExperimentResult r = experiment_result_from_json(read_file(path));
    const std::string label = std::string(layer_kind_name(r.cfg.backbone)) + "/" +
                              strategy_name(r.cfg.strategy);
    md += experiment_markdown_row(label, r) + "\n";
  }
  const fs::path out = ensure_out_dir(out_dir);
  write_file(out / "report.md", md);
  std::cout << md;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual graph augmentation and adversarial debiasing for "
               "GNN node classifiers"};
  app.require_subcommand(1);

  CommonArgs aug_args, train_args, eval_args, ablate_args;
  std::string eval_checkpoint;
  std::string report_out;
  std::vector<std::string> report_inputs;

  CLI::App* augment = app.add_subcommand(
      "augment", "Counterfactual rewiring and bias diagnostics");
  add_dataset_flags(augment, aug_args);
  add_out_flag(augment, aug_args);
  add_config_flags(augment, aug_args);

  CLI::App* train = app.add_subcommand("train", "Train one strategy over seeds");
  add_dataset_flags(train, train_args);
  add_out_flag(train, train_args);
  add_config_flags(train, train_args);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  add_dataset_flags(evaluate, eval_args);
  add_out_flag(evaluate, eval_args);
  evaluate->add_option("--checkpoint", eval_checkpoint, "Checkpoint JSON from train")
      ->required();

  CLI::App* ablate = app.add_subcommand(
      "ablate", "Compare vanilla, edge_drop, feature_mask, fair_icd");
  add_dataset_flags(ablate, ablate_args);
  add_out_flag(ablate, ablate_args);
  add_config_flags(ablate, ablate_args);

  CLI::App* report = app.add_subcommand("report", "Merge result JSONs into markdown");
  report->add_option("--out", report_out, "Output directory")->required();
  report->add_option("inputs", report_inputs, "Result JSON files")->required();

  CLI11_PARSE(app, argc, argv);

  const bool in_augment = augment->parsed();
  try {
    if (in_augment) return cmd_augment(aug_args);
    if (train->parsed()) return cmd_train(train_args);
    if (evaluate->parsed()) return cmd_evaluate(eval_args, eval_checkpoint);
    if (ablate->parsed()) return cmd_ablate(ablate_args);
    if (report->parsed()) return cmd_report(report_out, report_inputs);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return in_augment ? 1 : 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return in_augment ? 1 : 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return in_augment ? 1 : 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return in_augment ? 1 : 4;
  }
  return 0;
}
