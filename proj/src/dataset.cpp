#include "fairicd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "fairicd/errors.hpp"
#include "fairicd/rng.hpp"

namespace fairicd {

std::size_t Dataset::num_labeled() const {
  std::size_t n = 0;
  for (auto l : labels)
    if (l != kMissingLabel) ++n;
  return n;
}

void Dataset::validate() const {
  graph.validate();
  const std::size_t n = graph.num_nodes;
  if (features.rows() != n) throw DataError("feature row count mismatch");
  if (sensitive.size() != n) throw DataError("sensitive length mismatch");
  if (labels.size() != n) throw DataError("label length mismatch");
  for (auto s : sensitive)
    if (s > 1) throw DataError("non-binary sensitive value");
  for (auto l : labels)
    if (l != kMissingLabel && l != 0 && l != 1) throw DataError("non-binary label");
  if (!features.all_finite()) throw DataError("non-finite feature entries");
  if (sensitive_col && *sensitive_col >= features.cols())
    throw DataError("sensitive_col out of range");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw DataError("trailing characters in " + what + ": '" + s + "'");
    return v;
  } catch (const DataError&) {
    throw;
  } catch (const std::exception&) {
    throw DataError("cannot parse " + what + ": '" + s + "'");
  }
}

}  // namespace

Dataset load_dataset(const std::string& node_file, const std::string& edge_file,
                     const NodeFileSchema& schema) {
  std::ifstream nf(node_file);
  if (!nf) throw DataError("cannot open node file: " + node_file);

  std::string line;
  if (!std::getline(nf, line)) throw DataError("empty node file: " + node_file);
  const auto header = split_csv_line(line);

  std::size_t id_idx = header.size(), sens_idx = header.size(), label_idx = header.size();
  std::vector<std::size_t> feat_idx;
  std::vector<std::string> feat_names;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = trim(header[i]);
    if (name == schema.id_col) {
      id_idx = i;
    } else if (name == schema.sensitive_col) {
      sens_idx = i;
    } else if (name == schema.label_col) {
      label_idx = i;
    } else {
      feat_idx.push_back(i);
      feat_names.push_back(name);
    }
  }
  if (id_idx == header.size()) throw DataError("missing id column '" + schema.id_col + "'");
  if (sens_idx == header.size())
    throw DataError("missing sensitive column '" + schema.sensitive_col + "'");
  if (label_idx == header.size())
    throw DataError("missing label column '" + schema.label_col + "'");

  Dataset ds;
  ds.feature_names = feat_names;
  std::unordered_map<std::int64_t, NodeId> id_map;
  std::vector<std::vector<double>> rows;
  while (std::getline(nf, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("node row has " + std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(header.size()));
    const std::int64_t orig_id =
        static_cast<std::int64_t>(parse_double(trim(cells[id_idx]), "node id"));
    if (id_map.count(orig_id))
      throw DataError("duplicate node id " + std::to_string(orig_id));
    id_map[orig_id] = static_cast<NodeId>(rows.size());
    ds.original_ids.push_back(orig_id);

    const double sv = parse_double(trim(cells[sens_idx]), "sensitive value");
    if (sv != 0.0 && sv != 1.0)
      throw DataError("non-binary sensitive value for node " + std::to_string(orig_id));
    ds.sensitive.push_back(static_cast<std::uint8_t>(sv));

    const std::string lab = trim(cells[label_idx]);
    if (lab.empty()) {
      ds.labels.push_back(kMissingLabel);
    } else {
      const double lv = parse_double(lab, "label");
      if (lv != 0.0 && lv != 1.0)
        throw DataError("non-binary label for node " + std::to_string(orig_id));
      ds.labels.push_back(static_cast<std::int8_t>(lv));
    }

    std::vector<double> feats;
    feats.reserve(feat_idx.size());
    for (std::size_t fi : feat_idx) feats.push_back(parse_double(trim(cells[fi]), "feature"));
    rows.push_back(std::move(feats));
  }
  if (rows.empty()) throw DataError("node file has no rows: " + node_file);

  const std::size_t n = rows.size();
  const std::size_t d = feat_idx.size();
  ds.features = Tensor(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) ds.features(i, j) = rows[i][j];

  if (schema.sensitive_feature) {
    auto it = std::find(feat_names.begin(), feat_names.end(), *schema.sensitive_feature);
    if (it == feat_names.end())
      throw DataError("sensitive feature column '" + *schema.sensitive_feature + "' not found");
    ds.sensitive_col = static_cast<std::size_t>(it - feat_names.begin());
  }

  std::ifstream ef(edge_file);
  if (!ef) throw DataError("cannot open edge file: " + edge_file);
  std::vector<std::pair<NodeId, NodeId>> edges;
  while (std::getline(ef, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream is(t);
    std::int64_t a, b;
    if (!(is >> a >> b)) throw DataError("malformed edge line: '" + t + "'");
    const auto ia = id_map.find(a);
    const auto ib = id_map.find(b);
    if (ia == id_map.end() || ib == id_map.end()) throw DataError("endpoint out of range");
    edges.emplace_back(ia->second, ib->second);
  }
  ds.graph = Graph::from_undirected_edges(n, edges);

  ds.splits.train.assign(n, 0);
  ds.splits.val.assign(n, 0);
  ds.splits.test.assign(n, 0);
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& node_file,
                  const std::string& edge_file) {
  ds.validate();
  std::ofstream nf(node_file);
  if (!nf) throw DataError("cannot write node file: " + node_file);

  const std::size_t n = ds.num_nodes();
  const std::size_t d = ds.features.cols();
  nf << "id";
  for (std::size_t j = 0; j < d; ++j) {
    if (j < ds.feature_names.size() && !ds.feature_names[j].empty())
      nf << ',' << ds.feature_names[j];
    else
      nf << ",f" << j;
  }
  nf << ",sensitive,label\n";

  char buf[48];
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t id =
        i < ds.original_ids.size() ? ds.original_ids[i] : static_cast<std::int64_t>(i);
    nf << id;
    for (std::size_t j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.features(i, j));
      nf << ',' << buf;
    }
    nf << ',' << static_cast<int>(ds.sensitive[i]) << ',';
    if (ds.labels[i] != kMissingLabel) nf << static_cast<int>(ds.labels[i]);
    nf << '\n';
  }
  if (!nf) throw DataError("write failed: " + node_file);

  std::ofstream ef(edge_file);
  if (!ef) throw DataError("cannot write edge file: " + edge_file);
  ef << "# src dst\n";
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t src =
        i < ds.original_ids.size() ? ds.original_ids[i] : static_cast<std::int64_t>(i);
    for (std::size_t e = ds.graph.row_offsets[i]; e < ds.graph.row_offsets[i + 1]; ++e) {
      const NodeId j = ds.graph.col_indices[e];
      if (j < i) continue;  // each undirected edge once
      const std::int64_t dst =
          j < ds.original_ids.size() ? ds.original_ids[j] : static_cast<std::int64_t>(j);
      ef << src << ' ' << dst << '\n';
    }
  }
  if (!ef) throw DataError("write failed: " + edge_file);
}

FeatureMatrix standardize_features(const FeatureMatrix& x,
                                   const std::vector<std::size_t>& exclude) {
  FeatureMatrix out = x;
  const std::size_t n = x.rows();
  if (n == 0) return out;
  std::vector<bool> skip(x.cols(), false);
  for (std::size_t c : exclude)
    if (c < x.cols()) skip[c] = true;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    if (skip[j]) continue;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x(i, j) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);  // population variance
    if (var == 0.0) {
      for (std::size_t i = 0; i < n; ++i) out(i, j) = 0.0;
    } else {
      const double sd = std::sqrt(var);
      for (std::size_t i = 0; i < n; ++i) out(i, j) = (x(i, j) - mean) / sd;
    }
  }
  return out;
}

SplitMasks make_splits(const Dataset& ds, const SplitRatios& ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      ratios.train + ratios.val + ratios.test > 1.0 + 1e-12)
    throw ConfigError("split ratios must be nonnegative and sum to at most 1");
  std::vector<NodeId> labeled;
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    if (ds.labels[i] != kMissingLabel) labeled.push_back(static_cast<NodeId>(i));
  if (labeled.empty()) throw DataError("no labeled nodes to split");

  Rng rng = Rng::derive(seed, "splits");
  shuffle(labeled, rng);

  const std::size_t l = labeled.size();
  const std::size_t n_train = static_cast<std::size_t>(ratios.train * static_cast<double>(l));
  const std::size_t n_val = static_cast<std::size_t>(ratios.val * static_cast<double>(l));
  const std::size_t n_test =
      std::min(l - n_train - n_val,
               static_cast<std::size_t>(ratios.test * static_cast<double>(l)));

  SplitMasks m;
  const std::size_t n = ds.num_nodes();
  m.train.assign(n, 0);
  m.val.assign(n, 0);
  m.test.assign(n, 0);
  std::size_t p = 0;
  for (std::size_t i = 0; i < n_train; ++i) m.train[labeled[p++]] = 1;
  for (std::size_t i = 0; i < n_val; ++i) m.val[labeled[p++]] = 1;
  for (std::size_t i = 0; i < n_test; ++i) m.test[labeled[p++]] = 1;
  return m;
}

std::size_t count_mask(const Mask& m) {
  std::size_t n = 0;
  for (auto v : m) n += v != 0;
  return n;
}

namespace {

std::vector<NodeId> mask_to_ids(const Mask& m) {
  std::vector<NodeId> ids;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) ids.push_back(static_cast<NodeId>(i));
  return ids;
}

Mask ids_to_mask(const std::vector<NodeId>& ids, std::size_t n) {
  Mask m(n, 0);
  for (NodeId i : ids) {
    if (i >= n) throw DataError("split node id out of range");
    m[i] = 1;
  }
  return m;
}

}  // namespace

std::string splits_to_json(const SplitMasks& splits) {
  nlohmann::ordered_json j;
  j["train"] = mask_to_ids(splits.train);
  j["val"] = mask_to_ids(splits.val);
  j["test"] = mask_to_ids(splits.test);
  return j.dump(2) + "\n";
}

SplitMasks splits_from_json(const std::string& text, std::size_t num_nodes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw DataError(std::string("invalid splits JSON: ") + e.what());
  }
  SplitMasks m;
  m.train = ids_to_mask(j.at("train").get<std::vector<NodeId>>(), num_nodes);
  m.val = ids_to_mask(j.at("val").get<std::vector<NodeId>>(), num_nodes);
  m.test = ids_to_mask(j.at("test").get<std::vector<NodeId>>(), num_nodes);
  return m;
}

}  // namespace fairicd
