#include "fairicd/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fairicd/errors.hpp"
#include "fairicd/kernels.hpp"

namespace fairicd {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::gcn: return "gcn";
    case LayerKind::gin: return "gin";
    case LayerKind::sage: return "sage";
    case LayerKind::dense: return "dense";
  }
  return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
  if (name == "gcn") return LayerKind::gcn;
  if (name == "gin") return LayerKind::gin;
  if (name == "sage") return LayerKind::sage;
  if (name == "dense") return LayerKind::dense;
  throw ConfigError("unknown layer kind '" + name + "'");
}

GraphOps GraphOps::build(const Graph& g) {
  GraphOps ops;
  ops.gcn_norm = gcn_normalize(g);
  ops.sum_self = add_self_loops(g);
  ops.mean_neigh = row_normalize(g);
  ops.mean_neigh_t = csr_transpose(ops.mean_neigh);
  return ops;
}

std::vector<Tensor*> LayerParams::tensors() {
  switch (kind) {
    case LayerKind::gcn:
    case LayerKind::dense: return {&w1, &b1};
    case LayerKind::gin: return {&w1, &b1, &w2, &b2};
    case LayerKind::sage: return {&w1, &b1, &w2};
  }
  return {};
}

std::vector<const Tensor*> LayerParams::tensors() const {
  auto mut = const_cast<LayerParams*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

namespace {

Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t(rows, cols);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& v : t.raw()) v = rng.uniform(-limit, limit);
  return t;
}

}  // namespace

LayerParams make_layer(LayerKind kind, std::size_t in, std::size_t out, Rng& rng) {
  LayerParams p;
  p.kind = kind;
  p.in_dim = in;
  p.out_dim = out;
  p.w1 = glorot_uniform(in, out, rng);
  p.b1 = Tensor(1, out);
  if (kind == LayerKind::gin) {
    p.w2 = glorot_uniform(out, out, rng);
    p.b2 = Tensor(1, out);
  } else if (kind == LayerKind::sage) {
    p.w2 = glorot_uniform(in, out, rng);
  }
  return p;
}

void relu_inplace(Tensor& t) {
  for (double& v : t.raw()) v = v > 0.0 ? v : 0.0;
}

Tensor colsum(const Tensor& t) {
  Tensor out(1, t.cols());
  for (std::size_t i = 0; i < t.rows(); ++i) {
    const double* row = t.row(i);
    for (std::size_t j = 0; j < t.cols(); ++j) out(0, j) += row[j];
  }
  return out;
}

void add_row_vector(Tensor& t, const Tensor& b) {
  for (std::size_t i = 0; i < t.rows(); ++i) {
    double* row = t.row(i);
    for (std::size_t j = 0; j < t.cols(); ++j) row[j] += b(0, j);
  }
}

namespace {

Tensor layer_forward(const LayerParams& p, const Tensor& h, const GraphOps& ops,
                     LayerTrace& tr) {
  Tensor out;
  switch (p.kind) {
    case LayerKind::dense: {
      tr.in = h;
      matmul(h, p.w1, out);
      add_row_vector(out, p.b1);
      break;
    }
    case LayerKind::gcn: {
      graph_spmm(ops.gcn_norm, h, tr.agg);
      matmul(tr.agg, p.w1, out);
      add_row_vector(out, p.b1);
      break;
    }
    case LayerKind::gin: {
      graph_spmm(ops.sum_self, h, tr.agg);
      matmul(tr.agg, p.w1, tr.pre1);
      add_row_vector(tr.pre1, p.b1);
      Tensor post = tr.pre1;
      relu_inplace(post);
      matmul(post, p.w2, out);
      add_row_vector(out, p.b2);
      break;
    }
    case LayerKind::sage: {
      tr.in = h;
      graph_spmm(ops.mean_neigh, h, tr.agg);
      Tensor self_part, neigh_part;
      matmul(h, p.w1, self_part);
      matmul(tr.agg, p.w2, neigh_part);
      out = self_part;
      for (std::size_t i = 0; i < out.size(); ++i) out.raw()[i] += neigh_part.raw()[i];
      add_row_vector(out, p.b1);
      break;
    }
  }
  check_finite(out, layer_kind_name(p.kind));
  return out;
}

struct LayerGrads {
  Tensor w1, b1, w2, b2;
};

// Returns grad wrt the layer input.
Tensor layer_backward(const LayerParams& p, const GraphOps& ops, const LayerTrace& tr,
                      const Tensor& grad_out, LayerGrads& g, bool want_input_grad) {
  Tensor grad_in;
  switch (p.kind) {
    case LayerKind::dense: {
      matmul_tn(tr.in, grad_out, g.w1);
      g.b1 = colsum(grad_out);
      if (want_input_grad) matmul_nt(grad_out, p.w1, grad_in);
      break;
    }
    case LayerKind::gcn: {
      matmul_tn(tr.agg, grad_out, g.w1);
      g.b1 = colsum(grad_out);
      if (want_input_grad) {
        Tensor tmp;
        matmul_nt(grad_out, p.w1, tmp);
        graph_spmm(ops.gcn_norm, tmp, grad_in);  // Â is symmetric
      }
      break;
    }
    case LayerKind::gin: {
      Tensor post = tr.pre1;
      relu_inplace(post);
      matmul_tn(post, grad_out, g.w2);
      g.b2 = colsum(grad_out);
      Tensor dpost;
      matmul_nt(grad_out, p.w2, dpost);
      // rectifier mask
      for (std::size_t i = 0; i < dpost.size(); ++i)
        if (tr.pre1.raw()[i] <= 0.0) dpost.raw()[i] = 0.0;
      matmul_tn(tr.agg, dpost, g.w1);
      g.b1 = colsum(dpost);
      if (want_input_grad) {
        Tensor tmp;
        matmul_nt(dpost, p.w1, tmp);
        graph_spmm(ops.sum_self, tmp, grad_in);  // A+I is symmetric
      }
      break;
    }
    case LayerKind::sage: {
      matmul_tn(tr.in, grad_out, g.w1);
      g.b1 = colsum(grad_out);
      matmul_tn(tr.agg, grad_out, g.w2);
      if (want_input_grad) {
        matmul_nt(grad_out, p.w1, grad_in);
        Tensor tmp, tmp2;
        matmul_nt(grad_out, p.w2, tmp);
        graph_spmm(ops.mean_neigh_t, tmp, tmp2);
        for (std::size_t i = 0; i < grad_in.size(); ++i)
          grad_in.raw()[i] += tmp2.raw()[i];
      }
      break;
    }
  }
  return grad_in;
}

}  // namespace

Tensor GnnModel::forward(const Tensor& x, const GraphOps& ops, bool training,
                         Rng* dropout_rng, ForwardTrace& trace) const {
  if (layers.empty()) throw NumericError("empty model");
  trace = ForwardTrace{};
  trace.layers.resize(layers.size());
  trace.post_act.resize(layers.size());
  trace.dropout_mask.resize(layers.size());

  Tensor h = x;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    h = layer_forward(layers[l], h, ops, trace.layers[l]);
    relu_inplace(h);
    trace.post_act[l] = h;
    if (training && dropout > 0.0) {
      if (!dropout_rng) throw NumericError("training forward needs a dropout stream");
      Tensor mask(h.rows(), h.cols());
      const double keep = 1.0 - dropout;
      for (double& v : mask.raw()) v = dropout_rng->next_double() < keep ? 1.0 / keep : 0.0;
      for (std::size_t i = 0; i < h.size(); ++i) h.raw()[i] *= mask.raw()[i];
      trace.dropout_mask[l] = std::move(mask);
    }
  }
  trace.head_input = h;
  Tensor logits = layer_forward(layers.back(), h, ops, trace.layers.back());
  return logits;
}

Tensor GnnModel::forward_eval(const Tensor& x, const GraphOps& ops) const {
  ForwardTrace tr;
  return forward(x, ops, false, nullptr, tr);
}

std::vector<Tensor> GnnModel::backward(const GraphOps& ops, ForwardTrace& trace,
                                       const Tensor& grad_logits,
                                       const Tensor* extra_head_input_grad) const {
  if (trace.consumed) throw NumericError("forward trace already consumed");
  trace.consumed = true;
  if (trace.layers.size() != layers.size()) throw NumericError("trace shape mismatch");

  std::vector<LayerGrads> grads(layers.size());
  const std::size_t last = layers.size() - 1;
  Tensor g = layer_backward(layers[last], ops, trace.layers[last], grad_logits,
                            grads[last], last > 0);
  if (extra_head_input_grad) {
    if (!extra_head_input_grad->same_shape(trace.head_input))
      throw NumericError("head input grad shape mismatch");
    if (last == 0) throw NumericError("no representation layer to tap");
    for (std::size_t i = 0; i < g.size(); ++i)
      g.raw()[i] += extra_head_input_grad->raw()[i];
  }

  for (std::size_t l = last; l-- > 0;) {
    if (trace.dropout_mask[l].size() > 0)
      for (std::size_t i = 0; i < g.size(); ++i)
        g.raw()[i] *= trace.dropout_mask[l].raw()[i];
    const Tensor& post = trace.post_act[l];
    for (std::size_t i = 0; i < g.size(); ++i)
      if (post.raw()[i] <= 0.0) g.raw()[i] = 0.0;
    g = layer_backward(layers[l], ops, trace.layers[l], g, grads[l], l > 0);
  }

  std::vector<Tensor> flat;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    switch (layers[l].kind) {
      case LayerKind::gcn:
      case LayerKind::dense:
        flat.push_back(std::move(grads[l].w1));
        flat.push_back(std::move(grads[l].b1));
        break;
      case LayerKind::gin:
        flat.push_back(std::move(grads[l].w1));
        flat.push_back(std::move(grads[l].b1));
        flat.push_back(std::move(grads[l].w2));
        flat.push_back(std::move(grads[l].b2));
        break;
      case LayerKind::sage:
        flat.push_back(std::move(grads[l].w1));
        flat.push_back(std::move(grads[l].b1));
        flat.push_back(std::move(grads[l].w2));
        break;
    }
  }
  for (const Tensor& t : flat) check_finite(t, "parameter gradient");
  return flat;
}

std::vector<Tensor*> GnnModel::parameters() {
  std::vector<Tensor*> out;
  for (auto& l : layers)
    for (Tensor* t : l.tensors()) out.push_back(t);
  return out;
}

std::vector<const Tensor*> GnnModel::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers)
    for (const Tensor* t : l.tensors()) out.push_back(t);
  return out;
}

std::size_t GnnModel::representation_dim() const {
  return layers.back().in_dim;
}

GnnModel make_model(LayerKind backbone, std::size_t in_dim, std::size_t hidden_dim,
                    std::size_t num_layers, std::size_t out_dim, double dropout,
                    Rng& init_rng) {
  if (num_layers < 1) throw ConfigError("need at least one backbone layer");
  GnnModel m;
  m.dropout = dropout;
  std::size_t in = in_dim;
  for (std::size_t l = 0; l < num_layers; ++l) {
    m.layers.push_back(make_layer(backbone, in, hidden_dim, init_rng));
    in = hidden_dim;
  }
  m.layers.push_back(make_layer(LayerKind::dense, in, out_dim, init_rng));
  return m;
}

LossGrad softmax_cross_entropy(const Tensor& logits, const LabelVector& y,
                               const Mask& mask) {
  const std::size_t n = logits.rows();
  const std::size_t c = logits.cols();
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) m += mask[i] != 0;
  if (m == 0) throw DataError("empty loss mask");

  LossGrad out;
  out.grad = Tensor(n, c);
  double total = 0.0;
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double* row = logits.row(i);
    double mx = row[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    const double logz = std::log(z);
    const auto label = static_cast<std::size_t>(y[i]);
    if (y[i] < 0 || label >= c) throw DataError("label out of range in loss mask");
    total += logz - (row[label] - mx);
    for (std::size_t j = 0; j < c; ++j) {
      const double p = std::exp(row[j] - mx) / z;
      out.grad(i, j) = (p - (j == label ? 1.0 : 0.0)) * inv_m;
    }
  }
  out.loss = total * inv_m;
  check_finite(out.loss, "cross entropy");
  return out;
}

LossGrad bce_with_logits(const Tensor& logits, const BinaryVector& targets,
                         const Mask& mask) {
  if (logits.cols() != 1) throw NumericError("bce expects one logit column");
  const std::size_t n = logits.rows();
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) m += mask[i] != 0;
  if (m == 0) throw DataError("empty loss mask");

  LossGrad out;
  out.grad = Tensor(n, 1);
  double total = 0.0;
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double z = logits(i, 0);
    const double t = targets[i] ? 1.0 : 0.0;
    // log(1 + exp(-|z|)) + max(z, 0) - z*t
    total += std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) - z * t;
    const double sig = 1.0 / (1.0 + std::exp(-z));
    out.grad(i, 0) = (sig - t) * inv_m;
  }
  out.loss = total * inv_m;
  check_finite(out.loss, "bce");
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const double* row = logits.row(i);
    double mx = row[0];
    for (std::size_t j = 1; j < logits.cols(); ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j) z += std::exp(row[j] - mx);
    for (std::size_t j = 0; j < logits.cols(); ++j)
      out(i, j) = std::exp(row[j] - mx) / z;
  }
  return out;
}

BinaryVector predict_argmax(const Tensor& logits) {
  BinaryVector pred(logits.rows(), 0);
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const double* row = logits.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.cols(); ++j)
      if (row[j] > row[best]) best = j;
    pred[i] = static_cast<std::uint8_t>(best);
  }
  return pred;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw NumericError("adam: param/grad count mismatch");
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
      state.m[p] = Tensor(params[p]->rows(), params[p]->cols());
      state.v[p] = Tensor(params[p]->rows(), params[p]->cols());
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& w = *params[p];
    const Tensor& g = grads[p];
    if (!w.same_shape(g)) throw NumericError("adam: grad shape mismatch");
    Tensor& m = state.m[p];
    Tensor& v = state.v[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g.raw()[i];
      m.raw()[i] = cfg.beta1 * m.raw()[i] + (1.0 - cfg.beta1) * gi;
      v.raw()[i] = cfg.beta2 * v.raw()[i] + (1.0 - cfg.beta2) * gi * gi;
      const double mhat = m.raw()[i] / bc1;
      const double vhat = v.raw()[i] / bc2;
      w.raw()[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

Tensor Mlp::forward(const Tensor& x) const {
  Trace tr;
  return forward(x, tr);
}

Tensor Mlp::forward(const Tensor& x, Trace& tr) const {
  tr.in = x;
  matmul(x, w1, tr.pre1);
  add_row_vector(tr.pre1, b1);
  Tensor hidden = tr.pre1;
  if (act == Activation::relu) relu_inplace(hidden);
  Tensor out;
  matmul(hidden, w2, out);
  add_row_vector(out, b2);
  check_finite(out, "mlp");
  return out;
}

Mlp::Grads Mlp::backward(const Trace& tr, const Tensor& grad_out,
                         bool want_input_grad) const {
  Grads g;
  Tensor hidden = tr.pre1;
  if (act == Activation::relu) relu_inplace(hidden);
  matmul_tn(hidden, grad_out, g.w2);
  g.b2 = colsum(grad_out);
  Tensor dhidden;
  matmul_nt(grad_out, w2, dhidden);
  if (act == Activation::relu)
    for (std::size_t i = 0; i < dhidden.size(); ++i)
      if (tr.pre1.raw()[i] <= 0.0) dhidden.raw()[i] = 0.0;
  matmul_tn(tr.in, dhidden, g.w1);
  g.b1 = colsum(dhidden);
  if (want_input_grad) matmul_nt(dhidden, w1, g.input);
  return g;
}

std::vector<Tensor*> Mlp::parameters() { return {&w1, &b1, &w2, &b2}; }

std::vector<const Tensor*> Mlp::parameters() const { return {&w1, &b1, &w2, &b2}; }

bool Mlp::is_zero() const {
  for (const Tensor* t : parameters())
    for (double v : t->raw())
      if (v != 0.0) return false;
  return true;
}

Mlp Mlp::glorot(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng,
                Activation act) {
  Mlp m;
  m.act = act;
  m.w1 = glorot_uniform(in, hidden, rng);
  m.b1 = Tensor(1, hidden);
  m.w2 = glorot_uniform(hidden, out, rng);
  m.b2 = Tensor(1, out);
  return m;
}

Mlp Mlp::zeros(std::size_t in, std::size_t hidden, std::size_t out, Activation act) {
  Mlp m;
  m.act = act;
  m.w1 = Tensor(in, hidden);
  m.b1 = Tensor(1, hidden);
  m.w2 = Tensor(hidden, out);
  m.b2 = Tensor(1, out);
  return m;
}

std::uint64_t hash_tensors(const std::vector<const Tensor*>& ts) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  for (const Tensor* t : ts) {
    mix(t->rows());
    mix(t->cols());
    for (double v : t->raw()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      mix(bits);
    }
  }
  return h;
}

}  // namespace fairicd
