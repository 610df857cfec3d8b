#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairicd/dataset.hpp"
#include "fairicd/graph.hpp"
#include "fairicd/rng.hpp"
#include "fairicd/tensor.hpp"

namespace fairicd {

enum class LayerKind { gcn, gin, sage, dense };

const char* layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& name);

// Aggregation operators precomputed once per graph. All spmm products run
// row-parallel with serial in-row accumulation, so results are independent of
// thread count.
struct GraphOps {
  Graph gcn_norm;      // symmetric normalization with self-loops
  Graph sum_self;      // A + I, unit weights (sum aggregator)
  Graph mean_neigh;    // D^-1 A (zero rows for isolated nodes)
  Graph mean_neigh_t;  // transpose of mean_neigh for reverse mode

  static GraphOps build(const Graph& g);
};

// One layer of the stack.
//   gcn:   out = (Â H) W1 + b1
//   gin:   out = relu((A+I) H W1 + b1) W2 + b2
//   sage:  out = H W1 + (D^-1 A H) W2 + b1
//   dense: out = H W1 + b1
struct LayerParams {
  LayerKind kind = LayerKind::dense;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Tensor w1, b1;  // biases are 1 x out
  Tensor w2, b2;  // gin second linear / sage neighbor weight

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
};

LayerParams make_layer(LayerKind kind, std::size_t in, std::size_t out, Rng& rng);

struct LayerTrace {
  Tensor in;    // layer input
  Tensor agg;   // aggregated input (gcn/gin) or neighbor mean (sage)
  Tensor pre1;  // gin inner pre-activation
};

// Cached activations for reverse mode; consumed exactly once.
struct ForwardTrace {
  std::vector<LayerTrace> layers;
  std::vector<Tensor> post_act;      // inter-layer relu outputs
  std::vector<Tensor> dropout_mask;  // empty tensors when inactive
  Tensor head_input;                 // representations feeding the final layer
  bool consumed = false;
};

// A stack of backbone layers with a dense classification head as the final
// layer. Rectifier and (in training mode) dropout sit between layers, nothing
// after the final layer.
struct GnnModel {
  std::vector<LayerParams> layers;
  double dropout = 0.5;

  Tensor forward(const Tensor& x, const GraphOps& ops, bool training,
                 Rng* dropout_rng, ForwardTrace& trace) const;
  Tensor forward_eval(const Tensor& x, const GraphOps& ops) const;

  // Gradients for every parameter in parameters() order; trace is consumed.
  // extra_head_input_grad, when present, is added to the gradient flowing
  // into the final layer's input (the discriminator tap).
  std::vector<Tensor> backward(const GraphOps& ops, ForwardTrace& trace,
                               const Tensor& grad_logits,
                               const Tensor* extra_head_input_grad = nullptr) const;

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::size_t representation_dim() const;  // input width of the final layer
};

// num_layers backbone layers (in -> hidden -> ... -> hidden) plus a dense
// head (hidden -> out_dim). Glorot-uniform weights from the given stream,
// zero biases.
GnnModel make_model(LayerKind backbone, std::size_t in_dim, std::size_t hidden_dim,
                    std::size_t num_layers, std::size_t out_dim, double dropout,
                    Rng& init_rng);

struct LossGrad {
  double loss = 0.0;
  Tensor grad;  // d loss / d logits
};

// Mean cross-entropy over mask rows, max-subtraction stabilized.
LossGrad softmax_cross_entropy(const Tensor& logits, const LabelVector& y,
                               const Mask& mask);

// Mean binary cross-entropy over mask rows of a one-column logit tensor,
// computed in log-space.
LossGrad bce_with_logits(const Tensor& logits, const BinaryVector& targets,
                         const Mask& mask);

Tensor softmax_rows(const Tensor& logits);
BinaryVector predict_argmax(const Tensor& logits);

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t step = 0;
};

// Standard bias-corrected Adam; state tensors are allocated on first use.
void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state, const AdamConfig& cfg);

enum class Activation { relu, identity };

// One-hidden-layer perceptron, shared by the feature debiasing stage and the
// adversarial discriminator.
struct Mlp {
  Tensor w1, b1;  // in -> hidden
  Tensor w2, b2;  // hidden -> out
  Activation act = Activation::relu;

  struct Trace {
    Tensor in, pre1;
  };
  struct Grads {
    Tensor w1, b1, w2, b2;
    Tensor input;  // filled when want_input_grad
  };

  std::size_t in_dim() const { return w1.rows(); }
  std::size_t hidden_dim() const { return w1.cols(); }
  std::size_t out_dim() const { return w2.cols(); }

  Tensor forward(const Tensor& x) const;
  Tensor forward(const Tensor& x, Trace& tr) const;
  Grads backward(const Trace& tr, const Tensor& grad_out, bool want_input_grad) const;

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  bool is_zero() const;

  static Mlp glorot(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng,
                    Activation act = Activation::relu);
  static Mlp zeros(std::size_t in, std::size_t hidden, std::size_t out,
                   Activation act = Activation::relu);
};

// Elementwise helpers shared across modules.
void relu_inplace(Tensor& t);
Tensor colsum(const Tensor& t);              // 1 x cols
void add_row_vector(Tensor& t, const Tensor& b);

std::uint64_t hash_tensors(const std::vector<const Tensor*>& ts);

}  // namespace fairicd
