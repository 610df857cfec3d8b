// Backbone layers, losses, optimizer, and the shared perceptron: hand-computed
// fixtures plus central-difference gradient verification.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numeric>

#include "fairicd/nn.hpp"
#include "support.hpp"

using namespace fairicd;
using namespace testsupport;

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kFdRelTol = 1e-4;

void check_close_fd(double analytic, double fd) {
  const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-8});
  if (std::max(std::abs(analytic), std::abs(fd)) < 1e-7) return;  // dead unit
  CHECK(std::abs(analytic - fd) / denom < kFdRelTol);
}

GnnModel single_layer_model(LayerParams layer) {
  GnnModel m;
  m.dropout = 0.0;
  m.layers.push_back(std::move(layer));
  return m;
}

Graph edgeless(std::size_t n) { return Graph::from_undirected_edges(n, {}); }

}  // namespace

TEST_CASE("make_model shape contract") {
  Rng rng(40);
  GnnModel m = make_model(LayerKind::gin, 6, 9, 2, 2, 0.5, rng);
  REQUIRE(m.layers.size() == 3);  // two backbone layers plus the dense head
  CHECK(m.layers[0].kind == LayerKind::gin);
  CHECK(m.layers[1].kind == LayerKind::gin);
  CHECK(m.layers[2].kind == LayerKind::dense);
  CHECK(m.layers[0].in_dim == 6);
  CHECK(m.layers[1].in_dim == 9);
  CHECK(m.layers[2].out_dim == 2);
  CHECK(m.representation_dim() == 9);
  for (const LayerParams& l : m.layers) {
    for (double v : l.b1.raw()) CHECK(v == 0.0);
    for (double v : l.b2.raw()) CHECK(v == 0.0);
  }
}

TEST_CASE("convolution layer on an edgeless graph is a linear map") {
  // self-loop normalization degenerates to the identity, so the single layer
  // computes X W1 + b1 exactly
  LayerParams layer;
  layer.kind = LayerKind::gcn;
  layer.in_dim = 2;
  layer.out_dim = 2;
  layer.w1 = Tensor::from_rows(2, 2, {1.0, 0.0, 0.0, 1.0});
  layer.b1 = Tensor(1, 2);
  GnnModel m = single_layer_model(layer);
  GraphOps ops = GraphOps::build(edgeless(3));
  Tensor x = Tensor::from_rows(3, 2, {1.0, -2.0, 0.5, 3.0, -1.0, 4.0});
  Tensor out = m.forward_eval(x, ops);
  REQUIRE(out.same_shape(x));
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(out.raw()[i] == doctest::Approx(x.raw()[i]).epsilon(1e-12));
}

TEST_CASE("convolution layer two-node hand fixture") {
  // edge (0,1): augmented degrees are 2, every normalized entry is 1/2, so the
  // aggregation maps both rows to the average (1+3)/2 = 2; W=2, b=0.5 -> 4.5
  LayerParams layer;
  layer.kind = LayerKind::gcn;
  layer.in_dim = 1;
  layer.out_dim = 1;
  layer.w1 = Tensor::from_rows(1, 1, {2.0});
  layer.b1 = Tensor::from_rows(1, 1, {0.5});
  GnnModel m = single_layer_model(layer);
  GraphOps ops = GraphOps::build(Graph::from_undirected_edges(2, {{0, 1}}));
  Tensor x = Tensor::from_rows(2, 1, {1.0, 3.0});
  Tensor out = m.forward_eval(x, ops);
  CHECK(out(0, 0) == doctest::Approx(4.5).epsilon(1e-12));
  CHECK(out(1, 0) == doctest::Approx(4.5).epsilon(1e-12));
}

TEST_CASE("isomorphism layer with identity perceptron reproduces sums") {
  LayerParams layer;
  layer.kind = LayerKind::gin;
  layer.in_dim = 1;
  layer.out_dim = 1;
  layer.w1 = Tensor::from_rows(1, 1, {1.0});
  layer.b1 = Tensor(1, 1);
  layer.w2 = Tensor::from_rows(1, 1, {1.0});
  layer.b2 = Tensor(1, 1);
  GnnModel m = single_layer_model(layer);

  SUBCASE("no edges: output equals nonnegative input") {
    GraphOps ops = GraphOps::build(edgeless(3));
    Tensor x = Tensor::from_rows(3, 1, {1.0, 0.0, 2.5});
    Tensor out = m.forward_eval(x, ops);
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(out(i, 0) == doctest::Approx(x(i, 0)).epsilon(1e-12));
  }
  SUBCASE("path graph: output equals closed-neighborhood sums") {
    GraphOps ops = GraphOps::build(Graph::from_undirected_edges(3, {{0, 1}, {1, 2}}));
    Tensor x = Tensor::from_rows(3, 1, {1.0, 2.0, 4.0});
    Tensor out = m.forward_eval(x, ops);
    CHECK(out(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(out(1, 0) == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(out(2, 0) == doctest::Approx(6.0).epsilon(1e-12));
  }
}

TEST_CASE("sampling-aggregation layer separates self and neighbor paths") {
  LayerParams layer;
  layer.kind = LayerKind::sage;
  layer.in_dim = 2;
  layer.out_dim = 2;
  layer.w1 = Tensor::from_rows(2, 2, {1.0, 2.0, 3.0, 4.0});
  layer.w2 = Tensor::from_rows(2, 2, {5.0, 6.0, 7.0, 8.0});
  layer.b1 = Tensor::from_rows(1, 2, {0.1, -0.2});
  GnnModel m = single_layer_model(layer);
  // edge (0,1); node 2 isolated
  GraphOps ops = GraphOps::build(Graph::from_undirected_edges(3, {{0, 1}}));
  Tensor x = Tensor::from_rows(3, 2, {1.0, 0.0, 0.0, 1.0, 2.0, 3.0});
  Tensor out = m.forward_eval(x, ops);
  // row0 = x0 W1 + x1 W2 + b1; row1 symmetric; row2 = x2 W1 + b1 (no neighbors)
  CHECK(out(0, 0) == doctest::Approx(8.1).epsilon(1e-12));
  CHECK(out(0, 1) == doctest::Approx(9.8).epsilon(1e-12));
  CHECK(out(1, 0) == doctest::Approx(8.1).epsilon(1e-12));
  CHECK(out(1, 1) == doctest::Approx(9.8).epsilon(1e-12));
  CHECK(out(2, 0) == doctest::Approx(11.1).epsilon(1e-12));
  CHECK(out(2, 1) == doctest::Approx(15.8).epsilon(1e-12));
}

TEST_CASE("node relabeling permutes logits without changing them") {
  Rng rng(41);
  RandomInstance inst = random_instance(rng, 40);
  const std::size_t n = inst.graph.num_nodes;
  Tensor x = random_features(rng, n, 5);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  shuffle(perm, rng);

  // permuted copies of graph and features
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t e = inst.graph.row_offsets[i]; e < inst.graph.row_offsets[i + 1]; ++e) {
      const NodeId j = inst.graph.col_indices[e];
      if (i < j)
        edges.emplace_back(static_cast<NodeId>(perm[i]), static_cast<NodeId>(perm[j]));
    }
  Graph pg = Graph::from_undirected_edges(n, edges);
  Tensor px(n, 5);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 5; ++c) px(perm[i], c) = x(i, c);

  for (LayerKind kind : {LayerKind::gcn, LayerKind::gin, LayerKind::sage}) {
    CAPTURE(layer_kind_name(kind));
    Rng init = Rng::derive(99, "model");
    GnnModel m = make_model(kind, 5, 7, 2, 2, 0.5, init);
    Tensor base = m.forward_eval(x, GraphOps::build(inst.graph));
    Tensor moved = m.forward_eval(px, GraphOps::build(pg));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < 2; ++c)
        CHECK(std::abs(moved(perm[i], c) - base(i, c)) <=
              1e-9 * (1.0 + std::abs(base(i, c))));
  }
}

TEST_CASE("reverse-mode gradients match central differences") {
  Rng rng(42);
  const std::size_t n = 8, d = 3, hidden = 4;
  Graph g = [&] {
    std::vector<std::pair<NodeId, NodeId>> edges;
    Rng er(43);
    for (NodeId i = 0; i < n; ++i)
      for (NodeId j = i + 1; j < n; ++j)
        if (er.bernoulli(0.4)) edges.emplace_back(i, j);
    return Graph::from_undirected_edges(n, edges);
  }();
  GraphOps ops = GraphOps::build(g);
  Tensor x = random_features(rng, n, d);
  LabelVector y(n);
  for (auto& v : y) v = static_cast<std::int8_t>(rng.below(2));
  Mask mask(n, 1);
  mask[3] = 0;  // one held-out row exercises mask handling

  for (LayerKind kind : {LayerKind::gcn, LayerKind::gin, LayerKind::sage}) {
    CAPTURE(layer_kind_name(kind));
    Rng init(44);
    GnnModel m = make_model(kind, d, hidden, 1, 2, 0.0, init);

    auto loss_at = [&] {
      return softmax_cross_entropy(m.forward_eval(x, ops), y, mask).loss;
    };

    ForwardTrace trace;
    Tensor logits = m.forward(x, ops, false, nullptr, trace);
    LossGrad lg = softmax_cross_entropy(logits, y, mask);
    std::vector<Tensor> grads = m.backward(ops, trace, lg.grad);
    std::vector<Tensor*> params = m.parameters();
    REQUIRE(grads.size() == params.size());

    for (std::size_t p = 0; p < params.size(); ++p)
      for (std::size_t i = 0; i < params[p]->size(); ++i) {
        double& v = params[p]->raw()[i];
        const double saved = v;
        v = saved + kFdStep;
        const double up = loss_at();
        v = saved - kFdStep;
        const double down = loss_at();
        v = saved;
        check_close_fd(grads[p].raw()[i], (up - down) / (2.0 * kFdStep));
      }
  }
}

TEST_CASE("auxiliary gradient injected at the head input is honored") {
  // loss = cross-entropy + <G, head_input>; backward with the extra term must
  // match central differences of that combined objective
  Rng rng(45);
  const std::size_t n = 6, d = 3, hidden = 4;
  Graph g = Graph::from_undirected_edges(
      n, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}, {1, 4}});
  GraphOps ops = GraphOps::build(g);
  Tensor x = random_features(rng, n, d);
  LabelVector y = {0, 1, 1, 0, 1, 0};
  Mask mask(n, 1);
  Tensor G = random_features(rng, n, hidden);

  Rng init(46);
  GnnModel m = make_model(LayerKind::gcn, d, hidden, 1, 2, 0.0, init);

  auto loss_at = [&] {
    ForwardTrace tr;
    Tensor logits = m.forward(x, ops, false, nullptr, tr);
    double extra = 0.0;
    for (std::size_t i = 0; i < G.size(); ++i)
      extra += G.raw()[i] * tr.head_input.raw()[i];
    return softmax_cross_entropy(logits, y, mask).loss + extra;
  };

  ForwardTrace trace;
  Tensor logits = m.forward(x, ops, false, nullptr, trace);
  LossGrad lg = softmax_cross_entropy(logits, y, mask);
  std::vector<Tensor> grads = m.backward(ops, trace, lg.grad, &G);
  std::vector<Tensor*> params = m.parameters();

  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::size_t i = 0; i < params[p]->size(); ++i) {
      double& v = params[p]->raw()[i];
      const double saved = v;
      v = saved + kFdStep;
      const double up = loss_at();
      v = saved - kFdStep;
      const double down = loss_at();
      v = saved;
      check_close_fd(grads[p].raw()[i], (up - down) / (2.0 * kFdStep));
    }
}

TEST_CASE("cross-entropy fixtures") {
  SUBCASE("uniform logits give log(num_classes)") {
    Tensor logits(5, 2);
    LabelVector y = {0, 1, 0, 1, 0};
    Mask mask(5, 1);
    LossGrad lg = softmax_cross_entropy(logits, y, mask);
    CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    for (std::size_t i = 0; i < 5; ++i) {
      double row_sum = lg.grad(i, 0) + lg.grad(i, 1);
      CHECK(std::abs(row_sum) <= 1e-15);
    }
  }
  SUBCASE("rows outside the mask contribute nothing") {
    Tensor logits = Tensor::from_rows(3, 2, {5.0, -5.0, 1.0, 2.0, 0.0, 0.0});
    LabelVector y = {0, 1, 0};
    Mask only_first = {1, 0, 0};
    LossGrad lg = softmax_cross_entropy(logits, y, only_first);
    CHECK(lg.loss < 1e-4);  // the surviving row is correct with a huge margin
    CHECK(lg.grad(1, 0) == 0.0);
    CHECK(lg.grad(1, 1) == 0.0);
    CHECK(lg.grad(2, 0) == 0.0);
  }
  SUBCASE("extreme logits stay finite") {
    Tensor logits = Tensor::from_rows(2, 2, {1000.0, -1000.0, -1000.0, 1000.0});
    LabelVector y = {0, 1};
    Mask mask(2, 1);
    LossGrad lg = softmax_cross_entropy(logits, y, mask);
    CHECK(std::isfinite(lg.loss));
    CHECK(lg.loss < 1e-6);
    CHECK(lg.grad.all_finite());
  }
  SUBCASE("gradient matches central differences") {
    Rng rng(47);
    Tensor logits = random_features(rng, 6, 2);
    LabelVector y = {0, 1, 1, 0, 0, 1};
    Mask mask = {1, 1, 0, 1, 1, 1};
    LossGrad lg = softmax_cross_entropy(logits, y, mask);
    for (std::size_t i = 0; i < logits.size(); ++i) {
      double& v = logits.raw()[i];
      const double saved = v;
      v = saved + kFdStep;
      const double up = softmax_cross_entropy(logits, y, mask).loss;
      v = saved - kFdStep;
      const double down = softmax_cross_entropy(logits, y, mask).loss;
      v = saved;
      check_close_fd(lg.grad.raw()[i], (up - down) / (2.0 * kFdStep));
    }
  }
}

TEST_CASE("softmax rows are normalized and stable") {
  Tensor logits = Tensor::from_rows(3, 2, {0.0, 0.0, 700.0, -700.0, -700.0, 700.0});
  Tensor p = softmax_rows(logits);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(p(i, 0) + p(i, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.all_finite());
}

TEST_CASE("argmax prediction favors the lower class on ties") {
  Tensor logits = Tensor::from_rows(3, 2, {0.3, 0.7, 2.0, 2.0, 5.0, -1.0});
  BinaryVector pred = predict_argmax(logits);
  CHECK(pred == BinaryVector{1, 0, 0});
}

TEST_CASE("binary cross-entropy fixtures") {
  Mask all = {1, 1};
  SUBCASE("zero logit costs log 2") {
    Tensor z(2, 1);
    BinaryVector t = {0, 1};
    LossGrad lg = bce_with_logits(z, t, all);
    CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("confident correct logits cost almost nothing, stay finite at extremes") {
    Tensor z = Tensor::from_rows(2, 1, {20.0, -20.0});
    BinaryVector t = {1, 0};
    LossGrad lg = bce_with_logits(z, t, all);
    CHECK(lg.loss < 1e-6);
    Tensor huge = Tensor::from_rows(2, 1, {800.0, -800.0});
    BinaryVector wrong = {0, 1};
    LossGrad lw = bce_with_logits(huge, wrong, all);
    CHECK(std::isfinite(lw.loss));
    CHECK(lw.loss == doctest::Approx(800.0).epsilon(1e-9));
  }
  SUBCASE("flipping targets and logits together leaves the loss unchanged") {
    Rng rng(48);
    Tensor z = random_features(rng, 7, 1);
    BinaryVector t = {0, 1, 1, 0, 1, 0, 0};
    Mask mask = {1, 0, 1, 1, 1, 1, 1};
    Tensor zf = z;
    for (double& v : zf.raw()) v = -v;
    BinaryVector tf = t;
    for (auto& v : tf) v = static_cast<std::uint8_t>(1 - v);
    CHECK(bce_with_logits(z, t, mask).loss ==
          doctest::Approx(bce_with_logits(zf, tf, mask).loss).epsilon(1e-12));
  }
  SUBCASE("gradient matches central differences") {
    Rng rng(49);
    Tensor z = random_features(rng, 6, 1);
    BinaryVector t = {0, 1, 1, 0, 0, 1};
    Mask mask = {1, 1, 1, 0, 1, 1};
    LossGrad lg = bce_with_logits(z, t, mask);
    for (std::size_t i = 0; i < z.size(); ++i) {
      double& v = z.raw()[i];
      const double saved = v;
      v = saved + kFdStep;
      const double up = bce_with_logits(z, t, mask).loss;
      v = saved - kFdStep;
      const double down = bce_with_logits(z, t, mask).loss;
      v = saved;
      check_close_fd(lg.grad.raw()[i], (up - down) / (2.0 * kFdStep));
    }
  }
}

TEST_CASE("optimizer behavior") {
  SUBCASE("zero gradients leave parameters untouched") {
    Tensor p = Tensor::from_rows(2, 2, {1.0, -2.0, 3.0, 4.0});
    Tensor before = p;
    AdamState st;
    adam_step({&p}, {Tensor(2, 2)}, st, {});
    CHECK(p.raw() == before.raw());
  }
  SUBCASE("first step with unit gradient moves by about the learning rate") {
    Tensor p(1, 1);
    AdamState st;
    AdamConfig cfg;
    cfg.lr = 0.01;
    Tensor g = Tensor::from_rows(1, 1, {1.0});
    adam_step({&p}, {g}, st, cfg);
    CHECK(p(0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(st.step == 1);
  }
  SUBCASE("identical runs are bitwise identical") {
    auto run = [] {
      Rng rng(50);
      Tensor p = random_features(rng, 3, 3);
      AdamState st;
      for (int i = 0; i < 20; ++i) {
        Tensor g = random_features(rng, 3, 3);
        adam_step({&p}, {g}, st, {});
      }
      return p.raw();
    };
    CHECK(run() == run());
  }
}

TEST_CASE("perceptron gradients match central differences") {
  Rng rng(51);
  Mlp mlp = Mlp::glorot(3, 5, 2, rng);
  Tensor x = random_features(rng, 7, 3);
  Tensor target = random_features(rng, 7, 2);

  auto loss_of = [&](const Tensor& out) {
    double l = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double d = out.raw()[i] - target.raw()[i];
      l += d * d;
    }
    return 0.5 * l;
  };
  auto loss_at = [&] { return loss_of(mlp.forward(x)); };

  Mlp::Trace tr;
  Tensor out = mlp.forward(x, tr);
  Tensor grad_out(out.rows(), out.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    grad_out.raw()[i] = out.raw()[i] - target.raw()[i];
  Mlp::Grads grads = mlp.backward(tr, grad_out, true);

  std::vector<Tensor*> params = mlp.parameters();
  std::vector<const Tensor*> analytic = {&grads.w1, &grads.b1, &grads.w2, &grads.b2};
  REQUIRE(params.size() == 4);
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t i = 0; i < params[p]->size(); ++i) {
      double& v = params[p]->raw()[i];
      const double saved = v;
      v = saved + kFdStep;
      const double up = loss_at();
      v = saved - kFdStep;
      const double down = loss_at();
      v = saved;
      check_close_fd(analytic[p]->raw()[i], (up - down) / (2.0 * kFdStep));
    }

  // input gradient through the same objective
  for (std::size_t i = 0; i < x.size(); ++i) {
    double& v = x.raw()[i];
    const double saved = v;
    v = saved + kFdStep;
    const double up = loss_at();
    v = saved - kFdStep;
    const double down = loss_at();
    v = saved;
    check_close_fd(grads.input.raw()[i], (up - down) / (2.0 * kFdStep));
  }
}

TEST_CASE("zero-constructed perceptron maps everything to zero") {
  Mlp mlp = Mlp::zeros(4, 6, 4);
  CHECK(mlp.is_zero());
  Rng rng(52);
  Tensor x = random_features(rng, 5, 4);
  Tensor out = mlp.forward(x);
  for (double v : out.raw()) CHECK(v == 0.0);
  Rng grng(53);
  CHECK(!Mlp::glorot(4, 6, 4, grng).is_zero());
}

TEST_CASE("training drives a separable fixture below 0.1 loss") {
  const std::size_t n = 20;
  Rng rng(54);
  Tensor x(n, 2);
  LabelVector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<std::int8_t>(i % 2);
    const double center = y[i] ? 2.0 : -2.0;
    x(i, 0) = center + 0.1 * rng.normal();
    x(i, 1) = -center + 0.1 * rng.normal();
  }
  Mask mask(n, 1);
  GraphOps ops = GraphOps::build(edgeless(n));
  Rng init(55);
  GnnModel m = make_model(LayerKind::gcn, 2, 8, 1, 2, 0.0, init);
  AdamState st;
  AdamConfig cfg;
  cfg.lr = 0.05;
  double loss = 0.0;
  for (int epoch = 0; epoch < 60; ++epoch) {
    ForwardTrace tr;
    Tensor logits = m.forward(x, ops, true, nullptr, tr);
    LossGrad lg = softmax_cross_entropy(logits, y, mask);
    loss = lg.loss;
    std::vector<Tensor> grads = m.backward(ops, tr, lg.grad);
    adam_step(m.parameters(), grads, st, cfg);
  }
  CHECK(loss < 0.1);
}

TEST_CASE("elementwise helpers") {
  Tensor t = Tensor::from_rows(2, 2, {1.0, -2.0, -0.5, 3.0});
  relu_inplace(t);
  CHECK(t.raw() == std::vector<double>{1.0, 0.0, 0.0, 3.0});

  Tensor s = colsum(Tensor::from_rows(2, 2, {1.0, 2.0, 3.0, 4.0}));
  REQUIRE(s.rows() == 1);
  CHECK(s(0, 0) == 4.0);
  CHECK(s(0, 1) == 6.0);

  Tensor m = Tensor::from_rows(2, 2, {1.0, 2.0, 3.0, 4.0});
  add_row_vector(m, Tensor::from_rows(1, 2, {10.0, 20.0}));
  CHECK(m.raw() == std::vector<double>{11.0, 22.0, 13.0, 24.0});
}

TEST_CASE("parameter hashing distinguishes single-entry changes") {
  Rng rng(56);
  Tensor a = random_features(rng, 4, 4);
  Tensor b = a;
  const std::uint64_t ha = hash_tensors({&a, &b});
  CHECK(ha == hash_tensors({&a, &b}));
  b(2, 2) += 1e-15;
  CHECK(ha != hash_tensors({&a, &b}));
}
