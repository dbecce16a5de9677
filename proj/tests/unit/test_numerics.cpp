#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "victr/errors.hpp"
#include "victr/numerics/autodiff.hpp"
#include "victr/numerics/grad_check.hpp"
#include "victr/numerics/nn.hpp"
#include "victr/numerics/optim.hpp"
#include "victr/numerics/rng.hpp"

using namespace victr;
using victr::fixtures::random_tensor;

TEST(Tensor, ShapeAndAccess) {
  auto t = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t(1, 2), 6.0);
  EXPECT_EQ(t.row(1)[0], 4.0);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(Tensor, CheckFiniteRejectsNanAndInf) {
  Tensor t({1, 2});
  EXPECT_NO_THROW(t.check_finite("t"));
  t[1] = std::nan("");
  EXPECT_THROW(t.check_finite("t"), NonFiniteError);
  t[1] = INFINITY;
  EXPECT_THROW(t.check_finite("t"), NonFiniteError);
}

TEST(Tensor, ConcatAndSliceRows) {
  const Tensor parts[] = {Tensor::matrix(1, 2, {1, 2}), Tensor::matrix(2, 2, {3, 4, 5, 6})};
  auto c = concat_rows(parts);
  EXPECT_EQ(c, Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(slice_rows(c, 1, 3), parts[1]);
}

TEST(Cosine, Examples) {
  const double a[] = {3, 4};
  EXPECT_NEAR(cosine_affinity(a, a), 1.0, 1e-15);
  const double e0[] = {1, 0}, e1[] = {0, 1}, neg[] = {-2, 0};
  EXPECT_EQ(cosine_affinity(e0, e1), 0.0);
  EXPECT_NEAR(cosine_affinity(e0, neg), -1.0, 1e-15);
}

TEST(Cosine, RejectsZeroAndMismatch) {
  const double z[] = {0, 0}, a[] = {1, 0}, b[] = {1, 0, 0};
  EXPECT_THROW(cosine_affinity(z, a), ZeroNormError);
  EXPECT_THROW(cosine_affinity(a, b), ShapeError);
}

TEST(LayerNorm, Examples) {
  const Tensor one = Tensor::matrix(1, 2, {1, 1});
  const Tensor zero({1, 2});
  EXPECT_EQ(layer_norm(Tensor::matrix(1, 3, {5, 5, 5}), Tensor::matrix(1, 3, {1, 1, 1}), Tensor({1, 3})),
            Tensor({1, 3}));

  // (1,-1): mean 0, variance 1, so y = x / sqrt(1 + eps).
  auto y = layer_norm(Tensor::matrix(1, 2, {1, -1}), one, zero);
  const double s = 1.0 / std::sqrt(1.0 + kLayerNormEps);
  EXPECT_NEAR(y[0], s, 1e-15);
  EXPECT_NEAR(y[1], -s, 1e-15);
  EXPECT_NEAR(y[0], 1.0, 1e-5);

  auto c = layer_norm(Tensor::matrix(1, 2, {3, -7}), zero, Tensor::matrix(1, 2, {0.25, 0.25}));
  EXPECT_EQ(c, Tensor::matrix(1, 2, {0.25, 0.25}));
}

TEST(Attention, SingleKeyReturnsInputRow) {
  auto x = Tensor::matrix(1, 2, {0.3, -1.2});
  EXPECT_LT(fixtures::max_abs_diff(multi_head_self_attention(x, identity_attention(2), 1), x), 1e-15);
}

TEST(Attention, TwoTokenHandOracle) {
  auto x = Tensor::matrix(2, 2, {1, 0, 0, 1});
  auto y = multi_head_self_attention(x, identity_attention(2), 1);
  // Row 0 scores: (1/sqrt2, 0); softmax weights w and 1-w mix rows (1,0),(0,1).
  const double w = std::exp(1 / std::numbers::sqrt2) / (std::exp(1 / std::numbers::sqrt2) + 1.0);
  EXPECT_NEAR(y(0, 0), w, 1e-10);
  EXPECT_NEAR(y(0, 1), 1 - w, 1e-10);
  EXPECT_NEAR(y(0, 0), 0.6698, 1e-4);
  EXPECT_NEAR(y(0, 1), 0.3302, 1e-4);
}

TEST(Attention, RowPermutationEquivariance) {
  Rng rng(3);
  auto w = fixtures::random_attention(rng, 4);
  auto x = random_tensor(rng, 5, 4);
  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  Tensor xp({5, 4});
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 4; ++c) xp(r, c) = x(perm[r], c);
  auto y = multi_head_self_attention(x, w, 2);
  auto yp = multi_head_self_attention(xp, w, 2);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(yp(r, c), y(perm[r], c), 1e-12);
}

TEST(Attention, GroupsDoNotInteract) {
  Rng rng(4);
  auto w = fixtures::random_attention(rng, 4);
  auto x = random_tensor(rng, 4, 4);
  ad::Tape tape;
  auto bw = bind(tape, w, false);
  const ad::RowGroups groups = {{0, 2}, {1, 3}};
  auto y = multi_head_self_attention(tape.constant(x), bw, 2, groups).value();
  auto x2 = x;
  for (std::size_t c = 0; c < 4; ++c) x2(1, c) += 5.0;
  auto y2 = multi_head_self_attention(tape.constant(x2), bw, 2, groups).value();
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_EQ(y(0, c), y2(0, c));
    EXPECT_EQ(y(2, c), y2(2, c));
  }
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  Tensor p = Tensor::matrix(1, 2, {0.5, -2.0});
  const Tensor g({1, 2});
  const Tensor before = p;
  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  cfg.total_steps = 3;
  const ParamRef refs[] = {{&p, &g, true}};
  auto state = make_optimizer_state(refs, cfg);
  adam_step(refs, state);
  EXPECT_EQ(p, before);
}

TEST(Adam, FirstStepMovesBySignTimesLr) {
  Tensor p = Tensor::matrix(1, 3, {0.0, 0.0, 0.0});
  const Tensor g = Tensor::matrix(1, 3, {3.0, -0.5, 1e-3});
  AdamWConfig cfg;
  cfg.lr_max = 0.1;
  cfg.weight_decay = 0.0;
  const ParamRef refs[] = {{&p, &g, true}};
  auto state = make_optimizer_state(refs, cfg);
  adam_step(refs, state);
  EXPECT_NEAR(p[0], -0.1, 1e-8);
  EXPECT_NEAR(p[1], 0.1, 1e-8);
  EXPECT_NEAR(p[2], -0.1, 1e-5);
}

TEST(Adam, HandOracle) {
  Tensor p = Tensor::scalar(1.0);
  const Tensor g = Tensor::scalar(0.1);
  AdamWConfig cfg;
  cfg.lr_max = 0.01;
  cfg.weight_decay = 0.0;
  const ParamRef refs[] = {{&p, &g, true}};
  auto state = make_optimizer_state(refs, cfg);
  adam_step(refs, state);
  const double m_hat = (0.1 * 0.1) / 0.1;
  const double v_hat = (0.001 * 0.01) / 0.001;
  const double expected = 1.0 - 0.01 * m_hat / (std::sqrt(v_hat) + 1e-8);
  EXPECT_NEAR(p[0], expected, 1e-10);
  EXPECT_NEAR(p[0], 0.990000001, 1e-10);
  EXPECT_EQ(state.step_count, 1u);
}

TEST(Adam, DecoupledDecayOnlyWhereRequested) {
  Tensor a = Tensor::scalar(2.0), b = Tensor::scalar(2.0);
  const Tensor g({1, 1});
  AdamWConfig cfg;
  cfg.lr_max = 0.1;
  cfg.weight_decay = 0.5;
  const ParamRef refs[] = {{&a, &g, true}, {&b, &g, false}};
  auto state = make_optimizer_state(refs, cfg);
  adam_step(refs, state);
  EXPECT_NEAR(a[0], 2.0 * (1 - 0.1 * 0.5), 1e-15);
  EXPECT_EQ(b[0], 2.0);
}

TEST(Adam, ExhaustedScheduleThrows) {
  Tensor p = Tensor::scalar(1.0);
  const Tensor g = Tensor::scalar(1.0);
  AdamWConfig cfg;
  cfg.total_steps = 1;
  const ParamRef refs[] = {{&p, &g, true}};
  auto state = make_optimizer_state(refs, cfg);
  adam_step(refs, state);
  EXPECT_THROW(adam_step(refs, state), RangeError);
}

TEST(CosineLr, Endpoints) {
  EXPECT_EQ(cosine_lr(0, 100, 1e-3, 1e-5), 1e-3);
  EXPECT_NEAR(cosine_lr(100, 100, 1e-3, 1e-5), 1e-5, 1e-18);
  EXPECT_NEAR(cosine_lr(50, 100, 1e-3, 1e-5), (1e-3 + 1e-5) / 2, 1e-18);
  EXPECT_THROW(cosine_lr(101, 100, 1e-3, 1e-5), RangeError);
}

TEST(Losses, SoftmaxCrossEntropy) {
  ad::Tape tape;
  auto uniform = tape.constant(Tensor({4, 1}, 0.7));
  EXPECT_NEAR(ad::softmax_cross_entropy(uniform, 2).value()[0], std::log(4.0), 1e-14);
  auto two = tape.constant(Tensor::matrix(2, 1, {1.0, -1.0}));
  EXPECT_NEAR(ad::softmax_cross_entropy(two, 0).value()[0], std::log(1 + std::exp(-2.0)), 1e-14);
  EXPECT_NEAR(ad::softmax_cross_entropy(two, 0).value()[0], 0.1269, 1e-4);
  auto saturated = tape.constant(Tensor::matrix(2, 1, {800.0, -800.0}));
  EXPECT_EQ(ad::softmax_cross_entropy(saturated, 0).value()[0], 0.0);
  EXPECT_THROW(ad::softmax_cross_entropy(two, 2), LabelError);
}

TEST(Losses, SigmoidBce) {
  ad::Tape tape;
  auto z = tape.constant(Tensor::matrix(2, 1, {0.0, 2.0}));
  const double expected = (std::log(2.0) + std::log(1 + std::exp(-2.0))) / 2;
  EXPECT_NEAR(ad::sigmoid_bce_mean(z, {0.0, 1.0}).value()[0], expected, 1e-14);
}

TEST(GradCheck, LinearFunctionIsExact) {
  Rng rng(1);
  const Tensor c = random_tensor(rng, 5, 1);
  const Tensor x = random_tensor(rng, 5, 1);
  auto g = [&](ad::Tape& tape, ad::Var v) {
    Tensor ct({1, 5}, std::vector<double>(c.values().begin(), c.values().end()));
    return ad::matmul(tape.constant(ct), v);
  };
  EXPECT_LT(grad_check(g, x), 1e-10);
}

TEST(GradCheck, CosineAtRandomUnitVectors) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = random_tensor(rng, 1, 6);
    double norm = 0;
    for (double v : x.values()) norm += v * v;
    for (auto& v : x.values()) v /= std::sqrt(norm);
    const Tensor b = random_tensor(rng, 1, 6);
    auto f = [&](ad::Tape& tape, ad::Var v) { return ad::row_cosine(v, tape.constant(b)); };
    EXPECT_LT(grad_check(f, x, 1e-5), 1e-6);
  }
}

// Every differentiable op against central differences.
TEST(GradCheck, EveryOp) {
  Rng rng(5);
  const Tensor a = random_tensor(rng, 3, 4);
  const Tensor b = random_tensor(rng, 4, 2);
  const Tensor c = random_tensor(rng, 3, 4);
  const Tensor s = Tensor::scalar(0.7);
  const Tensor col = random_tensor(rng, 3, 1);
  const Tensor row = random_tensor(rng, 1, 4);
  const Tensor w = random_tensor(rng, 1, 4);

  auto check = [&](const char* name, ScalarFn f, std::vector<Tensor> inputs) {
    auto r = grad_check(f, inputs, 1e-6);
    EXPECT_LT(r.max_rel_error, 1e-7) << name;
    EXPECT_GT(r.coordinates, 0u) << name;
  };
  auto sq = [](ad::Var v) { return ad::row_dot(v, v); };  // nonlinear readout

  check("matmul", [&](ad::Tape&, auto v) { return ad::sum_all(sq(ad::matmul(v[0], v[1]))); }, {a, b});
  check("add/sub", [&](ad::Tape&, auto v) { return ad::sum_all(sq(ad::sub(ad::add(v[0], v[1]), ad::mul_const(v[1], 3)))); }, {a, c});
  check("add_row_bias", [&](ad::Tape&, auto v) { return ad::sum_all(sq(ad::add_row_bias(v[0], v[1]))); }, {a, row});
  check("linear", [&](ad::Tape& t, auto v) { return ad::sum_all(sq(ad::linear(v[0], v[1], t.constant(Tensor({1, 2}, 0.3))))); }, {a, b});
  check("scale_by", [&](ad::Tape&, auto v) { return ad::sum_all(sq(ad::scale_by(v[0], v[1]))); }, {a, s});
  check("sigmoid", [&](ad::Tape&, auto v) { return ad::sum_all(sq(ad::sigmoid(v[0]))); }, {a});
  check("gelu", [&](ad::Tape&, auto v) { return ad::sum_all(sq(ad::gelu(v[0]))); }, {a});
  check("reshape", [&](ad::Tape&, auto v) { return ad::sum_all(sq(ad::reshape(v[0], {4, 3}))); }, {a});
  check("layer_norm", [&](ad::Tape&, auto v) { return ad::sum_all(ad::mul_const(ad::row_dot(ad::layer_norm(v[0], v[1], v[2]), v[3]), 1.0)); },
        {a, w, row, c});
  check("row_cosine", [&](ad::Tape&, auto v) { return ad::sum_all(sq(ad::row_cosine(v[0], v[1]))); }, {a, c});
  check("row_scale", [&](ad::Tape&, auto v) { return ad::sum_all(sq(ad::row_scale(v[0], v[1]))); }, {a, col});
  check("gather_rows", [&](ad::Tape&, auto v) { return ad::sum_all(sq(ad::gather_rows(v[0], {2, 0, 2, 1}))); }, {a});
  check("concat_rows", [&](ad::Tape&, auto v) {
    const ad::Var parts[] = {v[0], v[1]};
    return ad::sum_all(sq(ad::concat_rows(parts)));
  }, {a, c});
  check("group_mean", [&](ad::Tape&, auto v) { return ad::sum_all(sq(ad::group_mean(v[0], {{0, 2}, {1}}))); }, {a});
  check("mean_rows/mean_all", [&](ad::Tape&, auto v) { return ad::mean_all(sq(ad::mean_rows(v[0]))); }, {a});
  check("grouped_attention", [&](ad::Tape&, auto v) {
    return ad::sum_all(sq(ad::grouped_attention(v[0], v[1], v[2], {{0, 1}, {2}}, 2)));
  }, {a, c, random_tensor(rng, 3, 4)});
  check("softmax_ce", [&](ad::Tape&, auto v) { return ad::softmax_cross_entropy(v[0], 1); }, {col});
  check("sigmoid_bce", [&](ad::Tape&, auto v) { return ad::sigmoid_bce_mean(v[0], {1.0, 0.0, 1.0}); }, {col});
}

TEST(Autodiff, GradientsAccumulateAcrossUses) {
  ad::Tape tape;
  auto x = tape.leaf(Tensor::scalar(3.0), true);
  auto y = ad::add(ad::mul_const(x, 2.0), ad::scale_by(x, x));  // 2x + x^2
  tape.backward(y);
  EXPECT_DOUBLE_EQ(x.grad()[0], 2.0 + 6.0);
}

TEST(Autodiff, ShapeErrors) {
  ad::Tape tape;
  auto a = tape.constant(Tensor({2, 3}));
  auto b = tape.constant(Tensor({2, 3}));
  EXPECT_THROW(ad::matmul(a, b), ShapeError);
  EXPECT_THROW(ad::add(a, tape.constant(Tensor({3, 2}))), ShapeError);
}

TEST(Rng, DeterministicAndForkIndependent) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng root(42);
  auto f1 = root.fork(1), f1b = root.fork(1), f2 = root.fork(2);
  const auto x = f1.next_u64();
  EXPECT_EQ(x, f1b.next_u64());
  EXPECT_NE(x, f2.next_u64());
}

TEST(Rng, DistributionMoments) {
  Rng rng(9);
  double s = 0, s2 = 0, u = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
    const double v = rng.uniform();
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 1.0);
    u += v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
  EXPECT_NEAR(u / n, 0.5, 0.01);
  for (int i = 0; i < 1000; ++i) {
    const double t = rng.truncated_normal(0.02);
    ASSERT_LE(std::abs(t), 0.04);
    ASSERT_LT(rng.below(7), 7u);
  }
}
