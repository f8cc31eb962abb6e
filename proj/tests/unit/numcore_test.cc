#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fixtures.h"
#include "screensum/numcore/adam.h"
#include "screensum/numcore/checkpoint.h"
#include "screensum/numcore/grad_check.h"
#include "screensum/numcore/ops.h"
#include "screensum/rng.h"

namespace screensum::nc {
namespace {

TEST(Primitives, EveryOpPassesFiniteDifferences) {
  for (const auto& check : primitive_checks()) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const GradCheckReport r = check.run(1e-4, seed);
      EXPECT_TRUE(r.passed) << check.op << " seed " << seed << " rel err " << r.max_rel_error;
    }
  }
}

TEST(GradCheck, ComposedExpression) {
  ParameterSet ps;
  Rng rng(4);
  Tensor w({3, 4});
  for (double& v : w.values) v = rng.normal();
  Tensor x({4});
  for (double& v : x.values) v = rng.normal();
  ps.add("w", w);
  ps.add("x", x);
  const LossFn loss = [&](Tape& t) {
    Var h = tanh(matmul(t.param(ps.get("w")), t.param(ps.get("x"))));
    Var p = softmax_with_temperature(h, 0.5);
    return dot(p, h);
  };
  const auto r = grad_check(loss, ps, 1e-4);
  EXPECT_TRUE(r.passed) << r.max_rel_error;
  EXPECT_EQ(r.coordinates_checked, 16u);
}

TEST(GradCheck, InjectedFaultIsLocalized) {
  ParameterSet ps;
  ps.add("x", Tensor::vector({0.3, -0.2, 0.9}));
  const LossFn loss = [&](Tape& t) { return sum(tanh(t.param(ps.get("x")))); };
  set_backward_fault("tanh", 1.5);
  const auto r = grad_check(loss, ps, 1e-4);
  set_backward_fault("", 1.0);
  EXPECT_FALSE(r.passed);
  ASSERT_EQ(r.offending_ops.size(), 1u);
  EXPECT_EQ(r.offending_ops[0], "tanh");
}

TEST(Tape, ParamBindsOnceAndAccumulates) {
  ParameterSet ps;
  Parameter& p = ps.add("p", Tensor::vector({2.0}));
  Tape t;
  Var a = t.param(p), b = t.param(p);
  EXPECT_EQ(a.id(), b.id());
  t.backward(sum(mul(a, b)));
  EXPECT_DOUBLE_EQ(p.grad.values[0], 4.0);
}

TEST(Tape, NonFiniteForwardThrows) {
  Tape t;
  Var x = t.constant(Tensor::vector({1.0, std::numeric_limits<double>::infinity()}));
  EXPECT_THROW(tanh(scale(x, 0.0)), NumericError);
  EXPECT_THROW(log_scalar(t.constant(Tensor::scalar(0.0))), NumericError);
}

TEST(Ops, SoftmaxTemperatureSharpens) {
  Tape t;
  Var x = t.constant(Tensor::vector({1.0, 0.9, -1.0}));
  const auto p = softmax_with_temperature(x, 0.01).value().values;
  EXPECT_GT(p[0], 0.9999);
  EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-15);
  EXPECT_THROW(softmax_with_temperature(x, 0.0), std::invalid_argument);
}

TEST(Ops, KlDivergenceMatchesDefinition) {
  Tape t;
  Var p = t.constant(Tensor::vector({0.5, 0.5, 0.0}));
  Var q = t.constant(Tensor::vector({0.25, 0.25, 0.5}));
  EXPECT_NEAR(kl_divergence(p, q).item(), std::log(2.0), 1e-15);
  EXPECT_NEAR(kl_divergence(p, p).item(), 0.0, 1e-15);
  EXPECT_THROW(kl_divergence(p, t.constant(Tensor::vector({0.5, 0.6, 0.0}))), std::invalid_argument);
}

TEST(Ops, WeightedBceMatchesDefinition) {
  Tape t;
  const std::vector<double> p{0.9, 0.2, 0.6, 0.4};
  const std::vector<double> y{1, 0, 1, 0};
  Var pv = t.constant(Tensor::vector(p));
  double plain = 0;
  for (std::size_t i = 0; i < p.size(); ++i) plain -= y[i] * std::log(p[i]) + (1 - y[i]) * std::log(1 - p[i]);
  plain /= 4;
  const std::vector<double> unit{1.0, 1.0};
  EXPECT_NEAR(weighted_bce(pv, y, unit).item(), plain, 1e-12);
  const std::vector<double> w{0.5, 2.0};
  double weighted = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    weighted -= w[static_cast<std::size_t>(y[i])] * (y[i] * std::log(p[i]) + (1 - y[i]) * std::log(1 - p[i]));
  EXPECT_NEAR(weighted_bce(pv, y, w).item(), weighted / 4, 1e-12);

  std::vector<double> z;
  for (double pi : p) z.push_back(std::log(pi / (1 - pi)));
  EXPECT_NEAR(weighted_bce_with_logits(t.constant(Tensor::vector(z)), y, w).item(), weighted / 4, 1e-12);
}

TEST(Ops, NormalizedDotGuardsZeroNorm) {
  Tape t;
  Var a = t.constant(Tensor::vector({0, 0}));
  Var b = t.constant(Tensor::vector({1, 2}));
  EXPECT_EQ(normalized_dot(a, b).item(), 0.0);
  EXPECT_THROW(cosine_similarity(a, b), NumericError);
}

TEST(Ops, ShapeMismatchThrows) {
  Tape t;
  Var a = t.constant(Tensor::vector({1, 2}));
  Var b = t.constant(Tensor::vector({1, 2, 3}));
  EXPECT_THROW(add(a, b), ShapeError);
  EXPECT_THROW(matmul(t.constant(Tensor({2, 3})), a), ShapeError);
}

TEST(Ops, DropoutIsIdentityInEvaluation) {
  Tape t;
  Var a = t.constant(Tensor::vector({1, 2, 3}));
  EXPECT_EQ(dropout(a, 0.5, nullptr).value().values, a.value().values);
  Rng rng(1);
  const auto d = dropout(t.constant(Tensor(Shape{2000}, 1.0)), 0.25, &rng).value().values;
  double total = 0;
  for (double v : d) {
    EXPECT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-12);
    total += v;
  }
  EXPECT_NEAR(total / 2000, 1.0, 0.1);
}

TEST(AdamOptimizer, MatchesClosedFormFirstSteps) {
  ParameterSet ps;
  Parameter& p = ps.add("p", Tensor::vector({1.0, -2.0}));
  Parameter& frozen = ps.add("q", Tensor::vector({5.0}));
  frozen.frozen = true;
  AdamConfig cfg;
  Adam adam(cfg);
  const std::vector<double> g1{0.5, -4.0}, g2{-1.0, 2.0};
  std::vector<double> x{1.0, -2.0}, m(2, 0), v(2, 0);
  for (int step = 1; step <= 2; ++step) {
    const auto& g = step == 1 ? g1 : g2;
    p.grad.values = g;
    frozen.grad.values = {1.0};
    adam.step(ps);
    for (int i = 0; i < 2; ++i) {
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(cfg.beta1, step));
      const double vh = v[i] / (1 - std::pow(cfg.beta2, step));
      x[i] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon);
      EXPECT_NEAR(p.value.values[i], x[i], 1e-15);
    }
  }
  EXPECT_EQ(frozen.value.values[0], 5.0);
  EXPECT_EQ(adam.steps(), 2u);
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto dir = screensum::testing::temp_dir("ckpt");
  ParameterSet ps;
  ps.add("a.w", Tensor::matrix(2, 2, {1.0 / 3, -2.5e-300, 7, 0}));
  ps.add("b", Tensor::scalar(0.1));
  save_checkpoint(dir / "c.ckpt", ps, {{"kind", "test"}});
  const Checkpoint back = load_checkpoint(dir / "c.ckpt");
  EXPECT_TRUE(back.params == ps);
  EXPECT_EQ(back.metadata.at("kind"), "test");
  EXPECT_EQ(back.params.get("a.w").value.shape, (Shape{2, 2}));
}

TEST(Checkpoint, LoadMatchingChecksShapes) {
  ParameterSet a, b;
  a.add("x", Tensor::vector({1, 2}));
  a.add("y", Tensor::vector({3}));
  b.add("x", Tensor::vector({0, 0}));
  b.add("z", Tensor::vector({0}));
  EXPECT_EQ(b.load_matching(a), 1u);
  EXPECT_EQ(b.get("x").value.values, (std::vector<double>{1, 2}));
  ParameterSet c;
  c.add("x", Tensor::vector({0, 0, 0}));
  EXPECT_ANY_THROW(c.load_matching(a));
}

}  // namespace
}  // namespace screensum::nc
