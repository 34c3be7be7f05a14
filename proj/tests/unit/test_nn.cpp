#include <cmath>
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "gradient_suite.hpp"
#include "mhac/error.hpp"
#include "mhac/gradcheck.hpp"
#include "mhac/ops.hpp"
#include "mhac/rng.hpp"
#include "mhac/tape.hpp"
#include "support.hpp"

namespace mhac::nn {
namespace {

using testing::random_tensor;

std::vector<double> values_of(const Var& v) { return v.value().values(); }

TEST(Tensor, ShapeAndLayout) {
  const Tensor t = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.shape(), (Shape{2, 3}));
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.at(1, 0), 4.0);
  EXPECT_EQ(t.reshaped({3, 2}).at(2, 1), 6.0);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), Error);
  EXPECT_THROW((void)t.reshaped({4}), Error);
}

TEST(Tensor, FiniteCheck) {
  Tensor t({3}, 1.0);
  EXPECT_TRUE(t.all_finite());
  t[1] = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(t.all_finite());
}

TEST(Tape, NonFiniteValuesRaise) {
  Tape tape;
  const Var x = tape.constant(Tensor::vector({1e200}));
  try {
    (void)sum_squares(scale(x, 1e200));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
  }
}

TEST(Tape, BackwardVisitsEachOpOnce) {
  Param p("p", Tensor::vector({1.0, -2.0}));
  Tape tape;
  const Var x = tape.param(p);
  const Var y = add(x, x);
  const Var z = add(y, scale(x, 3.0));
  const Var loss = sum_squares(z);
  tape.backward(loss);
  // Recorded ops: add, scale, add, sum_squares.
  EXPECT_EQ(tape.backward_visits(), 4u);
  // d/dx sum((5x)^2) = 50x
  EXPECT_DOUBLE_EQ(p.grad[0], 50.0);
  EXPECT_DOUBLE_EQ(p.grad[1], -100.0);
}

TEST(Tape, GradientsAccumulateUntilZeroed) {
  Param p("p", Tensor::vector({3.0}));
  for (int i = 0; i < 2; ++i) {
    Tape tape;
    tape.backward(sum_squares(tape.param(p)));
  }
  EXPECT_DOUBLE_EQ(p.grad[0], 12.0);
  p.zero_grad();
  EXPECT_DOUBLE_EQ(p.grad[0], 0.0);
}

TEST(Tape, BackwardNeedsScalarLoss) {
  Param p("p", Tensor::vector({1.0, 2.0}));
  Tape tape;
  EXPECT_THROW(tape.backward(tape.param(p)), Error);
}

TEST(Ops, CausalConvIdentityKernel) {
  Tape tape;
  const Var x = tape.constant(Tensor::matrix(1, 3, {1, 2, 3}));
  const Var y = causal_conv1d(x, tape.constant(Tensor({1, 1, 1}, 1.0)), tape.constant(Tensor({1}, 0.0)));
  EXPECT_EQ(values_of(y), (std::vector<double>{1, 2, 3}));
}

TEST(Ops, CausalConvLastTapIsIdentity) {
  Tape tape;
  const Var x = tape.constant(Tensor::matrix(1, 3, {1, 2, 3}));
  const Var k = tape.constant(Tensor({1, 1, 3}, std::vector<double>{0, 0, 1}));
  const Var y = causal_conv1d(x, k, tape.constant(Tensor({1}, 0.0)));
  EXPECT_EQ(values_of(y), (std::vector<double>{1, 2, 3}));
}

TEST(Ops, CausalConvMatchesDirectSum) {
  Tape tape;
  const Var x = tape.constant(Tensor::matrix(1, 4, {1, 2, 3, 4}));
  const Var y = causal_conv1d(x, tape.constant(Tensor({1, 1, 3}, 1.0)), tape.constant(Tensor({1}, 0.0)));
  EXPECT_EQ(values_of(y), (std::vector<double>{1, 3, 6, 9}));
}

TEST(Ops, CausalConvRandomAgainstOracle) {
  auto rng = make_rng(11);
  const Tensor x = random_tensor({3, 9}, rng);
  const Tensor k = random_tensor({2, 3, 4}, rng);
  const Tensor b = random_tensor({2}, rng);
  Tape tape;
  const Var y = causal_conv1d(tape.constant(x), tape.constant(k), tape.constant(b));
  ASSERT_EQ(y.shape(), (Shape{2, 9}));
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t t = 0; t < 9; ++t) {
      double expect = b[c];
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t tau = 0; tau < 4; ++tau) {
          const long src = static_cast<long>(t) - 3 + static_cast<long>(tau);
          if (src >= 0) expect += k.at(c, i, tau) * x.at(i, static_cast<std::size_t>(src));
        }
      }
      EXPECT_NEAR(y.value().at(c, t), expect, 1e-12);
    }
  }
}

TEST(Ops, CausalConvIsCausal) {
  auto rng = make_rng(12);
  Tensor x = random_tensor({2, 8}, rng);
  const Tensor k = random_tensor({3, 2, 5}, rng);
  const Tensor b = random_tensor({3}, rng);
  Tape tape;
  const Tensor before = causal_conv1d(tape.constant(x), tape.constant(k), tape.constant(b)).value();
  x.at(0, 5) += 10.0;
  x.at(1, 7) -= 3.0;
  const Tensor after = causal_conv1d(tape.constant(x), tape.constant(k), tape.constant(b)).value();
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t t = 0; t < 5; ++t) EXPECT_EQ(before.at(c, t), after.at(c, t));
  }
}

TEST(Ops, CausalConvShapeMismatch) {
  Tape tape;
  const Var x = tape.constant(Tensor({2, 4}));
  EXPECT_THROW((void)causal_conv1d(x, tape.constant(Tensor({1, 3, 2})), tape.constant(Tensor({1}))), Error);
  EXPECT_THROW((void)causal_conv1d(x, tape.constant(Tensor({1, 2, 2})), tape.constant(Tensor({2}))), Error);
}

TEST(Ops, Relu) {
  Tape tape;
  EXPECT_EQ(values_of(relu(tape.constant(Tensor::vector({-1, 0, 2})))), (std::vector<double>{0, 0, 2}));
}

TEST(Ops, SoftmaxZeroRowIsUniform) {
  Tape tape;
  const Var y = softmax_rows(tape.constant(Tensor({1, 5}, 0.0)));
  for (double v : y.value().values()) EXPECT_DOUBLE_EQ(v, 0.2);
}

TEST(Ops, SoftmaxRowsSumToOne) {
  auto rng = make_rng(13);
  Tape tape;
  const Var y = softmax_rows(tape.constant(random_tensor({20, 17}, rng, -30.0, 30.0)));
  for (std::size_t r = 0; r < 20; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 17; ++c) sum += y.value().at(r, c);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Ops, SoftmaxLargeInputsStayFinite) {
  Tape tape;
  const Var y = softmax_rows(tape.constant(Tensor::matrix(1, 3, {1000.0, 999.0, -1000.0})));
  EXPECT_TRUE(y.value().all_finite());
  EXPECT_NEAR(y.value()[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
}

TEST(Ops, TanhMatchesStd) {
  Tape tape;
  const Var y = nn::tanh(tape.constant(Tensor::vector({-2.0, 0.0, 0.5})));
  EXPECT_DOUBLE_EQ(y.value()[0], std::tanh(-2.0));
  EXPECT_DOUBLE_EQ(y.value()[1], 0.0);
  EXPECT_DOUBLE_EQ(y.value()[2], std::tanh(0.5));
}

TEST(Ops, MaxPoolSizeOneIsIdentity) {
  auto rng = make_rng(14);
  const Tensor x = random_tensor({3, 7}, rng);
  Tape tape;
  EXPECT_EQ(maxpool1d_same(tape.constant(x), 1).value(), x);
}

TEST(Ops, MaxPoolWindowedMax) {
  Tape tape;
  EXPECT_EQ(values_of(maxpool1d_same(tape.constant(Tensor::matrix(1, 3, {1, 3, 2})), 2)),
            (std::vector<double>{1, 3, 3}));
}

TEST(Ops, MaxPoolPreservesLengthForAnyPool) {
  auto rng = make_rng(15);
  for (std::size_t p = 1; p <= 12; ++p) {
    Tape tape;
    const Tensor x = random_tensor({2, 9}, rng);
    const Var y = maxpool1d_same(tape.constant(x), p);
    ASSERT_EQ(y.shape(), (Shape{2, 9}));
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t t = 0; t < 9; ++t) {
        double expect = -std::numeric_limits<double>::infinity();
        for (std::size_t s = (t + 1 >= p ? t + 1 - p : 0); s <= t; ++s) expect = std::max(expect, x.at(c, s));
        EXPECT_EQ(y.value().at(c, t), expect);
      }
    }
  }
  Tape tape;
  EXPECT_THROW((void)maxpool1d_same(tape.constant(Tensor({1, 3})), 0), Error);
}

TEST(Ops, WeightNormEffectiveRow) {
  Tape tape;
  const Var x0 = tape.constant(Tensor::vector({1, 0}));
  const Var x1 = tape.constant(Tensor::vector({0, 1}));
  const Var v = tape.constant(Tensor::matrix(1, 2, {3, 4}));
  const Var g = tape.constant(Tensor::vector({10}));
  const Var b = tape.constant(Tensor::vector({0}));
  EXPECT_DOUBLE_EQ(dense_weightnorm(x0, v, g, b).value()[0], 6.0);
  EXPECT_DOUBLE_EQ(dense_weightnorm(x1, v, g, b).value()[0], 8.0);
}

TEST(Ops, WeightNormWithRowNormsEqualsDense) {
  auto rng = make_rng(16);
  const Tensor x = random_tensor({6}, rng);
  const Tensor v = random_tensor({4, 6}, rng);
  const Tensor b = random_tensor({4}, rng);
  Tensor g({4});
  for (std::size_t j = 0; j < 4; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < 6; ++i) s += v.at(j, i) * v.at(j, i);
    g[j] = std::sqrt(s);
  }
  Tape tape;
  const Tensor wn =
      dense_weightnorm(tape.constant(x), tape.constant(v), tape.constant(g), tape.constant(b)).value();
  const Tensor plain = dense(tape.constant(x), tape.constant(v), tape.constant(b)).value();
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(wn[j], plain[j], 1e-12);
}

TEST(Ops, WeightNormRowScaleInvariance) {
  auto rng = make_rng(17);
  const Tensor x = random_tensor({6}, rng);
  const Tensor v = random_tensor({4, 6}, rng);
  const Tensor g = random_tensor({4}, rng);
  const Tensor b = random_tensor({4}, rng);
  Tape tape;
  const Tensor ref = dense_weightnorm(tape.constant(x), tape.constant(v), tape.constant(g), tape.constant(b)).value();
  for (double c : {0.5, 3.0, 1e-3, 250.0}) {
    Tensor scaled = v;
    for (std::size_t i = 0; i < 6; ++i) scaled.at(2, i) *= c;
    const Tensor y =
        dense_weightnorm(tape.constant(x), tape.constant(scaled), tape.constant(g), tape.constant(b)).value();
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(y[j], ref[j], 1e-9 * std::max(1.0, std::abs(ref[j])));
  }
}

TEST(Ops, WeightNormZeroRowRejected) {
  Tape tape;
  EXPECT_THROW((void)dense_weightnorm(tape.constant(Tensor::vector({1, 1})), tape.constant(Tensor({2, 2}, 0.0)),
                                      tape.constant(Tensor::vector({1, 1})), tape.constant(Tensor::vector({0, 0}))),
               Error);
}

TEST(Ops, DropoutRateZeroIsIdentity) {
  auto rng = make_rng(18);
  const Tensor x = random_tensor({50}, rng);
  Tape tape;
  EXPECT_EQ(dropout(tape.constant(x), 0.0, Mode::kTrain, rng).value(), x);
  EXPECT_EQ(dropout(tape.constant(x), 0.0, Mode::kInfer, rng).value(), x);
}

TEST(Ops, DropoutInferIsIdentity) {
  auto rng = make_rng(19);
  const Tensor x = random_tensor({50}, rng);
  Tape tape;
  EXPECT_EQ(dropout(tape.constant(x), 0.9, Mode::kInfer, rng).value(), x);
}

TEST(Ops, DropoutRejectsBadRates) {
  auto rng = make_rng(20);
  Tape tape;
  const Var x = tape.constant(Tensor({3}, 1.0));
  EXPECT_THROW((void)dropout(x, 1.0, Mode::kTrain, rng), Error);
  EXPECT_THROW((void)dropout(x, -0.1, Mode::kTrain, rng), Error);
}

TEST(Ops, DropoutExpectationMatchesInput) {
  auto rng = make_rng(21);
  const Tensor x = Tensor::vector({1.0, -2.0, 0.5});
  std::vector<double> sum(3, 0.0);
  constexpr int kTrials = 100000;
  std::size_t zeros = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    Tape tape;
    const Tensor y = dropout(tape.constant(x), 0.25, Mode::kTrain, rng).value();
    for (std::size_t i = 0; i < 3; ++i) {
      sum[i] += y[i];
      if (y[i] == 0.0) ++zeros;
      else EXPECT_DOUBLE_EQ(y[i], x[i] / 0.75);
    }
  }
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(sum[i] / kTrials, x[i], 0.02 * std::abs(x[i]));
  EXPECT_NEAR(static_cast<double>(zeros) / (3.0 * kTrials), 0.25, 0.005);
}

TEST(Ops, MatmulConcatFlatten) {
  auto rng = make_rng(22);
  const Tensor a = random_tensor({3, 4}, rng);
  Tensor eye({4, 4}, 0.0);
  for (std::size_t i = 0; i < 4; ++i) eye.at(i, i) = 1.0;
  Tape tape;
  EXPECT_EQ(matmul(tape.constant(a), tape.constant(eye)).value(), a);

  const std::vector<Var> parts = {tape.constant(Tensor({3, 2}, 1.0)), tape.constant(Tensor({3, 5}, 2.0))};
  const Var c = concat(parts, 1);
  EXPECT_EQ(c.shape(), (Shape{3, 7}));
  EXPECT_EQ(c.value().at(1, 1), 1.0);
  EXPECT_EQ(c.value().at(1, 2), 2.0);

  const Var f = flatten(tape.constant(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6})));
  EXPECT_EQ(values_of(f), (std::vector<double>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(f.shape(), (Shape{6}));

  EXPECT_THROW((void)matmul(tape.constant(Tensor({2, 3})), tape.constant(Tensor({2, 3}))), Error);
  const std::vector<Var> bad = {tape.constant(Tensor({3, 2})), tape.constant(Tensor({2, 2}))};
  EXPECT_THROW((void)concat(bad, 1), Error);
}

TEST(Ops, MatmulAgainstOracle) {
  auto rng = make_rng(23);
  const Tensor a = random_tensor({4, 5}, rng);
  const Tensor b = random_tensor({5, 3}, rng);
  Tape tape;
  const Tensor c = matmul(tape.constant(a), tape.constant(b)).value();
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 5; ++k) s += a.at(i, k) * b.at(k, j);
      EXPECT_NEAR(c.at(i, j), s, 1e-12);
    }
  }
}

TEST(Ops, MseLossValues) {
  Tape tape;
  const Tensor truth = Tensor::matrix(2, 2, {1, 2, 3, 4});
  EXPECT_EQ(mse_loss(tape.constant(truth), truth).value()[0], 0.0);
  EXPECT_DOUBLE_EQ(mse_loss(tape.constant(Tensor::matrix(2, 2, {3, 4, 5, 6})), truth).value()[0], 4.0);
  EXPECT_THROW((void)mse_loss(tape.constant(Tensor({4})), truth), Error);
}

TEST(GradCheck, QuadraticIsExact) {
  auto rng = make_rng(24);
  std::vector<Param> params = {Param("theta", random_tensor({7}, rng))};
  const auto result = grad_check([](Tape&, const std::vector<Var>& v) { return sum_squares(v[0]); }, params);
  EXPECT_LT(result.max_rel_error, 1e-8);
  EXPECT_EQ(result.elements_checked, 7u);
}

TEST(GradCheck, RestoresParameterValues) {
  auto rng = make_rng(25);
  const Tensor original = random_tensor({4}, rng);
  std::vector<Param> params = {Param("theta", original)};
  (void)grad_check([](Tape&, const std::vector<Var>& v) { return sum_squares(nn::tanh(v[0])); }, params);
  EXPECT_EQ(params[0].value, original);
}

TEST(GradCheck, NonFiniteObjectiveRaises) {
  std::vector<Param> params = {Param("theta", Tensor::vector({1e200}))};
  EXPECT_THROW((void)grad_check([](Tape&, const std::vector<Var>& v) { return sum_squares(scale(v[0], 1e200)); },
                                params),
               Error);
}

TEST(GradCheck, DetectsWrongGradient) {
  // A hand-made op with a deliberately wrong backward must fail the check.
  std::vector<Param> params = {Param("theta", Tensor::vector({0.3, -0.7}))};
  const Objective broken = [](Tape& tape, const std::vector<Var>& v) {
    Tensor out = v[0].value();
    for (double& x : out.data()) x = x * x * x;
    const Var cube = tape.record("cube", out, {v[0]}, [id = v[0].id()](Tape& t, const Tensor& g) {
      Tensor& dx = t.grad(id);
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += 2.0 * g[i];
    });
    return sum_squares(cube);
  };
  EXPECT_GT(grad_check(broken, params).max_rel_error, 1e-2);
}

TEST(GradCheck, EveryPrimitivePasses) {
  for (const auto& c : testing::primitive_gradient_cases(101)) {
    EXPECT_LT(c.result.max_rel_error, 1e-4) << c.name << " worst " << c.result.worst_param << "["
                                            << c.result.worst_index << "]";
    EXPECT_GT(c.result.elements_checked, 0u) << c.name;
  }
}

TEST(GradCheck, FullModelPasses) {
  for (const auto& c : testing::model_gradient_cases(202)) {
    EXPECT_LT(c.result.max_rel_error, 1e-4) << c.name << " worst " << c.result.worst_param << "["
                                            << c.result.worst_index << "]";
  }
}

}  // namespace
}  // namespace mhac::nn
