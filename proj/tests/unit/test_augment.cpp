#include <cmath>

#include <gtest/gtest.h>

#include "mhac/augment.hpp"
#include "mhac/error.hpp"
#include "mhac/rng.hpp"
#include "mhac/scaler.hpp"
#include "support.hpp"

namespace mhac::augment {
namespace {

data::SegmentSet toy_segments(std::size_t length = 100, std::uint64_t seed = 1) {
  const data::MultivariateFrame f = testing::toy_frame(Date(2012, 1, 1), length, seed,
                                                       {{Date(2012, 2, 1), Date(2012, 2, 20)}});
  const data::Scaler s = data::fit_scaler(f, f.end_date());
  return data::make_segments(data::apply_scaler(f, s), 30, 30);
}

double two_pass_variance(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size());
}

TEST(VarianceVector, ConstantDummyIsZero) {
  const data::SegmentSet set = toy_segments();
  const std::vector<double> v = variance_vector(set);
  ASSERT_EQ(v.size(), 5u);
  EXPECT_EQ(v[2], 0.0);  // disease never active in the toy frame
}

TEST(VarianceVector, PlusMinusOneGivesOne) {
  data::SegmentSet set;
  set.m = 2;
  set.k = 1;
  set.variables = {{"entrant", data::VariableKind::kNumeric, {}, 1}};
  data::Segment s;
  s.inputs = {nn::Tensor::matrix(1, 2, {1.0, -1.0})};
  s.target = {0.0};
  set.segments = {s, s};
  EXPECT_DOUBLE_EQ(variance_vector(set)[0], 1.0);
}

TEST(VarianceVector, MatchesTwoPassOracle) {
  const data::SegmentSet set = toy_segments(130, 3);
  const std::vector<double> v = variance_vector(set);
  for (std::size_t var = 0; var < set.variables.size(); ++var) {
    std::vector<double> pooled;
    for (const auto& seg : set.segments) {
      for (double x : seg.inputs[var].values()) pooled.push_back(x);
    }
    EXPECT_NEAR(v[var], two_pass_variance(pooled), 1e-10) << set.variables[var].name;
  }
}

TEST(VarianceVector, EmptySetIsError) {
  data::SegmentSet empty;
  EXPECT_THROW((void)variance_vector(empty), Error);
}

TEST(Epsilon, ZeroVarianceIsExactlyOne) {
  auto rng = make_rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_epsilon(0.0, 0.2, rng), 1.0);
}

TEST(Epsilon, NegativeVarianceIsError) {
  auto rng = make_rng(1);
  EXPECT_THROW((void)sample_epsilon(-0.5, 0.2, rng), Error);
}

TEST(Epsilon, LogMomentsMatchVarianceReading) {
  auto rng = make_rng(2);
  constexpr int kDraws = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const double e = sample_epsilon(1.0, 0.2, rng);
    ASSERT_GT(e, 0.0);
    const double z = std::log(e);
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / kDraws;
  const double var = sum_sq / kDraws - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 0.2, 0.01);
}

TEST(Epsilon, StdReadingSquaresTheScale) {
  auto rng = make_rng(3);
  constexpr int kDraws = 100000;
  double sum_sq = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const double z = std::log(sample_epsilon(1.0, 0.2, rng, NoiseParameterization::kStdDev));
    sum_sq += z * z;
  }
  EXPECT_NEAR(sum_sq / kDraws, 0.04, 0.002);
}

TEST(AugmentSegment, UnitErrorIsIdentity) {
  const data::SegmentSet set = toy_segments();
  const data::Segment& s = set.segments[3];
  const data::Segment out = augment_segment(s, {std::vector<double>(5, 1.0)}, set.variables);
  EXPECT_EQ(out.inputs, s.inputs);
  EXPECT_EQ(out.target, s.target);
}

TEST(AugmentSegment, EntrantFactorScalesInputAndTarget) {
  data::SegmentSet set;
  set.variables = {{"entrant", data::VariableKind::kNumeric, {}, 1}};
  data::Segment s;
  s.inputs = {nn::Tensor::matrix(1, 3, {1, 2, 3})};
  s.target = {4, 5};
  const data::Segment out = augment_segment(s, {{2.0}}, set.variables);
  EXPECT_EQ(out.inputs[0].values(), (std::vector<double>{2, 4, 6}));
  EXPECT_EQ(out.target, (std::vector<double>{8, 10}));
}

TEST(AugmentSegment, DummiesAreExempt) {
  const data::SegmentSet set = toy_segments();
  const data::Segment& s = set.segments[5];
  const data::Segment out = augment_segment(s, {{1.5, 3.0, 3.0, 3.0, 0.5}}, set.variables);
  for (std::size_t v : {1u, 2u, 3u}) {
    EXPECT_EQ(out.inputs[v], s.inputs[v]);
    for (double x : out.inputs[v].values()) EXPECT_TRUE(x == 0.0 || x == 1.0);
  }
  EXPECT_DOUBLE_EQ(out.inputs[4].values()[0], 0.5 * s.inputs[4].values()[0]);
}

TEST(AugmentSet, FactorZeroIsIdentity) {
  const data::SegmentSet set = toy_segments();
  const NoiseModel model = make_noise_model(set, 0.2, 7);
  const data::SegmentSet out = augment_set(set, 0, model);
  ASSERT_EQ(out.size(), set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_EQ(out.segments[i].inputs, set.segments[i].inputs);
    EXPECT_EQ(out.segments[i].target, set.segments[i].target);
  }
}

TEST(AugmentSet, NineCopiesGiveTenfold) {
  const data::SegmentSet set = toy_segments();
  ASSERT_EQ(set.size(), 41u);
  const data::SegmentSet out = augment_set(set, 9, make_noise_model(set, 0.2, 7));
  EXPECT_EQ(out.size(), 410u);
  EXPECT_EQ(out.provenance, data::Provenance::kAugmented);
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_EQ(out.segments[i].inputs, set.segments[i].inputs);
    EXPECT_EQ(out.segments[i].target, set.segments[i].target);
  }
}

TEST(AugmentSet, DeterministicForSeed) {
  const data::SegmentSet set = toy_segments();
  const data::SegmentSet a = augment_set(set, 3, make_noise_model(set, 0.2, 11));
  const data::SegmentSet b = augment_set(set, 3, make_noise_model(set, 0.2, 11));
  const data::SegmentSet c = augment_set(set, 3, make_noise_model(set, 0.2, 12));
  ASSERT_EQ(a.size(), b.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.segments[i].inputs, b.segments[i].inputs);
    EXPECT_EQ(a.segments[i].target, b.segments[i].target);
    differs = differs || a.segments[i].inputs != c.segments[i].inputs;
  }
  EXPECT_TRUE(differs);
}

TEST(AugmentSet, OriginalsUntouched) {
  const data::SegmentSet set = toy_segments();
  const data::SegmentSet copy = set;
  (void)augment_set(set, 4, make_noise_model(set, 0.2, 1));
  for (std::size_t i = 0; i < set.size(); ++i) EXPECT_EQ(set.segments[i].inputs, copy.segments[i].inputs);
}

TEST(AugmentSet, RatioRecoversOneEpsilonPerVariable) {
  const data::SegmentSet set = toy_segments();
  const std::size_t n = set.size();
  const data::SegmentSet out = augment_set(set, 9, make_noise_model(set, 0.2, 5));
  for (std::size_t copy = 1; copy <= 9; ++copy) {
    for (std::size_t s = 0; s < n; ++s) {
      const data::Segment& orig = set.segments[s];
      const data::Segment& aug = out.segments[copy * n + s];
      double eps_entrant = 0.0;
      for (std::size_t v = 0; v < set.variables.size(); ++v) {
        double eps = std::nan("");
        const auto& a = aug.inputs[v].values();
        const auto& o = orig.inputs[v].values();
        for (std::size_t i = 0; i < o.size(); ++i) {
          if (std::abs(o[i]) < 1e-12) continue;
          const double r = a[i] / o[i];
          if (std::isnan(eps)) eps = r;
          EXPECT_NEAR(r, eps, 1e-12 * std::abs(eps));
        }
        if (set.variables[v].is_dummy()) EXPECT_TRUE(std::isnan(eps) || eps == 1.0);
        if (v == 0) eps_entrant = eps;
      }
      for (std::size_t h = 0; h < orig.target.size(); ++h) {
        if (std::abs(orig.target[h]) > 1e-12) EXPECT_NEAR(aug.target[h] / orig.target[h], eps_entrant, 1e-12);
      }
    }
  }
}

TEST(NoiseParameterizationNames, RoundTrip) {
  EXPECT_EQ(parse_noise_parameterization("variance"), NoiseParameterization::kVariance);
  EXPECT_EQ(parse_noise_parameterization(to_string(NoiseParameterization::kStdDev)), NoiseParameterization::kStdDev);
  EXPECT_THROW((void)parse_noise_parameterization("sigma"), Error);
}

}  // namespace
}  // namespace mhac::augment
