#include "mhac/augment.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mhac/error.hpp"
#include "mhac/rng.hpp"

namespace mhac::augment {

std::string_view to_string(NoiseParameterization p) {
  return p == NoiseParameterization::kVariance ? "variance" : "std";
}

NoiseParameterization parse_noise_parameterization(std::string_view text) {
  if (text == "variance") return NoiseParameterization::kVariance;
  if (text == "std") return NoiseParameterization::kStdDev;
  fail(ErrorCode::kConfig, fmt::format("noise parameterization must be 'variance' or 'std', got '{}'", text));
}

std::vector<double> variance_vector(const data::SegmentSet& train) {
  require(!train.empty(), ErrorCode::kEmptyInput, "variance_vector needs at least one segment");
  const std::size_t n_vars = train.segments.front().inputs.size();
  std::vector<double> out(n_vars, 0.0);
  for (std::size_t i = 0; i < n_vars; ++i) {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;
    // Welford accumulation
    for (const data::Segment& s : train.segments) {
      for (double x : s.inputs.at(i).data()) {
        count += 1.0;
        const double delta = x - mean;
        mean += delta / count;
        m2 += delta * (x - mean);
      }
    }
    out[i] = count > 0.0 ? std::max(0.0, m2 / count) : 0.0;
  }
  return out;
}

NoiseModel make_noise_model(const data::SegmentSet& train, double sigma_scale, std::uint64_t seed,
                            NoiseParameterization parameterization) {
  require(sigma_scale >= 0.0, ErrorCode::kConfig, "noise sigma scale must be >= 0");
  NoiseModel model;
  model.variances = variance_vector(train);
  model.sigma_scale = sigma_scale;
  model.parameterization = parameterization;
  model.seed = seed;
  for (const auto& spec : train.variables) model.exempt.push_back(spec.is_dummy());
  model.exempt.resize(model.variances.size(), false);
  return model;
}

double sample_epsilon(double variance, double sigma_scale, std::mt19937_64& rng,
                      NoiseParameterization parameterization) {
  require(variance >= 0.0, ErrorCode::kInvalidArgument, fmt::format("negative variance {}", variance));
  const double spread = sigma_scale * variance;
  if (spread == 0.0) return 1.0;
  const double stddev = parameterization == NoiseParameterization::kVariance ? std::sqrt(spread) : spread;
  std::normal_distribution<double> normal(0.0, stddev);
  return std::exp(normal(rng));
}

ErrorMatrix sample_error_matrix(const NoiseModel& model, std::mt19937_64& rng) {
  ErrorMatrix e;
  e.diagonal.resize(model.variances.size(), 1.0);
  for (std::size_t i = 0; i < model.variances.size(); ++i) {
    if (i < model.exempt.size() && model.exempt[i]) continue;
    e.diagonal[i] = sample_epsilon(model.variances[i], model.sigma_scale, rng, model.parameterization);
  }
  return e;
}

data::Segment augment_segment(const data::Segment& segment, const ErrorMatrix& error,
                              std::span<const data::VariableSpec> variables) {
  require(error.diagonal.size() == segment.inputs.size(), ErrorCode::kShapeMismatch,
          fmt::format("error matrix of size {} for {} variables", error.diagonal.size(), segment.inputs.size()));
  data::Segment out = segment;
  auto exempt = [&](std::size_t i) { return i < variables.size() && variables[i].is_dummy(); };
  for (std::size_t i = 0; i < out.inputs.size(); ++i) {
    if (exempt(i)) continue;
    for (double& x : out.inputs[i].data()) x *= error.diagonal[i];
  }
  if (!exempt(0)) {
    for (double& y : out.target) y *= error.diagonal[0];
  }
  return out;
}

data::SegmentSet augment_set(const data::SegmentSet& segments, std::size_t factor, const NoiseModel& model) {
  data::SegmentSet out;
  out.m = segments.m;
  out.k = segments.k;
  out.variables = segments.variables;
  out.provenance = factor == 0 ? segments.provenance : data::Provenance::kAugmented;
  out.segments = segments.segments;
  out.segments.reserve(segments.size() * (factor + 1));
  for (std::size_t copy = 1; copy <= factor; ++copy) {
    for (std::size_t s = 0; s < segments.size(); ++s) {
      std::mt19937_64 rng = make_rng(model.seed, {s, copy});
      const ErrorMatrix e = sample_error_matrix(model, rng);
      out.segments.push_back(augment_segment(segments.segments[s], e, segments.variables));
    }
  }
  return out;
}

}  // namespace mhac::augment
