#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "mhac/segment.hpp"

namespace mhac::augment {

// How the second log-normal parameter (sigma_scale * v_i) is read.
enum class NoiseParameterization { kVariance, kStdDev };
std::string_view to_string(NoiseParameterization p);
NoiseParameterization parse_noise_parameterization(std::string_view text);

struct NoiseModel {
  std::vector<double> variances;  // v_i per variable, scaled space
  std::vector<bool> exempt;       // dummy variables never receive noise
  double sigma_scale = 0.2;
  NoiseParameterization parameterization = NoiseParameterization::kVariance;
  std::uint64_t seed = 0;
};

// Diagonal of the per-segment error matrix E_t.
struct ErrorMatrix {
  std::vector<double> diagonal;
};

// Population variance of each variable pooled over every input value of every
// segment (all channels of a multichannel variable together).
std::vector<double> variance_vector(const data::SegmentSet& train);

NoiseModel make_noise_model(const data::SegmentSet& train, double sigma_scale, std::uint64_t seed,
                            NoiseParameterization parameterization = NoiseParameterization::kVariance);

// epsilon = exp(z), z ~ Normal(0, sigma_scale * v) (variance reading) or
// Normal(0, (sigma_scale * v)^2) (std reading). v == 0 returns exactly 1.
double sample_epsilon(double variance, double sigma_scale, std::mt19937_64& rng,
                      NoiseParameterization parameterization = NoiseParameterization::kVariance);

ErrorMatrix sample_error_matrix(const NoiseModel& model, std::mt19937_64& rng);

// Multiplies every channel of variable i by E[i]; the target by E[0].
// Dummy variables are left untouched whatever E says.
data::Segment augment_segment(const data::Segment& segment, const ErrorMatrix& error,
                              std::span<const data::VariableSpec> variables);

// Originals followed by `factor` noised copies of each segment. The noise of
// copy c of segment s comes from the stream keyed (seed, s, c), so the result
// does not depend on iteration order.
data::SegmentSet augment_set(const data::SegmentSet& segments, std::size_t factor, const NoiseModel& model);

}  // namespace mhac::augment
