#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mhac/gradcheck.hpp"

namespace mhac::testing {

struct GradCase {
  std::string name;
  nn::GradCheckResult result;
};

// Finite-difference checks of every differentiable primitive and of the full
// MHAC loss (tiny config, all ablation variants, train and infer modes).
std::vector<GradCase> primitive_gradient_cases(std::uint64_t seed);
std::vector<GradCase> model_gradient_cases(std::uint64_t seed);

}  // namespace mhac::testing
