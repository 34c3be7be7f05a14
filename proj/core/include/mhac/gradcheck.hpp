#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mhac/tape.hpp"

namespace mhac::nn {

// Builds a scalar on `tape` from the recorded parameter leaves (same order as
// the Param span handed to grad_check). Must be deterministic.
using Objective = std::function<Var(Tape& tape, const std::vector<Var>& params)>;

struct GradCheckOptions {
  double step = 1e-5;
  // Elements whose absolute disagreement is at most this count as exact.
  double abs_floor = 1e-6;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t elements_checked = 0;
};

// Compares tape gradients with central differences (f(p+h) - f(p-h)) / 2h for
// every element of every parameter. Relative error is
// |a - n| / max(|a|, |n|, abs_floor). Parameter values are restored.
GradCheckResult grad_check(const Objective& objective, std::span<Param> params,
                           const GradCheckOptions& options = {});

}  // namespace mhac::nn
