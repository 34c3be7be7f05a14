#include "mhac/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "mhac/error.hpp"

namespace mhac::nn {

namespace {

double evaluate(const Objective& objective, std::span<Param> params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (Param& p : params) vars.push_back(tape.param(p));
  const Var out = objective(tape, vars);
  require(out.value().size() == 1, ErrorCode::kShapeMismatch, "grad_check objective must be scalar");
  const double value = out.value()[0];
  require(std::isfinite(value), ErrorCode::kNonFinite, "grad_check objective is not finite");
  return value;
}

}  // namespace

GradCheckResult grad_check(const Objective& objective, std::span<Param> params, const GradCheckOptions& options) {
  require(options.step > 0.0, ErrorCode::kInvalidArgument, "finite-difference step must be positive");
  for (Param& p : params) {
    p.grad = Tensor(p.value.shape());
  }
  {
    Tape tape;
    std::vector<Var> vars;
    for (Param& p : params) vars.push_back(tape.param(p));
    const Var out = objective(tape, vars);
    require(std::isfinite(out.value()[0]), ErrorCode::kNonFinite, "grad_check objective is not finite");
    tape.backward(out);
  }

  GradCheckResult result;
  const double h = options.step;
  for (Param& p : params) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + h;
      const double up = evaluate(objective, params);
      p.value[i] = saved - h;
      const double down = evaluate(objective, params);
      p.value[i] = saved;

      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p.grad[i];
      const double abs_err = std::abs(analytic - numeric);
      const double rel_err = abs_err / std::max({std::abs(analytic), std::abs(numeric), options.abs_floor});
      ++result.elements_checked;
      result.max_abs_error = std::max(result.max_abs_error, abs_err);
      if (rel_err > result.max_rel_error) {
        result.max_rel_error = rel_err;
        result.worst_param = p.name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace mhac::nn
