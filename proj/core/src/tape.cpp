#include "mhac/tape.hpp"

#include <fmt/format.h>

#include "mhac/error.hpp"

namespace mhac::nn {

Param::Param(std::string name_in, Tensor value_in)
    : name(std::move(name_in)), value(std::move(value_in)), grad(value.shape()) {}

Var Tape::constant(Tensor value) {
  require(value.all_finite(), ErrorCode::kNonFinite, "constant input holds NaN/Inf");
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Param& param) {
  require(param.value.all_finite(), ErrorCode::kNonFinite,
          fmt::format("parameter '{}' holds NaN/Inf", param.name));
  if (param.grad.shape() != param.value.shape()) param.grad = Tensor(param.value.shape());
  Node node;
  node.value = param.value;
  node.needs_grad = true;
  node.param = &param;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs, Backward backward) {
  if (!value.all_finite()) fail(ErrorCode::kNonFinite, fmt::format("op '{}' produced NaN/Inf", op));
  bool needs = false;
  for (const Var& in : inputs) {
    check_owned(in);
    needs = needs || nodes_[in.id()].needs_grad;
  }
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs;
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad(std::size_t id) {
  Node& node = nodes_[id];
  if (!node.grad_ready) {
    node.grad = Tensor(node.value.shape());
    node.grad_ready = true;
  }
  return node.grad;
}

void Tape::backward(const Var& loss) {
  check_owned(loss);
  require(loss.value().size() == 1, ErrorCode::kShapeMismatch,
          fmt::format("backward needs a scalar loss, got {}", to_string(loss.shape())));
  visits_ = 0;
  grad(loss.id())[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.grad_ready || !node.needs_grad) continue;
    if (node.backward) {
      node.backward(*this, node.grad);
      ++visits_;
    }
    if (node.param != nullptr) {
      auto dst = node.param->grad.data();
      auto src = node.grad.data();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }
}

void Tape::clear() {
  nodes_.clear();
  visits_ = 0;
}

void Tape::check_owned(const Var& v) const {
  require(v.tape() == this && v.id() < nodes_.size(), ErrorCode::kInvalidArgument,
          "variable does not belong to this tape");
}

}  // namespace mhac::nn
