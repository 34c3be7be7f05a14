#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mhac/tensor.hpp"

namespace mhac::nn {

// A learnable tensor and its accumulated gradient.
struct Param {
  Param() = default;
  Param(std::string name, Tensor value);

  void zero_grad() { grad.fill(0.0); }

  std::string name;
  Tensor value;
  Tensor grad;
};

class Tape;

// Handle to one node recorded on a Tape. Cheap to copy; only valid while the
// tape it came from is alive and not cleared.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode recorder. Nodes are appended in evaluation order, so walking the
// node list backwards is a reverse topological order of the graph.
class Tape {
 public:
  // Receives the tape and the gradient flowing into the op's output.
  using Backward = std::function<void(Tape&, const Tensor&)>;

  Var constant(Tensor value);
  // Leaf bound to `param`; backward() adds this node's gradient into param.grad.
  Var param(Param& param);

  // Records an op output. Raises Error(kNonFinite) naming `op` if the value
  // holds NaN/Inf. The closure is dropped when no input needs a gradient.
  Var record(std::string_view op, Tensor value, std::span<const Var> inputs, Backward backward);
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, Backward backward) {
    return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backward));
  }

  // Seeds d(loss)/d(loss) = 1 for a one-element `loss` and propagates.
  void backward(const Var& loss);

  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  // Gradient buffer of node `id`, zero-initialised on first access.
  Tensor& grad(std::size_t id);
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }

  std::size_t size() const { return nodes_.size(); }
  // Number of op closures run by the last backward().
  std::size_t backward_visits() const { return visits_; }

  void clear();

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    bool grad_ready = false;
    Param* param = nullptr;
    Backward backward;
  };

  void check_owned(const Var& v) const;

  std::vector<Node> nodes_;
  std::size_t visits_ = 0;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace mhac::nn
