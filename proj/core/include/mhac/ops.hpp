#pragma once

#include <cstddef>
#include <random>
#include <span>

#include "mhac/tape.hpp"
#include "mhac/tensor.hpp"

// Differentiable primitives used by the MHAC network. Every op records its
// output on the tape shared by its inputs; all inputs must come from one tape.
namespace mhac::nn {

enum class Mode { kTrain, kInfer };

Var add(const Var& a, const Var& b);
Var scale(const Var& x, double factor);
// x: rows x cols, bias: cols; bias is broadcast over rows.
Var add_row_bias(const Var& x, const Var& bias);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& x);

Var relu(const Var& x);
Var tanh(const Var& x);
// Row-wise softmax of a 2-D tensor with max subtraction.
Var softmax_rows(const Var& x);

// input: C_in x m, kernels: C_out x C_in x ks, bias: C_out -> C_out x m.
// The input is left-padded with ks-1 zeros so y[:, t] only sees x[:, <= t].
Var causal_conv1d(const Var& input, const Var& kernels, const Var& bias);

// Stride-1 causal window max: y[c, t] = max(x[c, t-p+1 .. t]); length preserved.
Var maxpool1d_same(const Var& input, std::size_t pool_size);

// input: d_in, weights: d_out x d_in, bias: d_out.
Var dense(const Var& input, const Var& weights, const Var& bias);

// Weight-normalised dense layer: row j of the effective weight is
// (g[j] / ||v[j]||) * v[j]. Zero-norm rows are rejected.
Var dense_weightnorm(const Var& input, const Var& v, const Var& g, const Var& bias);

// Inverted dropout. Identity in kInfer mode or when rate == 0.
Var dropout(const Var& input, double rate, Mode mode, std::mt19937_64& rng);

// Concatenate along `axis`; all other dimensions must agree.
Var concat(std::span<const Var> parts, std::size_t axis);
Var flatten(const Var& x);
Var reshape(const Var& x, Shape shape);

// Mean of squared differences over every element.
Var mse_loss(const Var& pred, const Tensor& truth);
Var sum_squares(const Var& x);

}  // namespace mhac::nn
