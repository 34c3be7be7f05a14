#include "mhac/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <fmt/format.h>

#include "mhac/error.hpp"

namespace mhac::nn {

namespace {

void expect_rank(const Var& x, std::size_t rank, const char* op) {
  require(x.value().rank() == rank, ErrorCode::kShapeMismatch,
          fmt::format("{}: expected rank {}, got {}", op, rank, to_string(x.shape())));
}

void expect_same_shape(const Var& a, const Var& b, const char* op) {
  require(a.shape() == b.shape(), ErrorCode::kShapeMismatch,
          fmt::format("{}: {} vs {}", op, to_string(a.shape()), to_string(b.shape())));
}

Tape& common_tape(std::initializer_list<const Var*> vars) {
  Tape* tape = (*vars.begin())->tape();
  require(tape != nullptr, ErrorCode::kInvalidArgument, "variable is not attached to a tape");
  for (const Var* v : vars) {
    require(v->tape() == tape, ErrorCode::kInvalidArgument, "inputs come from different tapes");
  }
  return *tape;
}

void accumulate(Tape& t, std::size_t id, std::span<const double> g) {
  if (!t.needs_grad(id)) return;
  auto dst = t.grad(id).data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

}  // namespace

Var add(const Var& a, const Var& b) {
  Tape& tape = common_tape({&a, &b});
  expect_same_shape(a, b, "add");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return tape.record("add", std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
    accumulate(t, ia, g.data());
    accumulate(t, ib, g.data());
  });
}

Var scale(const Var& x, double factor) {
  Tape& tape = common_tape({&x});
  Tensor out = x.value();
  for (double& v : out.data()) v *= factor;
  const std::size_t ix = x.id();
  return tape.record("scale", std::move(out), {x}, [ix, factor](Tape& t, const Tensor& g) {
    if (!t.needs_grad(ix)) return;
    auto dx = t.grad(ix).data();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += factor * g[i];
  });
}

Var add_row_bias(const Var& x, const Var& bias) {
  Tape& tape = common_tape({&x, &bias});
  expect_rank(x, 2, "add_row_bias");
  expect_rank(bias, 1, "add_row_bias");
  const std::size_t rows = x.value().dim(0);
  const std::size_t cols = x.value().dim(1);
  require(bias.value().dim(0) == cols, ErrorCode::kShapeMismatch,
          fmt::format("add_row_bias: bias {} for matrix {}", to_string(bias.shape()), to_string(x.shape())));
  Tensor out = x.value();
  const Tensor& b = bias.value();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) += b[c];
  const std::size_t ix = x.id();
  const std::size_t ib = bias.id();
  return tape.record("add_row_bias", std::move(out), {x, bias},
                     [ix, ib, rows, cols](Tape& t, const Tensor& g) {
                       accumulate(t, ix, g.data());
                       if (!t.needs_grad(ib)) return;
                       Tensor& db = t.grad(ib);
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t c = 0; c < cols; ++c) db[c] += g.at(r, c);
                     });
}

Var matmul(const Var& a, const Var& b) {
  Tape& tape = common_tape({&a, &b});
  expect_rank(a, 2, "matmul");
  expect_rank(b, 2, "matmul");
  const std::size_t n = a.value().dim(0);
  const std::size_t inner = a.value().dim(1);
  const std::size_t p = b.value().dim(1);
  require(b.value().dim(0) == inner, ErrorCode::kShapeMismatch,
          fmt::format("matmul: {} x {}", to_string(a.shape()), to_string(b.shape())));
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out({n, p});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t q = 0; q < inner; ++q) {
      const double aiq = av.at(i, q);
      if (aiq == 0.0) continue;
      for (std::size_t j = 0; j < p; ++j) out.at(i, j) += aiq * bv.at(q, j);
    }
  }
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return tape.record("matmul", std::move(out), {a, b}, [ia, ib, n, inner, p](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    if (t.needs_grad(ia)) {
      Tensor& da = t.grad(ia);  // g * b^T
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t q = 0; q < inner; ++q) {
          double s = 0.0;
          for (std::size_t j = 0; j < p; ++j) s += g.at(i, j) * bv.at(q, j);
          da.at(i, q) += s;
        }
    }
    if (t.needs_grad(ib)) {
      Tensor& db = t.grad(ib);  // a^T * g
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t q = 0; q < inner; ++q) {
          const double aiq = av.at(i, q);
          if (aiq == 0.0) continue;
          for (std::size_t j = 0; j < p; ++j) db.at(q, j) += aiq * g.at(i, j);
        }
    }
  });
}

Var transpose(const Var& x) {
  Tape& tape = common_tape({&x});
  expect_rank(x, 2, "transpose");
  const std::size_t rows = x.value().dim(0);
  const std::size_t cols = x.value().dim(1);
  Tensor out({cols, rows});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out.at(c, r) = x.value().at(r, c);
  const std::size_t ix = x.id();
  return tape.record("transpose", std::move(out), {x}, [ix, rows, cols](Tape& t, const Tensor& g) {
    if (!t.needs_grad(ix)) return;
    Tensor& dx = t.grad(ix);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) dx.at(r, c) += g.at(c, r);
  });
}

Var relu(const Var& x) {
  Tape& tape = common_tape({&x});
  Tensor out = x.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  const std::size_t ix = x.id();
  return tape.record("relu", std::move(out), {x}, [ix](Tape& t, const Tensor& g) {
    if (!t.needs_grad(ix)) return;
    auto xv = t.value(ix).data();
    auto dx = t.grad(ix).data();
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (xv[i] > 0.0) dx[i] += g[i];
  });
}

Var tanh(const Var& x) {
  Tape& tape = common_tape({&x});
  Tensor out = x.value();
  for (double& v : out.data()) v = std::tanh(v);
  const std::size_t ix = x.id();
  const std::size_t iy = tape.size();
  return tape.record("tanh", std::move(out), {x}, [ix, iy](Tape& t, const Tensor& g) {
    if (!t.needs_grad(ix)) return;
    auto y = t.value(iy).data();
    auto dx = t.grad(ix).data();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var softmax_rows(const Var& x) {
  Tape& tape = common_tape({&x});
  expect_rank(x, 2, "softmax_rows");
  const std::size_t rows = x.value().dim(0);
  const std::size_t cols = x.value().dim(1);
  Tensor out = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) peak = std::max(peak, out.at(r, c));
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      out.at(r, c) = std::exp(out.at(r, c) - peak);
      total += out.at(r, c);
    }
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) /= total;
  }
  const std::size_t ix = x.id();
  const std::size_t iy = tape.size();
  return tape.record("softmax_rows", std::move(out), {x}, [ix, iy, rows, cols](Tape& t, const Tensor& g) {
    if (!t.needs_grad(ix)) return;
    const Tensor& y = t.value(iy);
    Tensor& dx = t.grad(ix);
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += g.at(r, c) * y.at(r, c);
      for (std::size_t c = 0; c < cols; ++c) dx.at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
    }
  });
}

Var causal_conv1d(const Var& input, const Var& kernels, const Var& bias) {
  Tape& tape = common_tape({&input, &kernels, &bias});
  expect_rank(input, 2, "causal_conv1d");
  expect_rank(kernels, 3, "causal_conv1d");
  expect_rank(bias, 1, "causal_conv1d");
  const Tensor& x = input.value();
  const Tensor& w = kernels.value();
  const std::size_t c_in = x.dim(0);
  const std::size_t len = x.dim(1);
  const std::size_t c_out = w.dim(0);
  const std::size_t ks = w.dim(2);
  require(ks >= 1, ErrorCode::kShapeMismatch, "causal_conv1d: kernel size must be >= 1");
  require(w.dim(1) == c_in && bias.value().dim(0) == c_out, ErrorCode::kShapeMismatch,
          fmt::format("causal_conv1d: input {}, kernels {}, bias {}", to_string(x.shape()),
                      to_string(w.shape()), to_string(bias.shape())));
  const std::size_t pad = ks - 1;
  Tensor out({c_out, len});
  for (std::size_t c = 0; c < c_out; ++c) {
    const double b = bias.value()[c];
    for (std::size_t t = 0; t < len; ++t) {
      double s = b;
      for (std::size_t i = 0; i < c_in; ++i) {
        // Padded position t + tau maps to source t + tau - pad; skip the zero pad.
        for (std::size_t tau = (t >= pad ? 0 : pad - t); tau < ks; ++tau)
          s += w.at(c, i, tau) * x.at(i, t + tau - pad);
      }
      out.at(c, t) = s;
    }
  }
  const std::size_t ix = input.id();
  const std::size_t iw = kernels.id();
  const std::size_t ib = bias.id();
  return tape.record("causal_conv1d", std::move(out), {input, kernels, bias},
                     [=](Tape& t, const Tensor& g) {
                       const Tensor& x = t.value(ix);
                       const Tensor& w = t.value(iw);
                       Tensor* dx = t.needs_grad(ix) ? &t.grad(ix) : nullptr;
                       Tensor* dw = t.needs_grad(iw) ? &t.grad(iw) : nullptr;
                       Tensor* db = t.needs_grad(ib) ? &t.grad(ib) : nullptr;
                       for (std::size_t c = 0; c < c_out; ++c) {
                         for (std::size_t tt = 0; tt < len; ++tt) {
                           const double gy = g.at(c, tt);
                           if (db != nullptr) (*db)[c] += gy;
                           if (gy == 0.0) continue;
                           for (std::size_t i = 0; i < c_in; ++i) {
                             for (std::size_t tau = (tt >= pad ? 0 : pad - tt); tau < ks; ++tau) {
                               const std::size_t src = tt + tau - pad;
                               if (dw != nullptr) dw->at(c, i, tau) += gy * x.at(i, src);
                               if (dx != nullptr) dx->at(i, src) += gy * w.at(c, i, tau);
                             }
                           }
                         }
                       }
                     });
}

Var maxpool1d_same(const Var& input, std::size_t pool_size) {
  Tape& tape = common_tape({&input});
  expect_rank(input, 2, "maxpool1d_same");
  require(pool_size >= 1, ErrorCode::kInvalidArgument, "maxpool1d_same: pool size must be >= 1");
  const Tensor& x = input.value();
  const std::size_t channels = x.dim(0);
  const std::size_t len = x.dim(1);
  Tensor out({channels, len});
  std::vector<std::size_t> argmax(channels * len);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t lo = t + 1 >= pool_size ? t + 1 - pool_size : 0;
      std::size_t best = t;
      for (std::size_t s = lo; s < t; ++s)
        if (x.at(c, s) > x.at(c, best)) best = s;
      out.at(c, t) = x.at(c, best);
      argmax[c * len + t] = best;
    }
  }
  const std::size_t ix = input.id();
  return tape.record("maxpool1d_same", std::move(out), {input},
                     [ix, len, argmax = std::move(argmax)](Tape& t, const Tensor& g) {
                       if (!t.needs_grad(ix)) return;
                       Tensor& dx = t.grad(ix);
                       for (std::size_t k = 0; k < argmax.size(); ++k) {
                         const std::size_t c = k / len;
                         dx.at(c, argmax[k]) += g[k];
                       }
                     });
}

Var dense(const Var& input, const Var& weights, const Var& bias) {
  Tape& tape = common_tape({&input, &weights, &bias});
  expect_rank(input, 1, "dense");
  expect_rank(weights, 2, "dense");
  expect_rank(bias, 1, "dense");
  const std::size_t d_out = weights.value().dim(0);
  const std::size_t d_in = weights.value().dim(1);
  require(input.value().dim(0) == d_in && bias.value().dim(0) == d_out, ErrorCode::kShapeMismatch,
          fmt::format("dense: input {}, weights {}, bias {}", to_string(input.shape()),
                      to_string(weights.shape()), to_string(bias.shape())));
  const Tensor& x = input.value();
  const Tensor& w = weights.value();
  Tensor out({d_out});
  for (std::size_t j = 0; j < d_out; ++j) {
    double s = bias.value()[j];
    for (std::size_t i = 0; i < d_in; ++i) s += w.at(j, i) * x[i];
    out[j] = s;
  }
  const std::size_t ix = input.id();
  const std::size_t iw = weights.id();
  const std::size_t ib = bias.id();
  return tape.record("dense", std::move(out), {input, weights, bias}, [=](Tape& t, const Tensor& g) {
    const Tensor& x = t.value(ix);
    const Tensor& w = t.value(iw);
    accumulate(t, ib, g.data());
    if (t.needs_grad(iw)) {
      Tensor& dw = t.grad(iw);
      for (std::size_t j = 0; j < d_out; ++j)
        for (std::size_t i = 0; i < d_in; ++i) dw.at(j, i) += g[j] * x[i];
    }
    if (t.needs_grad(ix)) {
      Tensor& dx = t.grad(ix);
      for (std::size_t j = 0; j < d_out; ++j)
        for (std::size_t i = 0; i < d_in; ++i) dx[i] += g[j] * w.at(j, i);
    }
  });
}

Var dense_weightnorm(const Var& input, const Var& v, const Var& g, const Var& bias) {
  Tape& tape = common_tape({&input, &v, &g, &bias});
  expect_rank(input, 1, "dense_weightnorm");
  expect_rank(v, 2, "dense_weightnorm");
  expect_rank(g, 1, "dense_weightnorm");
  expect_rank(bias, 1, "dense_weightnorm");
  const std::size_t d_out = v.value().dim(0);
  const std::size_t d_in = v.value().dim(1);
  require(input.value().dim(0) == d_in && g.value().dim(0) == d_out && bias.value().dim(0) == d_out,
          ErrorCode::kShapeMismatch,
          fmt::format("dense_weightnorm: input {}, v {}, g {}, bias {}", to_string(input.shape()),
                      to_string(v.shape()), to_string(g.shape()), to_string(bias.shape())));
  const Tensor& x = input.value();
  const Tensor& vv = v.value();
  std::vector<double> norms(d_out);
  std::vector<double> dots(d_out);
  Tensor out({d_out});
  for (std::size_t j = 0; j < d_out; ++j) {
    double sq = 0.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < d_in; ++i) {
      sq += vv.at(j, i) * vv.at(j, i);
      dot += vv.at(j, i) * x[i];
    }
    require(sq > 0.0, ErrorCode::kInvalidArgument, fmt::format("dense_weightnorm: row {} of v has zero norm", j));
    norms[j] = std::sqrt(sq);
    dots[j] = dot;
    out[j] = g.value()[j] / norms[j] * dot + bias.value()[j];
  }
  const std::size_t ix = input.id();
  const std::size_t iv = v.id();
  const std::size_t ig = g.id();
  const std::size_t ib = bias.id();
  return tape.record("dense_weightnorm", std::move(out), {input, v, g, bias},
                     [=, norms = std::move(norms), dots = std::move(dots)](Tape& t, const Tensor& gy) {
                       const Tensor& x = t.value(ix);
                       const Tensor& vv = t.value(iv);
                       const Tensor& gain = t.value(ig);
                       accumulate(t, ib, gy.data());
                       Tensor* dx = t.needs_grad(ix) ? &t.grad(ix) : nullptr;
                       Tensor* dv = t.needs_grad(iv) ? &t.grad(iv) : nullptr;
                       Tensor* dg = t.needs_grad(ig) ? &t.grad(ig) : nullptr;
                       for (std::size_t j = 0; j < d_out; ++j) {
                         const double n = norms[j];
                         const double factor = gain[j] / n;
                         if (dg != nullptr) (*dg)[j] += gy[j] * dots[j] / n;
                         if (dx != nullptr)
                           for (std::size_t i = 0; i < d_in; ++i) (*dx)[i] += gy[j] * factor * vv.at(j, i);
                         if (dv != nullptr) {
                           // d/dv of (g/|v|) v.x = (g/|v|) x - g (v.x) v / |v|^3
                           const double radial = gain[j] * dots[j] / (n * n * n);
                           for (std::size_t i = 0; i < d_in; ++i)
                             dv->at(j, i) += gy[j] * (factor * x[i] - radial * vv.at(j, i));
                         }
                       }
                     });
}

Var dropout(const Var& input, double rate, Mode mode, std::mt19937_64& rng) {
  Tape& tape = common_tape({&input});
  require(rate >= 0.0 && rate < 1.0, ErrorCode::kInvalidArgument,
          fmt::format("dropout rate must be in [0, 1), got {}", rate));
  if (mode == Mode::kInfer || rate == 0.0) return input;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::bernoulli_distribution drop(rate);
  std::vector<double> mask(input.value().size());
  for (double& m : mask) m = drop(rng) ? 0.0 : keep_scale;
  Tensor out = input.value();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= mask[i];
  const std::size_t ix = input.id();
  return tape.record("dropout", std::move(out), {input}, [ix, mask = std::move(mask)](Tape& t, const Tensor& g) {
    if (!t.needs_grad(ix)) return;
    auto dx = t.grad(ix).data();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[i] * mask[i];
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  require(!parts.empty(), ErrorCode::kInvalidArgument, "concat of nothing");
  Tape* tape = parts.front().tape();
  const Shape& first = parts.front().shape();
  require(axis < first.size(), ErrorCode::kShapeMismatch,
          fmt::format("concat axis {} out of range for {}", axis, to_string(first)));
  std::size_t outer = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  std::size_t inner = 1;
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
  std::size_t total_axis = 0;
  std::vector<std::size_t> extents;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    require(p.tape() == tape, ErrorCode::kInvalidArgument, "concat inputs come from different tapes");
    const Shape& s = p.shape();
    bool compatible = s.size() == first.size();
    for (std::size_t d = 0; compatible && d < s.size(); ++d) compatible = d == axis || s[d] == first[d];
    require(compatible, ErrorCode::kShapeMismatch,
            fmt::format("concat: {} incompatible with {} on axis {}", to_string(s), to_string(first), axis));
    extents.push_back(s[axis]);
    ids.push_back(p.id());
    total_axis += s[axis];
  }
  Shape out_shape = first;
  out_shape[axis] = total_axis;
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& src = parts[k].value();
    const std::size_t block = extents[k] * inner;
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(src.data().begin() + o * block, block, out.data().begin() + o * total_axis * inner + offset);
    offset += block;
  }
  return tape->record("concat", std::move(out), parts,
                      [ids = std::move(ids), extents = std::move(extents), outer, inner, total_axis](
                          Tape& t, const Tensor& g) {
                        std::size_t offset = 0;
                        for (std::size_t k = 0; k < ids.size(); ++k) {
                          const std::size_t block = extents[k] * inner;
                          if (t.needs_grad(ids[k])) {
                            auto dst = t.grad(ids[k]).data();
                            for (std::size_t o = 0; o < outer; ++o)
                              for (std::size_t e = 0; e < block; ++e)
                                dst[o * block + e] += g[o * total_axis * inner + offset + e];
                          }
                          offset += block;
                        }
                      });
}

Var reshape(const Var& x, Shape shape) {
  Tape& tape = common_tape({&x});
  Tensor out = x.value().reshaped(std::move(shape));
  const std::size_t ix = x.id();
  return tape.record("reshape", std::move(out), {x}, [ix](Tape& t, const Tensor& g) { accumulate(t, ix, g.data()); });
}

Var flatten(const Var& x) { return reshape(x, {x.value().size()}); }

Var mse_loss(const Var& pred, const Tensor& truth) {
  Tape& tape = common_tape({&pred});
  require(pred.shape() == truth.shape(), ErrorCode::kShapeMismatch,
          fmt::format("mse_loss: prediction {} vs truth {}", to_string(pred.shape()), to_string(truth.shape())));
  require(truth.size() > 0, ErrorCode::kEmptyInput, "mse_loss of empty tensors");
  const std::size_t n = truth.size();
  std::vector<double> residual(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    residual[i] = pred.value()[i] - truth[i];
    total += residual[i] * residual[i];
  }
  const std::size_t ip = pred.id();
  return tape.record("mse_loss", Tensor({1}, {total / static_cast<double>(n)}), {pred},
                     [ip, residual = std::move(residual)](Tape& t, const Tensor& g) {
                       if (!t.needs_grad(ip)) return;
                       auto dp = t.grad(ip).data();
                       const double k = 2.0 * g[0] / static_cast<double>(residual.size());
                       for (std::size_t i = 0; i < dp.size(); ++i) dp[i] += k * residual[i];
                     });
}

Var sum_squares(const Var& x) {
  Tape& tape = common_tape({&x});
  double total = 0.0;
  for (double v : x.value().data()) total += v * v;
  const std::size_t ix = x.id();
  return tape.record("sum_squares", Tensor({1}, {total}), {x}, [ix](Tape& t, const Tensor& g) {
    if (!t.needs_grad(ix)) return;
    auto xv = t.value(ix).data();
    auto dx = t.grad(ix).data();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += 2.0 * g[0] * xv[i];
  });
}

}  // namespace mhac::nn
