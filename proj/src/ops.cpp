#include "glia/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "glia/errors.hpp"
#include "glia/kernels.hpp"

namespace glia {
namespace {

template <class Fn>
void record(const Tensor& out, Fn&& fn) {
  if (out.requires_grad()) {
    GradTape::active()->push(out, std::forward<Fn>(fn));
  }
}

bool is_suffix(const Shape& full, const Shape& tail) {
  if (tail.size() > full.size()) {
    return false;
  }
  return std::equal(tail.rbegin(), tail.rend(), full.rbegin());
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " differ");
  }
}

std::size_t normalize_axis(int axis, std::size_t rank) {
  const int r = static_cast<int>(rank);
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for rank " +
                         std::to_string(rank));
  }
  return static_cast<std::size_t>(a);
}

constexpr double kSqrt2OverPi = 0.79788456080286535588;  // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  if (!is_suffix(a.shape(), b.shape())) {
    throw DimensionError("add: shape " + shape_str(b.shape()) + " does not broadcast onto " +
                         shape_str(a.shape()));
  }
  const auto n = a.numel();
  const auto nb = b.numel();
  std::vector<double> out(n);
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = ad[i] + bd[i % nb];
  }
  Tensor r = make_result(a.shape(), std::move(out), {&a, &b});
  record(r, [a, b, n, nb](std::span<const double> g) mutable {
    accumulate_grad(a, g);
    if (b.requires_grad()) {
      std::vector<double> gb(nb, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        gb[i % nb] += g[i];
      }
      accumulate_grad(b, gb);
    }
  });
  return r;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a[i] - b[i];
  }
  Tensor r = make_result(a.shape(), std::move(out), {&a, &b});
  record(r, [a, b](std::span<const double> g) mutable {
    accumulate_grad(a, g);
    if (b.requires_grad()) {
      std::vector<double> neg(g.begin(), g.end());
      for (auto& v : neg) {
        v = -v;
      }
      accumulate_grad(b, neg);
    }
  });
  return r;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a[i] * b[i];
  }
  Tensor r = make_result(a.shape(), std::move(out), {&a, &b});
  record(r, [a, b](std::span<const double> g) mutable {
    const auto n = g.size();
    if (a.requires_grad()) {
      std::vector<double> ga(n);
      for (std::size_t i = 0; i < n; ++i) {
        ga[i] = g[i] * b[i];
      }
      accumulate_grad(a, ga);
    }
    if (b.requires_grad()) {
      std::vector<double> gb(n);
      for (std::size_t i = 0; i < n; ++i) {
        gb[i] = g[i] * a[i];
      }
      accumulate_grad(b, gb);
    }
  });
  return r;
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) {
    v *= factor;
  }
  Tensor r = make_result(a.shape(), std::move(out), {&a});
  record(r, [a, factor](std::span<const double> g) mutable {
    std::vector<double> ga(g.begin(), g.end());
    for (auto& v : ga) {
      v *= factor;
    }
    accumulate_grad(a, ga);
  });
  return r;
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
  if (s.numel() != 1) {
    throw DimensionError("scale_by: gate must hold one value, got " + shape_str(s.shape()));
  }
  const double sv = s[0];
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) {
    v *= sv;
  }
  Tensor r = make_result(a.shape(), std::move(out), {&a, &s});
  record(r, [a, s, sv](std::span<const double> g) mutable {
    if (a.requires_grad()) {
      std::vector<double> ga(g.begin(), g.end());
      for (auto& v : ga) {
        v *= sv;
      }
      accumulate_grad(a, ga);
    }
    if (s.requires_grad()) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        acc += g[i] * a[i];
      }
      accumulate_grad(s, std::span<const double>(&acc, 1));
    }
  });
  return r;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() < 2 || b.rank() < 2) {
    throw DimensionError("matmul needs rank >= 2 operands, got " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
  }
  const std::size_t m = a.dim(a.rank() - 2);
  const std::size_t k = a.dim(a.rank() - 1);
  const std::size_t kb = b.dim(b.rank() - 2);
  const std::size_t n = b.dim(b.rank() - 1);
  const Shape lead_a(a.shape().begin(), a.shape().end() - 2);
  const Shape lead_b(b.shape().begin(), b.shape().end() - 2);
  const std::size_t batch_a = shape_numel(lead_a);
  const std::size_t batch_b = shape_numel(lead_b);
  if (k != kb || (lead_a != lead_b && batch_a != 1 && batch_b != 1)) {
    throw DimensionError("matmul: shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " are incompatible");
  }
  const Shape lead = batch_a >= batch_b ? lead_a : lead_b;
  const std::size_t batch = std::max(batch_a, batch_b);
  Shape out_shape = lead;
  out_shape.push_back(m);
  out_shape.push_back(n);

  std::vector<double> out(batch * m * n);
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  if (batch_b == 1) {
    // Fold a's batch into its rows.
    kernels::gemm(ad, bd, out.data(), batch_a * m, k, n, false);
    if (batch_a == 1 && batch > 1) {
      for (std::size_t i = 1; i < batch; ++i) {
        std::copy_n(out.data(), m * n, out.data() + i * m * n);
      }
    }
  } else {
    for (std::size_t i = 0; i < batch; ++i) {
      const double* ai = ad + (batch_a == 1 ? 0 : i * m * k);
      kernels::gemm(ai, bd + i * k * n, out.data() + i * m * n, m, k, n, false);
    }
  }
  Tensor r = make_result(std::move(out_shape), std::move(out), {&a, &b});
  record(r, [a, b, m, k, n, batch, batch_a, batch_b](std::span<const double> g) mutable {
    const double* ad = a.data().data();
    const double* bd = b.data().data();
    if (a.requires_grad()) {
      auto ga = a.mutable_grad();
      if (batch_b == 1 && batch_a == batch) {
        kernels::gemm_nt(g.data(), bd, ga.data(), batch * m, n, k, true);
      } else {
        for (std::size_t i = 0; i < batch; ++i) {
          double* gai = ga.data() + (batch_a == 1 ? 0 : i * m * k);
          const double* bi = bd + (batch_b == 1 ? 0 : i * k * n);
          kernels::gemm_nt(g.data() + i * m * n, bi, gai, m, n, k, true);
        }
      }
    }
    if (b.requires_grad()) {
      auto gb = b.mutable_grad();
      if (batch_b == 1 && batch_a == batch) {
        kernels::gemm_tn(ad, g.data(), gb.data(), k, batch * m, n, true);
      } else {
        for (std::size_t i = 0; i < batch; ++i) {
          const double* ai = ad + (batch_a == 1 ? 0 : i * m * k);
          double* gbi = gb.data() + (batch_b == 1 ? 0 : i * k * n);
          kernels::gemm_tn(ai, g.data() + i * m * n, gbi, k, m, n, true);
        }
      }
    }
  });
  return r;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() < 2) {
    throw DimensionError("transpose needs rank >= 2, got " + shape_str(a.shape()));
  }
  const std::size_t rows = a.dim(a.rank() - 2);
  const std::size_t cols = a.dim(a.rank() - 1);
  const std::size_t batch = a.numel() / (rows * cols);
  Shape out_shape = a.shape();
  std::swap(out_shape[out_shape.size() - 1], out_shape[out_shape.size() - 2]);
  auto swap_axes = [rows, cols, batch](std::span<const double> in, double* out,
                                       bool forward) {
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = b * rows * cols;
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
          if (forward) {
            out[off + j * rows + i] = in[off + i * cols + j];
          } else {
            out[off + i * cols + j] += in[off + j * rows + i];
          }
        }
      }
    }
  };
  std::vector<double> out(a.numel());
  swap_axes(a.data(), out.data(), true);
  Tensor r = make_result(std::move(out_shape), std::move(out), {&a});
  record(r, [a, swap_axes](std::span<const double> g) mutable {
    swap_axes(g, a.mutable_grad().data(), false);
  });
  return r;
}

Tensor softmax(const Tensor& x, int axis) {
  const std::size_t ax = normalize_axis(axis, x.rank());
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t i = 0; i < ax; ++i) {
    outer *= x.dim(i);
  }
  for (std::size_t i = ax + 1; i < x.rank(); ++i) {
    inner *= x.dim(i);
  }
  const std::size_t len = x.dim(ax);
  std::vector<double> out(x.numel());
  kernels::softmax(x.data().data(), out.data(), outer, len, inner);
  Tensor r = make_result(x.shape(), std::move(out), {&x});
  Tensor y = r;
  record(r, [x, y, outer, len, inner](std::span<const double> g) mutable {
    kernels::softmax_backward(y.data().data(), g.data(), x.mutable_grad().data(), outer, len,
                              inner);
  });
  return r;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  if (!(eps > 0.0)) {
    throw ParameterError("layer_norm: eps must be positive, got " + std::to_string(eps));
  }
  if (x.rank() < 1) {
    throw DimensionError("layer_norm on a rank-0 tensor");
  }
  const std::size_t cols = x.dim(x.rank() - 1);
  if (gain.shape() != Shape{cols} || bias.shape() != Shape{cols}) {
    throw DimensionError("layer_norm: gain " + shape_str(gain.shape()) + " / bias " +
                         shape_str(bias.shape()) + " do not match last dimension of " +
                         shape_str(x.shape()));
  }
  const std::size_t rows = x.numel() / cols;
  std::vector<double> out(x.numel());
  std::vector<double> xhat(x.numel());
  std::vector<double> rstd(rows);
  kernels::layer_norm(x.data().data(), gain.data().data(), bias.data().data(), out.data(),
                      xhat.data(), rstd.data(), rows, cols, eps);
  Tensor r = make_result(x.shape(), std::move(out), {&x, &gain, &bias});
  record(r, [x, gain, bias, rows, cols, xhat = std::move(xhat),
             rstd = std::move(rstd)](std::span<const double> g) mutable {
    if (x.requires_grad()) {
      kernels::layer_norm_backward(xhat.data(), rstd.data(), gain.data().data(), g.data(),
                                   x.mutable_grad().data(), rows, cols);
    }
    if (gain.requires_grad() || bias.requires_grad()) {
      std::vector<double> gg(cols, 0.0);
      std::vector<double> gb(cols, 0.0);
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
          gg[j] += g[i * cols + j] * xhat[i * cols + j];
          gb[j] += g[i * cols + j];
        }
      }
      accumulate_grad(gain, gg);
      accumulate_grad(bias, gb);
    }
  });
  return r;
}

Tensor gelu(const Tensor& x, GeluMode mode) {
  const std::size_t n = x.numel();
  std::vector<double> out(n);
  auto xd = x.data();
  if (mode == GeluMode::tanh_approx) {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = xd[i];
      out[i] = 0.5 * v * (1.0 + std::tanh(kSqrt2OverPi * (v + kGeluCubic * v * v * v)));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = 0.5 * xd[i] * (1.0 + std::erf(xd[i] / std::numbers::sqrt2));
    }
  }
  Tensor r = make_result(x.shape(), std::move(out), {&x});
  record(r, [x, mode](std::span<const double> g) mutable {
    auto gx = x.mutable_grad();
    auto xd = x.data();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double v = xd[i];
      double d;
      if (mode == GeluMode::tanh_approx) {
        const double u = kSqrt2OverPi * (v + kGeluCubic * v * v * v);
        const double t = std::tanh(u);
        const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * v * v);
        d = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
      } else {
        const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
        const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
        d = cdf + v * pdf;
      }
      gx[i] += g[i] * d;
    }
  });
  return r;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.rank() != 2 || x.rank() < 1 || x.dim(x.rank() - 1) != w.dim(0) ||
      b.shape() != Shape{w.dim(1)}) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + ", weight " +
                         shape_str(w.shape()) + ", bias " + shape_str(b.shape()) +
                         " do not agree");
  }
  if (x.rank() == 1) {
    Tensor x2 = reshape(x, {1, x.dim(0)});
    return reshape(add(matmul(x2, w), b), {w.dim(1)});
  }
  return add(matmul(x, w), b);
}

Tensor split_heads(const Tensor& x, std::size_t heads) {
  if (x.rank() != 2 || heads == 0 || x.dim(1) % heads != 0) {
    throw DimensionError("split_heads: width of " + shape_str(x.shape()) +
                         " not divisible into " + std::to_string(heads) + " heads");
  }
  const std::size_t t = x.dim(0);
  const std::size_t dh = x.dim(1) / heads;
  std::vector<double> out(x.numel());
  auto xd = x.data();
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < t; ++i) {
      std::copy_n(xd.data() + i * heads * dh + h * dh, dh, out.data() + (h * t + i) * dh);
    }
  }
  Tensor r = make_result({heads, t, dh}, std::move(out), {&x});
  record(r, [x, heads, t, dh](std::span<const double> g) mutable {
    auto gx = x.mutable_grad();
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t e = 0; e < dh; ++e) {
          gx[i * heads * dh + h * dh + e] += g[(h * t + i) * dh + e];
        }
      }
    }
  });
  return r;
}

Tensor merge_heads(const Tensor& x) {
  if (x.rank() != 3) {
    throw DimensionError("merge_heads expects [heads, T, dh], got " + shape_str(x.shape()));
  }
  const std::size_t heads = x.dim(0);
  const std::size_t t = x.dim(1);
  const std::size_t dh = x.dim(2);
  std::vector<double> out(x.numel());
  auto xd = x.data();
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < t; ++i) {
      std::copy_n(xd.data() + (h * t + i) * dh, dh, out.data() + i * heads * dh + h * dh);
    }
  }
  Tensor r = make_result({t, heads * dh}, std::move(out), {&x});
  record(r, [x, heads, t, dh](std::span<const double> g) mutable {
    auto gx = x.mutable_grad();
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t e = 0; e < dh; ++e) {
          gx[(h * t + i) * dh + e] += g[i * heads * dh + h * dh + e];
        }
      }
    }
  });
  return r;
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  if (x.rank() < 1 || begin >= end || end > x.dim(0)) {
    throw DimensionError("slice_rows [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") out of range for " + shape_str(x.shape()));
  }
  const std::size_t row = x.numel() / x.dim(0);
  Shape out_shape = x.shape();
  out_shape[0] = end - begin;
  std::vector<double> out(x.data().begin() + static_cast<std::ptrdiff_t>(begin * row),
                          x.data().begin() + static_cast<std::ptrdiff_t>(end * row));
  Tensor r = make_result(std::move(out_shape), std::move(out), {&x});
  record(r, [x, begin, row](std::span<const double> g) mutable {
    auto gx = x.mutable_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      gx[begin * row + i] += g[i];
    }
  });
  return r;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) {
    throw DimensionError("concat_rows of nothing");
  }
  const Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
  std::size_t rows = 0;
  std::vector<double> out;
  for (const auto& p : parts) {
    if (p.rank() < 1 || Shape(p.shape().begin() + 1, p.shape().end()) != tail) {
      throw DimensionError("concat_rows: " + shape_str(p.shape()) + " does not match " +
                           shape_str(parts[0].shape()));
    }
    rows += p.dim(0);
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  Shape out_shape = tail;
  out_shape.insert(out_shape.begin(), rows);
  // Two representatives carry the precision and grad flags of the whole list.
  const Tensor* prec_src = &parts[0];
  const Tensor* grad_src = &parts[0];
  for (const auto& p : parts) {
    if (p.precision() == Precision::f32) {
      prec_src = &p;
    }
    if (p.requires_grad()) {
      grad_src = &p;
    }
  }
  Tensor r = make_result(std::move(out_shape), std::move(out), {prec_src, grad_src});
  record(r, [parts](std::span<const double> g) mutable {
    std::size_t off = 0;
    for (auto& p : parts) {
      const std::size_t n = p.numel();
      accumulate_grad(p, g.subspan(off, n));
      off += n;
    }
  });
  return r;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  Tensor r = make_result(std::move(shape), std::move(out), {&x});
  record(r, [x](std::span<const double> g) mutable { accumulate_grad(x, g); });
  return r;
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) {
    acc += v;
  }
  Tensor r = make_result({1}, {acc}, {&x});
  record(r, [x](std::span<const double> g) mutable {
    std::vector<double> gx(x.numel(), g[0]);
    accumulate_grad(x, gx);
  });
  return r;
}

Tensor mean(const Tensor& x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor smooth_l1(const Tensor& x, double beta) {
  if (!(beta > 0.0)) {
    throw ParameterError("smooth_l1: beta must be positive");
  }
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double a = std::abs(x[i]);
    out[i] = a < beta ? 0.5 * x[i] * x[i] / beta : a - 0.5 * beta;
  }
  Tensor r = make_result(x.shape(), std::move(out), {&x});
  record(r, [x, beta](std::span<const double> g) mutable {
    auto gx = x.mutable_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double v = x[i];
      const double d = std::abs(v) < beta ? v / beta : (v > 0 ? 1.0 : -1.0);
      gx[i] += g[i] * d;
    }
  });
  return r;
}

}  // namespace glia
