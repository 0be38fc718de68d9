#include "glia/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#if defined(GLIA_WITH_OPENMP)
#include <omp.h>
#endif

namespace glia::kernels {
namespace {

using Size = std::size_t;

inline void gemm_row(const double* a, const double* b, double* c, Size i, Size k, Size n,
                     bool accumulate) {
  double* crow = c + i * n;
  if (!accumulate) {
    std::fill(crow, crow + n, 0.0);
  }
  const double* arow = a + i * k;
  for (Size p = 0; p < k; ++p) {
    const double av = arow[p];
    const double* brow = b + p * n;
    for (Size j = 0; j < n; ++j) {
      crow[j] += av * brow[j];
    }
  }
}

inline void gemm_nt_row(const double* a, const double* b, double* c, Size i, Size k, Size n,
                        bool accumulate) {
  const double* arow = a + i * k;
  double* crow = c + i * n;
  for (Size j = 0; j < n; ++j) {
    const double* brow = b + j * k;
    double acc = 0.0;
    for (Size p = 0; p < k; ++p) {
      acc += arow[p] * brow[p];
    }
    crow[j] = accumulate ? crow[j] + acc : acc;
  }
}

inline void gemm_tn_row(const double* a, const double* b, double* c, Size i, Size m, Size k,
                        Size n, bool accumulate) {
  double* crow = c + i * n;
  if (!accumulate) {
    std::fill(crow, crow + n, 0.0);
  }
  for (Size p = 0; p < k; ++p) {
    const double av = a[p * m + i];
    const double* brow = b + p * n;
    for (Size j = 0; j < n; ++j) {
      crow[j] += av * brow[j];
    }
  }
}

inline void softmax_lane(const double* in, double* out, Size lane, Size len, Size inner) {
  const Size o = lane / inner;
  const Size r = lane % inner;
  const Size base = o * len * inner + r;
  double mx = in[base];
  for (Size t = 1; t < len; ++t) {
    mx = std::max(mx, in[base + t * inner]);
  }
  double sum = 0.0;
  for (Size t = 0; t < len; ++t) {
    const double e = std::exp(in[base + t * inner] - mx);
    out[base + t * inner] = e;
    sum += e;
  }
  const double inv = 1.0 / sum;
  for (Size t = 0; t < len; ++t) {
    out[base + t * inner] *= inv;
  }
}

inline void softmax_backward_lane(const double* y, const double* gy, double* gx, Size lane,
                                  Size len, Size inner) {
  const Size o = lane / inner;
  const Size r = lane % inner;
  const Size base = o * len * inner + r;
  double dot = 0.0;
  for (Size t = 0; t < len; ++t) {
    dot += gy[base + t * inner] * y[base + t * inner];
  }
  for (Size t = 0; t < len; ++t) {
    const Size idx = base + t * inner;
    gx[idx] += y[idx] * (gy[idx] - dot);
  }
}

inline void layer_norm_row(const double* x, const double* gain, const double* bias, double* y,
                           double* xhat, double* rstd, Size row, Size cols, double eps) {
  const double* xr = x + row * cols;
  double mean = 0.0;
  for (Size j = 0; j < cols; ++j) {
    mean += xr[j];
  }
  mean /= static_cast<double>(cols);
  double var = 0.0;
  for (Size j = 0; j < cols; ++j) {
    const double d = xr[j] - mean;
    var += d * d;
  }
  var /= static_cast<double>(cols);
  const double rs = 1.0 / std::sqrt(var + eps);
  rstd[row] = rs;
  double* hr = xhat + row * cols;
  double* yr = y + row * cols;
  for (Size j = 0; j < cols; ++j) {
    hr[j] = (xr[j] - mean) * rs;
    yr[j] = hr[j] * gain[j] + bias[j];
  }
}

inline void layer_norm_backward_row(const double* xhat, const double* rstd, const double* gain,
                                    const double* gy, double* gx, Size row, Size cols) {
  const double* hr = xhat + row * cols;
  const double* gr = gy + row * cols;
  double sum_g = 0.0;
  double sum_gh = 0.0;
  for (Size j = 0; j < cols; ++j) {
    const double g = gr[j] * gain[j];
    sum_g += g;
    sum_gh += g * hr[j];
  }
  const double inv_n = 1.0 / static_cast<double>(cols);
  double* out = gx + row * cols;
  for (Size j = 0; j < cols; ++j) {
    const double g = gr[j] * gain[j];
    out[j] += rstd[row] * (g - inv_n * sum_g - hr[j] * inv_n * sum_gh);
  }
}

}  // namespace

namespace serial {

void gemm(const double* a, const double* b, double* c, Size m, Size k, Size n,
          bool accumulate) {
  for (Size i = 0; i < m; ++i) {
    gemm_row(a, b, c, i, k, n, accumulate);
  }
}

void gemm_nt(const double* a, const double* b, double* c, Size m, Size k, Size n,
             bool accumulate) {
  for (Size i = 0; i < m; ++i) {
    gemm_nt_row(a, b, c, i, k, n, accumulate);
  }
}

void gemm_tn(const double* a, const double* b, double* c, Size m, Size k, Size n,
             bool accumulate) {
  for (Size i = 0; i < m; ++i) {
    gemm_tn_row(a, b, c, i, m, k, n, accumulate);
  }
}

void softmax(const double* in, double* out, Size outer, Size len, Size inner) {
  for (Size lane = 0; lane < outer * inner; ++lane) {
    softmax_lane(in, out, lane, len, inner);
  }
}

void softmax_backward(const double* y, const double* grad_out, double* grad_in, Size outer,
                      Size len, Size inner) {
  for (Size lane = 0; lane < outer * inner; ++lane) {
    softmax_backward_lane(y, grad_out, grad_in, lane, len, inner);
  }
}

void layer_norm(const double* x, const double* gain, const double* bias, double* y,
                double* xhat, double* rstd, Size rows, Size cols, double eps) {
  for (Size r = 0; r < rows; ++r) {
    layer_norm_row(x, gain, bias, y, xhat, rstd, r, cols, eps);
  }
}

void layer_norm_backward(const double* xhat, const double* rstd, const double* gain,
                         const double* grad_y, double* grad_x, Size rows, Size cols) {
  for (Size r = 0; r < rows; ++r) {
    layer_norm_backward_row(xhat, rstd, gain, grad_y, grad_x, r, cols);
  }
}

}  // namespace serial

namespace omp {

// Loop indices are signed for OpenMP 3.x compatibility.
void gemm(const double* a, const double* b, double* c, Size m, Size k, Size n,
          bool accumulate) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n >= kParallelWorkThreshold)
  for (std::int64_t i = 0; i < rows; ++i) {
    gemm_row(a, b, c, static_cast<Size>(i), k, n, accumulate);
  }
}

void gemm_nt(const double* a, const double* b, double* c, Size m, Size k, Size n,
             bool accumulate) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n >= kParallelWorkThreshold)
  for (std::int64_t i = 0; i < rows; ++i) {
    gemm_nt_row(a, b, c, static_cast<Size>(i), k, n, accumulate);
  }
}

void gemm_tn(const double* a, const double* b, double* c, Size m, Size k, Size n,
             bool accumulate) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n >= kParallelWorkThreshold)
  for (std::int64_t i = 0; i < rows; ++i) {
    gemm_tn_row(a, b, c, static_cast<Size>(i), m, k, n, accumulate);
  }
}

void softmax(const double* in, double* out, Size outer, Size len, Size inner) {
  const auto lanes = static_cast<std::int64_t>(outer * inner);
#pragma omp parallel for schedule(static) if (outer * len * inner >= kParallelWorkThreshold)
  for (std::int64_t lane = 0; lane < lanes; ++lane) {
    softmax_lane(in, out, static_cast<Size>(lane), len, inner);
  }
}

void softmax_backward(const double* y, const double* grad_out, double* grad_in, Size outer,
                      Size len, Size inner) {
  const auto lanes = static_cast<std::int64_t>(outer * inner);
#pragma omp parallel for schedule(static) if (outer * len * inner >= kParallelWorkThreshold)
  for (std::int64_t lane = 0; lane < lanes; ++lane) {
    softmax_backward_lane(y, grad_out, grad_in, static_cast<Size>(lane), len, inner);
  }
}

void layer_norm(const double* x, const double* gain, const double* bias, double* y,
                double* xhat, double* rstd, Size rows, Size cols, double eps) {
  const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWorkThreshold)
  for (std::int64_t r = 0; r < n; ++r) {
    layer_norm_row(x, gain, bias, y, xhat, rstd, static_cast<Size>(r), cols, eps);
  }
}

void layer_norm_backward(const double* xhat, const double* rstd, const double* gain,
                         const double* grad_y, double* grad_x, Size rows, Size cols) {
  const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWorkThreshold)
  for (std::int64_t r = 0; r < n; ++r) {
    layer_norm_backward_row(xhat, rstd, gain, grad_y, grad_x, static_cast<Size>(r), cols);
  }
}

}  // namespace omp

int max_threads() {
#if defined(GLIA_WITH_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace glia::kernels
