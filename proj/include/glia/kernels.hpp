#pragma once

// Dense row-major kernels behind the tensor engine.
//
// Each kernel exists twice: a serial reference in `serial::` and an OpenMP
// version in `omp::`. Both call the same per-row routine, so for any thread
// count the parallel result is bit-identical to the serial one. The engine
// dispatches through the unqualified names at the bottom of this header.

#include <cstddef>

namespace glia::kernels {

// Below this many multiply-adds the OpenMP versions run on one thread.
inline constexpr std::size_t kParallelWorkThreshold = 1 << 15;

namespace serial {

// c[m,n] (+)= a[m,k] * b[k,n]
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n, bool accumulate);
// c[m,n] (+)= a[m,k] * b[n,k]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate);
// c[m,n] (+)= a[k,m]^T * b[k,n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate);

// Softmax over the middle axis of an [outer, len, inner] view.
void softmax(const double* in, double* out, std::size_t outer, std::size_t len,
             std::size_t inner);
// grad_in (+)= y * (grad_out - sum(grad_out * y)) over the same axis.
void softmax_backward(const double* y, const double* grad_out, double* grad_in,
                      std::size_t outer, std::size_t len, std::size_t inner);

// Row-wise normalisation; writes the normalised rows (before the affine
// transform) to xhat and the per-row reciprocal std to rstd.
void layer_norm(const double* x, const double* gain, const double* bias, double* y,
                double* xhat, double* rstd, std::size_t rows, std::size_t cols, double eps);
void layer_norm_backward(const double* xhat, const double* rstd, const double* gain,
                         const double* grad_y, double* grad_x, std::size_t rows,
                         std::size_t cols);

}  // namespace serial

namespace omp {

void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n, bool accumulate);
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate);
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate);
void softmax(const double* in, double* out, std::size_t outer, std::size_t len,
             std::size_t inner);
void softmax_backward(const double* y, const double* grad_out, double* grad_in,
                      std::size_t outer, std::size_t len, std::size_t inner);
void layer_norm(const double* x, const double* gain, const double* bias, double* y,
                double* xhat, double* rstd, std::size_t rows, std::size_t cols, double eps);
void layer_norm_backward(const double* xhat, const double* rstd, const double* gain,
                         const double* grad_y, double* grad_x, std::size_t rows,
                         std::size_t cols);

}  // namespace omp

#if defined(GLIA_WITH_OPENMP)
namespace active = omp;
#else
namespace active = serial;
#endif

using active::gemm;
using active::gemm_nt;
using active::gemm_tn;
using active::layer_norm;
using active::layer_norm_backward;
using active::softmax;
using active::softmax_backward;

// Number of worker threads the omp:: kernels would use (1 without OpenMP).
int max_threads();

}  // namespace glia::kernels
