#pragma once

#include <cstddef>
#include <vector>

#include "glia/tensor.hpp"

namespace glia {

enum class GeluMode : std::uint8_t { tanh_approx, exact_erf };

// a + b, where b's shape equals a's shape or a trailing suffix of it.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// a * s for a single-element tensor s (learnable gates).
Tensor scale_by(const Tensor& a, const Tensor& s);

// [..., m, k] x [..., k, n]. Leading dimensions must match, or one side may
// have none (rank 2) and is broadcast.
Tensor matmul(const Tensor& a, const Tensor& b);
// Swaps the last two axes.
Tensor transpose(const Tensor& a);

// Max-subtracted softmax along `axis` (negative counts from the back).
Tensor softmax(const Tensor& x, int axis);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-6);
Tensor gelu(const Tensor& x, GeluMode mode = GeluMode::tanh_approx);
// x[..., d_in] * w[d_in, d_out] + b[d_out]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// [T, h*dh] -> [h, T, dh] and back.
Tensor split_heads(const Tensor& x, std::size_t heads);
Tensor merge_heads(const Tensor& x);

// Rows [begin, end) along axis 0.
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor reshape(const Tensor& x, Shape shape);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Elementwise Huber-style penalty with transition point beta.
Tensor smooth_l1(const Tensor& x, double beta = 1.0);

}  // namespace glia
