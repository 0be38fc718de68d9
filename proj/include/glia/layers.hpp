#pragma once

#include <cstddef>
#include <random>

#include "glia/ops.hpp"
#include "glia/tensor.hpp"

namespace glia {

struct LinearParams {
  Tensor weight;  // [d_in, d_out]
  Tensor bias;    // [d_out]

  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }
  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
};

struct LayerNormParams {
  Tensor gain;
  Tensor bias;
  double eps = 1e-6;

  Tensor operator()(const Tensor& x) const { return layer_norm(x, gain, bias, eps); }
};

struct AttentionParams {
  LinearParams query;
  LinearParams key;
  LinearParams value;
  LinearParams output;

  std::size_t width() const { return query.in_features(); }
};

enum class InitScheme : std::uint8_t {
  trunc_normal,  // N(0, 0.02^2) truncated at two sigma, zero bias
  fan_in,        // N(0, 1/d_in), zero bias
  zeros,
};

struct ParamFactory {
  std::mt19937_64 rng;
  Precision precision = Precision::f32;
  bool requires_grad = false;

  Tensor trunc_normal(Shape shape, double sigma = 0.02);
  Tensor normal(Shape shape, double sigma);
  Tensor constant(Shape shape, double value);
  LinearParams linear(std::size_t d_in, std::size_t d_out, InitScheme scheme);
  LayerNormParams layer_norm(std::size_t width);
  AttentionParams attention(std::size_t width, InitScheme scheme);
};

// Multi-head attention with queries from `q_in` and keys/values from `kv_in`
// (pass the same tensor twice for self-attention). Both are [T, width].
// When `mean_probs` is given it receives the head-averaged attention weights
// [T_q, T_kv] as a detached tensor.
Tensor multi_head_attention(const Tensor& q_in, const Tensor& kv_in,
                            const AttentionParams& params, std::size_t heads,
                            Tensor* mean_probs = nullptr);

}  // namespace glia
