#include "glia/layers.hpp"

#include <cmath>

#include "glia/errors.hpp"

namespace glia {

Tensor ParamFactory::trunc_normal(Shape shape, double sigma) {
  std::normal_distribution<double> dist(0.0, sigma);
  std::vector<double> values(shape_numel(shape));
  for (auto& v : values) {
    do {
      v = dist(rng);
    } while (std::abs(v) > 2.0 * sigma);
  }
  return Tensor::from(std::move(shape), std::move(values), precision, requires_grad);
}

Tensor ParamFactory::normal(Shape shape, double sigma) {
  std::normal_distribution<double> dist(0.0, sigma);
  std::vector<double> values(shape_numel(shape));
  for (auto& v : values) {
    v = dist(rng);
  }
  return Tensor::from(std::move(shape), std::move(values), precision, requires_grad);
}

Tensor ParamFactory::constant(Shape shape, double value) {
  return Tensor::full(std::move(shape), value, precision, requires_grad);
}

LinearParams ParamFactory::linear(std::size_t d_in, std::size_t d_out, InitScheme scheme) {
  LinearParams p;
  switch (scheme) {
    case InitScheme::trunc_normal:
      p.weight = trunc_normal({d_in, d_out});
      break;
    case InitScheme::fan_in:
      p.weight = normal({d_in, d_out}, 1.0 / std::sqrt(static_cast<double>(d_in)));
      break;
    case InitScheme::zeros:
      p.weight = constant({d_in, d_out}, 0.0);
      break;
  }
  p.bias = constant({d_out}, 0.0);
  return p;
}

LayerNormParams ParamFactory::layer_norm(std::size_t width) {
  return {constant({width}, 1.0), constant({width}, 0.0)};
}

AttentionParams ParamFactory::attention(std::size_t width, InitScheme scheme) {
  AttentionParams p;
  p.query = linear(width, width, scheme);
  p.key = linear(width, width, scheme);
  p.value = linear(width, width, scheme);
  p.output = linear(width, width, scheme);
  return p;
}

Tensor multi_head_attention(const Tensor& q_in, const Tensor& kv_in,
                            const AttentionParams& params, std::size_t heads,
                            Tensor* mean_probs) {
  const std::size_t width = params.width();
  if (q_in.rank() != 2 || kv_in.rank() != 2 || q_in.dim(1) != width ||
      kv_in.dim(1) != width) {
    throw DimensionError("attention: query " + shape_str(q_in.shape()) + " and key/value " +
                         shape_str(kv_in.shape()) + " must both be [T, " +
                         std::to_string(width) + "]");
  }
  if (heads == 0 || width % heads != 0) {
    throw DimensionError("attention: width " + std::to_string(width) +
                         " not divisible by " + std::to_string(heads) + " heads");
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(width / heads));
  Tensor q = split_heads(params.query(q_in), heads);
  Tensor k = split_heads(params.key(kv_in), heads);
  Tensor v = split_heads(params.value(kv_in), heads);
  Tensor probs = softmax(scale(matmul(q, transpose(k)), inv_sqrt), -1);
  if (mean_probs != nullptr) {
    const std::size_t tq = probs.dim(1);
    const std::size_t tk = probs.dim(2);
    std::vector<double> avg(tq * tk, 0.0);
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < tq * tk; ++i) {
        avg[i] += probs[h * tq * tk + i];
      }
    }
    for (auto& a : avg) {
      a /= static_cast<double>(heads);
    }
    *mean_probs = Tensor::from({tq, tk}, std::move(avg));
  }
  return params.output(merge_heads(matmul(probs, v)));
}

}  // namespace glia
