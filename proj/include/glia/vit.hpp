#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "glia/image.hpp"
#include "glia/layers.hpp"
#include "glia/weights.hpp"

namespace glia {

struct ViTConfig {
  std::size_t img_size = 64;
  std::size_t patch_size = 8;
  std::size_t d_model = 64;
  std::size_t n_layers = 4;
  std::size_t n_heads = 4;
  std::size_t mlp_ratio = 4;
  GeluMode gelu = GeluMode::tanh_approx;
  double ln_eps = 1e-6;

  // Desk-scale preset: 64px input, 8px patches, width 64, 4 blocks, 4 heads.
  static ViTConfig toy();
  // ViT-B/16 shapes: 224px input, 16px patches, width 768, 12 blocks, 12 heads.
  static ViTConfig base16();

  std::size_t grid() const { return img_size / patch_size; }
  std::size_t num_patches() const { return grid() * grid(); }
  std::size_t tokens() const { return 1 + num_patches(); }
  std::size_t patch_dim() const { return patch_size * patch_size * 3; }
  void validate() const;
  bool operator==(const ViTConfig&) const = default;
};

struct EncoderBlockParams {
  LayerNormParams norm1;
  AttentionParams attn;
  LayerNormParams norm2;
  LinearParams fc1;
  LinearParams fc2;
};

struct ViTParams {
  LinearParams patch_embed;  // [patch_dim, d_model]
  Tensor cls_token;          // [1, d_model]
  Tensor pos_embed;          // [tokens, d_model]
  std::vector<EncoderBlockParams> blocks;
  LayerNormParams final_norm;

  // Aliasing handles in a stable order, names prefixed with `prefix`.
  std::vector<NamedTensor> named(const std::string& prefix = "backbone.") const;
  void set_requires_grad(bool value) const;
};

// Stand-in for pretrained weights: truncated normal (sigma 0.02) for every
// matrix and embedding, unit gains, zero biases. All frozen.
ViTParams init_vit_params(const ViTConfig& config, std::uint64_t seed,
                          Precision precision = Precision::f32);
void save_vit_params(const std::filesystem::path& path, const ViTParams& params);
ViTParams load_vit_params(const std::filesystem::path& path, const ViTConfig& config);

// [N, patch*patch*3] with rows in raster order over the patch grid and each
// row laid out (py, px, channel).
Tensor image_to_patches(const Image& img, std::size_t patch);

// Projects patch rows, prepends the cls token and adds positional embeddings.
Tensor embed_patches(const Tensor& patches, const ViTParams& params);
Tensor patch_embed(const Image& img, const ViTParams& params, const ViTConfig& config);

// Pre-norm block: x + attn(norm1(x)), then + mlp(norm2(.)).
Tensor encoder_block(const Tensor& x, const EncoderBlockParams& block, const ViTConfig& config,
                     Tensor* attention = nullptr);

// All blocks followed by the final norm.
Tensor encode_tokens(const Tensor& tokens, const ViTParams& params, const ViTConfig& config);
// F_s for an image already resized to config.img_size.
Tensor encode_semantic(const Image& img, const ViTParams& params, const ViTConfig& config);

}  // namespace glia
