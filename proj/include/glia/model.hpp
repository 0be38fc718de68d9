#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "glia/adapter.hpp"
#include "glia/fragments.hpp"
#include "glia/image.hpp"
#include "glia/vit.hpp"

namespace glia {

// Which image feeds each stream. The guidance stream is encoded by the frozen
// backbone and down-projected into the adapters' latent space; the main
// stream runs through the backbone blocks interleaved with adapters and its
// cls token feeds the regression head.
enum class GuidanceMode : std::uint8_t {
  semantic_guides_detail,  // guidance: resized image, main: fragments (default)
  detail_guides_semantic,  // guidance: fragments, main: resized image
  semantic_only,           // both streams: resized image
  detail_only,             // both streams: fragments
};

std::string_view guidance_name(GuidanceMode m);
GuidanceMode parse_guidance(std::string_view name);

struct GridSettings {
  std::size_t n_h = 4;
  std::size_t n_w = 4;
  std::size_t f_h = 16;
  std::size_t f_w = 16;
  SamplingMode mode = SamplingMode::deterministic;
  std::uint64_t seed = 0;
  bool operator==(const GridSettings&) const = default;
};

struct GliaNetConfig {
  ViTConfig vit;
  GliaConfig glia;
  GridSettings grid;
  std::size_t semantic_size = 64;
  std::size_t head_hidden = 32;
  GuidanceMode guidance = GuidanceMode::semantic_guides_detail;
  std::uint64_t backbone_seed = 7;

  // ViT 64/8, width 64, 4 blocks, latent 16, 4x4 grid of 16px fragments.
  static GliaNetConfig toy();
  // ViT-B/16 shapes, latent 192, 12 adapters, 7x7 grid of 32px fragments.
  static GliaNetConfig paper_scale();
  void validate() const;
  bool operator==(const GliaNetConfig&) const = default;
};

struct HeadParams {
  LinearParams fc1;  // [d_model, hidden]
  LinearParams fc2;  // [hidden, 1]
};

struct GliaNetParams {
  ViTParams backbone;
  LinearParams semantic_down;  // d_model -> d_latent, F_s -> F_sd
  std::vector<GliaBlockParams> adapters;
  HeadParams head;

  std::vector<NamedTensor> frozen() const;
  std::vector<NamedTensor> trainable() const;
  std::vector<NamedTensor> named() const;
};

// Backbone from config.backbone_seed (frozen); adapters, projection and head
// from `adapter_seed` (trainable).
GliaNetParams init_glianet(const GliaNetConfig& config, std::uint64_t adapter_seed,
                           Precision precision = Precision::f32);

// affine -> GELU -> affine -> scalar; `cls` is [d_model] or [1, d_model].
Tensor regression_head(const Tensor& cls, const HeadParams& head, GeluMode mode);

// Frozen, parameter-independent part of a forward pass for one image.
struct PreparedImage {
  Tensor guidance_features;  // F_s of the guidance stream, [T, d_model]
  Tensor main_patches;       // [N, patch_dim] of the main-stream image
  FragmentGrid grid;
  std::size_t source_h = 0;
  std::size_t source_w = 0;
};

PreparedImage prepare_image(const Image& img, const GliaNetParams& params,
                            const GliaNetConfig& config);

struct ForwardTrace {
  std::size_t block = 0;   // backbone block whose attention is captured
  Tensor attention;        // head-averaged [T, T]
};

// Score as a [1] tensor, differentiable w.r.t. the trainable parameters.
Tensor forward_prepared(const PreparedImage& prep, const GliaNetParams& params,
                        const GliaNetConfig& config, ForwardTrace* trace = nullptr);
double predict(const Image& img, const GliaNetParams& params, const GliaNetConfig& config);

struct ParameterCount {
  std::size_t trainable = 0;
  std::size_t total = 0;
  double ratio() const {
    return total == 0 ? 0.0 : static_cast<double>(trainable) / static_cast<double>(total);
  }
};

struct TrainableReport {
  std::vector<NamedTensor> tensors;
  ParameterCount count;
};

// Adapters, semantic down-projection and head; never backbone tensors.
TrainableReport trainable_parameters(const GliaNetParams& params);
// Same count from shapes alone, without allocating weights.
ParameterCount count_parameters(const GliaNetConfig& config);

struct AttentionMap {
  Image heat;                   // source-sized grayscale, normalised to [0, 1]
  std::vector<double> cells;    // per-cell cls attention before normalisation
  std::size_t rows = 0;
  std::size_t cols = 0;
  double cls_self = 0.0;        // attention of cls to itself
};

// cls-to-patch attention of one main-stream block, pooled per fragment cell
// (or per patch when the main stream is the resized image), min-max
// normalised (a constant map becomes all zeros) and upsampled to the source
// size.
AttentionMap export_attention_map(const Image& img, const GliaNetParams& params,
                                  const GliaNetConfig& config, std::size_t block);

// Model file: every tensor plus `meta.config`, the model config as key=value
// text stored as a byte tensor.
void save_model(const std::filesystem::path& path, const GliaNetParams& params,
                const GliaNetConfig& config);
struct LoadedModel {
  GliaNetConfig config;
  GliaNetParams params;
};
LoadedModel load_model(const std::filesystem::path& path, Precision precision = Precision::f32);

}  // namespace glia
