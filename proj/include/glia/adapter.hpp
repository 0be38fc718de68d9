#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "glia/layers.hpp"
#include "glia/weights.hpp"

namespace glia {

// Which halves of the adapter run.
enum class AdapterAblation : std::uint8_t { full, lgf_only, glr_only };
// Detail latent consumed by the refinement step: the down-projected input of
// the block, or the fused latent produced by the fusion step.
enum class GlrSource : std::uint8_t { pre_lgf, post_lgf };

std::string_view ablation_name(AdapterAblation a);
AdapterAblation parse_ablation(std::string_view name);
std::string_view glr_source_name(GlrSource s);
GlrSource parse_glr_source(std::string_view name);

struct GliaConfig {
  std::size_t d_model = 64;
  std::size_t d_latent = 16;
  std::size_t n_heads = 4;
  // Backbone block indices followed by an adapter block.
  std::vector<std::size_t> insertion_points = {0, 1, 2, 3};
  // 1: single affine down/up maps; 2: affine -> GELU -> affine.
  std::size_t mlp_depth = 1;
  double lambda_init = 0.1;
  GlrSource glr_source = GlrSource::pre_lgf;
  AdapterAblation ablation = AdapterAblation::full;
  GeluMode gelu = GeluMode::tanh_approx;

  // Latent width d_model / 4, one adapter after every backbone block.
  static GliaConfig for_backbone(std::size_t d_model, std::size_t n_layers);
  void validate(std::size_t n_layers) const;
  bool operator==(const GliaConfig&) const = default;
};

// The "MLP" used for the down and up maps.
struct Projection {
  LinearParams first;
  std::optional<LinearParams> second;
  GeluMode gelu = GeluMode::tanh_approx;

  Tensor operator()(const Tensor& x) const;
};

struct GliaBlockParams {
  Projection down;  // d_model -> d_latent
  Projection up;    // d_latent -> d_model
  AttentionParams lgf_attn;  // width d_latent
  AttentionParams glr_attn;  // width d_latent
  Tensor lambda_d;  // [1]
  Tensor lambda_s;  // [1]

  std::vector<NamedTensor> named(const std::string& prefix) const;
};

// F_sd: semantic latent; detail: backbone-width detail tokens (F_d);
// detail_latent: the detail tokens in latent space.
struct LatentState {
  Tensor semantic_latent;  // [T_s, d_latent]
  Tensor detail_latent;    // [T_d, d_latent]
  Tensor detail;           // [T_d, d_model]
};

// Trainable adapter block; down/up maps and attention use N(0, 1/fan_in),
// both gates start at config.lambda_init.
GliaBlockParams init_glia_block(const GliaConfig& config, std::mt19937_64& rng,
                                Precision precision = Precision::f32);

// Multi-head cross-attention: `query` tokens attend over `guidance` tokens.
Tensor mhca(const Tensor& query, const Tensor& guidance, const AttentionParams& params,
            std::size_t heads);

// Local-global fusion from an already down-mapped detail latent:
// up(latent + lambda_d * mhca(latent, F_sd)). `fused_latent`, when given,
// receives the argument of `up`.
Tensor lgf_from_latent(const Tensor& detail_latent, const Tensor& semantic_latent,
                       const GliaBlockParams& params, const GliaConfig& config,
                       Tensor* fused_latent = nullptr);
// Same, starting from backbone-width detail tokens.
Tensor lgf(const Tensor& detail, const Tensor& semantic_latent, const GliaBlockParams& params,
           const GliaConfig& config);
// Global-local refinement, entirely in latent space:
// F_sd + lambda_s * mhca(F_sd, detail_latent).
Tensor glr(const Tensor& semantic_latent, const Tensor& detail_latent,
           const GliaBlockParams& params, const GliaConfig& config);

// One adapter block. Reads state.detail and state.semantic_latent; the
// returned state carries the next backbone input, the refined semantic
// latent and the detail latent the block produced.
LatentState glia_block(const LatentState& state, const GliaBlockParams& params,
                       const GliaConfig& config, AdapterAblation ablation);
LatentState glia_block(const LatentState& state, const GliaBlockParams& params,
                       const GliaConfig& config);

}  // namespace glia
