#include "glia/adapter.hpp"

#include <algorithm>

#include "glia/errors.hpp"

namespace glia {

std::string_view ablation_name(AdapterAblation a) {
  switch (a) {
    case AdapterAblation::full:
      return "full";
    case AdapterAblation::lgf_only:
      return "lgf_only";
    case AdapterAblation::glr_only:
      return "glr_only";
  }
  return "unknown";
}

AdapterAblation parse_ablation(std::string_view name) {
  for (auto a : {AdapterAblation::full, AdapterAblation::lgf_only, AdapterAblation::glr_only}) {
    if (ablation_name(a) == name) {
      return a;
    }
  }
  throw ConfigError("unknown ablation '" + std::string(name) +
                    "' (valid: full, lgf_only, glr_only)");
}

std::string_view glr_source_name(GlrSource s) {
  return s == GlrSource::pre_lgf ? "pre_lgf" : "post_lgf";
}

GlrSource parse_glr_source(std::string_view name) {
  if (name == "pre_lgf") {
    return GlrSource::pre_lgf;
  }
  if (name == "post_lgf") {
    return GlrSource::post_lgf;
  }
  throw ConfigError("unknown GLR source '" + std::string(name) + "' (valid: pre_lgf, post_lgf)");
}

GliaConfig GliaConfig::for_backbone(std::size_t d_model, std::size_t n_layers) {
  GliaConfig c;
  c.d_model = d_model;
  c.d_latent = d_model / 4;
  c.n_heads = std::max<std::size_t>(1, std::min<std::size_t>(4, c.d_latent));
  c.insertion_points.clear();
  for (std::size_t i = 0; i < n_layers; ++i) {
    c.insertion_points.push_back(i);
  }
  return c;
}

void GliaConfig::validate(std::size_t n_layers) const {
  if (d_latent == 0 || d_latent >= d_model) {
    throw ConfigError("glia: d_latent " + std::to_string(d_latent) +
                      " must be positive and smaller than d_model " + std::to_string(d_model));
  }
  if (n_heads == 0 || d_latent % n_heads != 0) {
    throw ConfigError("glia: d_latent " + std::to_string(d_latent) + " not divisible by " +
                      std::to_string(n_heads) + " heads");
  }
  if (mlp_depth != 1 && mlp_depth != 2) {
    throw ConfigError("glia: mlp_depth must be 1 or 2");
  }
  for (std::size_t i = 0; i < insertion_points.size(); ++i) {
    if (insertion_points[i] >= n_layers) {
      throw ConfigError("glia: insertion point " + std::to_string(insertion_points[i]) +
                        " beyond backbone depth " + std::to_string(n_layers));
    }
    if (i > 0 && insertion_points[i] <= insertion_points[i - 1]) {
      throw ConfigError("glia: insertion points must be strictly increasing");
    }
  }
}

Tensor Projection::operator()(const Tensor& x) const {
  Tensor y = first(x);
  if (second) {
    y = (*second)(glia::gelu(y, gelu));
  }
  return y;
}

std::vector<NamedTensor> GliaBlockParams::named(const std::string& prefix) const {
  std::vector<NamedTensor> out;
  auto push_proj = [&](const std::string& name, const Projection& p) {
    out.push_back({name + ".0.weight", p.first.weight});
    out.push_back({name + ".0.bias", p.first.bias});
    if (p.second) {
      out.push_back({name + ".1.weight", p.second->weight});
      out.push_back({name + ".1.bias", p.second->bias});
    }
  };
  auto push_attn = [&](const std::string& name, const AttentionParams& a) {
    for (auto [part, lin] : {std::pair{"query", &a.query}, std::pair{"key", &a.key},
                             std::pair{"value", &a.value}, std::pair{"output", &a.output}}) {
      out.push_back({name + "." + part + ".weight", lin->weight});
      out.push_back({name + "." + part + ".bias", lin->bias});
    }
  };
  push_proj(prefix + "down", down);
  push_proj(prefix + "up", up);
  push_attn(prefix + "lgf", lgf_attn);
  push_attn(prefix + "glr", glr_attn);
  out.push_back({prefix + "lambda_d", lambda_d});
  out.push_back({prefix + "lambda_s", lambda_s});
  return out;
}

GliaBlockParams init_glia_block(const GliaConfig& config, std::mt19937_64& rng,
                                Precision precision) {
  ParamFactory f{rng, precision, true};
  auto projection = [&](std::size_t d_in, std::size_t d_out) {
    Projection p;
    p.gelu = config.gelu;
    if (config.mlp_depth == 2) {
      p.first = f.linear(d_in, d_out, InitScheme::fan_in);
      p.second = f.linear(d_out, d_out, InitScheme::fan_in);
    } else {
      p.first = f.linear(d_in, d_out, InitScheme::fan_in);
    }
    return p;
  };
  GliaBlockParams p;
  p.down = projection(config.d_model, config.d_latent);
  p.up = projection(config.d_latent, config.d_model);
  p.lgf_attn = f.attention(config.d_latent, InitScheme::fan_in);
  p.glr_attn = f.attention(config.d_latent, InitScheme::fan_in);
  p.lambda_d = f.constant({1}, config.lambda_init);
  p.lambda_s = f.constant({1}, config.lambda_init);
  rng = f.rng;
  return p;
}

Tensor mhca(const Tensor& query, const Tensor& guidance, const AttentionParams& params,
            std::size_t heads) {
  return multi_head_attention(query, guidance, params, heads);
}

Tensor lgf_from_latent(const Tensor& detail_latent, const Tensor& semantic_latent,
                       const GliaBlockParams& params, const GliaConfig& config,
                       Tensor* fused_latent) {
  Tensor fused = add(detail_latent, scale_by(mhca(detail_latent, semantic_latent,
                                                  params.lgf_attn, config.n_heads),
                                             params.lambda_d));
  if (fused_latent != nullptr) {
    *fused_latent = fused;
  }
  return params.up(fused);
}

Tensor lgf(const Tensor& detail, const Tensor& semantic_latent, const GliaBlockParams& params,
           const GliaConfig& config) {
  return lgf_from_latent(params.down(detail), semantic_latent, params, config);
}

Tensor glr(const Tensor& semantic_latent, const Tensor& detail_latent,
           const GliaBlockParams& params, const GliaConfig& config) {
  return add(semantic_latent,
             scale_by(mhca(semantic_latent, detail_latent, params.glr_attn, config.n_heads),
                      params.lambda_s));
}

LatentState glia_block(const LatentState& state, const GliaBlockParams& params,
                       const GliaConfig& config, AdapterAblation ablation) {
  if (state.detail.rank() != 2 || state.detail.dim(1) != config.d_model ||
      state.semantic_latent.rank() != 2 || state.semantic_latent.dim(1) != config.d_latent) {
    throw DimensionError("glia_block: detail " + shape_str(state.detail.shape()) +
                         " / semantic latent " + shape_str(state.semantic_latent.shape()) +
                         " do not match widths " + std::to_string(config.d_model) + " / " +
                         std::to_string(config.d_latent));
  }
  LatentState next;
  const Tensor latent = params.down(state.detail);
  if (ablation == AdapterAblation::glr_only) {
    next.detail = params.up(latent);
    next.detail_latent = latent;
  } else {
    next.detail = lgf_from_latent(latent, state.semantic_latent, params, config,
                                  &next.detail_latent);
  }
  if (ablation == AdapterAblation::lgf_only) {
    next.semantic_latent = state.semantic_latent;
  } else {
    const Tensor& source =
        config.glr_source == GlrSource::pre_lgf ? latent : next.detail_latent;
    next.semantic_latent = glr(state.semantic_latent, source, params, config);
  }
  return next;
}

LatentState glia_block(const LatentState& state, const GliaBlockParams& params,
                       const GliaConfig& config) {
  return glia_block(state, params, config, config.ablation);
}

}  // namespace glia
