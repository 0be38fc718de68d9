#include "glia/model.hpp"

#include <algorithm>
#include <random>

#include "glia/config.hpp"
#include "glia/errors.hpp"

namespace glia {

std::string_view guidance_name(GuidanceMode m) {
  switch (m) {
    case GuidanceMode::semantic_guides_detail:
      return "semantic_guides_detail";
    case GuidanceMode::detail_guides_semantic:
      return "detail_guides_semantic";
    case GuidanceMode::semantic_only:
      return "semantic_only";
    case GuidanceMode::detail_only:
      return "detail_only";
  }
  return "unknown";
}

GuidanceMode parse_guidance(std::string_view name) {
  for (auto m : {GuidanceMode::semantic_guides_detail, GuidanceMode::detail_guides_semantic,
                 GuidanceMode::semantic_only, GuidanceMode::detail_only}) {
    if (guidance_name(m) == name) {
      return m;
    }
  }
  throw ConfigError("unknown guidance mode '" + std::string(name) +
                    "' (valid: semantic_guides_detail, detail_guides_semantic, semantic_only, "
                    "detail_only)");
}

GliaNetConfig GliaNetConfig::toy() { return {}; }

GliaNetConfig GliaNetConfig::paper_scale() {
  GliaNetConfig c;
  c.vit = ViTConfig::base16();
  c.glia = GliaConfig::for_backbone(c.vit.d_model, c.vit.n_layers);
  c.glia.d_latent = 192;
  c.grid = {7, 7, 32, 32, SamplingMode::deterministic, 0};
  c.semantic_size = 224;
  c.head_hidden = c.vit.d_model / 2;
  return c;
}

void GliaNetConfig::validate() const {
  vit.validate();
  if (glia.d_model != vit.d_model) {
    throw ConfigError("glia width " + std::to_string(glia.d_model) + " differs from backbone " +
                      std::to_string(vit.d_model));
  }
  glia.validate(vit.n_layers);
  if (grid.n_h * grid.f_h != vit.img_size || grid.n_w * grid.f_w != vit.img_size) {
    throw ConfigError("fragment grid yields a " + std::to_string(grid.n_h * grid.f_h) + "x" +
                      std::to_string(grid.n_w * grid.f_w) + " detail image, backbone expects " +
                      std::to_string(vit.img_size));
  }
  if (semantic_size != vit.img_size) {
    throw ConfigError("semantic resize target " + std::to_string(semantic_size) +
                      " differs from backbone input " + std::to_string(vit.img_size));
  }
  if (head_hidden == 0) {
    throw ConfigError("head_hidden must be positive");
  }
}

std::vector<NamedTensor> GliaNetParams::frozen() const { return backbone.named("backbone."); }

std::vector<NamedTensor> GliaNetParams::trainable() const {
  std::vector<NamedTensor> out;
  out.push_back({"semantic_down.weight", semantic_down.weight});
  out.push_back({"semantic_down.bias", semantic_down.bias});
  for (std::size_t i = 0; i < adapters.size(); ++i) {
    auto part = adapters[i].named("glia." + std::to_string(i) + ".");
    out.insert(out.end(), part.begin(), part.end());
  }
  out.push_back({"head.fc1.weight", head.fc1.weight});
  out.push_back({"head.fc1.bias", head.fc1.bias});
  out.push_back({"head.fc2.weight", head.fc2.weight});
  out.push_back({"head.fc2.bias", head.fc2.bias});
  return out;
}

std::vector<NamedTensor> GliaNetParams::named() const {
  auto out = frozen();
  auto t = trainable();
  out.insert(out.end(), t.begin(), t.end());
  return out;
}

GliaNetParams init_glianet(const GliaNetConfig& config, std::uint64_t adapter_seed,
                           Precision precision) {
  config.validate();
  GliaNetParams p;
  p.backbone = init_vit_params(config.vit, config.backbone_seed, precision);
  std::mt19937_64 rng(adapter_seed);
  ParamFactory f{rng, precision, true};
  p.semantic_down = f.linear(config.vit.d_model, config.glia.d_latent, InitScheme::fan_in);
  p.head.fc1 = f.linear(config.vit.d_model, config.head_hidden, InitScheme::fan_in);
  p.head.fc2 = f.linear(config.head_hidden, 1, InitScheme::trunc_normal);
  rng = f.rng;
  for (std::size_t i = 0; i < config.glia.insertion_points.size(); ++i) {
    p.adapters.push_back(init_glia_block(config.glia, rng, precision));
  }
  return p;
}

Tensor regression_head(const Tensor& cls, const HeadParams& head, GeluMode mode) {
  Tensor x = cls.rank() == 1 ? reshape(cls, {1, cls.dim(0)}) : cls;
  if (x.rank() != 2 || x.dim(0) != 1 || x.dim(1) != head.fc1.in_features()) {
    throw DimensionError("regression_head: cls " + shape_str(cls.shape()) +
                         " does not match head width " +
                         std::to_string(head.fc1.in_features()));
  }
  return reshape(head.fc2(gelu(head.fc1(x), mode)), {1});
}

namespace {

bool guidance_uses_detail(GuidanceMode m) {
  return m == GuidanceMode::detail_guides_semantic || m == GuidanceMode::detail_only;
}

bool main_uses_detail(GuidanceMode m) {
  return m == GuidanceMode::semantic_guides_detail || m == GuidanceMode::detail_only;
}

}  // namespace

PreparedImage prepare_image(const Image& img, const GliaNetParams& params,
                            const GliaNetConfig& config) {
  const auto& g = config.grid;
  PreparedImage prep;
  prep.source_h = img.height;
  prep.source_w = img.width;
  prep.grid = plan_grid(img.height, img.width, g.n_h, g.n_w, g.f_h, g.f_w, g.mode, g.seed);
  const Image detail = extract_fragments(img, prep.grid).image;
  const Image semantic = resize_bilinear(img, config.semantic_size, config.semantic_size);
  const Image& guide = guidance_uses_detail(config.guidance) ? detail : semantic;
  const Image& main = main_uses_detail(config.guidance) ? detail : semantic;
  prep.guidance_features = encode_semantic(guide, params.backbone, config.vit);
  prep.main_patches = image_to_patches(main, config.vit.patch_size);
  return prep;
}

Tensor forward_prepared(const PreparedImage& prep, const GliaNetParams& params,
                        const GliaNetConfig& config, ForwardTrace* trace) {
  const auto& vit = config.vit;
  Tensor semantic_latent = params.semantic_down(prep.guidance_features);
  Tensor x = embed_patches(prep.main_patches, params.backbone);
  std::size_t next_adapter = 0;
  for (std::size_t b = 0; b < params.backbone.blocks.size(); ++b) {
    Tensor* attn = (trace != nullptr && trace->block == b) ? &trace->attention : nullptr;
    x = encoder_block(x, params.backbone.blocks[b], vit, attn);
    if (next_adapter < config.glia.insertion_points.size() &&
        config.glia.insertion_points[next_adapter] == b) {
      LatentState state{semantic_latent, Tensor(), x};
      state = glia_block(state, params.adapters[next_adapter], config.glia);
      x = state.detail;
      semantic_latent = state.semantic_latent;
      ++next_adapter;
    }
  }
  Tensor cls = slice_rows(params.backbone.final_norm(x), 0, 1);
  return regression_head(cls, params.head, vit.gelu);
}

double predict(const Image& img, const GliaNetParams& params, const GliaNetConfig& config) {
  return forward_prepared(prepare_image(img, params, config), params, config).item();
}

TrainableReport trainable_parameters(const GliaNetParams& params) {
  TrainableReport r;
  r.tensors = params.trainable();
  for (const auto& nt : r.tensors) {
    r.count.trainable += nt.tensor.numel();
  }
  r.count.total = r.count.trainable;
  for (const auto& nt : params.frozen()) {
    r.count.total += nt.tensor.numel();
  }
  return r;
}

ParameterCount count_parameters(const GliaNetConfig& config) {
  const std::size_t d = config.vit.d_model;
  const std::size_t hidden = d * config.vit.mlp_ratio;
  const std::size_t lat = config.glia.d_latent;
  auto lin = [](std::size_t in, std::size_t out) { return in * out + out; };
  auto proj = [&](std::size_t in, std::size_t out) {
    return config.glia.mlp_depth == 2 ? lin(in, out) + lin(out, out) : lin(in, out);
  };
  std::size_t backbone = lin(config.vit.patch_dim(), d) + d + config.vit.tokens() * d + 2 * d;
  backbone += config.vit.n_layers * (4 * d + 4 * lin(d, d) + lin(d, hidden) + lin(hidden, d));
  std::size_t adapter = proj(d, lat) + proj(lat, d) + 8 * lin(lat, lat) + 2;
  ParameterCount c;
  c.trainable = lin(d, lat) + config.glia.insertion_points.size() * adapter +
                lin(d, config.head_hidden) + lin(config.head_hidden, 1);
  c.total = backbone + c.trainable;
  return c;
}

AttentionMap export_attention_map(const Image& img, const GliaNetParams& params,
                                  const GliaNetConfig& config, std::size_t block) {
  if (block >= params.backbone.blocks.size()) {
    throw ParameterError("block index " + std::to_string(block) + " out of range (model has " +
                         std::to_string(params.backbone.blocks.size()) + " blocks)");
  }
  const PreparedImage prep = prepare_image(img, params, config);
  ForwardTrace trace;
  trace.block = block;
  forward_prepared(prep, params, config, &trace);

  const std::size_t patch = config.vit.patch_size;
  const std::size_t pgrid = config.vit.grid();
  AttentionMap map;
  map.cls_self = trace.attention[0];
  const bool detail = main_uses_detail(config.guidance);
  map.rows = detail ? prep.grid.n_h : pgrid;
  map.cols = detail ? prep.grid.n_w : pgrid;
  map.cells.assign(map.rows * map.cols, 0.0);
  for (std::size_t py = 0; py < pgrid; ++py) {
    for (std::size_t px = 0; px < pgrid; ++px) {
      const double w = trace.attention[1 + py * pgrid + px];
      std::size_t r = py;
      std::size_t c = px;
      if (detail) {
        r = std::min((py * patch + patch / 2) / prep.grid.f_h, map.rows - 1);
        c = std::min((px * patch + patch / 2) / prep.grid.f_w, map.cols - 1);
      }
      map.cells[r * map.cols + c] += w;
    }
  }
  const auto [lo, hi] = std::minmax_element(map.cells.begin(), map.cells.end());
  const double lo_v = *lo;
  const double span = *hi - lo_v;
  Image small(map.rows, map.cols, 0.0, 1);
  for (std::size_t i = 0; i < map.cells.size(); ++i) {
    small.values[i] = span > 0.0 ? (map.cells[i] - lo_v) / span : 0.0;
  }
  const Image big = resize_bilinear(small, img.height, img.width);
  map.heat = Image(img.height, img.width);
  for (std::size_t i = 0; i < big.values.size(); ++i) {
    for (std::size_t ch = 0; ch < 3; ++ch) {
      map.heat.values[i * 3 + ch] = std::clamp(big.values[i], 0.0, 1.0);
    }
  }
  return map;
}

void save_model(const std::filesystem::path& path, const GliaNetParams& params,
                const GliaNetConfig& config) {
  auto tensors = params.named();
  tensors.push_back({"meta.config", text_to_tensor(render_model_config(config))});
  write_weights(path, tensors);
}

LoadedModel load_model(const std::filesystem::path& path, Precision precision) {
  const auto loaded = read_weights(path);
  auto meta = std::find_if(loaded.begin(), loaded.end(),
                           [](const NamedTensor& nt) { return nt.name == "meta.config"; });
  if (meta == loaded.end()) {
    throw ShapeMismatchError(path.string() + ": no meta.config entry; not a model file");
  }
  LoadedModel m;
  m.config = parse_model_config(tensor_to_text(meta->tensor));
  m.params = init_glianet(m.config, 0, precision);
  auto targets = m.params.named();
  assign_weights(loaded, targets, {"meta."});
  return m;
}

}  // namespace glia
