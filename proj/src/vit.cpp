#include "glia/vit.hpp"

#include "glia/errors.hpp"

namespace glia {

ViTConfig ViTConfig::toy() { return {}; }

ViTConfig ViTConfig::base16() {
  ViTConfig c;
  c.img_size = 224;
  c.patch_size = 16;
  c.d_model = 768;
  c.n_layers = 12;
  c.n_heads = 12;
  c.mlp_ratio = 4;
  return c;
}

void ViTConfig::validate() const {
  if (patch_size == 0 || img_size == 0 || img_size % patch_size != 0) {
    throw ConfigError("vit: img_size " + std::to_string(img_size) +
                      " must be a positive multiple of patch_size " + std::to_string(patch_size));
  }
  if (n_heads == 0 || d_model == 0 || d_model % n_heads != 0) {
    throw ConfigError("vit: d_model " + std::to_string(d_model) + " not divisible by n_heads " +
                      std::to_string(n_heads));
  }
  if (n_layers == 0 || mlp_ratio == 0) {
    throw ConfigError("vit: n_layers and mlp_ratio must be positive");
  }
  if (!(ln_eps > 0.0)) {
    throw ConfigError("vit: ln_eps must be positive");
  }
}

namespace {

void push_linear(std::vector<NamedTensor>& out, const std::string& name, const LinearParams& p) {
  out.push_back({name + ".weight", p.weight});
  out.push_back({name + ".bias", p.bias});
}

void push_norm(std::vector<NamedTensor>& out, const std::string& name, const LayerNormParams& p) {
  out.push_back({name + ".gain", p.gain});
  out.push_back({name + ".bias", p.bias});
}

}  // namespace

std::vector<NamedTensor> ViTParams::named(const std::string& prefix) const {
  std::vector<NamedTensor> out;
  push_linear(out, prefix + "patch_embed", patch_embed);
  out.push_back({prefix + "cls_token", cls_token});
  out.push_back({prefix + "pos_embed", pos_embed});
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string b = prefix + "blocks." + std::to_string(i) + ".";
    const auto& blk = blocks[i];
    push_norm(out, b + "norm1", blk.norm1);
    push_linear(out, b + "attn.query", blk.attn.query);
    push_linear(out, b + "attn.key", blk.attn.key);
    push_linear(out, b + "attn.value", blk.attn.value);
    push_linear(out, b + "attn.output", blk.attn.output);
    push_norm(out, b + "norm2", blk.norm2);
    push_linear(out, b + "mlp.fc1", blk.fc1);
    push_linear(out, b + "mlp.fc2", blk.fc2);
  }
  push_norm(out, prefix + "final_norm", final_norm);
  return out;
}

void ViTParams::set_requires_grad(bool value) const {
  for (auto& nt : named()) {
    Tensor t = nt.tensor;
    t.set_requires_grad(value);
  }
}

ViTParams init_vit_params(const ViTConfig& config, std::uint64_t seed, Precision precision) {
  config.validate();
  ParamFactory f{std::mt19937_64(seed), precision, false};
  const std::size_t d = config.d_model;
  ViTParams p;
  p.patch_embed = f.linear(config.patch_dim(), d, InitScheme::trunc_normal);
  p.cls_token = f.trunc_normal({1, d});
  p.pos_embed = f.trunc_normal({config.tokens(), d});
  for (std::size_t i = 0; i < config.n_layers; ++i) {
    EncoderBlockParams b;
    b.norm1 = f.layer_norm(d);
    b.norm1.eps = config.ln_eps;
    b.attn = f.attention(d, InitScheme::trunc_normal);
    b.norm2 = f.layer_norm(d);
    b.norm2.eps = config.ln_eps;
    b.fc1 = f.linear(d, d * config.mlp_ratio, InitScheme::trunc_normal);
    b.fc2 = f.linear(d * config.mlp_ratio, d, InitScheme::trunc_normal);
    p.blocks.push_back(std::move(b));
  }
  p.final_norm = f.layer_norm(d);
  p.final_norm.eps = config.ln_eps;
  return p;
}

void save_vit_params(const std::filesystem::path& path, const ViTParams& params) {
  write_weights(path, params.named());
}

ViTParams load_vit_params(const std::filesystem::path& path, const ViTConfig& config) {
  const auto loaded = read_weights(path);
  ViTParams p = init_vit_params(config, 0, Precision::f32);
  auto targets = p.named();
  assign_weights(loaded, targets);
  return p;
}

Tensor image_to_patches(const Image& img, std::size_t patch) {
  if (patch == 0 || img.height % patch != 0 || img.width % patch != 0) {
    throw DimensionError("image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                         " is not tiled by " + std::to_string(patch) + "px patches");
  }
  const std::size_t gh = img.height / patch;
  const std::size_t gw = img.width / patch;
  const std::size_t row = patch * patch * img.channels;
  std::vector<double> out(gh * gw * row);
  std::size_t k = 0;
  for (std::size_t py = 0; py < gh; ++py) {
    for (std::size_t px = 0; px < gw; ++px) {
      for (std::size_t y = 0; y < patch; ++y) {
        for (std::size_t x = 0; x < patch; ++x) {
          for (std::size_t c = 0; c < img.channels; ++c) {
            out[k++] = img.at(py * patch + y, px * patch + x, c);
          }
        }
      }
    }
  }
  return Tensor::from({gh * gw, row}, std::move(out));
}

Tensor embed_patches(const Tensor& patches, const ViTParams& params) {
  Tensor tokens = concat_rows({params.cls_token, params.patch_embed(patches)});
  if (tokens.shape() != params.pos_embed.shape()) {
    throw DimensionError("patch_embed: " + shape_str(tokens.shape()) +
                         " tokens vs positional table " + shape_str(params.pos_embed.shape()));
  }
  return add(tokens, params.pos_embed);
}

Tensor patch_embed(const Image& img, const ViTParams& params, const ViTConfig& config) {
  if (img.height != config.img_size || img.width != config.img_size) {
    throw DimensionError("patch_embed: image " + std::to_string(img.height) + "x" +
                         std::to_string(img.width) + " does not match configured " +
                         std::to_string(config.img_size) + "x" + std::to_string(config.img_size));
  }
  return embed_patches(image_to_patches(img, config.patch_size), params);
}

Tensor encoder_block(const Tensor& x, const EncoderBlockParams& block, const ViTConfig& config,
                     Tensor* attention) {
  if (x.rank() != 2 || x.dim(1) != config.d_model) {
    throw DimensionError("encoder_block: input " + shape_str(x.shape()) + " is not [T, " +
                         std::to_string(config.d_model) + "]");
  }
  Tensor h = block.norm1(x);
  Tensor y = add(x, multi_head_attention(h, h, block.attn, config.n_heads, attention));
  Tensor m = block.fc2(gelu(block.fc1(block.norm2(y)), config.gelu));
  return add(y, m);
}

Tensor encode_tokens(const Tensor& tokens, const ViTParams& params, const ViTConfig& config) {
  Tensor x = tokens;
  for (const auto& b : params.blocks) {
    x = encoder_block(x, b, config);
  }
  return params.final_norm(x);
}

Tensor encode_semantic(const Image& img, const ViTParams& params, const ViTConfig& config) {
  return encode_tokens(patch_embed(img, params, config), params, config);
}

}  // namespace glia
