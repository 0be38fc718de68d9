#include "glia/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "glia/errors.hpp"

namespace glia {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("config: bad value '" + std::string(text) + "' for " + std::string(key));
  }
  return value;
}

template <typename T>
std::string render_number(T value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") {
    return true;
  }
  if (text == "false" || text == "0") {
    return false;
  }
  throw ConfigError("config: bad boolean '" + std::string(text) + "' for " + std::string(key));
}

template <typename F>
auto wrap_enum(std::string_view key, F parse, std::string_view text) {
  try {
    return parse(text);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("config: " + std::string(key) + ": " + e.what());
  }
}

GeluMode parse_gelu(std::string_view text) {
  if (text == "tanh") {
    return GeluMode::tanh_approx;
  }
  if (text == "erf") {
    return GeluMode::exact_erf;
  }
  throw ConfigError("unknown gelu '" + std::string(text) + "' (tanh, erf)");
}

SamplingMode parse_mode(std::string_view text) {
  if (text == "deterministic") {
    return SamplingMode::deterministic;
  }
  if (text == "random") {
    return SamplingMode::random;
  }
  throw ConfigError("unknown sampling mode '" + std::string(text) + "' (deterministic, random)");
}

LossKind parse_loss(std::string_view text) {
  if (text == "mse") {
    return LossKind::mse;
  }
  if (text == "smooth_l1") {
    return LossKind::smooth_l1;
  }
  throw ConfigError("unknown loss '" + std::string(text) + "' (mse, smooth_l1)");
}

Precision parse_precision(std::string_view text) {
  if (text == "f32") {
    return Precision::f32;
  }
  if (text == "f64") {
    return Precision::f64;
  }
  throw ConfigError("unknown precision '" + std::string(text) + "' (f32, f64)");
}

std::vector<std::size_t> parse_list(std::string_view key, std::string_view text) {
  std::vector<std::size_t> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_number<std::size_t>(key, trim(text.substr(0, comma))));
    if (comma == std::string_view::npos) {
      break;
    }
    text.remove_prefix(comma + 1);
  }
  return out;
}

std::string render_list(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += (i ? "," : "") + render_number(v[i]);
  }
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

#define GLIA_NUM(name, member, type)                                                      \
  Field {                                                                                 \
    name, [](const RunConfig& c) { return render_number(c.member); },                     \
        [](RunConfig& c, std::string_view v) { c.member = parse_number<type>(name, v); } \
  }

#define GLIA_ENUM(name, member, render, parse)                                       \
  Field {                                                                            \
    name, [](const RunConfig& c) { return std::string(render(c.member)); },          \
        [](RunConfig& c, std::string_view v) { c.member = wrap_enum(name, parse, v); } \
  }

std::string_view gelu_name(GeluMode m) { return m == GeluMode::exact_erf ? "erf" : "tanh"; }
std::string_view mode_name(SamplingMode m) {
  return m == SamplingMode::random ? "random" : "deterministic";
}
std::string_view loss_name(LossKind k) { return k == LossKind::smooth_l1 ? "smooth_l1" : "mse"; }
std::string_view precision_name(Precision p) { return p == Precision::f64 ? "f64" : "f32"; }
std::string_view bool_name(bool b) { return b ? "true" : "false"; }

const std::vector<Field>& model_fields() {
  static const std::vector<Field> fields = {
      GLIA_NUM("vit.img_size", model.vit.img_size, std::size_t),
      GLIA_NUM("vit.patch_size", model.vit.patch_size, std::size_t),
      GLIA_NUM("vit.d_model", model.vit.d_model, std::size_t),
      GLIA_NUM("vit.n_layers", model.vit.n_layers, std::size_t),
      GLIA_NUM("vit.n_heads", model.vit.n_heads, std::size_t),
      GLIA_NUM("vit.mlp_ratio", model.vit.mlp_ratio, std::size_t),
      GLIA_ENUM("vit.gelu", model.vit.gelu, gelu_name, parse_gelu),
      GLIA_NUM("vit.ln_eps", model.vit.ln_eps, double),
      GLIA_NUM("glia.d_latent", model.glia.d_latent, std::size_t),
      GLIA_NUM("glia.n_heads", model.glia.n_heads, std::size_t),
      Field{"glia.insertion_points",
            [](const RunConfig& c) { return render_list(c.model.glia.insertion_points); },
            [](RunConfig& c, std::string_view v) {
              c.model.glia.insertion_points = parse_list("glia.insertion_points", v);
            }},
      GLIA_NUM("glia.mlp_depth", model.glia.mlp_depth, std::size_t),
      GLIA_NUM("glia.lambda_init", model.glia.lambda_init, double),
      GLIA_ENUM("glia.glr_source", model.glia.glr_source, glr_source_name, parse_glr_source),
      GLIA_ENUM("glia.ablation", model.glia.ablation, ablation_name, parse_ablation),
      GLIA_NUM("grid.n_h", model.grid.n_h, std::size_t),
      GLIA_NUM("grid.n_w", model.grid.n_w, std::size_t),
      GLIA_NUM("grid.f_h", model.grid.f_h, std::size_t),
      GLIA_NUM("grid.f_w", model.grid.f_w, std::size_t),
      GLIA_ENUM("grid.mode", model.grid.mode, mode_name, parse_mode),
      GLIA_NUM("grid.seed", model.grid.seed, std::uint64_t),
      GLIA_NUM("model.semantic_size", model.semantic_size, std::size_t),
      GLIA_NUM("model.head_hidden", model.head_hidden, std::size_t),
      GLIA_ENUM("model.guidance", model.guidance, guidance_name, parse_guidance),
      GLIA_NUM("model.backbone_seed", model.backbone_seed, std::uint64_t),
  };
  return fields;
}

const std::vector<Field>& train_fields() {
  static const std::vector<Field> fields = {
      GLIA_NUM("train.epochs", train.epochs, std::size_t),
      GLIA_NUM("train.batch_size", train.batch_size, std::size_t),
      GLIA_NUM("train.learning_rate", train.learning_rate, double),
      GLIA_NUM("train.weight_decay", train.weight_decay, double),
      GLIA_NUM("train.beta1", train.beta1, double),
      GLIA_NUM("train.beta2", train.beta2, double),
      GLIA_NUM("train.epsilon", train.epsilon, double),
      GLIA_NUM("train.warmup_steps", train.warmup_steps, std::size_t),
      GLIA_NUM("train.max_steps", train.max_steps, std::size_t),
      GLIA_NUM("train.eval_every", train.eval_every, std::size_t),
      GLIA_NUM("train.seed", train.seed, std::uint64_t),
      GLIA_NUM("train.split_fraction", train.split_fraction, double),
      GLIA_NUM("train.repeats", train.repeats, std::size_t),
      GLIA_ENUM("train.loss", train.loss, loss_name, parse_loss),
      GLIA_NUM("train.smooth_l1_beta", train.smooth_l1_beta, double),
      GLIA_ENUM("train.precision", train.precision, precision_name, parse_precision),
      Field{"train.init_head_bias",
            [](const RunConfig& c) { return std::string(bool_name(c.train.init_head_bias)); },
            [](RunConfig& c, std::string_view v) {
              c.train.init_head_bias = parse_bool("train.init_head_bias", v);
            }},
  };
  return fields;
}

#undef GLIA_NUM
#undef GLIA_ENUM

RunConfig parse_with(std::string_view text, bool allow_train) {
  std::map<std::string, const Field*, std::less<>> lookup;
  for (const auto& f : model_fields()) {
    lookup.emplace(f.key, &f);
  }
  if (allow_train) {
    for (const auto& f : train_fields()) {
      lookup.emplace(f.key, &f);
    }
  }
  RunConfig config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = lookup.find(key);
    if (it == lookup.end()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                        std::string(key) + "'");
    }
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" +
                        std::string(key) + "'");
    }
    it->second->set(config, value);
  }
  config.model.glia.d_model = config.model.vit.d_model;
  config.model.glia.gelu = config.model.vit.gelu;
  return config;
}

void render_fields(const std::vector<Field>& fields, const RunConfig& config, std::string& out) {
  for (const auto& f : fields) {
    out += f.key + " = " + f.get(config) + "\n";
  }
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig config = parse_with(text, true);
  config.model.validate();
  config.train.validate();
  return config;
}

std::string render_config(const RunConfig& config) {
  std::string out;
  render_fields(model_fields(), config, out);
  render_fields(train_fields(), config, out);
  return out;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open config file " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

GliaNetConfig parse_model_config(std::string_view text) {
  RunConfig config = parse_with(text, false);
  config.model.validate();
  return config.model;
}

std::string render_model_config(const GliaNetConfig& config) {
  RunConfig rc;
  rc.model = config;
  std::string out;
  render_fields(model_fields(), rc, out);
  return out;
}

}  // namespace glia
