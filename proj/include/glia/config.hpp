#pragma once

#include <string>
#include <string_view>

#include "glia/model.hpp"
#include "glia/training.hpp"

namespace glia {

struct RunConfig {
  GliaNetConfig model;
  TrainConfig train;
  bool operator==(const RunConfig&) const = default;
};

// Flat `key = value` text, one pair per line, `#` starts a comment. Keys are
// namespaced (vit., glia., grid., model., train.); unknown keys and
// malformed values raise ConfigError. Absent keys keep their defaults.
RunConfig parse_config(std::string_view text);
std::string render_config(const RunConfig& config);
RunConfig load_config(const std::string& path);

// Model-only subsets, as embedded in model files.
GliaNetConfig parse_model_config(std::string_view text);
std::string render_model_config(const GliaNetConfig& config);

}  // namespace glia
