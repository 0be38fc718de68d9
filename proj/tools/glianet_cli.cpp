#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "glia/config.hpp"
#include "glia/errors.hpp"
#include "glia/model.hpp"
#include "glia/training.hpp"

namespace fs = std::filesystem;
using namespace glia;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kBadArguments = 2,
  kIoFailure = 3,
  kNanAbort = 4,
  kWeightMismatch = 5,
};

// Errors raised while reading a weight file are reported as mismatches.
struct WeightFileError : Error {
  using Error::Error;
};

std::string num(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void emit(const std::string& name, const std::string& value) {
  std::cout << name << '=' << value << '\n';
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

LoadedModel load_model_file(const std::string& path) {
  if (!fs::exists(path)) {
    throw IoError("cannot open weights " + path);
  }
  try {
    return load_model(path);
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw WeightFileError(e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
}

LabeledImages load_manifest_images(const std::string& manifest_path, DatasetManifest& manifest) {
  manifest = read_manifest(manifest_path);
  manifest.validate();
  return load_labeled(manifest, fs::path(manifest_path).parent_path());
}

struct SourcesArgs {
  std::string out;
  std::size_t count = 2;
  std::size_t size = 96;
  std::uint64_t seed = 1;
};

int cmd_sources(const SourcesArgs& a) {
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create " + a.out + ": " + ec.message());
  for (std::size_t i = 0; i < a.count; ++i) {
    const auto name = "source" + std::to_string(i) + ".ppm";
    save_image(make_source_image(a.size, a.size, a.seed + i), fs::path(a.out) / name);
  }
  std::cerr << a.count << " source images written to " << a.out << '\n';
  emit("sources", std::to_string(a.count));
  return kOk;
}

struct SynthArgs {
  std::string sources;
  std::string out;
  std::string kinds = "blur,noise,blocking,contrast";
  int levels = 5;
  std::uint64_t seed = 0;
  double score_min = 0.0;
  double score_max = 1.0;
};

int cmd_synth(const SynthArgs& a) {
  std::vector<Distortion> kinds;
  for (const auto& k : split_list(a.kinds)) {
    try {
      kinds.push_back(parse_distortion(k));
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
  }
  if (kinds.empty()) throw ConfigError("--kinds lists no distortion");
  if (a.levels < 1 || a.levels > kMaxDistortionLevel) {
    throw ConfigError("--levels must lie in 1.." + std::to_string(kMaxDistortionLevel));
  }
  if (!fs::is_directory(a.sources)) {
    throw IoError("source directory not found: " + a.sources);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(a.sources)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .ppm images in " + a.sources);
  std::vector<NamedImage> sources;
  for (const auto& f : files) {
    sources.push_back({f.stem().string(), load_image(f)});
  }
  const auto data = build_synth_manifest(sources, kinds, a.levels, a.seed, a.score_min, a.score_max);
  write_synth_dataset(data, a.out);
  std::cerr << data.manifest.entries.size() << " entries -> "
            << (fs::path(a.out) / "manifest.csv").string() << '\n';
  emit("entries", std::to_string(data.manifest.entries.size()));
  return kOk;
}

struct TrainArgs {
  std::string manifest;
  std::string config;
  std::string out;
  std::optional<std::size_t> repeats;
  std::optional<std::string> ablation;
  std::optional<std::string> guidance;
  std::optional<std::uint64_t> seed;
  bool full = false;
};

// Trains once on every manifest entry and reports metrics on that same set.
int train_full(const RunConfig& rc, const LabeledImages& data, const fs::path& out) {
  auto params = init_glianet(rc.model, rc.train.seed, rc.train.precision);
  const auto run = train(params, rc.model, data, data, rc.train);
  restore_trainables(params, run.best_trainables);
  write_text(out / "run_0.jsonl", render_train_log(run));
  save_model(out / "model_0.glia", params, rc.model);
  const auto metrics = evaluate(params, rc.model, data);
  std::cerr << "best epoch " << run.best_epoch << " of " << run.epochs.size() << '\n';
  emit("train_srcc", num(metrics.srcc));
  emit("train_plcc", num(metrics.plcc));
  return kOk;
}

int cmd_train(const TrainArgs& a) {
  RunConfig rc = a.config.empty() ? RunConfig{} : load_config(a.config);
  if (a.repeats) rc.train.repeats = *a.repeats;
  if (a.ablation) rc.model.glia.ablation = parse_ablation(*a.ablation);
  if (a.guidance) rc.model.guidance = parse_guidance(*a.guidance);
  if (a.seed) rc.train.seed = *a.seed;
  rc.model.validate();
  rc.train.validate();

  DatasetManifest manifest;
  const LabeledImages data = load_manifest_images(a.manifest, manifest);
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create " + a.out + ": " + ec.message());
  write_text(fs::path(a.out) / "config.cfg", render_config(rc));
  if (a.full) {
    std::cerr << "training on all " << data.images.size() << " images, ablation "
              << ablation_name(rc.model.glia.ablation) << '\n';
    return train_full(rc, data, a.out);
  }

  std::cerr << "training " << rc.train.repeats << " repeat(s) on " << data.images.size()
            << " images, ablation " << ablation_name(rc.model.glia.ablation) << ", guidance "
            << guidance_name(rc.model.guidance) << '\n';
  const auto report = repeated_eval(
      manifest, data, rc.model, rc.train,
      [&](std::size_t r, const RepeatResult& res, const GliaNetParams& params) {
        const auto stem = fs::path(a.out) / ("run_" + std::to_string(r));
        write_text(stem.string() + ".jsonl", render_train_log(res.run));
        save_model(fs::path(a.out) / ("model_" + std::to_string(r) + ".glia"), params, rc.model);
        std::cerr << "repeat " << r << ": srcc " << res.metrics.srcc << " plcc "
                  << res.metrics.plcc << " (best epoch " << res.run.best_epoch << ")\n";
      });
  write_text(fs::path(a.out) / "report.json", report.to_json());
  emit("srcc_median", num(report.median_srcc));
  emit("plcc_median", num(report.median_plcc));
  emit("srcc_mean", num(report.mean_srcc));
  emit("plcc_mean", num(report.mean_plcc));
  return kOk;
}

struct EvalArgs {
  std::string manifest;
  std::string weights;
};

int cmd_eval(const EvalArgs& a) {
  const auto model = load_model_file(a.weights);
  DatasetManifest manifest;
  const LabeledImages data = load_manifest_images(a.manifest, manifest);
  const auto report = evaluate(model.params, model.config, data);
  emit("srcc", num(report.srcc));
  emit("plcc", num(report.plcc));
  emit("n", std::to_string(report.n));
  return kOk;
}

struct ScoreArgs {
  std::string image;
  std::string weights;
};

int cmd_score(const ScoreArgs& a) {
  const auto model = load_model_file(a.weights);
  const Image img = load_image(a.image);
  emit("score", num(predict(img, model.params, model.config)));
  return kOk;
}

struct InspectArgs {
  std::string image;
  std::string fragments;
  std::string attn;
  std::string weights;
  std::optional<std::size_t> block;
  std::optional<std::size_t> grid;
  std::optional<std::size_t> fragment;
  std::string mode = "deterministic";
  std::uint64_t seed = 0;
};

int cmd_inspect(const InspectArgs& a) {
  if (a.fragments.empty() && a.attn.empty()) {
    throw ConfigError("inspect: nothing requested (use --fragments and/or --attn)");
  }
  if (!a.attn.empty() && a.weights.empty()) {
    throw ConfigError("inspect: --attn needs --weights");
  }
  if (!a.attn.empty() && !a.block) {
    throw ConfigError("inspect: --attn needs --block");
  }
  std::optional<LoadedModel> model;
  if (!a.weights.empty()) model = load_model_file(a.weights);
  if (model && a.block && *a.block >= model->config.vit.n_layers) {
    throw ConfigError("inspect: block " + std::to_string(*a.block) + " out of range, model has " +
                      std::to_string(model->config.vit.n_layers) + " blocks");
  }
  const Image img = load_image(a.image);
  if (!a.fragments.empty()) {
    GridSettings g = model ? model->config.grid : GliaNetConfig::toy().grid;
    if (a.grid) g.n_h = g.n_w = *a.grid;
    if (a.fragment) g.f_h = g.f_w = *a.fragment;
    if (a.mode == "random") {
      g.mode = SamplingMode::random;
    } else if (a.mode == "deterministic") {
      g.mode = SamplingMode::deterministic;
    } else {
      throw ConfigError("unknown sampling mode '" + a.mode + "' (deterministic, random)");
    }
    g.seed = a.seed;
    const auto grid = plan_grid(img.height, img.width, g.n_h, g.n_w, g.f_h, g.f_w, g.mode, g.seed);
    const auto detail = extract_fragments(img, grid);
    save_image(detail.image, a.fragments);
    emit("fragments", a.fragments);
    emit("fragments_size", std::to_string(detail.image.height) + "x" +
                               std::to_string(detail.image.width));
  }
  if (!a.attn.empty()) {
    const auto map = export_attention_map(img, model->params, model->config, *a.block);
    save_image(map.heat, a.attn);
    emit("attn", a.attn);
    emit("attn_size", std::to_string(map.heat.height) + "x" + std::to_string(map.heat.width));
    emit("cls_self", num(map.cls_self));
  }
  return kOk;
}

int run_guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const NanLossError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNanAbort;
  } catch (const WeightFileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kWeightMismatch;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadArguments;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadArguments;
  } catch (const ConstraintError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadArguments;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const UnsupportedFormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const PayloadError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GLIANet blind image quality assessment"};
  app.require_subcommand(1);

  SourcesArgs sources;
  auto* c_sources = app.add_subcommand("sources", "Write procedural source images");
  c_sources->add_option("--out", sources.out, "Output directory")->required();
  c_sources->add_option("--count", sources.count, "Number of images");
  c_sources->add_option("--size", sources.size, "Edge length in pixels");
  c_sources->add_option("--seed", sources.seed, "Pattern seed");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Build a synthetic-distortion dataset");
  c_synth->add_option("--sources", synth.sources, "Directory of P6 source images")->required();
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--kinds", synth.kinds, "Comma list: blur,noise,blocking,contrast");
  c_synth->add_option("--levels", synth.levels, "Distortion levels per kind");
  c_synth->add_option("--seed", synth.seed, "Noise seed");
  c_synth->add_option("--score-min", synth.score_min, "Score of the strongest distortion");
  c_synth->add_option("--score-max", synth.score_max, "Score of pristine images");

  TrainArgs train_args;
  auto* c_train = app.add_subcommand("train", "Train with repeated content-level splits");
  c_train->add_option("--manifest", train_args.manifest, "Manifest CSV")->required();
  c_train->add_option("--config", train_args.config, "key = value run config");
  c_train->add_option("--out", train_args.out, "Output directory")->required();
  c_train->add_option("--repeats", train_args.repeats, "Override train.repeats");
  c_train->add_option("--ablation", train_args.ablation, "full, lgf_only or glr_only");
  c_train->add_option("--guidance", train_args.guidance,
                      "semantic_guides_detail, detail_guides_semantic, semantic_only, "
                      "detail_only");
  c_train->add_option("--seed", train_args.seed, "Override train.seed");
  c_train->add_flag("--full", train_args.full,
                    "Train once on the whole manifest and report training-set metrics");

  EvalArgs eval_args;
  auto* c_eval = app.add_subcommand("eval", "SRCC/PLCC of a model on a manifest");
  c_eval->add_option("--manifest", eval_args.manifest, "Manifest CSV")->required();
  c_eval->add_option("--weights", eval_args.weights, "Model file")->required();

  ScoreArgs score_args;
  auto* c_score = app.add_subcommand("score", "Predict the quality of one image");
  c_score->add_option("--image", score_args.image, "P6 image")->required();
  c_score->add_option("--weights", score_args.weights, "Model file")->required();

  InspectArgs inspect;
  auto* c_inspect = app.add_subcommand("inspect", "Dump fragment images and attention maps");
  c_inspect->add_option("--image", inspect.image, "P6 image")->required();
  c_inspect->add_option("--fragments", inspect.fragments, "Write the spliced fragment image");
  c_inspect->add_option("--attn", inspect.attn, "Write the attention heat map");
  c_inspect->add_option("--weights", inspect.weights, "Model file");
  c_inspect->add_option("--block", inspect.block, "Backbone block for --attn");
  c_inspect->add_option("--grid", inspect.grid, "Cells per side");
  c_inspect->add_option("--fragment", inspect.fragment, "Fragment edge in pixels");
  c_inspect->add_option("--mode", inspect.mode, "deterministic or random");
  c_inspect->add_option("--seed", inspect.seed, "Offset seed for random mode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadArguments;
  }

  if (*c_sources) return run_guarded([&] { return cmd_sources(sources); });
  if (*c_synth) return run_guarded([&] { return cmd_synth(synth); });
  if (*c_train) return run_guarded([&] { return cmd_train(train_args); });
  if (*c_eval) return run_guarded([&] { return cmd_eval(eval_args); });
  if (*c_score) return run_guarded([&] { return cmd_score(score_args); });
  if (*c_inspect) return run_guarded([&] { return cmd_inspect(inspect); });
  return kBadArguments;
}
