#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "glia/manifest.hpp"
#include "glia/metrics.hpp"
#include "glia/model.hpp"

namespace glia {

enum class LossKind : std::uint8_t { mse, smooth_l1 };

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  double learning_rate = 3e-4;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t warmup_steps = 0;
  // Stop after this many optimizer steps (0: run all epochs).
  std::size_t max_steps = 0;
  // Evaluate every this many epochs; the last epoch is always evaluated.
  std::size_t eval_every = 1;
  std::uint64_t seed = 0;
  double split_fraction = 0.8;
  std::size_t repeats = 10;
  LossKind loss = LossKind::mse;
  double smooth_l1_beta = 1.0;
  Precision precision = Precision::f32;
  // Start the head's output bias at the mean training score.
  bool init_head_bias = true;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Content-level split: every entry of one ManifestEntry::group() lands on the
// same side. floor(fraction * groups) groups (up to rounding noise) go to
// training. Entries keep manifest order; their split tag becomes "train" or
// "test". Throws ParameterError when either side would be empty.
std::pair<DatasetManifest, DatasetManifest> split_dataset(const DatasetManifest& manifest,
                                                          double fraction, std::uint64_t seed);

Tensor compute_loss(const Tensor& predicted, const Tensor& target, LossKind kind,
                    double smooth_l1_beta = 1.0);

// AdamW with bias correction and decoupled weight decay.
struct OptimizerState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::size_t step = 0;
};

// Every tensor needs a populated gradient; a missing one is a UsageError.
void optimizer_step(std::vector<NamedTensor>& trainables, OptimizerState& state,
                    const TrainConfig& config);

struct LabeledImages {
  std::vector<std::string> names;
  std::vector<Image> images;
  std::vector<double> mos;
};

// Paths resolve relative to `base_dir`.
LabeledImages load_labeled(const DatasetManifest& manifest, const std::filesystem::path& base_dir);

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  double train_loss = 0.0;
  bool evaluated = false;
  double eval_srcc = 0.0;
  double eval_plcc = 0.0;
};

struct TrainRun {
  std::vector<EpochLog> epochs;
  std::vector<double> step_losses;
  std::uint64_t split_seed = 0;
  std::uint64_t frozen_checksum_before = 0;
  std::uint64_t frozen_checksum_after = 0;
  std::size_t trainable_count = 0;
  std::string ablation;
  std::string guidance;
  // Trainable tensors at the best evaluated epoch (copies).
  std::vector<NamedTensor> best_trainables;
  std::size_t best_epoch = 0;
  double best_srcc = -2.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Optimises the trainable tensors of `params` in place. Frozen tensors are
// checksummed before and after; any change is a hard failure. A non-finite
// batch loss raises NanLossError naming the batch. `eval` may be empty.
TrainRun train(GliaNetParams& params, const GliaNetConfig& model_config,
               const LabeledImages& train_set, const LabeledImages& eval_set,
               const TrainConfig& config, const EpochCallback& on_epoch = {});

std::vector<double> predict_all(const GliaNetParams& params, const GliaNetConfig& config,
                                const LabeledImages& data);
MetricReport evaluate(const GliaNetParams& params, const GliaNetConfig& config,
                      const LabeledImages& data);

// Restores a snapshot taken from trainable_parameters().
void restore_trainables(GliaNetParams& params, const std::vector<NamedTensor>& snapshot);

struct RepeatResult {
  std::uint64_t split_seed = 0;
  std::uint64_t init_seed = 0;
  MetricReport metrics;
  TrainRun run;
};

struct RepeatedReport {
  std::vector<RepeatResult> repeats;
  double median_srcc = 0.0;
  double median_plcc = 0.0;
  double mean_srcc = 0.0;
  double mean_plcc = 0.0;

  // Deterministic JSON rendering (per-repeat metrics and summary).
  std::string to_json() const;
};

// `repeats` independent runs: repeat r splits with a seed derived from
// config.seed and r, initialises fresh adapters, trains, and evaluates its
// best snapshot on its test side.
RepeatedReport repeated_eval(const DatasetManifest& manifest, const LabeledImages& data,
                             const GliaNetConfig& model_config, const TrainConfig& config,
                             const std::function<void(std::size_t, const RepeatResult&,
                                                      const GliaNetParams&)>& on_repeat = {});

// One JSON object per epoch, newline terminated.
std::string render_train_log(const TrainRun& run);

}  // namespace glia
