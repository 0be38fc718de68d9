#include "glia/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <json.hpp>

#include "glia/errors.hpp"

namespace glia {

void TrainConfig::validate() const {
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw ConfigError("train: split_fraction must lie in (0, 1)");
  }
  if (repeats == 0) {
    throw ConfigError("train: repeats must be at least 1");
  }
  if (batch_size == 0) {
    throw ConfigError("train: batch_size must be at least 1");
  }
  if (!(learning_rate > 0.0) || weight_decay < 0.0) {
    throw ConfigError("train: learning_rate must be positive and weight_decay non-negative");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
    throw ConfigError("train: moment coefficients must lie in [0, 1) and epsilon be positive");
  }
  if (eval_every == 0) {
    throw ConfigError("train: eval_every must be at least 1");
  }
  if (!(smooth_l1_beta > 0.0)) {
    throw ConfigError("train: smooth_l1_beta must be positive");
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::vector<NamedTensor> snapshot(const std::vector<NamedTensor>& tensors) {
  std::vector<NamedTensor> out;
  out.reserve(tensors.size());
  for (const auto& nt : tensors) {
    out.push_back({nt.name, nt.tensor.clone()});
  }
  return out;
}

LabeledImages subset(const LabeledImages& data, const std::vector<std::size_t>& idx) {
  LabeledImages out;
  for (auto i : idx) {
    out.names.push_back(data.names[i]);
    out.images.push_back(data.images[i]);
    out.mos.push_back(data.mos[i]);
  }
  return out;
}

}  // namespace

std::pair<DatasetManifest, DatasetManifest> split_dataset(const DatasetManifest& manifest,
                                                          double fraction, std::uint64_t seed) {
  if (manifest.entries.empty()) {
    throw ParameterError("split_dataset: empty manifest");
  }
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ParameterError("split_dataset: fraction must lie in (0, 1)");
  }
  std::vector<std::string> groups;
  for (const auto& e : manifest.entries) {
    const auto g = e.group();
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) {
      groups.push_back(g);
    }
  }
  const auto n_train =
      static_cast<std::size_t>(std::floor(fraction * static_cast<double>(groups.size()) + 1e-9));
  if (n_train == 0 || n_train == groups.size()) {
    throw ParameterError("split_dataset: fraction " + std::to_string(fraction) + " of " +
                         std::to_string(groups.size()) +
                         " content groups leaves one side empty");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(groups.begin(), groups.end(), rng);
  std::map<std::string, bool> in_train;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    in_train[groups[i]] = i < n_train;
  }
  std::pair<DatasetManifest, DatasetManifest> out;
  for (auto* side : {&out.first, &out.second}) {
    side->score_min = manifest.score_min;
    side->score_max = manifest.score_max;
  }
  for (auto e : manifest.entries) {
    const bool train = in_train[e.group()];
    e.split = train ? "train" : "test";
    (train ? out.first : out.second).entries.push_back(std::move(e));
  }
  return out;
}

Tensor compute_loss(const Tensor& predicted, const Tensor& target, LossKind kind,
                    double smooth_l1_beta) {
  if (predicted.shape() != target.shape()) {
    throw DimensionError("loss: predictions " + shape_str(predicted.shape()) + " vs targets " +
                         shape_str(target.shape()));
  }
  Tensor diff = sub(predicted, target);
  if (kind == LossKind::smooth_l1) {
    return mean(smooth_l1(diff, smooth_l1_beta));
  }
  return mean(mul(diff, diff));
}

void optimizer_step(std::vector<NamedTensor>& trainables, OptimizerState& state,
                    const TrainConfig& config) {
  for (const auto& nt : trainables) {
    if (!nt.tensor.has_grad()) {
      throw UsageError("optimizer_step: no gradient for trainable tensor " + nt.name);
    }
  }
  if (state.first_moment.size() != trainables.size()) {
    state.first_moment.clear();
    state.second_moment.clear();
    for (const auto& nt : trainables) {
      state.first_moment.emplace_back(nt.tensor.numel(), 0.0);
      state.second_moment.emplace_back(nt.tensor.numel(), 0.0);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  double lr = config.learning_rate;
  if (config.warmup_steps > 0) {
    lr *= std::min(1.0, t / static_cast<double>(config.warmup_steps));
  }
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < trainables.size(); ++i) {
    auto values = trainables[i].tensor.mutable_data();
    auto grad = trainables[i].tensor.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t e = 0; e < values.size(); ++e) {
      m[e] = config.beta1 * m[e] + (1.0 - config.beta1) * grad[e];
      v[e] = config.beta2 * v[e] + (1.0 - config.beta2) * grad[e] * grad[e];
      const double m_hat = m[e] / bc1;
      const double v_hat = v[e] / bc2;
      values[e] = values[e] * (1.0 - lr * config.weight_decay) -
                  lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
    quantize(values, trainables[i].tensor.precision());
  }
}

LabeledImages load_labeled(const DatasetManifest& manifest,
                           const std::filesystem::path& base_dir) {
  LabeledImages out;
  for (const auto& e : manifest.entries) {
    const std::filesystem::path p(e.path);
    out.names.push_back(e.path);
    out.images.push_back(load_image(p.is_absolute() ? p : base_dir / p));
    out.mos.push_back(e.mos);
  }
  return out;
}

std::vector<double> predict_all(const GliaNetParams& params, const GliaNetConfig& config,
                                const LabeledImages& data) {
  std::vector<double> out;
  out.reserve(data.images.size());
  for (const auto& img : data.images) {
    out.push_back(predict(img, params, config));
  }
  return out;
}

MetricReport evaluate(const GliaNetParams& params, const GliaNetConfig& config,
                      const LabeledImages& data) {
  const auto pred = predict_all(params, config, data);
  return evaluate_metrics(pred, data.mos);
}

void restore_trainables(GliaNetParams& params, const std::vector<NamedTensor>& snapshot) {
  auto targets = params.trainable();
  assign_weights(snapshot, targets);
}

TrainRun train(GliaNetParams& params, const GliaNetConfig& model_config,
               const LabeledImages& train_set, const LabeledImages& eval_set,
               const TrainConfig& config, const EpochCallback& on_epoch) {
  model_config.validate();
  config.validate();
  TrainRun run;
  run.ablation = std::string(ablation_name(model_config.glia.ablation));
  run.guidance = std::string(guidance_name(model_config.guidance));
  const auto frozen = params.frozen();
  run.frozen_checksum_before = checksum(frozen);
  auto trainables = params.trainable();
  for (const auto& nt : trainables) {
    run.trainable_count += nt.tensor.numel();
  }

  if (config.epochs > 0 && train_set.images.empty()) {
    throw ParameterError("train: empty training set");
  }
  std::vector<PreparedImage> prepared;
  prepared.reserve(train_set.images.size());
  for (const auto& img : train_set.images) {
    prepared.push_back(prepare_image(img, params, model_config));
  }
  std::vector<PreparedImage> eval_prepared;
  for (const auto& img : eval_set.images) {
    eval_prepared.push_back(prepare_image(img, params, model_config));
  }

  if (config.init_head_bias && !train_set.mos.empty()) {
    const double mean_mos = std::accumulate(train_set.mos.begin(), train_set.mos.end(), 0.0) /
                            static_cast<double>(train_set.mos.size());
    auto b = params.head.fc2.bias.mutable_data();
    b[0] = mean_mos;
    quantize(b, params.head.fc2.bias.precision());
  }

  OptimizerState opt;
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(prepared.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t global_step = 0;
  bool stop = false;

  for (std::size_t epoch = 1; epoch <= config.epochs && !stop; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochLog log;
    log.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, order.size());
      for (auto& nt : trainables) {
        nt.tensor.zero_grad();
      }
      GradTape tape;
      Tensor loss;
      {
        auto rec = tape.record();
        std::vector<Tensor> preds;
        std::vector<double> targets;
        for (std::size_t i = start; i < end; ++i) {
          preds.push_back(forward_prepared(prepared[order[i]], params, model_config));
          targets.push_back(train_set.mos[order[i]]);
        }
        Tensor target = Tensor::from({targets.size()}, targets);
        loss = compute_loss(concat_rows(preds), target, config.loss, config.smooth_l1_beta);
      }
      const double loss_value = loss.item();
      if (!std::isfinite(loss_value)) {
        std::string names;
        for (std::size_t i = start; i < end; ++i) {
          names += (i == start ? "" : ", ") + train_set.names[order[i]];
        }
        throw NanLossError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches) + " (" + names + ")");
      }
      tape.backward(loss);
      for (auto& nt : trainables) {
        nt.tensor.mutable_grad();  // tensors the active ablation never touches get zeros
      }
      optimizer_step(trainables, opt, config);
      run.step_losses.push_back(loss_value);
      loss_sum += loss_value;
      ++batches;
      ++global_step;
      if (config.max_steps != 0 && global_step >= config.max_steps) {
        stop = true;
        break;
      }
    }
    log.steps = global_step;
    log.train_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    const bool last = stop || epoch == config.epochs;
    if (!eval_prepared.empty() && (epoch % config.eval_every == 0 || last)) {
      std::vector<double> pred;
      for (const auto& p : eval_prepared) {
        pred.push_back(forward_prepared(p, params, model_config).item());
      }
      log.evaluated = true;
      try {
        log.eval_srcc = srcc(pred, eval_set.mos);
        log.eval_plcc = plcc(pred, eval_set.mos);
      } catch (const UndefinedCorrelationError&) {
        log.eval_srcc = 0.0;
        log.eval_plcc = 0.0;
      }
      if (log.eval_srcc > run.best_srcc) {
        run.best_srcc = log.eval_srcc;
        run.best_epoch = epoch;
        run.best_trainables = snapshot(trainables);
      }
    }
    run.epochs.push_back(log);
    if (on_epoch) {
      on_epoch(log);
    }
  }
  if (run.best_trainables.empty()) {
    run.best_trainables = snapshot(trainables);
    run.best_epoch = run.epochs.size();
  }

  run.frozen_checksum_after = checksum(params.frozen());
  if (run.frozen_checksum_after != run.frozen_checksum_before) {
    throw Error("frozen backbone parameters changed during training");
  }
  return run;
}

RepeatedReport repeated_eval(const DatasetManifest& manifest, const LabeledImages& data,
                             const GliaNetConfig& model_config, const TrainConfig& config,
                             const std::function<void(std::size_t, const RepeatResult&,
                                                      const GliaNetParams&)>& on_repeat) {
  config.validate();
  if (data.images.size() != manifest.entries.size()) {
    throw DimensionError("repeated_eval: manifest and image set differ in length");
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    index[manifest.entries[i].path] = i;
  }
  RepeatedReport report;
  std::vector<double> srccs;
  std::vector<double> plccs;
  for (std::size_t r = 0; r < config.repeats; ++r) {
    RepeatResult res;
    res.split_seed = splitmix64(config.seed + 2 * r);
    res.init_seed = splitmix64(config.seed + 2 * r + 1);
    const auto [train_m, test_m] = split_dataset(manifest, config.split_fraction, res.split_seed);
    auto indices = [&](const DatasetManifest& m) {
      std::vector<std::size_t> idx;
      for (const auto& e : m.entries) {
        idx.push_back(index.at(e.path));
      }
      return idx;
    };
    const LabeledImages train_set = subset(data, indices(train_m));
    const LabeledImages test_set = subset(data, indices(test_m));
    GliaNetParams params = init_glianet(model_config, res.init_seed, config.precision);
    TrainConfig run_cfg = config;
    run_cfg.seed = res.split_seed;
    res.run = train(params, model_config, train_set, test_set, run_cfg);
    res.run.split_seed = res.split_seed;
    restore_trainables(params, res.run.best_trainables);
    try {
      res.metrics = evaluate(params, model_config, test_set);
    } catch (const UndefinedCorrelationError&) {
      res.metrics = {0.0, 0.0, test_set.images.size()};
    }
    srccs.push_back(res.metrics.srcc);
    plccs.push_back(res.metrics.plcc);
    if (on_repeat) {
      on_repeat(r, res, params);
    }
    report.repeats.push_back(std::move(res));
  }
  report.median_srcc = median(srccs);
  report.median_plcc = median(plccs);
  report.mean_srcc = std::accumulate(srccs.begin(), srccs.end(), 0.0) /
                     static_cast<double>(srccs.size());
  report.mean_plcc = std::accumulate(plccs.begin(), plccs.end(), 0.0) /
                     static_cast<double>(plccs.size());
  return report;
}

std::string RepeatedReport::to_json() const {
  nlohmann::ordered_json j;
  j["repeats"] = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < repeats.size(); ++r) {
    const auto& res = repeats[r];
    nlohmann::ordered_json item;
    item["repeat"] = r;
    item["split_seed"] = res.split_seed;
    item["init_seed"] = res.init_seed;
    item["n_test"] = res.metrics.n;
    item["srcc"] = res.metrics.srcc;
    item["plcc"] = res.metrics.plcc;
    item["best_epoch"] = res.run.best_epoch;
    j["repeats"].push_back(item);
  }
  j["median_srcc"] = median_srcc;
  j["median_plcc"] = median_plcc;
  j["mean_srcc"] = mean_srcc;
  j["mean_plcc"] = mean_plcc;
  return j.dump(2) + "\n";
}

std::string render_train_log(const TrainRun& run) {
  std::string out;
  for (const auto& e : run.epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["steps"] = e.steps;
    j["train_loss"] = e.train_loss;
    if (e.evaluated) {
      j["eval_srcc"] = e.eval_srcc;
      j["eval_plcc"] = e.eval_plcc;
    }
    j["ablation"] = run.ablation;
    j["guidance"] = run.guidance;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace glia
