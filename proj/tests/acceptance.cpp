// Acceptance checks. One PASS/FAIL line per criterion; exits nonzero if any
// criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "glia/config.hpp"
#include "glia/grad_check.hpp"
#include "glia/training.hpp"
#include "glia/weights.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace glia;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kGradRelTol = 1e-4;
constexpr double kGradSeconds = 120.0;
constexpr std::size_t kBudgetMin = 6'000'000;
constexpr std::size_t kBudgetMax = 10'000'000;
constexpr double kBudgetRatio = 0.12;
constexpr double kBudgetSeconds = 1.0;
constexpr int kSamplerGeometries = 1000;
constexpr double kSamplerSeconds = 30.0;
constexpr int kAblationTrials = 100;
constexpr int kMhcaCases = 50;
constexpr double kMhcaTol = 1e-10;
constexpr int kMetricVectors = 200;
constexpr double kMetricTol = 1e-10;
constexpr double kOverfitSrcc = 0.95;
constexpr std::size_t kOverfitSteps = 300;
constexpr std::size_t kLossCheckSteps = 50;
constexpr double kOverfitSeconds = 300.0;
constexpr double kPerSourceSrcc = 0.7;
constexpr int kMonotoneLevels = 5;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("%s criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt2(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt3(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return testkit::bit_equal(a, b);
}

std::vector<NamedTensor> deep_copy(const std::vector<NamedTensor>& tensors) {
  std::vector<NamedTensor> out;
  for (const auto& nt : tensors) out.push_back({nt.name, nt.tensor.clone()});
  return out;
}

bool all_bit_equal(const std::vector<NamedTensor>& a, const std::vector<NamedTensor>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].tensor.shape() != b[i].tensor.shape() ||
        !same_bits(a[i].tensor.data(), b[i].tensor.data())) {
      return false;
    }
  }
  return true;
}

// 2 sources, blur levels 1..7 plus pristine: 16 images.
struct OverfitFixture {
  DatasetManifest manifest;
  LabeledImages data;
  std::vector<int> level;   // 0 = pristine
  std::vector<int> source;
};

OverfitFixture overfit_fixture() {
  std::vector<NamedImage> sources = {{"a", make_source_image(96, 96, 1)},
                                     {"b", make_source_image(96, 96, 2)}};
  const auto ds = build_synth_manifest(sources, {Distortion::blur}, 7, 5);
  OverfitFixture f;
  f.manifest = ds.manifest;
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    const auto& path = ds.manifest.entries[i].path;
    f.data.names.push_back(path);
    f.data.images.push_back(ds.images[i]);
    f.data.mos.push_back(ds.manifest.entries[i].mos);
    f.source.push_back(path[0] == 'a' ? 0 : 1);
    const auto us = path.rfind('_');
    const auto dot = path.rfind('.');
    const auto tag = path.substr(us + 1, dot - us - 1);
    f.level.push_back(tag == "pristine" ? 0 : std::stoi(tag));
  }
  return f;
}

TrainConfig overfit_config() {
  TrainConfig t;
  t.batch_size = 8;
  t.learning_rate = 5e-4;
  t.weight_decay = 0.0;
  t.max_steps = kOverfitSteps;
  t.epochs = kOverfitSteps;  // max_steps stops first
  t.eval_every = 5;
  t.seed = 0;
  return t;
}

constexpr std::uint64_t kOverfitAdapterSeed = 11;

double full_loss(const GliaNetParams& p, const GliaNetConfig& c, const LabeledImages& data) {
  const auto pred = predict_all(p, c, data);
  const auto n = pred.size();
  return compute_loss(Tensor::from({n}, pred), Tensor::from({n}, data.mos), LossKind::mse).item();
}

void set_head_bias(GliaNetParams& p, const std::vector<double>& mos) {
  auto b = p.head.fc2.bias.mutable_data();
  b[0] = std::accumulate(mos.begin(), mos.end(), 0.0) / static_cast<double>(mos.size());
  quantize(b, p.head.fc2.bias.precision());
}

void criterion_gradients() {
  const auto t0 = Clock::now();
  const auto c = GliaNetConfig::toy();
  const auto p = init_glianet(c, 21, Precision::f64);
  const std::vector<Image> imgs = {make_source_image(80, 72, 3),
                                   synth_distort(make_source_image(64, 96, 4), Distortion::blur,
                                                 2, 1)};
  std::vector<PreparedImage> prep;
  for (const auto& img : imgs) prep.push_back(prepare_image(img, p, c));
  const auto target = Tensor::from({2}, {0.8, 0.3});
  std::vector<Tensor> inputs;
  std::vector<std::string> names;
  for (const auto& nt : p.trainable()) {
    inputs.push_back(nt.tensor);
    names.push_back(nt.name);
  }
  const auto loss = [&] {
    std::vector<Tensor> preds;
    for (const auto& pi : prep) preds.push_back(forward_prepared(pi, p, c));
    return compute_loss(concat_rows(preds), target, LossKind::mse);
  };
  GradCheckOptions opt;
  opt.tolerance = kGradRelTol;
  opt.max_elements_per_input = 3;
  opt.directional_probes = 6;
  opt.seed = 9;
  const auto rep = grad_check(loss, inputs, opt, names);
  std::size_t checked = 0;
  for (const auto& e : rep.entries) checked += e.checked;
  const double secs = seconds_since(t0);
  report(1, "gradient fidelity",
         rep.passed && rep.max_rel_error < kGradRelTol && secs < kGradSeconds,
         fmt3("max rel error %.3g over %.0f sampled elements, %.1f s", rep.max_rel_error,
              static_cast<double>(checked), secs) +
             " across " + std::to_string(inputs.size()) + " trainable tensors");
}

void criterion_freezing(const OverfitFixture& f) {
  const auto c = GliaNetConfig::toy();
  auto p = init_glianet(c, kOverfitAdapterSeed);
  const auto before = deep_copy(p.frozen());
  auto t = overfit_config();
  t.max_steps = 100;
  t.eval_every = 1000;
  const auto run = train(p, c, f.data, {}, t);
  const bool same = all_bit_equal(before, p.frozen());
  const std::size_t steps = run.step_losses.size();
  report(2, "freezing contract", same && steps == 100,
         std::to_string(before.size()) + " backbone tensors " +
             (same ? "bit-identical" : "CHANGED") + " after " + std::to_string(steps) + " steps");
}

void criterion_budget() {
  const auto t0 = Clock::now();
  const auto count = count_parameters(GliaNetConfig::paper_scale());
  const double secs = seconds_since(t0);
  const bool pass = count.trainable >= kBudgetMin && count.trainable <= kBudgetMax &&
                    count.ratio() < kBudgetRatio && secs < kBudgetSeconds;
  report(3, "parameter budget", pass,
         fmt3("trainable %.0f of %.0f, ratio %.4f", static_cast<double>(count.trainable),
              static_cast<double>(count.total), count.ratio()));
}

Image random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  Image img(h, w);
  for (auto& v : img.values) v = d(rng);
  return img;
}

void criterion_sampler() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<std::size_t> size(1, 96), count(1, 8);
  int checked = 0;
  bool ok = true;
  std::string first_bad;
  while (checked < kSamplerGeometries && ok) {
    const std::size_t h = size(rng), w = size(rng), n_h = count(rng), n_w = count(rng);
    if (n_h > h || n_w > w) continue;
    const std::size_t g_h = h / n_h, g_w = w / n_w;
    const std::size_t f_h = std::uniform_int_distribution<std::size_t>(1, g_h)(rng);
    const std::size_t f_w = std::uniform_int_distribution<std::size_t>(1, g_w)(rng);
    const auto mode = checked % 2 ? SamplingMode::random : SamplingMode::deterministic;
    const auto grid = plan_grid(h, w, n_h, n_w, f_h, f_w, mode, checked);
    const auto img = random_image(h, w, checked);
    const auto d = extract_fragments(img, grid);
    ok = grid.g_h == g_h && grid.g_w == g_w && d.image.height == n_h * f_h &&
         d.image.width == n_w * f_w;
    for (std::size_t i = 0; ok && i < n_h; ++i) {
      for (std::size_t j = 0; ok && j < n_w; ++j) {
        const auto [r, c] = grid.offset(i, j);
        if (mode == SamplingMode::deterministic && (r != i * g_h || c != j * g_w)) ok = false;
        if (r < i * g_h || r + f_h > i * g_h + g_h || c < j * g_w || c + f_w > j * g_w + g_w) {
          ok = false;
        }
        for (std::size_t y = 0; ok && y < f_h; ++y)
          for (std::size_t x = 0; ok && x < f_w; ++x)
            for (std::size_t ch = 0; ok && ch < 3; ++ch)
              ok = d.image.at(i * f_h + y, j * f_w + x, ch) == img.at(r + y, c + x, ch);
      }
    }
    if (!ok) {
      first_bad = " (geometry " + std::to_string(checked) + ": " + std::to_string(h) + "x" +
                  std::to_string(w) + ")";
    }
    ++checked;
  }
  const auto src = random_image(448, 448, 7);
  const bool identity = extract_fragments(src, plan_grid(448, 448, 2, 2, 224, 224)).image == src;
  const double secs = seconds_since(t0);
  report(4, "sampler exactness", ok && identity && secs < kSamplerSeconds,
         std::to_string(checked) + " geometries" + first_bad + ", divisible identity " +
             (identity ? "exact" : "MISMATCH") + fmt(", %.2f s", secs));
}

GliaConfig small_glia() {
  GliaConfig c;
  c.d_model = 16;
  c.d_latent = 8;
  c.n_heads = 2;
  c.insertion_points = {0};
  return c;
}

void criterion_gates() {
  std::mt19937_64 rng(55);
  std::uniform_int_distribution<std::size_t> tokens(1, 9);
  auto c = small_glia();
  bool lgf_gate = true, glr_gate = true, ablations = true;
  for (int trial = 0; trial < kAblationTrials; ++trial) {
    c.glr_source = trial % 2 ? GlrSource::post_lgf : GlrSource::pre_lgf;
    c.mlp_depth = trial % 3 == 0 ? 2 : 1;
    std::mt19937_64 init_rng(1000 + trial);
    auto p = init_glia_block(c, init_rng, Precision::f64);
    LatentState s;
    s.semantic_latent = testkit::random_tensor({tokens(rng), c.d_latent}, rng, 1.0, false);
    s.detail = testkit::random_tensor({tokens(rng), c.d_model}, rng, 1.0, false);

    const auto z = p.down(s.detail);
    Tensor fused;
    const auto lgf_out = lgf_from_latent(z, s.semantic_latent, p, c, &fused);
    const auto glr_src = c.glr_source == GlrSource::pre_lgf ? z : fused;
    const auto lo = glia_block(s, p, c, AdapterAblation::lgf_only);
    const auto go = glia_block(s, p, c, AdapterAblation::glr_only);
    ablations = ablations && same_bits(lo.detail.data(), lgf_out.data()) &&
                same_bits(lo.semantic_latent.data(), s.semantic_latent.data()) &&
                same_bits(go.detail.data(), p.up(z).data()) &&
                same_bits(go.semantic_latent.data(), glr(s.semantic_latent, z, p, c).data());
    const auto full = glia_block(s, p, c, AdapterAblation::full);
    ablations = ablations && same_bits(full.detail.data(), lgf_out.data()) &&
                same_bits(full.semantic_latent.data(),
                          glr(s.semantic_latent, glr_src, p, c).data());

    Tensor ld = p.lambda_d, ls = p.lambda_s;
    ld.mutable_data()[0] = 0.0;
    ls.mutable_data()[0] = 0.0;
    lgf_gate = lgf_gate && same_bits(lgf(s.detail, s.semantic_latent, p, c).data(),
                                     p.up(p.down(s.detail)).data());
    glr_gate = glr_gate && same_bits(glr(s.semantic_latent, z, p, c).data(),
                                     s.semantic_latent.data());
  }
  report(5, "adapter gate identities", lgf_gate && glr_gate && ablations,
         std::string("lambda_d=0 ") + (lgf_gate ? "exact" : "MISMATCH") + ", lambda_s=0 " +
             (glr_gate ? "exact" : "MISMATCH") + ", ablations " +
             (ablations ? "exact" : "MISMATCH") + " on " + std::to_string(kAblationTrials) +
             " states");
}

void criterion_mhca() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> tokens(2, 11);
  double worst = 0.0;
  int single_key = 0;
  for (int trial = 0; trial < kMhcaCases; ++trial) {
    auto c = small_glia();
    c.n_heads = std::array<std::size_t, 3>{1, 2, 4}[trial % 3];
    std::mt19937_64 init_rng(300 + trial);
    const auto p = init_glia_block(c, init_rng, Precision::f64);
    const std::size_t tq = trial % 7 == 0 ? 1 : tokens(rng);
    const std::size_t tk = trial % 4 == 0 ? 1 : tokens(rng);
    single_key += tk == 1;
    const auto q = testkit::random_tensor({tq, c.d_latent}, rng, 1.0, false);
    const auto kv = testkit::random_tensor({tk, c.d_latent}, rng, 1.0, false);
    const auto& attn = trial % 2 ? p.lgf_attn : p.glr_attn;
    const auto out = mhca(q, kv, attn, c.n_heads);
    const auto ref =
        oracle::attention(oracle::to_matrix(q), oracle::to_matrix(kv), attn, c.n_heads);
    worst = std::max(worst, oracle::max_abs_diff(ref, out));
  }
  report(6, "MHCA oracle", worst < kMhcaTol,
         fmt2("max abs diff %.3g over %.0f cases", worst, kMhcaCases) +
             ", " + std::to_string(single_key) + " with T_kv=1");
}

long double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / sqrtl(sxx * syy);
}

std::vector<double> rank_oracle(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i];
      equal += w == v[i];
    }
    r[i] = 1.0 + less + (equal - 1) / 2.0;
  }
  return r;
}

void criterion_metrics() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<std::size_t> len(3, 40);
  std::uniform_int_distribution<int> coarse(0, 5);
  double worst = 0.0;
  bool invariant = true;
  for (int t = 0; t < kMetricVectors; ++t) {
    const std::size_t n = len(rng);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Every third case carries ties.
      x[i] = t % 3 == 0 ? coarse(rng) : nd(rng);
      y[i] = nd(rng);
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) x[0] += 1.0;
    const double p_ref = static_cast<double>(pearson_oracle(x, y));
    const double s_ref = static_cast<double>(pearson_oracle(rank_oracle(x), rank_oracle(y)));
    const double s = srcc(x, y);
    worst = std::max({worst, std::abs(plcc(x, y) - p_ref), std::abs(s - s_ref)});

    std::vector<double> ex(n), cube(n), aff(n), neg(n);
    for (std::size_t i = 0; i < n; ++i) {
      ex[i] = std::exp(x[i] / 4.0);
      cube[i] = x[i] * x[i] * x[i] + x[i];
      aff[i] = 3.0 * y[i] + 2.0;
      neg[i] = -x[i];
    }
    invariant = invariant && std::abs(srcc(ex, y) - s) < kMetricTol &&
                std::abs(srcc(cube, y) - s) < kMetricTol &&
                std::abs(srcc(x, aff) - s) < kMetricTol &&
                std::abs(srcc(neg, y) + s) < kMetricTol &&
                std::abs(plcc(x, aff) - plcc(x, y)) < kMetricTol &&
                std::abs(srcc(y, x) - s) < kMetricTol;
  }
  const double half = srcc(std::vector<double>{1, 2, 3}, std::vector<double>{3, 1, 2});
  const bool half_ok = std::abs(half + 0.5) < kMetricTol;
  report(7, "metric oracles", worst < kMetricTol && half_ok && invariant,
         fmt2("max diff %.3g over %.0f vectors", worst, kMetricVectors) +
             fmt(", srcc([1,2,3],[3,1,2]) = %.12g", half) + ", invariance " +
             (invariant ? "holds" : "BROKEN"));
}

// Returns the trained parameters for the monotonicity check.
GliaNetParams criterion_overfit(const OverfitFixture& f) {
  const auto c = GliaNetConfig::toy();

  // Loss on the whole fixture before training vs after 50 steps.
  auto p50 = init_glianet(c, kOverfitAdapterSeed);
  set_head_bias(p50, f.data.mos);
  const double loss0 = full_loss(p50, c, f.data);
  auto t50 = overfit_config();
  t50.max_steps = kLossCheckSteps;
  t50.eval_every = 1000;
  train(p50, c, f.data, {}, t50);
  const double loss50 = full_loss(p50, c, f.data);

  const auto t0 = Clock::now();
  auto p = init_glianet(c, kOverfitAdapterSeed);
  const auto run = train(p, c, f.data, f.data, overfit_config());
  const double secs = seconds_since(t0);
  double best = -1.0;
  for (const auto& e : run.epochs)
    if (e.evaluated) best = std::max(best, e.eval_srcc);
  const auto& sl = run.step_losses;
  const std::size_t w = std::min<std::size_t>(10, sl.size());
  const double head = std::accumulate(sl.begin(), sl.begin() + w, 0.0) / w;
  const double tail = std::accumulate(sl.end() - w, sl.end(), 0.0) / w;

  const bool pass = best >= kOverfitSrcc && sl.size() <= kOverfitSteps && loss50 < loss0 &&
                    secs < kOverfitSeconds;
  report(8, "overfit sanity", pass,
         fmt3("train SRCC %.4f within %.0f steps, %.1f s", best, static_cast<double>(sl.size()),
              secs) +
             fmt2("; fixture loss %.5f -> %.5f after 50 steps", loss0, loss50) +
             fmt2("; step loss mean first/last 10: %.5f / %.5f", head, tail));
  return p;
}

void criterion_monotonicity(const OverfitFixture& f, const GliaNetParams& p) {
  const auto c = GliaNetConfig::toy();
  const auto pred = predict_all(p, c, f.data);
  bool pass = true;
  std::string detail;
  for (int s = 0; s < 2; ++s) {
    std::vector<double> score, level;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (f.source[i] == s && f.level[i] >= 1 && f.level[i] <= kMonotoneLevels) {
        score.push_back(pred[i]);
        level.push_back(-f.level[i]);
      }
    }
    const double r = srcc(score, level);
    pass = pass && r >= kPerSourceSrcc && score.size() == kMonotoneLevels;
    detail += (s ? ", " : "") + std::string("source ") + static_cast<char>('a' + s) +
              fmt(" SRCC %.3f", r);
  }
  report(9, "distortion monotonicity", pass, detail);
}

void criterion_round_trips() {
  const fs::path dir = fs::temp_directory_path() / "glianet_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  // Weight file.
  const auto c = GliaNetConfig::toy();
  const auto p = init_glianet(c, 5);
  save_model(dir / "m.glia", p, c);
  const auto loaded = load_model(dir / "m.glia");
  const bool weights_ok = loaded.config == c && all_bit_equal(p.named(), loaded.params.named());
  // Values are stored as float32; these are all exactly representable.
  const auto f = [](float v) { return static_cast<double>(v); };
  std::vector<NamedTensor> raw = {
      {"a", Tensor::from({2, 2}, {f(1.0f / 3.0f), -0.0, f(1e-40f), -7.25}, Precision::f32)},
      {"b", Tensor::from({3}, {f(std::nextafter(1.0f, 2.0f)), 5.0, f(-1e10f)}, Precision::f32)}};
  write_weights(dir / "raw.w", raw);
  const bool raw_ok = all_bit_equal(raw, read_weights(dir / "raw.w"));

  // P6 image: every 8-bit level survives.
  Image img(16, 16);
  for (std::size_t i = 0; i < img.values.size(); ++i) img.values[i] = (i % 256) / 255.0;
  save_image(img, dir / "i.ppm");
  const bool image_ok = load_image(dir / "i.ppm") == img;

  // Repeated evaluation with a fixed master seed.
  auto mc = c;
  mc.vit.n_layers = 2;
  mc.glia.insertion_points = {0, 1};
  std::vector<NamedImage> sources;
  for (int i = 0; i < 5; ++i) sources.push_back({"s" + std::to_string(i), make_source_image(64, 64, 30 + i)});
  const auto ds = build_synth_manifest(sources, {Distortion::blur}, 1, 3);
  LabeledImages data;
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    data.names.push_back(ds.manifest.entries[i].path);
    data.images.push_back(ds.images[i]);
    data.mos.push_back(ds.manifest.entries[i].mos);
  }
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 4;
  tc.repeats = 2;
  tc.seed = 123;
  const auto a = repeated_eval(ds.manifest, data, mc, tc).to_json();
  const auto b = repeated_eval(ds.manifest, data, mc, tc).to_json();
  const bool report_ok = a == b;
  fs::remove_all(dir);

  report(10, "format round-trips", weights_ok && raw_ok && image_ok && report_ok,
         std::string("model file ") + (weights_ok ? "exact" : "MISMATCH") + ", raw weights " +
             (raw_ok ? "exact" : "MISMATCH") + ", P6 " + (image_ok ? "exact" : "MISMATCH") +
             ", repeated_eval report " + (report_ok ? "byte-identical" : "DIFFERS"));
}

template <typename F>
void guarded(int id, const char* name, F&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("threw: ") + e.what());
  }
}

}  // namespace

int main() {
  guarded(1, "gradient fidelity", criterion_gradients);
  const auto fixture = overfit_fixture();
  guarded(2, "freezing contract", [&] { criterion_freezing(fixture); });
  guarded(3, "parameter budget", criterion_budget);
  guarded(4, "sampler exactness", criterion_sampler);
  guarded(5, "adapter gate identities", criterion_gates);
  guarded(6, "MHCA oracle", criterion_mhca);
  guarded(7, "metric oracles", criterion_metrics);
  GliaNetParams trained;
  bool have_trained = false;
  guarded(8, "overfit sanity", [&] {
    trained = criterion_overfit(fixture);
    have_trained = true;
  });
  if (have_trained) {
    guarded(9, "distortion monotonicity", [&] { criterion_monotonicity(fixture, trained); });
  } else {
    report(9, "distortion monotonicity", false, "no trained model");
  }
  guarded(10, "format round-trips", criterion_round_trips);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
