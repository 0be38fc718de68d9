#include "glia/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "glia/errors.hpp"

namespace glia {
namespace {

double eval_scalar(const std::function<Tensor()>& f) {
  Tensor out = f();
  if (out.numel() != 1) {
    throw UsageError("grad_check: function returned shape " + shape_str(out.shape()) +
                     ", expected a scalar");
  }
  return out.item();
}

double rel_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

GradCheckReport grad_check(const std::function<Tensor()>& f, std::vector<Tensor> inputs,
                           const GradCheckOptions& options, std::vector<std::string> names) {
  if (!(options.step > 0.0)) {
    throw ParameterError("grad_check: step must be positive");
  }
  names.resize(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (names[i].empty()) {
      names[i] = "input" + std::to_string(i);
    }
    for (double v : inputs[i].data()) {
      if (!std::isfinite(v)) {
        throw ParameterError("grad_check: input " + names[i] + " is not finite");
      }
    }
  }

  std::vector<bool> saved_flags;
  for (auto& t : inputs) {
    saved_flags.push_back(t.requires_grad());
    t.set_requires_grad(true);
    t.zero_grad();
  }

  std::vector<std::vector<double>> analytic;
  {
    GradTape tape;
    Tensor out;
    {
      auto rec = tape.record();
      out = f();
    }
    if (out.numel() != 1) {
      throw UsageError("grad_check: function returned shape " + shape_str(out.shape()) +
                       ", expected a scalar");
    }
    tape.backward(out);
  }
  for (auto& t : inputs) {
    if (t.has_grad()) {
      analytic.emplace_back(t.grad().begin(), t.grad().end());
    } else {
      analytic.emplace_back(t.numel(), 0.0);
    }
    t.zero_grad();
  }

  GradCheckReport report;
  std::mt19937_64 rng(options.seed);
  const double h = options.step;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto values = inputs[i].mutable_data();
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (options.max_elements_per_input != 0 && idx.size() > options.max_elements_per_input) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(options.max_elements_per_input);
      std::sort(idx.begin(), idx.end());
    }
    GradCheckEntry entry{names[i], idx.size(), 0.0, 0.0};
    for (std::size_t e : idx) {
      const double orig = values[e];
      values[e] = orig + h;
      const double fp = eval_scalar(f);
      values[e] = orig - h;
      const double fm = eval_scalar(f);
      values[e] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      entry.max_abs_error = std::max(entry.max_abs_error, std::abs(analytic[i][e] - numeric));
      entry.max_rel_error =
          std::max(entry.max_rel_error, rel_error(analytic[i][e], numeric, options.denom_floor));
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }

  if (options.directional_probes > 0) {
    GradCheckEntry entry{"directional", options.directional_probes, 0.0, 0.0};
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t probe = 0; probe < options.directional_probes; ++probe) {
      std::vector<std::vector<double>> dir(inputs.size());
      std::vector<std::vector<double>> orig(inputs.size());
      double predicted = 0.0;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        orig[i].assign(inputs[i].data().begin(), inputs[i].data().end());
        dir[i].resize(orig[i].size());
        for (std::size_t e = 0; e < dir[i].size(); ++e) {
          dir[i][e] = normal(rng);
          predicted += dir[i][e] * analytic[i][e];
        }
      }
      auto shift = [&](double sign) {
        for (std::size_t i = 0; i < inputs.size(); ++i) {
          auto v = inputs[i].mutable_data();
          for (std::size_t e = 0; e < v.size(); ++e) {
            v[e] = orig[i][e] + sign * h * dir[i][e];
          }
        }
      };
      shift(1.0);
      const double fp = eval_scalar(f);
      shift(-1.0);
      const double fm = eval_scalar(f);
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        std::copy(orig[i].begin(), orig[i].end(), inputs[i].mutable_data().begin());
      }
      const double numeric = (fp - fm) / (2.0 * h);
      entry.max_abs_error = std::max(entry.max_abs_error, std::abs(predicted - numeric));
      entry.max_rel_error =
          std::max(entry.max_rel_error, rel_error(predicted, numeric, options.denom_floor));
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }

  for (std::size_t i = 0; i < inputs.size(); ++i) {
    inputs[i].set_requires_grad(saved_flags[i]);
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace glia
