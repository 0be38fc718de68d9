#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace glia {

struct MetricReport {
  double srcc = 0.0;
  double plcc = 0.0;
  std::size_t n = 0;
};

struct PlccOptions {
  // Fit the monotone 4-parameter logistic to x before correlating. Off by
  // default; raw PLCC is the canonical figure.
  bool logistic = false;
};

// Pearson correlation. Throws UndefinedCorrelationError on constant input.
double plcc(std::span<const double> x, std::span<const double> y, const PlccOptions& = {});
// Pearson correlation of fractional ranks; ties share their average rank.
double srcc(std::span<const double> x, std::span<const double> y);
MetricReport evaluate_metrics(std::span<const double> predicted, std::span<const double> mos);

// 1-based ranks with averaged ties.
std::vector<double> fractional_ranks(std::span<const double> values);

struct LogisticFit {
  double b1 = 0.0;  // upper asymptote
  double b2 = 0.0;  // lower asymptote
  double b3 = 0.0;  // midpoint
  double b4 = 1.0;  // scale
  double operator()(double x) const;
};

// Levenberg-Marquardt least-squares fit of y ~ logistic(x).
LogisticFit fit_logistic(std::span<const double> x, std::span<const double> y);

double median(std::vector<double> values);

}  // namespace glia
