#include "glia/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "glia/errors.hpp"

namespace glia {
namespace {

void check_lengths(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DimensionError("correlation: lengths " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()) + " differ");
  }
  if (x.size() < 2) {
    throw UndefinedCorrelationError("correlation needs at least two samples");
  }
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelationError("correlation is undefined for constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) {
      ++j;
    }
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      ranks[order[k]] = avg;
    }
    i = j + 1;
  }
  return ranks;
}

double LogisticFit::operator()(double x) const {
  return b2 + (b1 - b2) / (1.0 + std::exp(-(x - b3) / std::abs(b4)));
}

LogisticFit fit_logistic(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double sx = 0.0;
  for (double v : x) {
    sx += (v - mx) * (v - mx);
  }
  sx = std::sqrt(sx / n);
  LogisticFit fit{*std::max_element(y.begin(), y.end()), *std::min_element(y.begin(), y.end()),
                  mx, sx > 0.0 ? sx : 1.0};
  auto sse = [&](const LogisticFit& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f(x[i]);
      s += r * r;
    }
    return s;
  };
  double lambda = 1e-3;
  double current = sse(fit);
  for (int iter = 0; iter < 200; ++iter) {
    // Normal equations J^T J d = J^T r for the four parameters.
    double jtj[4][4] = {};
    double jtr[4] = {};
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double s = std::abs(fit.b4);
      const double e = std::exp(-(x[i] - fit.b3) / s);
      const double q = 1.0 / (1.0 + e);
      const double diff = fit.b1 - fit.b2;
      const double dq = q * q * e;  // d q / d((x-b3)/s)
      const double sign4 = fit.b4 >= 0.0 ? 1.0 : -1.0;
      const double j[4] = {q, 1.0 - q, -diff * dq / s,
                           -diff * dq * (x[i] - fit.b3) / (s * s) * sign4};
      const double r = y[i] - fit(x[i]);
      for (int a = 0; a < 4; ++a) {
        jtr[a] += j[a] * r;
        for (int b = 0; b < 4; ++b) {
          jtj[a][b] += j[a] * j[b];
        }
      }
    }
    double m[4][5];
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        m[a][b] = jtj[a][b] + (a == b ? lambda * (jtj[a][a] + 1e-12) : 0.0);
      }
      m[a][4] = jtr[a];
    }
    bool singular = false;
    for (int col = 0; col < 4 && !singular; ++col) {
      int piv = col;
      for (int r = col + 1; r < 4; ++r) {
        if (std::abs(m[r][col]) > std::abs(m[piv][col])) {
          piv = r;
        }
      }
      if (std::abs(m[piv][col]) < 1e-300) {
        singular = true;
        break;
      }
      std::swap(m[col], m[piv]);
      for (int r = 0; r < 4; ++r) {
        if (r != col) {
          const double f = m[r][col] / m[col][col];
          for (int c = col; c < 5; ++c) {
            m[r][c] -= f * m[col][c];
          }
        }
      }
    }
    if (singular) {
      lambda *= 10.0;
      continue;
    }
    LogisticFit trial = fit;
    trial.b1 += m[0][4] / m[0][0];
    trial.b2 += m[1][4] / m[1][1];
    trial.b3 += m[2][4] / m[2][2];
    trial.b4 += m[3][4] / m[3][3];
    if (trial.b4 == 0.0) {
      trial.b4 = 1e-12;
    }
    const double next = sse(trial);
    if (next < current) {
      const double gain = current - next;
      fit = trial;
      current = next;
      lambda = std::max(lambda * 0.3, 1e-12);
      if (gain < 1e-15 * (1.0 + current)) {
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) {
        break;
      }
    }
  }
  return fit;
}

double plcc(std::span<const double> x, std::span<const double> y, const PlccOptions& options) {
  check_lengths(x, y);
  if (!options.logistic) {
    return pearson(x, y);
  }
  // Constant input is undefined either way; check before fitting.
  pearson(x, y);
  const LogisticFit fit = fit_logistic(x, y);
  std::vector<double> mapped(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mapped[i] = fit(x[i]);
  }
  return pearson(mapped, y);
}

double srcc(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y);
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  return pearson(rx, ry);
}

MetricReport evaluate_metrics(std::span<const double> predicted, std::span<const double> mos) {
  return {srcc(predicted, mos), plcc(predicted, mos), predicted.size()};
}

double median(std::vector<double> values) {
  if (values.empty()) {
    throw ParameterError("median of an empty set");
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace glia
