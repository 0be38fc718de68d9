#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "glia/errors.hpp"
#include "glia/metrics.hpp"

using namespace glia;

namespace {

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

// Rank by counting: rank = 1 + #smaller + (#equal - 1) / 2.
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

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST(Plcc, AffineAndNegation) {
  const std::vector<double> x = {0.1, 0.7, 0.3, 2.0, -1.0};
  std::vector<double> y, z;
  for (double v : x) {
    y.push_back(2 * v + 1);
    z.push_back(-v);
  }
  EXPECT_NEAR(plcc(x, y), 1.0, 1e-12);
  EXPECT_NEAR(plcc(x, z), -1.0, 1e-12);
}

TEST(Plcc, MatchesCovarianceOracle) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto x = random_vector(20, rng), y = random_vector(20, rng);
    EXPECT_NEAR(plcc(x, y), static_cast<double>(pearson_oracle(x, y)), 1e-10);
  }
}

TEST(Plcc, ConstantInputIsUndefined) {
  EXPECT_THROW(plcc(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
               UndefinedCorrelationError);
  EXPECT_THROW(plcc(std::vector<double>{1}, std::vector<double>{2}), UndefinedCorrelationError);
  EXPECT_THROW(plcc(std::vector<double>{1, 2}, std::vector<double>{2}), DimensionError);
}

TEST(Srcc, MonotoneMap) {
  EXPECT_NEAR(srcc(std::vector<double>{1, 2, 3}, std::vector<double>{10, 20, 30}), 1.0, 1e-15);
}

TEST(Srcc, PermutationExample) {
  EXPECT_NEAR(srcc(std::vector<double>{1, 2, 3}, std::vector<double>{3, 1, 2}), -0.5, 1e-15);
}

TEST(Srcc, TiesUseAverageRanks) {
  const std::vector<double> x = {1, 1, 2}, y = {3, 1, 2};
  EXPECT_EQ(fractional_ranks(x), (std::vector<double>{1.5, 1.5, 3}));
  // Average over every tie-break order of the x ranks equals using 1.5.
  const std::vector<std::vector<double>> orders = {{1, 2, 3}, {2, 1, 3}};
  std::vector<double> avg(3, 0.0);
  for (const auto& o : orders)
    for (int i = 0; i < 3; ++i) avg[i] += o[i] / orders.size();
  EXPECT_NEAR(srcc(x, y), static_cast<double>(pearson_oracle(avg, rank_oracle(y))), 1e-15);
  EXPECT_THROW(srcc(std::vector<double>{4, 4, 4}, y), UndefinedCorrelationError);
}

TEST(Srcc, MatchesRankOracle) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> small(0, 5);
  for (int t = 0; t < 200; ++t) {
    auto x = random_vector(15, rng), y = random_vector(15, rng);
    if (t % 2) {
      for (auto& v : x) v = small(rng);  // heavy ties
    }
    EXPECT_NEAR(srcc(x, y),
                static_cast<double>(pearson_oracle(rank_oracle(x), rank_oracle(y))), 1e-10);
  }
}

TEST(Srcc, SquaredRankDifferenceFormula) {
  std::vector<double> base = {1, 2, 3, 4, 5, 6};
  for (std::size_t n = 2; n <= 6; ++n) {
    std::vector<double> x(base.begin(), base.begin() + n), y = x;
    do {
      double d2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
      const double expect = 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
      EXPECT_NEAR(srcc(x, y), expect, 1e-12);
    } while (std::next_permutation(y.begin(), y.end()));
  }
}

TEST(Metrics, TransformInvariances) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto x = random_vector(25, rng), y = random_vector(25, rng);
    const double s = srcc(x, y), p = plcc(x, y);
    std::vector<double> ex, cube, aff;
    for (double v : x) {
      ex.push_back(std::exp(v));
      cube.push_back(v * v * v);
      aff.push_back(3.5 * v - 2.0);
    }
    EXPECT_NEAR(srcc(ex, y), s, 1e-12);
    EXPECT_NEAR(srcc(cube, y), s, 1e-12);
    EXPECT_NEAR(srcc(y, aff), s, 1e-12);
    EXPECT_NEAR(plcc(aff, y), p, 1e-12);
    EXPECT_NEAR(plcc(y, x), p, 1e-12);
    EXPECT_NEAR(srcc(y, x), s, 1e-12);
  }
}

TEST(Metrics, ReportBundlesBoth) {
  const std::vector<double> p = {0.1, 0.4, 0.2, 0.9}, m = {1, 3, 2, 4};
  const auto r = evaluate_metrics(p, m);
  EXPECT_EQ(r.n, 4u);
  EXPECT_EQ(r.srcc, srcc(p, m));
  EXPECT_EQ(r.plcc, plcc(p, m));
}

TEST(Logistic, RecoversKnownCurve) {
  const LogisticFit truth{4.0, 1.0, 0.5, 0.2};
  std::vector<double> x, y;
  for (int i = 0; i <= 40; ++i) {
    x.push_back(-0.5 + 0.05 * i);
    y.push_back(truth(x.back()));
  }
  const auto fit = fit_logistic(x, y);
  for (double v : x) EXPECT_NEAR(fit(v), truth(v), 1e-6);
  EXPECT_NEAR(plcc(x, y, {.logistic = true}), 1.0, 1e-9);
  EXPECT_LT(plcc(x, y), 1.0 - 1e-4);
}

TEST(Median, OddEvenAndSingle) {
  EXPECT_EQ(median({0.2, 0.9, 0.5}), 0.5);
  EXPECT_EQ(median({0.7}), 0.7);
  EXPECT_EQ(median({1, 4, 2, 3}), 2.5);
  EXPECT_THROW(median({}), ParameterError);
}
