#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "nudge/causal.h"
#include "nudge/rng.h"
#include "nudge/stats.h"

namespace nudge {
namespace {

TEST(Standardize, Examples) {
  const std::vector<double> v = {1, 2, 3};
  const auto s = standardize(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.sd, 1.0);
  EXPECT_EQ(s.values, (std::vector<double>{-1, 0, 1}));
  const auto again = standardize(s.values);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(again.values[i], s.values[i], 1e-12);
  EXPECT_THROW(standardize(std::vector<double>{4, 4, 4}), NumericError);
  EXPECT_THROW(standardize(std::vector<double>{1}), NumericError);
}

TEST(Standardize, MatchesTwoPassOracle) {
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> v(2 + rng.index(300));
    for (auto& x : v) x = rng.normal() * 40 + 1e3;
    double m = 0;
    for (double x : v) m += x;
    m /= v.size();
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / (v.size() - 1));
    const auto s = standardize(v);
    EXPECT_NEAR(s.mean, m, 1e-9);
    EXPECT_NEAR(s.sd, sd, 1e-9);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(s.values[i], (v[i] - m) / sd, 1e-9);
  }
}

CovariateMatrix random_matrix(std::size_t n, std::size_t k, Rng& rng, double shift = 0) {
  CovariateMatrix m(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) m(i, j) = rng.normal() * (1 + j) + shift * (j + 1);
  }
  return m;
}

TEST(EntropyBalance, TargetAtSourceMeansGivesUniformWeights) {
  Rng rng(2);
  const auto src = random_matrix(200, 4, rng);
  const auto w = entropy_balance(src, column_means(src));
  ASSERT_EQ(w.size(), 200);
  for (int i = 0; i < w.size(); ++i) EXPECT_NEAR(w(i), 1.0 / 200, 1e-12);
}

std::vector<double> bisection_oracle(const std::vector<double>& c, double target) {
  auto weights = [&](double lambda) {
    std::vector<double> w(c.size());
    double s = 0;
    for (std::size_t i = 0; i < c.size(); ++i) s += w[i] = std::exp(lambda * c[i]);
    for (auto& x : w) x /= s;
    return w;
  };
  auto mean = [&](double lambda) {
    const auto w = weights(lambda);
    return std::inner_product(w.begin(), w.end(), c.begin(), 0.0);
  };
  double lo = -50, hi = 50;
  for (int i = 0; i < 200; ++i) {
    const double mid = (lo + hi) / 2;
    (mean(mid) < target ? lo : hi) = mid;
  }
  return weights((lo + hi) / 2);
}

TEST(EntropyBalance, OneCovariateMatchesBisection) {
  CovariateMatrix src(3, 1);
  src << 1, 2, 3;
  Eigen::VectorXd target(1);
  target << 2.5;
  const auto w = entropy_balance(src, target, {1e-12, 200});
  EXPECT_NEAR(w.sum(), 1.0, 1e-14);
  EXPECT_NEAR(w.dot(src.col(0)), 2.5, 1e-10);
  const auto oracle = bisection_oracle({1, 2, 3}, 2.5);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(w(i), oracle[i], 1e-10);
}

TEST(EntropyBalance, ConvergedWeightsMeetTolerance) {
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const auto src = random_matrix(300, 3, rng);
    const auto ref = random_matrix(300, 3, rng, 0.2);
    const auto target = column_means(ref);
    const BalanceOptions opts{1e-9, 200};
    const auto w = entropy_balance(src, target, opts);
    EXPECT_NEAR(w.sum(), 1.0, 1e-12);
    EXPECT_TRUE((w.array() > 0).all());
    const auto sd = pooled_sd(src, ref);
    const auto amd = adjusted_mean_diff(w, src, target, sd);
    EXPECT_LE(amd.maxCoeff(), 1e-8);
  }
}

TEST(EntropyBalance, InvariantToAffineCovariateMaps) {
  Rng rng(4);
  const auto src = random_matrix(150, 2, rng);
  Eigen::VectorXd target(2);
  target << 0.3, -0.4;
  const auto w = entropy_balance(src, target);
  CovariateMatrix moved = src;
  Eigen::VectorXd moved_target = target;
  const double a[] = {3.0, -0.5}, b[] = {100.0, 7.0};
  for (int j = 0; j < 2; ++j) {
    moved.col(j) = (src.col(j).array() * a[j] + b[j]).matrix();
    moved_target(j) = target(j) * a[j] + b[j];
  }
  const auto w2 = entropy_balance(moved, moved_target);
  EXPECT_LT((w - w2).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(EntropyBalance, InfeasibleTargetReportsViolation) {
  CovariateMatrix src(3, 1);
  src << 1, 2, 3;
  Eigen::VectorXd target(1);
  target << 5;
  try {
    entropy_balance(src, target);
    FAIL() << "expected BalanceError";
  } catch (const BalanceError& e) {
    EXPECT_GT(e.max_violation(), 0.5);
  }
  target << 2.9;
  EXPECT_THROW(entropy_balance(src, target, {1e-12, 1}), BalanceError);
}

TEST(AdjustedMeanDiff, UniformWeightsGiveRawStandardizedDifference) {
  Rng rng(5);
  const auto a = random_matrix(100, 3, rng, 1.0);
  const auto b = random_matrix(80, 3, rng);
  const auto target = column_means(b);
  const auto sd = pooled_sd(a, b);
  const auto amd = adjusted_mean_diff(Eigen::VectorXd::Ones(100), a, target, sd);
  for (int j = 0; j < 3; ++j) {
    double ma = 0, mb = 0;
    for (int i = 0; i < 100; ++i) ma += a(i, j);
    for (int i = 0; i < 80; ++i) mb += b(i, j);
    ma /= 100;
    mb /= 80;
    double va = 0, vb = 0;
    for (int i = 0; i < 100; ++i) va += (a(i, j) - ma) * (a(i, j) - ma);
    for (int i = 0; i < 80; ++i) vb += (b(i, j) - mb) * (b(i, j) - mb);
    const double s = std::sqrt((va / 99 + vb / 79) / 2);
    EXPECT_NEAR(sd(j), s, 1e-12);
    EXPECT_NEAR(amd(j), std::abs(ma - mb) / s, 1e-12);
  }
  Eigen::VectorXd zero_sd = Eigen::VectorXd::Zero(3);
  const auto degenerate = adjusted_mean_diff(Eigen::VectorXd::Ones(100), a, target, zero_sd);
  EXPECT_TRUE(std::isinf(degenerate(0)));
}

TEST(GComp, TinyInstanceMatchesClosedFormSandwich) {
  const std::vector<double> y = {0, 1, 1, 2};
  const std::vector<int> t = {0, 0, 1, 1};
  const std::vector<double> w = {1, 1, 1, 1};
  const auto fit = g_compute_effect(y, t, w);
  EXPECT_NEAR(fit.coef, 1.0, 1e-12);
  EXPECT_NEAR(fit.se, 0.5, 1e-12);
  EXPECT_EQ(fit.n, 4u);
  EXPECT_NEAR(fit.p_value, normal_two_sided_p(2.0), 1e-12);
  EXPECT_NEAR(fit.ci_low, 1 - normal_quantile(0.975) * 0.5, 1e-12);
  EXPECT_NEAR(fit.ci_high, 1 + normal_quantile(0.975) * 0.5, 1e-12);
  const auto hc1 = g_compute_effect(y, t, w, nullptr, {HcVariant::kHC1, PValueMethod::kStudentT});
  EXPECT_NEAR(hc1.se, 0.5 * std::sqrt(4.0 / 2.0), 1e-12);
  EXPECT_NEAR(hc1.p_value, t_two_sided_p(1.0 / hc1.se, 2), 1e-12);
}

// Weighted difference in means with the per-group HC0 variance.
TEST(GComp, NoCovariatesMatchesWeightedDifferenceOracle) {
  Rng rng(6);
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = 10 + rng.index(200);
    std::vector<double> y(n), w(n);
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = i % 3 == 0;
      y[i] = rng.normal() + 0.4 * t[i];
      w[i] = 0.1 + rng.uniform();
    }
    double m[2] = {0, 0}, sw[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      m[t[i]] += w[i] * y[i];
      sw[t[i]] += w[i];
    }
    m[0] /= sw[0];
    m[1] /= sw[1];
    double var = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = y[i] - m[t[i]];
      var += w[i] * w[i] * e * e / (sw[t[i]] * sw[t[i]]);
    }
    const auto fit = g_compute_effect(y, t, w);
    EXPECT_NEAR(fit.coef, m[1] - m[0], 1e-10);
    EXPECT_NEAR(fit.se, std::sqrt(var), 1e-10);
  }
}

TEST(GComp, IdenticalArmsGiveZero) {
  const std::vector<double> y = {0.5, -1, 2, 0.5, -1, 2};
  const std::vector<int> t = {0, 0, 0, 1, 1, 1};
  const std::vector<double> w(6, 1.0);
  EXPECT_NEAR(g_compute_effect(y, t, w).coef, 0.0, 1e-12);
}

TEST(GComp, InvariantToWeightScalingAndAffineOutcome) {
  Rng rng(7);
  const std::size_t n = 300;
  std::vector<double> y(n), w(n);
  std::vector<int> t(n);
  CovariateMatrix x(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = rng.uniform() < 0.4;
    x(i, 0) = rng.normal();
    x(i, 1) = rng.uniform();
    y[i] = 0.3 * t[i] + x(i, 0) - x(i, 1) + rng.normal();
    w[i] = 0.2 + rng.uniform();
  }
  const auto base = g_compute_effect(y, t, w, &x);
  auto w2 = w;
  for (auto& v : w2) v *= 2;
  const auto doubled = g_compute_effect(y, t, w2, &x);
  EXPECT_NEAR(doubled.coef, base.coef, 1e-12);
  EXPECT_NEAR(doubled.se, base.se, 1e-12);
  auto y2 = y;
  for (auto& v : y2) v = -3 * v + 11;
  const auto moved = g_compute_effect(y2, t, w, &x);
  EXPECT_NEAR(moved.coef, -3 * base.coef, 1e-10);
  EXPECT_NEAR(moved.se, 3 * base.se, 1e-10);
  EXPECT_NEAR(moved.p_value, base.p_value, 1e-10);
}

TEST(GComp, SingularDesignAndEmptyGroupThrow) {
  const std::vector<double> y = {1, 2, 3, 4};
  const std::vector<int> t = {0, 0, 1, 1};
  const std::vector<double> w(4, 1.0);
  CovariateMatrix collinear(4, 1);
  collinear << 0, 0, 1, 1;  // duplicates the arm indicator
  EXPECT_THROW(g_compute_effect(y, t, w, &collinear), NumericError);
  const std::vector<int> all_treated = {1, 1, 1, 1};
  EXPECT_THROW(g_compute_effect(y, all_treated, w), NumericError);
  const std::vector<double> short_w = {1, 1};
  EXPECT_THROW(g_compute_effect(y, t, short_w), Error);
}

}  // namespace
}  // namespace nudge
