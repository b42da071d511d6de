#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <functional>

#include "nudge/assignment.h"
#include "nudge/csv.h"
#include "nudge/rng.h"
#include "nudge/stats.h"

namespace nudge {
namespace {

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("u" + std::to_string(i));
  return out;
}

std::array<std::size_t, 3> sizes_of(const std::map<std::string, Arm>& m) {
  std::array<std::size_t, 3> s{};
  for (const auto& [id, arm] : m) ++s[index_of(arm)];
  return s;
}

TEST(Assignment, NineUsersEqualThirds) {
  const auto m = assign_arms(ids(9), 1);
  EXPECT_EQ(sizes_of(m), (std::array<std::size_t, 3>{3, 3, 3}));
}

TEST(Assignment, SameSeedSameMap) {
  EXPECT_EQ(assign_arms(ids(100), 42), assign_arms(ids(100), 42));
  EXPECT_NE(assign_arms(ids(100), 42), assign_arms(ids(100), 43));
}

TEST(Assignment, LargeCohortMatchesShuffleAndSliceOracle) {
  const auto all = ids(28457);
  const auto m = assign_arms(all, 2022);
  const auto s = sizes_of(m);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      EXPECT_LE(std::max(s[a], s[b]) - std::min(s[a], s[b]), 1u);
    }
  }
  // Oracle: sort ids, Fisher-Yates with the same random source, slice.
  auto sorted = all;
  std::sort(sorted.begin(), sorted.end());
  Rng rng(2022);
  for (std::size_t i = sorted.size() - 1; i > 0; --i) std::swap(sorted[i], sorted[rng.index(i + 1)]);
  const auto target = arm_sizes(sorted.size(), {});
  std::size_t pos = 0;
  for (auto arm : kAllArms) {
    for (std::size_t k = 0; k < target[index_of(arm)]; ++k) {
      ASSERT_EQ(m.at(sorted[pos++]), arm);
    }
  }
}

TEST(Assignment, InvariantToInputOrder) {
  auto a = ids(1000);
  const auto m1 = assign_arms(a, 9);
  Rng rng(1);
  for (std::size_t i = a.size() - 1; i > 0; --i) std::swap(a[i], a[rng.index(i + 1)]);
  EXPECT_EQ(assign_arms(a, 9), m1);
}

TEST(Assignment, ProportionsWithinOneOfExactSplit) {
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    ArmProportions p;
    for (auto& w : p.weights) w = 0.1 + rng.uniform();
    const auto n = 1 + rng.index(5000);
    const auto s = arm_sizes(n, p);
    const double total = p.weights[0] + p.weights[1] + p.weights[2];
    EXPECT_EQ(s[0] + s[1] + s[2], n);
    for (int a = 0; a < 3; ++a) {
      EXPECT_LT(std::abs(static_cast<double>(s[a]) - n * p.weights[a] / total), 1.0);
    }
  }
}

TEST(Assignment, RejectsBadInput) {
  EXPECT_THROW(assign_arms(std::vector<std::string>{}, 1), Error);
  EXPECT_THROW(assign_arms(std::vector<std::string>{"a", "a"}, 1), Error);
  ArmProportions p;
  p.weights = {1, 0, 1};
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Assignment, CsvRoundTrip) {
  const auto m = assign_arms(ids(30), 5);
  const auto path = std::filesystem::temp_directory_path() / "nudge_assign_rt.csv";
  write_file(path, assignment_to_csv(m));
  EXPECT_EQ(read_assignment_csv(path), m);
  std::filesystem::remove(path);
}

// ---- statistics

TEST(Stats, IncompleteBetaKnownValues) {
  // I_x(1, b) = 1 - (1 - x)^b and I_x(a, 1) = x^a.
  for (double x : {0.0, 0.1, 0.5, 0.9, 1.0}) {
    EXPECT_NEAR(regularized_incomplete_beta(1, 3.5, x), 1 - std::pow(1 - x, 3.5), 1e-13);
    EXPECT_NEAR(regularized_incomplete_beta(2.5, 1, x), std::pow(x, 2.5), 1e-13);
  }
  // Symmetry I_x(a, b) = 1 - I_{1-x}(b, a).
  EXPECT_NEAR(regularized_incomplete_beta(3, 7, 0.3),
              1 - regularized_incomplete_beta(7, 3, 0.7), 1e-14);
}

TEST(Stats, FTailClosedFormForTwoNumeratorDf) {
  // F(2, d2): P(F > f) = (1 + 2f/d2)^(-d2/2).
  for (double d2 : {3.0, 10.0, 57.0}) {
    for (double f : {0.0, 0.4, 2.0, 9.0}) {
      EXPECT_NEAR(f_upper_tail(f, 2, d2), std::pow(1 + 2 * f / d2, -d2 / 2), 1e-12);
    }
  }
}

TEST(Stats, NormalAndTQuantiles) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
  EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-15);
  EXPECT_NEAR(normal_two_sided_p(1.959963984540054), 0.05, 1e-12);
  EXPECT_NEAR(t_quantile(0.975, 10), 2.228138851986274, 1e-9);
  EXPECT_NEAR(t_two_sided_p(2.228138851986274, 10), 0.05, 1e-10);
}

// ANOVA oracle: sums of squares plus numeric integration of the F density.
double f_density(double x, double d1, double d2) {
  const double lc = std::lgamma((d1 + d2) / 2) - std::lgamma(d1 / 2) - std::lgamma(d2 / 2) +
                    (d1 / 2) * std::log(d1 / d2);
  return std::exp(lc + (d1 / 2 - 1) * std::log(x) - ((d1 + d2) / 2) * std::log1p(d1 * x / d2));
}

double integrate(const std::function<double(double)>& f, double a, double b, int depth) {
  const double m = (a + b) / 2;
  const double whole = (b - a) / 6 * (f(a) + 4 * f(m) + f(b));
  const double left = (m - a) / 6 * (f(a) + 4 * f((a + m) / 2) + f(m));
  const double right = (b - m) / 6 * (f(m) + 4 * f((m + b) / 2) + f(b));
  if (depth == 0 || std::abs(left + right - whole) < 1e-14) return left + right;
  return integrate(f, a, m, depth - 1) + integrate(f, m, b, depth - 1);
}

TEST(Anova, SmallExampleMatchesQuadratureOracle) {
  const std::vector<std::vector<double>> g = {{0, 1}, {1, 2}, {2, 3}};
  const auto r = one_way_anova(g);
  // Grand mean 1.5; group means .5, 1.5, 2.5.
  const double ssb = 2 * (1.0 + 0.0 + 1.0), ssw = 6 * 0.25;
  EXPECT_NEAR(r.ss_between, ssb, 1e-12);
  EXPECT_NEAR(r.ss_within, ssw, 1e-12);
  const double f = (ssb / 2) / (ssw / 3);
  EXPECT_NEAR(r.f_stat, f, 1e-12);
  auto tail = [&](double t) {
    if (t >= 1) return 0.0;
    const double x = f + t / (1 - t);
    return f_density(x, 2, 3) / ((1 - t) * (1 - t));
  };
  EXPECT_NEAR(r.p_value, integrate(tail, 0, 1, 40), 1e-8);
}

TEST(Anova, DegenerateCases) {
  const std::vector<std::vector<double>> same = {{1, 2, 3}, {1, 2, 3}, {1, 2, 3}};
  auto r = one_way_anova(same);
  EXPECT_EQ(r.f_stat, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
  const std::vector<std::vector<double>> equal_means = {{1, 2}, {1, 2}, {1, 2}};
  r = one_way_anova(equal_means);
  EXPECT_EQ(r.f_stat, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
  const std::vector<std::vector<double>> constant = {{4, 4}, {4, 4}, {4, 4}};
  r = one_way_anova(constant);
  EXPECT_EQ(r.f_stat, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
  const std::vector<std::vector<double>> separated = {{1, 1}, {2, 2}, {3, 3}};
  r = one_way_anova(separated);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.p_value, 0.0);
  const std::vector<std::vector<double>> tiny = {{1}, {2, 3}};
  EXPECT_THROW(one_way_anova(tiny), Error);
}

TEST(Anova, InvariantToRelabelShiftAndScale) {
  Rng rng(12);
  for (int k = 0; k < 50; ++k) {
    std::map<Arm, std::vector<double>> g;
    for (auto arm : kAllArms) {
      const auto n = 2 + rng.index(20);
      for (std::uint64_t i = 0; i < n; ++i) g[arm].push_back(rng.normal() * 3 + index_of(arm));
    }
    const auto base = anova_balance("m", g);
    EXPECT_GE(base.f_stat, 0.0);
    EXPECT_GE(base.p_value, 0.0);
    EXPECT_LE(base.p_value, 1.0);
    std::map<Arm, std::vector<double>> relabeled = {{Arm::kControl, g[Arm::kFemaleBot]},
                                                    {Arm::kMaleBot, g[Arm::kControl]},
                                                    {Arm::kFemaleBot, g[Arm::kMaleBot]}};
    const auto r1 = anova_balance("m", relabeled);
    EXPECT_NEAR(r1.f_stat, base.f_stat, 1e-9 * (1 + base.f_stat));
    EXPECT_NEAR(r1.p_value, base.p_value, 1e-12);
    const double c = rng.normal() * 100, s = 0.01 + rng.uniform() * 50;
    auto moved = g;
    for (auto& [arm, v] : moved) for (auto& x : v) x = s * x + c;
    const auto r2 = anova_balance("m", moved);
    EXPECT_NEAR(r2.f_stat, base.f_stat, 1e-7 * (1 + base.f_stat));
    EXPECT_NEAR(r2.p_value, base.p_value, 1e-9);
  }
}

TEST(Anova, BalanceTableShape) {
  std::map<Arm, std::vector<double>> g = {
      {Arm::kControl, {1, 2, 3}}, {Arm::kMaleBot, {2, 3, 4}}, {Arm::kFemaleBot, {1, 1, 2}}};
  const std::vector<BalanceReport> reports = {anova_balance("Listed (Count)", g),
                                              anova_balance("Likes (Count)", g)};
  const auto rows = parse_csv(balance_table_csv(reports));
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], (CsvRow{"treatment", "Listed (Count)", "Likes (Count)"}));
  EXPECT_EQ(rows[1][0], "control");
  EXPECT_EQ(rows[4][0], "ANOVA");
}

}  // namespace
}  // namespace nudge
