#pragma once

#include <span>
#include <vector>

namespace nudge {

// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
// Continued fraction (modified Lentz) with the symmetry swap; absolute error
// well below 1e-12 over the ranges used for F and t tails.
double regularized_incomplete_beta(double a, double b, double x);

// P(F > f) for F ~ F(d1, d2).
double f_upper_tail(double f, double d1, double d2);

// Two-sided p-value of a standard normal statistic.
double normal_two_sided_p(double z);

// Two-sided p-value of a Student t statistic with `df` degrees of freedom.
double t_two_sided_p(double t, double df);

// Standard normal quantile (Acklam's rational approximation refined by one
// Halley step); used for confidence intervals.
double normal_quantile(double p);

// Student t quantile by bisection on the tail.
double t_quantile(double p, double df);

struct AnovaResult {
  double f_stat = 0.0;
  double p_value = 1.0;
  double ss_between = 0.0;
  double ss_within = 0.0;
  double df_between = 0.0;
  double df_within = 0.0;
  // Zero within-group variance with unequal means: F is infinite, p = 0.
  bool degenerate = false;
};

// One-way ANOVA across k >= 2 groups, each with >= 2 observations.
AnovaResult one_way_anova(std::span<const std::vector<double>> groups);

}  // namespace nudge
