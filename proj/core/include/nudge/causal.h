#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nudge/types.h"

namespace nudge {

struct Standardized {
  std::vector<double> values;
  double mean = 0.0;
  double sd = 0.0;  // sample sd (n - 1)
};

// Throws NumericError on fewer than 2 values or zero variance.
Standardized standardize(std::span<const double> values);

// Rows are users, columns covariates.
using CovariateMatrix = Eigen::MatrixXd;

struct BalanceOptions {
  double tol = 1e-8;  // max moment violation, in source-sd units
  int max_iter = 200;
};

class BalanceError : public NumericError {
 public:
  BalanceError(const std::string& what, double max_violation)
      : NumericError(what), max_violation_(max_violation) {}
  double max_violation() const { return max_violation_; }

 private:
  double max_violation_;
};

// Entropy balancing: weights (summing to 1) closest in KL to uniform such that
// the weighted column means of `source` equal `target`. Solved through the
// dual with damped Newton steps.
Eigen::VectorXd entropy_balance(const CovariateMatrix& source, const Eigen::VectorXd& target,
                                const BalanceOptions& options = {});

// Column means of a matrix.
Eigen::VectorXd column_means(const CovariateMatrix& m);

// sqrt((var_a + var_b) / 2) per column, sample variances.
Eigen::VectorXd pooled_sd(const CovariateMatrix& a, const CovariateMatrix& b);

// |weighted mean of source - target| / sd, per column. Weights need not sum
// to 1. Columns with sd == 0 report 0 when the means agree, inf otherwise.
Eigen::VectorXd adjusted_mean_diff(const Eigen::VectorXd& weights, const CovariateMatrix& source,
                                   const Eigen::VectorXd& target, const Eigen::VectorXd& sd);

enum class HcVariant { kHC0, kHC1 };
enum class PValueMethod { kNormal, kStudentT };

struct GCompOptions {
  HcVariant hc = HcVariant::kHC0;
  PValueMethod p_value = PValueMethod::kNormal;
  double confidence = 0.95;
};

struct GCompFit {
  double coef = 0.0;
  double se = 0.0;
  double p_value = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
};

// Weighted least squares of outcome on [1, treated, covariates...]; the ATE
// is the treated coefficient. Weights are rescaled to sum to the group size
// within each group. Robust (sandwich) standard error. Throws NumericError
// on a singular design or when a group is empty.
GCompFit g_compute_effect(std::span<const double> outcome, std::span<const int> treated,
                          std::span<const double> weights,
                          const CovariateMatrix* covariates = nullptr,
                          const GCompOptions& options = {});

}  // namespace nudge
