#include "nudge/causal.h"

#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "nudge/stats.h"

namespace nudge {

Standardized standardize(std::span<const double> values) {
  if (values.size() < 2) throw NumericError("standardize: need at least 2 values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  if (!(sd > 0.0) || !std::isfinite(sd)) throw NumericError("standardize: zero variance");
  Standardized out{{}, mean, sd};
  out.values.reserve(values.size());
  for (double v : values) out.values.push_back((v - mean) / sd);
  return out;
}

Eigen::VectorXd column_means(const CovariateMatrix& m) {
  return m.colwise().mean().transpose();
}

namespace {

Eigen::VectorXd column_vars(const CovariateMatrix& m) {
  Eigen::VectorXd out(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (m.rows() < 2) {
      out(j) = 0.0;
      continue;
    }
    const double mean = m.col(j).mean();
    out(j) = (m.col(j).array() - mean).square().sum() / static_cast<double>(m.rows() - 1);
  }
  return out;
}

// log sum_i exp(z_i) / n and the normalized weights.
double log_partition(const Eigen::MatrixXd& c, const Eigen::VectorXd& lambda,
                     Eigen::VectorXd& w) {
  const Eigen::VectorXd z = c * lambda;
  const double zmax = z.maxCoeff();
  w = (z.array() - zmax).exp().matrix();
  const double s = w.sum();
  w /= s;
  return zmax + std::log(s / static_cast<double>(c.rows()));
}

}  // namespace

Eigen::VectorXd pooled_sd(const CovariateMatrix& a, const CovariateMatrix& b) {
  return ((column_vars(a) + column_vars(b)) / 2.0).cwiseSqrt();
}

Eigen::VectorXd adjusted_mean_diff(const Eigen::VectorXd& weights, const CovariateMatrix& source,
                                   const Eigen::VectorXd& target, const Eigen::VectorXd& sd) {
  const double total = weights.sum();
  const Eigen::VectorXd mean = (source.transpose() * weights) / total;
  Eigen::VectorXd out(source.cols());
  for (Eigen::Index j = 0; j < source.cols(); ++j) {
    const double diff = std::abs(mean(j) - target(j));
    if (sd(j) > 0.0) {
      out(j) = diff / sd(j);
    } else {
      out(j) = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

Eigen::VectorXd entropy_balance(const CovariateMatrix& source, const Eigen::VectorXd& target,
                                const BalanceOptions& options) {
  const Eigen::Index n = source.rows();
  const Eigen::Index k = source.cols();
  if (n == 0) throw NumericError("entropy_balance: empty source group");
  if (target.size() != k) throw NumericError("entropy_balance: target size mismatch");

  // Standardize on the source scale and center on the target, so the moment
  // condition becomes sum_i w_i c_i = 0.
  const Eigen::VectorXd mean = column_means(source);
  const Eigen::VectorXd var = column_vars(source);
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double sd = std::sqrt(var(j));
    if (sd > 0.0) {
      active.push_back(j);
    } else if (std::abs(target(j) - mean(j)) > options.tol * std::max(1.0, std::abs(mean(j)))) {
      throw BalanceError(
          fmt::format("entropy_balance: covariate {} is constant in the source group but the "
                      "target differs",
                      j),
          std::abs(target(j) - mean(j)));
    }
  }
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  if (active.empty()) return w;

  const auto m = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd c(n, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const Eigen::Index j = active[static_cast<std::size_t>(a)];
    const double sd = std::sqrt(var(j));
    c.col(a) = (source.col(j).array() - target(j)) / sd;
  }

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
  double objective = log_partition(c, lambda, w);
  double violation = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter <= options.max_iter; ++iter) {
    const Eigen::VectorXd grad = c.transpose() * w;
    violation = grad.cwiseAbs().maxCoeff();
    if (violation <= options.tol) return w;
    if (iter == options.max_iter) break;

    const Eigen::MatrixXd cw = c.array().colwise() * w.array().sqrt();
    Eigen::MatrixXd hess = cw.transpose() * cw - grad * grad.transpose();
    hess.diagonal().array() += 1e-12 * std::max(1.0, hess.diagonal().maxCoeff());
    const Eigen::VectorXd step = -hess.ldlt().solve(grad);
    if (!step.allFinite()) break;

    // Halve until the dual objective decreases. Close to the optimum the
    // decrease drops below rounding, so a flat objective with a smaller
    // moment violation also counts.
    double t = 1.0;
    bool improved = false;
    Eigen::VectorXd trial_w(n);
    const double flat = 1e-13 * (1.0 + std::abs(objective));
    for (int halvings = 0; halvings < 60; ++halvings) {
      const Eigen::VectorXd trial = lambda + t * step;
      const double value = log_partition(c, trial, trial_w);
      const bool lower = value < objective;
      const bool flat_but_closer =
          value <= objective + flat &&
          (c.transpose() * trial_w).cwiseAbs().maxCoeff() < violation;
      if (std::isfinite(value) && (lower || flat_but_closer)) {
        lambda = trial;
        objective = value;
        w = trial_w;
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;
  }
  throw BalanceError(
      fmt::format("entropy_balance: no convergence (max moment violation {:.3g} sd); the target "
                  "may lie outside the convex hull of the source group",
                  violation),
      violation);
}

GCompFit g_compute_effect(std::span<const double> outcome, std::span<const int> treated,
                          std::span<const double> weights, const CovariateMatrix* covariates,
                          const GCompOptions& options) {
  const std::size_t n = outcome.size();
  if (treated.size() != n || weights.size() != n) {
    throw NumericError("g_compute_effect: input length mismatch");
  }
  if (covariates != nullptr && static_cast<std::size_t>(covariates->rows()) != n) {
    throw NumericError("g_compute_effect: covariate rows mismatch");
  }
  std::size_t n1 = 0;
  double sum0 = 0.0;
  double sum1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      throw NumericError("g_compute_effect: weights must be positive and finite");
    }
    if (treated[i] != 0) {
      ++n1;
      sum1 += weights[i];
    } else {
      sum0 += weights[i];
    }
  }
  const std::size_t n0 = n - n1;
  if (n0 == 0 || n1 == 0) throw NumericError("g_compute_effect: both groups must be non-empty");

  const Eigen::Index extra = covariates ? covariates->cols() : 0;
  const Eigen::Index p = 2 + extra;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), p);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = 1.0;
    x(r, 1) = treated[i] != 0 ? 1.0 : 0.0;
    if (covariates) x.row(r).tail(extra) = covariates->row(r);
    y(r) = outcome[i];
    w(r) = treated[i] != 0 ? weights[i] * static_cast<double>(n1) / sum1
                           : weights[i] * static_cast<double>(n0) / sum0;
  }

  const Eigen::MatrixXd xw = x.array().colwise() * w.array();
  const Eigen::MatrixXd bread = xw.transpose() * x;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(bread);
  if (lu.rank() < p) throw NumericError("g_compute_effect: singular design matrix");
  const Eigen::MatrixXd bread_inv = lu.inverse();
  const Eigen::VectorXd beta = bread_inv * (xw.transpose() * y);
  const Eigen::VectorXd resid = y - x * beta;

  const Eigen::MatrixXd score = xw.array().colwise() * resid.array();
  const Eigen::MatrixXd meat = score.transpose() * score;
  Eigen::MatrixXd vcov = bread_inv * meat * bread_inv;
  const double dof = static_cast<double>(n) - static_cast<double>(p);
  if (options.hc == HcVariant::kHC1) {
    if (dof <= 0) throw NumericError("g_compute_effect: HC1 needs n > parameters");
    vcov *= static_cast<double>(n) / dof;
  }

  GCompFit fit;
  fit.n = n;
  fit.coef = beta(1);
  fit.se = std::sqrt(std::max(vcov(1, 1), 0.0));
  const double alpha = 1.0 - options.confidence;
  double crit = normal_quantile(1.0 - alpha / 2.0);
  if (fit.se > 0.0) {
    const double stat = fit.coef / fit.se;
    if (options.p_value == PValueMethod::kStudentT && dof > 0) {
      fit.p_value = t_two_sided_p(stat, dof);
      crit = t_quantile(1.0 - alpha / 2.0, dof);
    } else {
      fit.p_value = normal_two_sided_p(stat);
    }
  } else {
    fit.p_value = fit.coef == 0.0 ? 1.0 : 0.0;
  }
  fit.ci_low = fit.coef - crit * fit.se;
  fit.ci_high = fit.coef + crit * fit.se;
  return fit;
}

}  // namespace nudge
