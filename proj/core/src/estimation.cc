#include "nudge/estimation.h"

#include <cmath>
#include <sstream>

#include <fmt/core.h>

#include "nudge/csv.h"

namespace nudge {

std::string_view to_string(Estimand estimand) {
  return estimand == Estimand::kITT ? "itt" : "treated";
}

std::string_view to_string(Pair pair) {
  switch (pair) {
    case Pair::kFemale:
      return "female";
    case Pair::kMale:
      return "male";
    case Pair::kCombined:
      return "combined";
  }
  return "unknown";
}

std::optional<Estimand> parse_estimand(std::string_view text) {
  for (auto e : kAllEstimands) {
    if (text == to_string(e)) return e;
  }
  return std::nullopt;
}

std::optional<Pair> parse_pair(std::string_view text) {
  for (auto p : kAllPairs) {
    if (text == to_string(p)) return p;
  }
  return std::nullopt;
}

bool in_pair(Pair pair, Arm arm) {
  switch (pair) {
    case Pair::kFemale:
      return arm == Arm::kFemaleBot;
    case Pair::kMale:
      return arm == Arm::kMaleBot;
    case Pair::kCombined:
      return is_treatment(arm);
  }
  return false;
}

std::string_view to_string(SubgroupSplit split) {
  return split == SubgroupSplit::kPoliticalEngagement ? "political_engagement" : "topic";
}

std::optional<SubgroupSplit> parse_split(std::string_view text) {
  if (text == "political_engagement") return SubgroupSplit::kPoliticalEngagement;
  if (text == "topic") return SubgroupSplit::kTopic;
  return std::nullopt;
}

void EstimationConfig::validate() const {
  if (estimands.empty()) throw ConfigError("estimate: no estimands selected");
  if (min_group_size < 2) throw ConfigError("estimate: min_group_size must be >= 2");
  if (!(gcomp.confidence > 0.0 && gcomp.confidence < 1.0)) {
    throw ConfigError("estimate: confidence must be in (0, 1)");
  }
  if (!(balance.tol > 0.0) || balance.max_iter <= 0) {
    throw ConfigError("estimate: balance tolerance and max_iter must be positive");
  }
}

namespace {

struct Sample {
  std::vector<const AnalysisRecord*> treatment;
  std::vector<const AnalysisRecord*> control;
};

Sample select(std::span<const AnalysisRecord> records, Pair pair, Estimand estimand,
              const std::function<bool(const AnalysisRecord&)>& keep) {
  Sample s;
  for (const auto& r : records) {
    if (!keep(r)) continue;
    if (r.delta.arm == Arm::kControl) {
      s.control.push_back(&r);
    } else if (in_pair(pair, r.delta.arm) &&
               (estimand == Estimand::kITT || r.delta.treated)) {
      s.treatment.push_back(&r);
    }
  }
  return s;
}

CovariateMatrix covariates_of(const std::vector<const AnalysisRecord*>& rows) {
  CovariateMatrix m(static_cast<Eigen::Index>(rows.size()), kCovariateCount);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < kCovariateCount; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i]->covariates[j];
    }
  }
  return m;
}

// Treatment-side weights summing to 1.
Eigen::VectorXd treatment_weights(const CovariateMatrix& treat, const CovariateMatrix& control,
                                  Estimand estimand, const BalanceOptions& options) {
  if (estimand == Estimand::kITT) {
    return Eigen::VectorXd::Constant(treat.rows(), 1.0 / static_cast<double>(treat.rows()));
  }
  return entropy_balance(treat, column_means(control), options);
}

}  // namespace

EffectEstimate estimate_effect(std::span<const AnalysisRecord> records, Pair pair,
                               Estimand estimand, Outcome outcome, FollowCap follow_cap,
                               const EstimationConfig& config) {
  EffectEstimate est;
  est.pair = pair;
  est.estimand = estimand;
  est.outcome = outcome;
  est.follow_cap = follow_cap;
  const auto o = index_of(outcome);
  const auto sample = select(records, pair, estimand, [&](const AnalysisRecord& r) {
    if (!r.delta.delta[o]) return false;
    return outcome != Outcome::kNewsFollows || r.delta.follow_included[index_of(follow_cap)];
  });
  est.n_treatment = sample.treatment.size();
  est.n_control = sample.control.size();
  if (est.n_treatment < config.min_group_size || est.n_control < config.min_group_size) {
    est.note = "group below minimum size";
    return est;
  }

  std::vector<double> y;
  std::vector<int> ind;
  y.reserve(est.n_treatment + est.n_control);
  for (const auto* r : sample.treatment) {
    y.push_back(*r->delta.delta[o]);
    ind.push_back(1);
  }
  for (const auto* r : sample.control) {
    y.push_back(*r->delta.delta[o]);
    ind.push_back(0);
  }
  Standardized z;
  try {
    z = standardize(y);
  } catch (const NumericError&) {
    est.note = "outcome has zero variance";
    return est;
  }
  est.outcome_sd = z.sd;

  const auto treat_x = covariates_of(sample.treatment);
  const auto control_x = covariates_of(sample.control);
  Eigen::VectorXd wt;
  try {
    wt = treatment_weights(treat_x, control_x, estimand, config.balance);
  } catch (const BalanceError& e) {
    est.note = fmt::format("balancing failed: {}", e.what());
    return est;
  }
  std::vector<double> w(y.size(), 1.0);
  for (Eigen::Index i = 0; i < wt.size(); ++i) w[static_cast<std::size_t>(i)] = wt(i);

  CovariateMatrix x;
  const CovariateMatrix* x_ptr = nullptr;
  if (config.outcome_covariates) {
    x.resize(static_cast<Eigen::Index>(y.size()), kCovariateCount);
    x << treat_x, control_x;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double mean = x.col(j).mean();
      const double sd = std::sqrt((x.col(j).array() - mean).square().sum() /
                                  static_cast<double>(x.rows() - 1));
      x.col(j) = (x.col(j).array() - mean) / (sd > 0.0 ? sd : 1.0);
    }
    x_ptr = &x;
  }
  try {
    est.fit = g_compute_effect(z.values, ind, w, x_ptr, config.gcomp);
    est.available = true;
  } catch (const NumericError& e) {
    est.note = e.what();
  }
  return est;
}

std::vector<BalanceRow> balance_diagnostics(std::span<const AnalysisRecord> records, Pair pair,
                                            Estimand estimand, const EstimationConfig& config) {
  const auto sample = select(records, pair, estimand, [](const AnalysisRecord&) { return true; });
  std::vector<BalanceRow> rows;
  for (auto name : kCovariateNames) {
    BalanceRow row;
    row.pair = pair;
    row.estimand = estimand;
    row.covariate = std::string(name);
    rows.push_back(row);
  }
  if (sample.treatment.size() < config.min_group_size ||
      sample.control.size() < config.min_group_size) {
    return rows;
  }
  const auto treat_x = covariates_of(sample.treatment);
  const auto control_x = covariates_of(sample.control);
  const auto target = column_means(control_x);
  const auto sd = pooled_sd(treat_x, control_x);
  const Eigen::VectorXd uniform = Eigen::VectorXd::Ones(treat_x.rows());
  const auto before = adjusted_mean_diff(uniform, treat_x, target, sd);
  Eigen::VectorXd after;
  try {
    after = adjusted_mean_diff(treatment_weights(treat_x, control_x, estimand, config.balance),
                               treat_x, target, sd);
  } catch (const BalanceError&) {
    return rows;
  }
  for (std::size_t j = 0; j < kCovariateCount; ++j) {
    rows[j].available = true;
    rows[j].before = before(static_cast<Eigen::Index>(j));
    rows[j].after = after(static_cast<Eigen::Index>(j));
  }
  return rows;
}

std::optional<std::string> subgroup_label(const AnalysisRecord& record, SubgroupSplit split,
                                          const EstimationConfig& config) {
  if (split == SubgroupSplit::kPoliticalEngagement) {
    return record.delta.pre_political_tweets > config.political_threshold ? "political_high"
                                                                          : "political_low";
  }
  if (!record.delta.topic) return std::nullopt;
  return fmt::format("topic_{}", to_string(*record.delta.topic));
}

std::vector<std::string> subgroup_labels(SubgroupSplit split) {
  if (split == SubgroupSplit::kPoliticalEngagement) return {"political_high", "political_low"};
  std::vector<std::string> out;
  for (auto t : kAllTopics) out.push_back(fmt::format("topic_{}", to_string(t)));
  return out;
}

namespace {

void append_cells(std::span<const AnalysisRecord> records, const std::string& subgroup,
                  bool all_caps, const EstimationConfig& config, EstimationResult& out) {
  for (auto pair : kAllPairs) {
    for (auto estimand : config.estimands) {
      for (auto outcome : kAllOutcomes) {
        if (outcome == Outcome::kNewsFollows && all_caps) {
          for (auto cap : kAllFollowCaps) {
            auto e = estimate_effect(records, pair, estimand, outcome, cap, config);
            e.subgroup = subgroup;
            out.effects.push_back(std::move(e));
          }
        } else {
          auto e = estimate_effect(records, pair, estimand, outcome, config.primary_cap, config);
          e.subgroup = subgroup;
          out.effects.push_back(std::move(e));
        }
      }
      for (auto& row : balance_diagnostics(records, pair, estimand, config)) {
        row.subgroup = subgroup;
        out.balance.push_back(std::move(row));
      }
    }
  }
}

}  // namespace

std::vector<EffectEstimate> subgroup_estimates(std::span<const AnalysisRecord> records,
                                               SubgroupSplit split,
                                               const EstimationConfig& config) {
  config.validate();
  EstimationResult out;
  for (const auto& label : subgroup_labels(split)) {
    std::vector<AnalysisRecord> part;
    for (const auto& r : records) {
      if (subgroup_label(r, split, config) == label) part.push_back(r);
    }
    append_cells(part, label, false, config, out);
  }
  return out.effects;
}

EstimationResult run_estimation(std::span<const AnalysisRecord> records,
                                const EstimationConfig& config) {
  config.validate();
  EstimationResult out;
  append_cells(records, std::string(kAllUsers), true, config, out);
  for (auto split : config.splits) {
    for (const auto& label : subgroup_labels(split)) {
      std::vector<AnalysisRecord> part;
      for (const auto& r : records) {
        if (subgroup_label(r, split, config) == label) part.push_back(r);
      }
      append_cells(part, label, false, config, out);
    }
  }
  return out;
}

namespace {

const std::vector<std::string_view> kEstimateHeader = {
    "subgroup", "pair",   "estimand", "outcome", "follow_cap", "available", "coef",
    "se",       "p_value", "ci_low",  "ci_high", "n",          "n_treatment", "n_control",
    "outcome_sd", "note"};

const std::vector<std::string_view> kBalanceHeader = {"subgroup", "pair",      "estimand",
                                                      "covariate", "available", "before",
                                                      "after"};

std::string num(double v) { return fmt::format("{}", v); }

}  // namespace

std::string estimates_to_csv(std::span<const EffectEstimate> effects) {
  std::ostringstream out;
  write_csv_row(out, std::vector<std::string>(kEstimateHeader.begin(), kEstimateHeader.end()));
  for (const auto& e : effects) {
    write_csv_row(out, {e.subgroup, std::string(to_string(e.pair)),
                        std::string(to_string(e.estimand)), std::string(to_string(e.outcome)),
                        std::string(to_string(e.follow_cap)), e.available ? "1" : "0",
                        num(e.fit.coef), num(e.fit.se), num(e.fit.p_value), num(e.fit.ci_low),
                        num(e.fit.ci_high), std::to_string(e.fit.n),
                        std::to_string(e.n_treatment), std::to_string(e.n_control),
                        num(e.outcome_sd), e.note});
  }
  return out.str();
}

std::vector<EffectEstimate> parse_estimates_csv(std::string_view csv, const std::string& source) {
  const auto table = CsvTable::parse(csv, source);
  table.require_header(kEstimateHeader);
  std::vector<EffectEstimate> out;
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto& row = table.rows()[r];
    const auto where = fmt::format("{}:{}", source, r + 2);
    EffectEstimate e;
    e.subgroup = row[0];
    const auto pair = parse_pair(row[1]);
    const auto estimand = parse_estimand(row[2]);
    const auto outcome = parse_outcome(row[3]);
    const auto cap = parse_follow_cap(row[4]);
    if (!pair || !estimand || !outcome || !cap) {
      throw FormatError(fmt::format("{}: unknown pair/estimand/outcome/cap", where));
    }
    e.pair = *pair;
    e.estimand = *estimand;
    e.outcome = *outcome;
    e.follow_cap = *cap;
    e.available = row[5] == "1";
    e.fit.coef = parse_double(row[6], where);
    e.fit.se = parse_double(row[7], where);
    e.fit.p_value = parse_double(row[8], where);
    e.fit.ci_low = parse_double(row[9], where);
    e.fit.ci_high = parse_double(row[10], where);
    e.fit.n = parse_count(row[11], where);
    e.n_treatment = parse_count(row[12], where);
    e.n_control = parse_count(row[13], where);
    e.outcome_sd = parse_double(row[14], where);
    e.note = row[15];
    out.push_back(std::move(e));
  }
  return out;
}

std::string balance_rows_to_csv(std::span<const BalanceRow> rows) {
  std::ostringstream out;
  write_csv_row(out, std::vector<std::string>(kBalanceHeader.begin(), kBalanceHeader.end()));
  for (const auto& b : rows) {
    write_csv_row(out, {b.subgroup, std::string(to_string(b.pair)),
                        std::string(to_string(b.estimand)), b.covariate, b.available ? "1" : "0",
                        num(b.before), num(b.after)});
  }
  return out.str();
}

std::vector<BalanceRow> parse_balance_rows_csv(std::string_view csv, const std::string& source) {
  const auto table = CsvTable::parse(csv, source);
  table.require_header(kBalanceHeader);
  std::vector<BalanceRow> out;
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto& row = table.rows()[r];
    const auto where = fmt::format("{}:{}", source, r + 2);
    BalanceRow b;
    b.subgroup = row[0];
    const auto pair = parse_pair(row[1]);
    const auto estimand = parse_estimand(row[2]);
    if (!pair || !estimand) throw FormatError(fmt::format("{}: unknown pair/estimand", where));
    b.pair = *pair;
    b.estimand = *estimand;
    b.covariate = row[3];
    b.available = row[4] == "1";
    b.before = parse_double(row[5], where);
    b.after = parse_double(row[6], where);
    out.push_back(std::move(b));
  }
  return out;
}

nlohmann::json to_json(const EffectEstimate& e) {
  nlohmann::json j{{"subgroup", e.subgroup},
                   {"pair", to_string(e.pair)},
                   {"estimand", to_string(e.estimand)},
                   {"outcome", to_string(e.outcome)},
                   {"available", e.available},
                   {"n_treatment", e.n_treatment},
                   {"n_control", e.n_control}};
  if (e.outcome == Outcome::kNewsFollows) j["follow_cap"] = to_string(e.follow_cap);
  if (e.available) {
    j["coef"] = e.fit.coef;
    j["se"] = e.fit.se;
    j["p_value"] = e.fit.p_value;
    j["ci"] = {e.fit.ci_low, e.fit.ci_high};
    j["n"] = e.fit.n;
    j["outcome_sd"] = e.outcome_sd;
  } else {
    j["note"] = e.note;
  }
  return j;
}

}  // namespace nudge
