#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nudge/causal.h"
#include "nudge/metrics.h"
#include "nudge/types.h"

namespace nudge {

enum class Estimand { kITT, kTreated };
enum class Pair { kFemale, kMale, kCombined };  // treatment side vs control

inline constexpr std::array<Estimand, 2> kAllEstimands = {Estimand::kITT, Estimand::kTreated};
inline constexpr std::array<Pair, 3> kAllPairs = {Pair::kFemale, Pair::kMale, Pair::kCombined};

std::string_view to_string(Estimand estimand);
std::string_view to_string(Pair pair);
std::optional<Estimand> parse_estimand(std::string_view text);
std::optional<Pair> parse_pair(std::string_view text);
bool in_pair(Pair pair, Arm arm);  // treatment side only

inline constexpr std::size_t kCovariateCount = 4;
inline constexpr std::array<std::string_view, kCovariateCount> kCovariateNames = {
    "favorites", "statuses", "followers", "following"};

struct AnalysisRecord {
  DeltaRecord delta;
  std::array<double, kCovariateCount> covariates{};
};

enum class SubgroupSplit { kPoliticalEngagement, kTopic };
std::string_view to_string(SubgroupSplit split);
std::optional<SubgroupSplit> parse_split(std::string_view text);

struct EstimationConfig {
  std::vector<Estimand> estimands{Estimand::kITT, Estimand::kTreated};
  std::vector<SubgroupSplit> splits{SubgroupSplit::kPoliticalEngagement, SubgroupSplit::kTopic};
  GCompOptions gcomp;
  BalanceOptions balance;
  bool outcome_covariates = false;
  std::size_t min_group_size = 10;
  std::uint64_t political_threshold = 5;  // high engagement: strictly more
  FollowCap primary_cap = FollowCap::k200;
  void validate() const;
};

inline constexpr std::string_view kAllUsers = "all";

struct EffectEstimate {
  std::string subgroup{kAllUsers};
  Pair pair = Pair::kFemale;
  Estimand estimand = Estimand::kITT;
  Outcome outcome = Outcome::kNewsFollows;
  FollowCap follow_cap = FollowCap::k200;  // meaningful for news follows only
  bool available = false;
  std::string note;
  GCompFit fit;
  double outcome_sd = 0.0;  // raw-scale sd used to standardize the deltas
  std::size_t n_treatment = 0;
  std::size_t n_control = 0;
};

struct BalanceRow {
  std::string subgroup{kAllUsers};
  Pair pair = Pair::kFemale;
  Estimand estimand = Estimand::kITT;
  std::string covariate;
  bool available = false;
  double before = 0.0;  // uniform-weight adjusted mean difference
  double after = 0.0;   // with the estimand's weights
};

struct EstimationResult {
  std::vector<EffectEstimate> effects;
  std::vector<BalanceRow> balance;
};

// One cell: the pair's treatment side (treated users only for the Treated
// estimand, reweighted to the control means) against all control users,
// outcome deltas standardized within the sample.
EffectEstimate estimate_effect(std::span<const AnalysisRecord> records, Pair pair,
                               Estimand estimand, Outcome outcome, FollowCap follow_cap,
                               const EstimationConfig& config);

std::vector<BalanceRow> balance_diagnostics(std::span<const AnalysisRecord> records, Pair pair,
                                            Estimand estimand, const EstimationConfig& config);

// Partition labels for a split; nullopt when the record has no label.
std::optional<std::string> subgroup_label(const AnalysisRecord& record, SubgroupSplit split,
                                          const EstimationConfig& config);
std::vector<std::string> subgroup_labels(SubgroupSplit split);

// Re-runs every (pair, estimand, outcome) cell inside each partition of the
// split. Empty or small partitions come back flagged unavailable.
std::vector<EffectEstimate> subgroup_estimates(std::span<const AnalysisRecord> records,
                                               SubgroupSplit split,
                                               const EstimationConfig& config);

// Full analysis: all users with every follow cap, then the configured splits.
EstimationResult run_estimation(std::span<const AnalysisRecord> records,
                                const EstimationConfig& config);

std::string estimates_to_csv(std::span<const EffectEstimate> effects);
std::vector<EffectEstimate> parse_estimates_csv(std::string_view csv, const std::string& source);
std::string balance_rows_to_csv(std::span<const BalanceRow> rows);
std::vector<BalanceRow> parse_balance_rows_csv(std::string_view csv, const std::string& source);
nlohmann::json to_json(const EffectEstimate& e);

}  // namespace nudge
