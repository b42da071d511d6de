#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace nudge {

struct UserProfile {
  std::string user_id;
  bool us_based = true;
  bool english = true;
  bool verified = false;
  std::string username;
  std::uint64_t followers = 0;
  std::uint64_t following = 0;
  std::uint64_t statuses = 0;
  std::uint64_t favorites = 0;
  std::uint64_t listed = 0;
  double bot_score = 0.0;  // [0, 1]
  std::uint64_t weekly_keyword_tweets = 0;
  bool reply_only = false;

  friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

// Throws FormatError unless bot_score is in [0, 1] and the id is non-empty.
void validate(const UserProfile& user);

enum class ActivityCapMode {
  kPercentile,  // nearest-rank percentile of weekly keyword tweets
  kAbsolute,    // fixed maximum count
};

struct CohortConfig {
  ActivityCapMode cap_mode = ActivityCapMode::kPercentile;
  double cap_percentile = 90.0;
  std::uint64_t absolute_cap = 10;
  std::uint64_t min_weekly_keyword_tweets = 2;
  std::uint64_t followers_min = 79;
  std::uint64_t followers_max = 16500;
  std::uint64_t following_min = 127;
  std::uint64_t following_max = 4500;
  double bot_score_cutoff = 0.6;  // excluded at or above

  // Throws ConfigError for contradictory bands or out-of-range values.
  void validate() const;

  // Activity cap at the 90th percentile ("10 times or less").
  static CohortConfig supplementary_preset();
  // Absolute activity cap of 20 tweets.
  static CohortConfig main_text_preset();
};

enum class CohortStage {
  kLocationLanguage,
  kAccountType,
  kMinActivity,
  kActivityCap,
  kFollowBands,
  kBotScore,
};

inline constexpr std::size_t kCohortStageCount = 6;
std::string_view to_string(CohortStage stage);

// Nearest-rank percentile: the value at 1-based rank ceil(p/100 * n) of the
// sorted values. p must be in (0, 100).
std::uint64_t percentile_threshold(std::span<const std::uint64_t> values, double p);

// Activity cap in effect for `candidates`: the percentile threshold over all
// candidates, or the absolute cap.
std::uint64_t resolve_activity_cap(std::span<const UserProfile> candidates,
                                   const CohortConfig& config);

bool passes_stage(CohortStage stage, const UserProfile& user, const CohortConfig& config,
                  std::uint64_t activity_cap);

// Every stage predicate the user violates, in stage order.
std::vector<CohortStage> violated_stages(const UserProfile& user, const CohortConfig& config,
                                         std::uint64_t activity_cap);

struct CohortReport {
  // "candidates" followed by the six stage names.
  std::vector<std::string> stage_names;
  // Survivors after each entry of stage_names; non-increasing.
  std::vector<std::size_t> stage_counts;
  // Survivors in input order.
  std::vector<std::string> final_ids;
  std::uint64_t activity_cap = 0;
  // Excluded user id -> first stage that removed it.
  std::map<std::string, CohortStage> exclusions;
};

CohortReport build_cohort(std::span<const UserProfile> candidates, const CohortConfig& config);

nlohmann::json to_json(const CohortReport& report);

// User table CSV. Columns are those of UserProfile, header required.
std::vector<UserProfile> parse_users_csv(std::string_view csv, const std::string& source);
std::vector<UserProfile> read_users_csv(const std::filesystem::path& path);
std::string users_to_csv(std::span<const UserProfile> users);

}  // namespace nudge
