#include "nudge/cohort.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/core.h>

#include "nudge/csv.h"
#include "nudge/text.h"
#include "nudge/types.h"

namespace nudge {

void validate(const UserProfile& user) {
  if (user.user_id.empty()) throw FormatError("user profile with empty user_id");
  if (!(user.bot_score >= 0.0 && user.bot_score <= 1.0)) {
    throw FormatError(fmt::format("user {}: bot_score {} outside [0, 1]", user.user_id,
                                  user.bot_score));
  }
}

void CohortConfig::validate() const {
  if (followers_min > followers_max) {
    throw ConfigError(fmt::format("cohort: followers band [{}, {}] is empty", followers_min,
                                  followers_max));
  }
  if (following_min > following_max) {
    throw ConfigError(fmt::format("cohort: following band [{}, {}] is empty", following_min,
                                  following_max));
  }
  if (cap_mode == ActivityCapMode::kPercentile &&
      !(cap_percentile > 0.0 && cap_percentile < 100.0)) {
    throw ConfigError("cohort: cap percentile must be in (0, 100)");
  }
  if (cap_mode == ActivityCapMode::kAbsolute && absolute_cap < min_weekly_keyword_tweets) {
    throw ConfigError("cohort: activity cap below the minimum activity");
  }
  if (!(bot_score_cutoff > 0.0 && bot_score_cutoff <= 1.0)) {
    throw ConfigError("cohort: bot score cutoff must be in (0, 1]");
  }
}

CohortConfig CohortConfig::supplementary_preset() { return CohortConfig{}; }

CohortConfig CohortConfig::main_text_preset() {
  CohortConfig c;
  c.cap_mode = ActivityCapMode::kAbsolute;
  c.absolute_cap = 20;
  return c;
}

std::string_view to_string(CohortStage stage) {
  switch (stage) {
    case CohortStage::kLocationLanguage:
      return "location_language";
    case CohortStage::kAccountType:
      return "account_type";
    case CohortStage::kMinActivity:
      return "min_activity";
    case CohortStage::kActivityCap:
      return "activity_cap";
    case CohortStage::kFollowBands:
      return "follow_bands";
    case CohortStage::kBotScore:
      return "bot_score";
  }
  return "unknown";
}

std::uint64_t percentile_threshold(std::span<const std::uint64_t> values, double p) {
  if (values.empty()) throw Error("percentile_threshold: empty input");
  if (!(p > 0.0 && p < 100.0)) throw Error("percentile_threshold: p must be in (0, 100)");
  std::vector<std::uint64_t> sorted(values.begin(), values.end());
  const auto n = sorted.size();
  // p * n first: exact for integral p, so 90th of 10 values is rank 9.
  const double exact = p * static_cast<double>(n) / 100.0;
  auto rank = static_cast<std::size_t>(std::ceil(exact));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   sorted.end());
  return sorted[rank - 1];
}

std::uint64_t resolve_activity_cap(std::span<const UserProfile> candidates,
                                   const CohortConfig& config) {
  if (config.cap_mode == ActivityCapMode::kAbsolute) return config.absolute_cap;
  std::vector<std::uint64_t> counts;
  counts.reserve(candidates.size());
  for (const auto& u : candidates) counts.push_back(u.weekly_keyword_tweets);
  return percentile_threshold(counts, config.cap_percentile);
}

namespace {

bool contains_bot(std::string_view username) {
  return to_lower_ascii(username).find("bot") != std::string::npos;
}

}  // namespace

bool passes_stage(CohortStage stage, const UserProfile& u, const CohortConfig& c,
                  std::uint64_t activity_cap) {
  switch (stage) {
    case CohortStage::kLocationLanguage:
      return u.us_based && u.english;
    case CohortStage::kAccountType:
      return !u.verified && !contains_bot(u.username) && !u.reply_only;
    case CohortStage::kMinActivity:
      return u.weekly_keyword_tweets >= c.min_weekly_keyword_tweets;
    case CohortStage::kActivityCap:
      return u.weekly_keyword_tweets <= activity_cap;
    case CohortStage::kFollowBands:
      return u.followers >= c.followers_min && u.followers <= c.followers_max &&
             u.following >= c.following_min && u.following <= c.following_max;
    case CohortStage::kBotScore:
      return u.bot_score < c.bot_score_cutoff;
  }
  return false;
}

std::vector<CohortStage> violated_stages(const UserProfile& user, const CohortConfig& config,
                                         std::uint64_t activity_cap) {
  std::vector<CohortStage> out;
  for (std::size_t s = 0; s < kCohortStageCount; ++s) {
    const auto stage = static_cast<CohortStage>(s);
    if (!passes_stage(stage, user, config, activity_cap)) out.push_back(stage);
  }
  return out;
}

CohortReport build_cohort(std::span<const UserProfile> candidates, const CohortConfig& config) {
  if (candidates.empty()) throw Error("build_cohort: no candidates");
  config.validate();
  for (const auto& u : candidates) validate(u);

  CohortReport report;
  report.activity_cap = resolve_activity_cap(candidates, config);
  report.stage_names.emplace_back("candidates");
  report.stage_counts.push_back(candidates.size());

  std::vector<const UserProfile*> survivors;
  survivors.reserve(candidates.size());
  for (const auto& u : candidates) survivors.push_back(&u);

  for (std::size_t s = 0; s < kCohortStageCount; ++s) {
    const auto stage = static_cast<CohortStage>(s);
    std::vector<const UserProfile*> next;
    next.reserve(survivors.size());
    for (const auto* u : survivors) {
      if (passes_stage(stage, *u, config, report.activity_cap)) {
        next.push_back(u);
      } else {
        report.exclusions.emplace(u->user_id, stage);
      }
    }
    survivors = std::move(next);
    report.stage_names.emplace_back(to_string(stage));
    report.stage_counts.push_back(survivors.size());
  }
  for (const auto* u : survivors) report.final_ids.push_back(u->user_id);
  return report;
}

nlohmann::json to_json(const CohortReport& report) {
  nlohmann::json stages = nlohmann::json::array();
  for (std::size_t i = 0; i < report.stage_names.size(); ++i) {
    stages.push_back({{"stage", report.stage_names[i]}, {"survivors", report.stage_counts[i]}});
  }
  nlohmann::json exclusions = nlohmann::json::object();
  for (const auto& [id, stage] : report.exclusions) exclusions[id] = to_string(stage);
  return {{"activity_cap", report.activity_cap},
          {"stages", stages},
          {"final_count", report.final_ids.size()},
          {"final_ids", report.final_ids},
          {"exclusions", exclusions}};
}

namespace {

constexpr std::string_view kUserColumns[] = {
    "user_id",   "us_based", "english", "verified",  "username",
    "followers", "following", "statuses", "favorites", "listed",
    "bot_score", "weekly_keyword_tweets", "reply_only"};

bool parse_flag(std::string_view text, std::string_view where) {
  const auto t = to_lower_ascii(trim(text));
  if (t == "1" || t == "true") return true;
  if (t == "0" || t == "false") return false;
  throw FormatError(fmt::format("{}: not a flag: '{}'", where, text));
}

}  // namespace

std::vector<UserProfile> parse_users_csv(std::string_view csv, const std::string& source) {
  const auto table = CsvTable::parse(csv, source);
  std::array<std::size_t, std::size(kUserColumns)> col{};
  for (std::size_t i = 0; i < col.size(); ++i) col[i] = table.column(kUserColumns[i]);

  std::vector<UserProfile> users;
  users.reserve(table.rows().size());
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto& row = table.rows()[r];
    const std::string where = fmt::format("{}: row {}", source, r + 2);
    UserProfile u;
    u.user_id = std::string(trim(row[col[0]]));
    u.us_based = parse_flag(row[col[1]], where);
    u.english = parse_flag(row[col[2]], where);
    u.verified = parse_flag(row[col[3]], where);
    u.username = row[col[4]];
    u.followers = parse_count(row[col[5]], where);
    u.following = parse_count(row[col[6]], where);
    u.statuses = parse_count(row[col[7]], where);
    u.favorites = parse_count(row[col[8]], where);
    u.listed = parse_count(row[col[9]], where);
    u.bot_score = parse_double(row[col[10]], where);
    u.weekly_keyword_tweets = parse_count(row[col[11]], where);
    u.reply_only = parse_flag(row[col[12]], where);
    validate(u);
    users.push_back(std::move(u));
  }
  return users;
}

std::vector<UserProfile> read_users_csv(const std::filesystem::path& path) {
  return parse_users_csv(read_file(path), path.string());
}

std::string users_to_csv(std::span<const UserProfile> users) {
  std::ostringstream out;
  write_csv_row(out, std::vector<std::string>(std::begin(kUserColumns), std::end(kUserColumns)));
  for (const auto& u : users) {
    write_csv_row(out, {u.user_id, u.us_based ? "1" : "0", u.english ? "1" : "0",
                        u.verified ? "1" : "0", u.username, std::to_string(u.followers),
                        std::to_string(u.following), std::to_string(u.statuses),
                        std::to_string(u.favorites), std::to_string(u.listed),
                        fmt::format("{}", u.bot_score),
                        std::to_string(u.weekly_keyword_tweets), u.reply_only ? "1" : "0"});
  }
  return out.str();
}

}  // namespace nudge
