#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "nudge/types.h"

namespace nudge {

struct NewsHandle {
  std::string name;
  std::string handle;
  std::string media_user_id;
};

// News organization accounts, keyed by platform account id.
class NewsHandleList {
 public:
  NewsHandleList() = default;
  // Throws FormatError on a duplicate or empty id.
  static NewsHandleList from_entries(std::vector<NewsHandle> entries);

  std::size_t size() const { return entries_.size(); }
  const std::vector<NewsHandle>& entries() const { return entries_; }
  bool contains(std::string_view account_id) const;

 private:
  std::vector<NewsHandle> entries_;
  std::unordered_set<std::string> ids_;
};

// CSV `name,handle,media_user_id`.
NewsHandleList parse_news_handles(std::string_view csv, const std::string& source);
NewsHandleList load_news_handles(const std::filesystem::path& path);

// Decides whether an item's text is political. Implementations must be safe
// for concurrent read-only use.
class PoliticalClassifier {
 public:
  virtual ~PoliticalClassifier() = default;
  virtual bool is_political(std::string_view text) const = 0;
};

// Reference classifier: political iff any word token, lowercased, is in the
// term list. Callers pass text that has already had URLs and emoji removed.
class KeywordPoliticalClassifier final : public PoliticalClassifier {
 public:
  explicit KeywordPoliticalClassifier(std::unordered_set<std::string> terms);
  static KeywordPoliticalClassifier load(const std::filesystem::path& path);
  bool is_political(std::string_view text) const override;

 private:
  std::unordered_set<std::string> terms_;
};

struct ActivityItem {
  std::string author_id;
  std::string text;
};

inline constexpr std::size_t kWindowLimit = 100;

struct EngagementSnapshot {
  std::string user_id;
  std::uint64_t news_follows = 0;
  // Absent when the corresponding window is empty.
  std::optional<double> news_like_pct;
  std::optional<double> news_rt_pct;
  std::optional<double> pol_like_pct;
  std::optional<double> pol_rt_pct;
  std::uint64_t window_likes = 0;
  std::uint64_t window_tweets = 0;
  std::uint64_t political_tweets = 0;  // raw count in the tweet window

  std::optional<double> value(Outcome outcome) const;
  friend bool operator==(const EngagementSnapshot&, const EngagementSnapshot&) = default;
};

// Windows longer than kWindowLimit are rejected with FormatError.
EngagementSnapshot snapshot_engagement(std::string_view user_id,
                                       std::span<const ActivityItem> last_likes,
                                       std::span<const ActivityItem> last_tweets,
                                       std::span<const std::string> followed,
                                       const NewsHandleList& handles,
                                       const PoliticalClassifier& classifier);

enum class FollowCap { k200, k500, kNone };
inline constexpr std::array<FollowCap, 3> kAllFollowCaps = {FollowCap::k200, FollowCap::k500,
                                                            FollowCap::kNone};
std::string_view to_string(FollowCap cap);
std::optional<FollowCap> parse_follow_cap(std::string_view text);
inline constexpr std::size_t index_of(FollowCap c) { return static_cast<std::size_t>(c); }

struct FollowExclusionPolicy {
  double min_relative_change = -0.20;  // open
  double max_relative_change = 0.50;   // open
  FollowCap cap = FollowCap::k200;     // absolute increase must be strictly below
  std::optional<std::uint64_t> cap_value() const;
};

struct FollowDecision {
  bool kept = false;
  bool divide_by_zero = false;
};

FollowDecision evaluate_follow_change(std::uint64_t pre_total, std::uint64_t post_total,
                                      const FollowExclusionPolicy& policy);

struct DeltaRecord {
  std::string user_id;
  Arm arm = Arm::kControl;
  bool treated = false;
  std::array<std::optional<double>, kOutcomeCount> delta{};
  std::uint64_t pre_following_total = 0;
  std::uint64_t post_following_total = 0;
  std::uint64_t pre_political_tweets = 0;
  std::optional<Topic> topic;
  // Following-outcome inclusion under each cap, baseline band always applied.
  std::array<bool, 3> follow_included{true, true, true};
  bool follow_divide_by_zero = false;

  friend bool operator==(const DeltaRecord&, const DeltaRecord&) = default;
};

// Field-wise post - pre. Throws Error when the user ids differ.
DeltaRecord compute_delta(const EngagementSnapshot& pre, const EngagementSnapshot& post);

// Fills follow_included / follow_divide_by_zero from the follow totals.
void mark_follow_exclusions(DeltaRecord& record, const FollowExclusionPolicy& band);

// Records kept for the Following outcome under `policy`. Like and tweet
// outcomes are never filtered by this.
std::vector<DeltaRecord> apply_follow_exclusions(std::span<const DeltaRecord> records,
                                                 const FollowExclusionPolicy& policy);

std::string snapshots_to_csv(std::span<const EngagementSnapshot> snapshots);
std::vector<EngagementSnapshot> parse_snapshots_csv(std::string_view csv,
                                                    const std::string& source);

std::string deltas_to_csv(std::span<const DeltaRecord> records);
std::vector<DeltaRecord> parse_deltas_csv(std::string_view csv, const std::string& source);

}  // namespace nudge
