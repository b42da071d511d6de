#include "nudge/metrics.h"

#include <sstream>

#include <fmt/core.h>

#include "nudge/csv.h"
#include "nudge/text.h"

namespace nudge {

NewsHandleList NewsHandleList::from_entries(std::vector<NewsHandle> entries) {
  NewsHandleList list;
  for (auto& entry : entries) {
    entry.media_user_id = std::string(trim(entry.media_user_id));
    if (entry.media_user_id.empty()) {
      throw FormatError(fmt::format("news handle '{}' has an empty media_user_id", entry.handle));
    }
    if (!list.ids_.insert(entry.media_user_id).second) {
      throw FormatError(fmt::format("duplicate media_user_id '{}'", entry.media_user_id));
    }
  }
  list.entries_ = std::move(entries);
  return list;
}

bool NewsHandleList::contains(std::string_view account_id) const {
  return ids_.contains(std::string(account_id));
}

NewsHandleList parse_news_handles(std::string_view csv, const std::string& source) {
  const auto table = CsvTable::parse(csv, source);
  table.require_header({"name", "handle", "media_user_id"});
  std::vector<NewsHandle> entries;
  entries.reserve(table.rows().size());
  for (const auto& row : table.rows()) {
    entries.push_back({std::string(trim(row[0])), std::string(trim(row[1])), row[2]});
  }
  try {
    return NewsHandleList::from_entries(std::move(entries));
  } catch (const FormatError& e) {
    throw FormatError(source + ": " + e.what());
  }
}

NewsHandleList load_news_handles(const std::filesystem::path& path) {
  return parse_news_handles(read_file(path), path.string());
}

KeywordPoliticalClassifier::KeywordPoliticalClassifier(std::unordered_set<std::string> terms)
    : terms_(std::move(terms)) {}

KeywordPoliticalClassifier KeywordPoliticalClassifier::load(const std::filesystem::path& path) {
  std::unordered_set<std::string> terms;
  for (const auto& line : read_lines(path)) terms.insert(to_lower_ascii(line));
  if (terms.empty()) throw FormatError(path.string() + ": no political terms");
  return KeywordPoliticalClassifier(std::move(terms));
}

bool KeywordPoliticalClassifier::is_political(std::string_view text) const {
  std::string word;
  for (const auto& token : word_tokens(text)) {
    word.assign(token.text);
    for (auto& c : word) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    if (terms_.contains(word)) return true;
  }
  return false;
}

std::optional<double> EngagementSnapshot::value(Outcome outcome) const {
  switch (outcome) {
    case Outcome::kNewsFollows:
      return static_cast<double>(news_follows);
    case Outcome::kNewsRetweets:
      return news_rt_pct;
    case Outcome::kNewsLikes:
      return news_like_pct;
    case Outcome::kPoliticalRetweets:
      return pol_rt_pct;
    case Outcome::kPoliticalLikes:
      return pol_like_pct;
  }
  return std::nullopt;
}

namespace {

struct WindowShares {
  std::optional<double> news_pct;
  std::optional<double> pol_pct;
  std::uint64_t political = 0;
};

WindowShares window_shares(std::span<const ActivityItem> items, const NewsHandleList& handles,
                           const PoliticalClassifier& classifier) {
  WindowShares out;
  if (items.empty()) return out;
  std::uint64_t news = 0;
  for (const auto& item : items) {
    if (handles.contains(item.author_id)) ++news;
    if (classifier.is_political(strip_urls_and_emoji(item.text))) ++out.political;
  }
  const double n = static_cast<double>(items.size());
  out.news_pct = 100.0 * static_cast<double>(news) / n;
  out.pol_pct = 100.0 * static_cast<double>(out.political) / n;
  return out;
}

}  // namespace

EngagementSnapshot snapshot_engagement(std::string_view user_id,
                                       std::span<const ActivityItem> last_likes,
                                       std::span<const ActivityItem> last_tweets,
                                       std::span<const std::string> followed,
                                       const NewsHandleList& handles,
                                       const PoliticalClassifier& classifier) {
  if (last_likes.size() > kWindowLimit || last_tweets.size() > kWindowLimit) {
    throw FormatError(fmt::format("user {}: activity window longer than {} items", user_id,
                                  kWindowLimit));
  }
  EngagementSnapshot snap;
  snap.user_id = std::string(user_id);
  std::unordered_set<std::string_view> seen;
  for (const auto& account : followed) {
    if (seen.insert(account).second && handles.contains(account)) ++snap.news_follows;
  }
  const auto likes = window_shares(last_likes, handles, classifier);
  const auto tweets = window_shares(last_tweets, handles, classifier);
  snap.window_likes = last_likes.size();
  snap.window_tweets = last_tweets.size();
  snap.news_like_pct = likes.news_pct;
  snap.pol_like_pct = likes.pol_pct;
  snap.news_rt_pct = tweets.news_pct;
  snap.pol_rt_pct = tweets.pol_pct;
  snap.political_tweets = tweets.political;
  return snap;
}

std::string_view to_string(FollowCap cap) {
  switch (cap) {
    case FollowCap::k200:
      return "200";
    case FollowCap::k500:
      return "500";
    case FollowCap::kNone:
      return "none";
  }
  return "none";
}

std::optional<FollowCap> parse_follow_cap(std::string_view text) {
  for (auto cap : kAllFollowCaps) {
    if (text == to_string(cap)) return cap;
  }
  return std::nullopt;
}

std::optional<std::uint64_t> FollowExclusionPolicy::cap_value() const {
  switch (cap) {
    case FollowCap::k200:
      return 200;
    case FollowCap::k500:
      return 500;
    case FollowCap::kNone:
      return std::nullopt;
  }
  return std::nullopt;
}

FollowDecision evaluate_follow_change(std::uint64_t pre_total, std::uint64_t post_total,
                                      const FollowExclusionPolicy& policy) {
  FollowDecision d;
  if (pre_total == 0) {
    d.divide_by_zero = post_total != 0;
    d.kept = post_total == 0;
    return d;
  }
  const double pre = static_cast<double>(pre_total);
  const double post = static_cast<double>(post_total);
  const double rel = (post - pre) / pre;
  d.kept = rel > policy.min_relative_change && rel < policy.max_relative_change;
  if (const auto cap = policy.cap_value(); cap && post_total > pre_total) {
    d.kept = d.kept && (post_total - pre_total) < *cap;
  }
  return d;
}

DeltaRecord compute_delta(const EngagementSnapshot& pre, const EngagementSnapshot& post) {
  if (pre.user_id != post.user_id) {
    throw Error(fmt::format("compute_delta: user mismatch ('{}' vs '{}')", pre.user_id,
                            post.user_id));
  }
  DeltaRecord rec;
  rec.user_id = pre.user_id;
  rec.pre_political_tweets = pre.political_tweets;
  for (auto outcome : kAllOutcomes) {
    const auto a = pre.value(outcome);
    const auto b = post.value(outcome);
    if (a && b) rec.delta[index_of(outcome)] = *b - *a;
  }
  return rec;
}

void mark_follow_exclusions(DeltaRecord& record, const FollowExclusionPolicy& band) {
  for (auto cap : kAllFollowCaps) {
    FollowExclusionPolicy policy = band;
    policy.cap = cap;
    const auto d = evaluate_follow_change(record.pre_following_total, record.post_following_total,
                                          policy);
    record.follow_included[index_of(cap)] = d.kept;
    record.follow_divide_by_zero = d.divide_by_zero;
  }
}

std::vector<DeltaRecord> apply_follow_exclusions(std::span<const DeltaRecord> records,
                                                 const FollowExclusionPolicy& policy) {
  std::vector<DeltaRecord> kept;
  for (const auto& rec : records) {
    if (evaluate_follow_change(rec.pre_following_total, rec.post_following_total, policy).kept) {
      kept.push_back(rec);
    }
  }
  return kept;
}

namespace {

std::string format_optional(const std::optional<double>& v) {
  return v ? fmt::format("{}", *v) : std::string();
}

std::optional<double> parse_optional(std::string_view cell, std::string_view where) {
  if (trim(cell).empty()) return std::nullopt;
  return parse_double(cell, where);
}

}  // namespace

std::string snapshots_to_csv(std::span<const EngagementSnapshot> snapshots) {
  std::ostringstream out;
  write_csv_row(out, {"user_id", "news_follows", "news_rt_pct", "news_like_pct", "pol_rt_pct",
                      "pol_like_pct", "window_likes", "window_tweets", "political_tweets"});
  for (const auto& s : snapshots) {
    write_csv_row(out, {s.user_id, std::to_string(s.news_follows), format_optional(s.news_rt_pct),
                        format_optional(s.news_like_pct), format_optional(s.pol_rt_pct),
                        format_optional(s.pol_like_pct), std::to_string(s.window_likes),
                        std::to_string(s.window_tweets), std::to_string(s.political_tweets)});
  }
  return out.str();
}

std::vector<EngagementSnapshot> parse_snapshots_csv(std::string_view csv,
                                                    const std::string& source) {
  const auto table = CsvTable::parse(csv, source);
  table.require_header({"user_id", "news_follows", "news_rt_pct", "news_like_pct", "pol_rt_pct",
                        "pol_like_pct", "window_likes", "window_tweets", "political_tweets"});
  std::vector<EngagementSnapshot> out;
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto& row = table.rows()[r];
    const auto where = fmt::format("{}:{}", source, r + 2);
    EngagementSnapshot s;
    s.user_id = row[0];
    s.news_follows = parse_count(row[1], where);
    s.news_rt_pct = parse_optional(row[2], where);
    s.news_like_pct = parse_optional(row[3], where);
    s.pol_rt_pct = parse_optional(row[4], where);
    s.pol_like_pct = parse_optional(row[5], where);
    s.window_likes = parse_count(row[6], where);
    s.window_tweets = parse_count(row[7], where);
    s.political_tweets = parse_count(row[8], where);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

std::vector<std::string> delta_header() {
  std::vector<std::string> h{"user_id", "arm", "treated"};
  for (auto o : kAllOutcomes) h.push_back(fmt::format("d_{}", to_string(o)));
  h.insert(h.end(), {"pre_following_total", "post_following_total", "pre_political_tweets",
                     "topic", "follow_kept_200", "follow_kept_500", "follow_kept_none",
                     "follow_div_zero"});
  return h;
}

}  // namespace

std::string deltas_to_csv(std::span<const DeltaRecord> records) {
  std::ostringstream out;
  write_csv_row(out, delta_header());
  for (const auto& r : records) {
    std::vector<std::string> row{r.user_id, std::string(to_string(r.arm)), r.treated ? "1" : "0"};
    for (const auto& d : r.delta) row.push_back(format_optional(d));
    row.push_back(std::to_string(r.pre_following_total));
    row.push_back(std::to_string(r.post_following_total));
    row.push_back(std::to_string(r.pre_political_tweets));
    row.push_back(r.topic ? std::string(to_string(*r.topic)) : std::string());
    for (bool b : r.follow_included) row.push_back(b ? "1" : "0");
    row.push_back(r.follow_divide_by_zero ? "1" : "0");
    write_csv_row(out, row);
  }
  return out.str();
}

std::vector<DeltaRecord> parse_deltas_csv(std::string_view csv, const std::string& source) {
  const auto table = CsvTable::parse(csv, source);
  const auto header = delta_header();
  table.require_header(std::vector<std::string_view>(header.begin(), header.end()));
  auto flag = [](std::string_view cell, const std::string& where) {
    if (cell == "1") return true;
    if (cell == "0") return false;
    throw FormatError(fmt::format("{}: expected 0/1, got '{}'", where, cell));
  };
  std::vector<DeltaRecord> out;
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto& row = table.rows()[r];
    const auto where = fmt::format("{}:{}", source, r + 2);
    DeltaRecord rec;
    rec.user_id = row[0];
    const auto arm = parse_arm(row[1]);
    if (!arm) throw FormatError(fmt::format("{}: unknown arm '{}'", where, row[1]));
    rec.arm = *arm;
    rec.treated = flag(row[2], where);
    std::size_t c = 3;
    for (auto& d : rec.delta) d = parse_optional(row[c++], where);
    rec.pre_following_total = parse_count(row[c++], where);
    rec.post_following_total = parse_count(row[c++], where);
    rec.pre_political_tweets = parse_count(row[c++], where);
    if (!row[c].empty()) {
      rec.topic = parse_topic(row[c]);
      if (!rec.topic) throw FormatError(fmt::format("{}: unknown topic '{}'", where, row[c]));
    }
    ++c;
    for (auto& b : rec.follow_included) b = flag(row[c++], where);
    rec.follow_divide_by_zero = flag(row[c], where);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace nudge
