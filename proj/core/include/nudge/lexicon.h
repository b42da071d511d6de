#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nudge/types.h"

namespace nudge {

struct KeywordEntry {
  std::string keyword;  // lowercase, trimmed, non-empty
  Topic topic;

  friend bool operator==(const KeywordEntry&, const KeywordEntry&) = default;
};

// Topic keyword lists. Immutable after construction and safe to share
// between threads.
class Lexicon {
 public:
  Lexicon() = default;

  // Normalizes (trim + ASCII lowercase) and validates the entries. Throws
  // FormatError on empty or duplicate keywords.
  static Lexicon from_entries(std::vector<KeywordEntry> entries);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t count(Topic topic) const { return counts_[index_of(topic)]; }
  const std::vector<KeywordEntry>& entries() const { return entries_; }

  // `token` must already be lowercase.
  std::optional<Topic> find(std::string_view token) const;

  std::vector<std::string_view> keywords(Topic topic) const;

 private:
  std::vector<KeywordEntry> entries_;
  std::unordered_map<std::string, Topic> index_;
  std::array<std::size_t, 3> counts_{};
};

// CSV `keyword,topic` with a header. Duplicate keywords are rejected with
// both row numbers, unknown topics with the offending row.
Lexicon parse_lexicon(std::string_view csv, const std::string& source = "<lexicon>");
Lexicon load_lexicon(const std::filesystem::path& path);

std::string serialize_lexicon(const Lexicon& lexicon);
void save_lexicon(const Lexicon& lexicon, const std::filesystem::path& path);

struct KeywordMatch {
  std::string keyword;
  Topic topic;
  std::size_t offset;  // byte offset of the occurrence in the text

  friend bool operator==(const KeywordMatch&, const KeywordMatch&) = default;
};

// Every whole-token, case-insensitive occurrence of a lexicon keyword, in
// text order. Tokens are maximal runs of word characters (see text.h).
std::vector<KeywordMatch> match_keywords(std::string_view text, const Lexicon& lexicon);

// Majority topic over a user's posts: the topic with the most posts that
// contain at least one of its keywords; ties go to more total keyword hits,
// then to the fixed order sports > entertainment > lifestyle. Returns
// nullopt ("unclassified") when no post matches. Throws on empty input.
std::optional<Topic> classify_user_topic(std::span<const std::string> posts,
                                         const Lexicon& lexicon);

}  // namespace nudge
