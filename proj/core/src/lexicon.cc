#include "nudge/lexicon.h"

#include <sstream>

#include <fmt/core.h>

#include "nudge/csv.h"
#include "nudge/text.h"

namespace nudge {

Lexicon Lexicon::from_entries(std::vector<KeywordEntry> entries) {
  Lexicon lexicon;
  lexicon.entries_.reserve(entries.size());
  for (auto& e : entries) {
    std::string keyword = to_lower_ascii(trim(e.keyword));
    if (keyword.empty()) throw FormatError("lexicon: empty keyword");
    if (!lexicon.index_.emplace(keyword, e.topic).second) {
      throw FormatError(fmt::format("lexicon: duplicate keyword '{}'", keyword));
    }
    ++lexicon.counts_[index_of(e.topic)];
    lexicon.entries_.push_back({std::move(keyword), e.topic});
  }
  return lexicon;
}

std::optional<Topic> Lexicon::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string_view> Lexicon::keywords(Topic topic) const {
  std::vector<std::string_view> out;
  out.reserve(count(topic));
  for (const auto& e : entries_) {
    if (e.topic == topic) out.push_back(e.keyword);
  }
  return out;
}

Lexicon parse_lexicon(std::string_view csv, const std::string& source) {
  const auto table = CsvTable::parse(csv, source);
  table.require_header({"keyword", "topic"});
  std::vector<KeywordEntry> entries;
  std::unordered_map<std::string, std::size_t> first_row;
  for (std::size_t i = 0; i < table.rows().size(); ++i) {
    const auto& row = table.rows()[i];
    const std::size_t line = i + 2;
    std::string keyword = to_lower_ascii(trim(row[0]));
    if (keyword.empty()) throw FormatError(fmt::format("{}: row {}: empty keyword", source, line));
    const auto topic = parse_topic(to_lower_ascii(trim(row[1])));
    if (!topic) {
      throw FormatError(fmt::format("{}: row {}: unknown topic '{}'", source, line, row[1]));
    }
    auto [it, inserted] = first_row.emplace(keyword, line);
    if (!inserted) {
      throw FormatError(fmt::format("{}: duplicate keyword '{}' at rows {} and {}", source,
                                    keyword, it->second, line));
    }
    entries.push_back({std::move(keyword), *topic});
  }
  return Lexicon::from_entries(std::move(entries));
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  return parse_lexicon(read_file(path), path.string());
}

std::string serialize_lexicon(const Lexicon& lexicon) {
  std::ostringstream out;
  write_csv_row(out, {"keyword", "topic"});
  for (const auto& e : lexicon.entries()) {
    write_csv_row(out, {e.keyword, std::string(to_string(e.topic))});
  }
  return out.str();
}

void save_lexicon(const Lexicon& lexicon, const std::filesystem::path& path) {
  write_file(path, serialize_lexicon(lexicon));
}

std::vector<KeywordMatch> match_keywords(std::string_view text, const Lexicon& lexicon) {
  std::vector<KeywordMatch> matches;
  std::string lowered;
  for (const auto& token : word_tokens(text)) {
    lowered.assign(token.text);
    for (char& c : lowered) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    if (auto topic = lexicon.find(lowered)) {
      matches.push_back({lowered, *topic, token.offset});
    }
  }
  return matches;
}

std::optional<Topic> classify_user_topic(std::span<const std::string> posts,
                                         const Lexicon& lexicon) {
  if (posts.empty()) throw Error("classify_user_topic: no posts");
  std::array<std::size_t, 3> posts_with_topic{};
  std::array<std::size_t, 3> hits{};
  for (const auto& post : posts) {
    std::array<bool, 3> seen{};
    for (const auto& m : match_keywords(post, lexicon)) {
      ++hits[index_of(m.topic)];
      seen[index_of(m.topic)] = true;
    }
    for (std::size_t t = 0; t < 3; ++t) posts_with_topic[t] += seen[t] ? 1 : 0;
  }
  std::optional<Topic> best;
  // kAllTopics is already in tie-break priority order, so a strict
  // comparison keeps the earlier topic on a full tie.
  for (Topic t : kAllTopics) {
    const auto i = index_of(t);
    if (posts_with_topic[i] == 0) continue;
    if (!best) {
      best = t;
      continue;
    }
    const auto b = index_of(*best);
    if (posts_with_topic[i] > posts_with_topic[b] ||
        (posts_with_topic[i] == posts_with_topic[b] && hits[i] > hits[b])) {
      best = t;
    }
  }
  return best;
}

}  // namespace nudge
