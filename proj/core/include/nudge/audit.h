#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace nudge {

enum class Annotation { kSatisfactory, kUnsatisfactory };

// Responses x annotators. Rectangular with k >= 3 columns.
class AnnotationMatrix {
 public:
  static AnnotationMatrix from_rows(std::vector<std::vector<Annotation>> rows);
  // CSV with header `response_id,<annotator>...`; cells "satisfactory" /
  // "unsatisfactory" (or 1 / 0).
  static AnnotationMatrix load(const std::filesystem::path& path);

  std::size_t rows() const { return cells_.size(); }
  std::size_t annotators() const { return k_; }
  const std::vector<std::vector<Annotation>>& cells() const { return cells_; }

 private:
  std::vector<std::vector<Annotation>> cells_;
  std::size_t k_ = 0;
};

struct AuditResult {
  std::size_t satisfactory = 0;
  std::size_t unsatisfactory = 0;
  double rate = 0.0;  // satisfactory / rows
};

// A row is satisfactory when at least ceil((k + 1) / 2) annotators said so
// (3 of 5, 2 of 3).
AuditResult audit_majority_vote(const AnnotationMatrix& matrix);

enum class BotGender { kMale, kFemale };
enum class Sentiment { kPositive, kNegative, kNeutral };

std::string_view to_string(BotGender gender);
std::string_view to_string(Sentiment sentiment);

struct SentimentTable {
  // [gender][sentiment] counts, indexed by the enum values.
  std::array<std::array<std::size_t, 3>, 2> counts{};
  std::array<std::size_t, 2> totals{};

  // count / gender total * 100, rounded half away from zero to 2 decimals;
  // 0 for an empty gender.
  double percent(BotGender gender, Sentiment sentiment) const;
  bool empty() const { return totals[0] == 0 && totals[1] == 0; }
};

SentimentTable aggregate_sentiment(std::span<const std::pair<BotGender, Sentiment>> labels);

// CSV `bot_gender,sentiment`.
std::vector<std::pair<BotGender, Sentiment>> load_sentiment_labels(
    const std::filesystem::path& path);

// Rows: Positive/Negative/Neutral/Totals; columns male/female with
// "count (pct%)" cells.
std::string sentiment_table_csv(const SentimentTable& table);

// Classifies reply text into a sentiment. Implementations must be safe for
// concurrent read-only use.
class SentimentScorer {
 public:
  virtual ~SentimentScorer() = default;
  virtual Sentiment score(std::string_view text) const = 0;
};

// Reference scorer: positive minus negative valence-word hits.
class WordlistSentimentScorer final : public SentimentScorer {
 public:
  WordlistSentimentScorer();  // built-in word lists
  WordlistSentimentScorer(std::unordered_set<std::string> positive,
                          std::unordered_set<std::string> negative);
  Sentiment score(std::string_view text) const override;

 private:
  std::unordered_set<std::string> positive_;
  std::unordered_set<std::string> negative_;
};

}  // namespace nudge
