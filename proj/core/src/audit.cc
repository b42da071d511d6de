#include "nudge/audit.h"

#include <cmath>
#include <sstream>

#include <fmt/core.h>

#include "nudge/csv.h"
#include "nudge/text.h"
#include "nudge/types.h"

namespace nudge {

AnnotationMatrix AnnotationMatrix::from_rows(std::vector<std::vector<Annotation>> rows) {
  AnnotationMatrix m;
  if (rows.empty()) throw FormatError("annotation matrix has no rows");
  m.k_ = rows.front().size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.k_) {
      throw FormatError(fmt::format("annotation matrix is ragged: row {} has {} cells, expected {}",
                                    i + 1, rows[i].size(), m.k_));
    }
  }
  if (m.k_ < 3) throw FormatError("annotation matrix needs at least 3 annotators");
  m.cells_ = std::move(rows);
  return m;
}

AnnotationMatrix AnnotationMatrix::load(const std::filesystem::path& path) {
  const auto rows = parse_csv(read_file(path));
  if (rows.size() < 2) throw FormatError(path.string() + ": no annotation rows");
  std::vector<std::vector<Annotation>> cells;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::vector<Annotation> row;
    for (std::size_t c = 1; c < rows[r].size(); ++c) {
      const auto v = to_lower_ascii(trim(rows[r][c]));
      if (v == "satisfactory" || v == "1") {
        row.push_back(Annotation::kSatisfactory);
      } else if (v == "unsatisfactory" || v == "0") {
        row.push_back(Annotation::kUnsatisfactory);
      } else {
        throw FormatError(fmt::format("{}: row {}: bad annotation '{}'", path.string(), r + 1,
                                      rows[r][c]));
      }
    }
    cells.push_back(std::move(row));
  }
  return from_rows(std::move(cells));
}

AuditResult audit_majority_vote(const AnnotationMatrix& matrix) {
  const std::size_t k = matrix.annotators();
  if (k < 3) throw FormatError("majority vote needs at least 3 annotators");
  const std::size_t needed = (k + 2) / 2;  // ceil((k + 1) / 2)
  AuditResult result;
  for (const auto& row : matrix.cells()) {
    std::size_t yes = 0;
    for (auto a : row) yes += a == Annotation::kSatisfactory ? 1 : 0;
    if (yes >= needed) {
      ++result.satisfactory;
    } else {
      ++result.unsatisfactory;
    }
  }
  result.rate = static_cast<double>(result.satisfactory) / static_cast<double>(matrix.rows());
  return result;
}

std::string_view to_string(BotGender gender) {
  return gender == BotGender::kMale ? "male" : "female";
}

std::string_view to_string(Sentiment sentiment) {
  switch (sentiment) {
    case Sentiment::kPositive:
      return "positive";
    case Sentiment::kNegative:
      return "negative";
    case Sentiment::kNeutral:
      return "neutral";
  }
  return "unknown";
}

double SentimentTable::percent(BotGender gender, Sentiment sentiment) const {
  const auto g = static_cast<std::size_t>(gender);
  if (totals[g] == 0) return 0.0;
  const double pct = 100.0 * static_cast<double>(counts[g][static_cast<std::size_t>(sentiment)]) /
                     static_cast<double>(totals[g]);
  return std::round(pct * 100.0) / 100.0;
}

SentimentTable aggregate_sentiment(std::span<const std::pair<BotGender, Sentiment>> labels) {
  SentimentTable table;
  for (const auto& [gender, sentiment] : labels) {
    ++table.counts[static_cast<std::size_t>(gender)][static_cast<std::size_t>(sentiment)];
    ++table.totals[static_cast<std::size_t>(gender)];
  }
  return table;
}

std::vector<std::pair<BotGender, Sentiment>> load_sentiment_labels(
    const std::filesystem::path& path) {
  const auto table = CsvTable::read(path);
  table.require_header({"bot_gender", "sentiment"});
  std::vector<std::pair<BotGender, Sentiment>> out;
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto g = to_lower_ascii(trim(table.rows()[r][0]));
    const auto s = to_lower_ascii(trim(table.rows()[r][1]));
    BotGender gender;
    if (g == "male") {
      gender = BotGender::kMale;
    } else if (g == "female") {
      gender = BotGender::kFemale;
    } else {
      throw FormatError(fmt::format("{}: row {}: bad gender '{}'", path.string(), r + 2, g));
    }
    Sentiment sentiment;
    if (s == "positive") {
      sentiment = Sentiment::kPositive;
    } else if (s == "negative") {
      sentiment = Sentiment::kNegative;
    } else if (s == "neutral") {
      sentiment = Sentiment::kNeutral;
    } else {
      throw FormatError(fmt::format("{}: row {}: bad sentiment '{}'", path.string(), r + 2, s));
    }
    out.emplace_back(gender, sentiment);
  }
  return out;
}

std::string sentiment_table_csv(const SentimentTable& table) {
  std::ostringstream out;
  write_csv_row(out, {"sentiment", "male_bot_replies", "female_bot_replies"});
  for (auto s : {Sentiment::kPositive, Sentiment::kNegative, Sentiment::kNeutral}) {
    std::vector<std::string> row{std::string(to_string(s))};
    for (auto g : {BotGender::kMale, BotGender::kFemale}) {
      row.push_back(fmt::format("{} ({:.2f}%)",
                                table.counts[static_cast<std::size_t>(g)][static_cast<std::size_t>(s)],
                                table.percent(g, s)));
    }
    write_csv_row(out, row);
  }
  write_csv_row(out, {"totals", std::to_string(table.totals[0]), std::to_string(table.totals[1])});
  return out.str();
}

WordlistSentimentScorer::WordlistSentimentScorer()
    : WordlistSentimentScorer(
          {"good", "great", "love", "thanks", "thank", "nice", "awesome", "agree", "cool",
           "amazing", "best", "happy", "glad", "helpful", "interesting", "appreciate", "fun",
           "excellent", "right", "yes"},
          {"bad", "hate", "stupid", "spam", "bot", "annoying", "wrong", "fake", "stop", "worst",
           "terrible", "awful", "blocked", "block", "leave", "dumb", "no", "ugh", "useless",
           "creepy"}) {}

WordlistSentimentScorer::WordlistSentimentScorer(std::unordered_set<std::string> positive,
                                                 std::unordered_set<std::string> negative)
    : positive_(std::move(positive)), negative_(std::move(negative)) {}

Sentiment WordlistSentimentScorer::score(std::string_view text) const {
  int valence = 0;
  for (const auto& token : word_tokens(text)) {
    const auto word = to_lower_ascii(token.text);
    if (positive_.contains(word)) ++valence;
    if (negative_.contains(word)) --valence;
  }
  if (valence > 0) return Sentiment::kPositive;
  if (valence < 0) return Sentiment::kNegative;
  return Sentiment::kNeutral;
}

}  // namespace nudge
