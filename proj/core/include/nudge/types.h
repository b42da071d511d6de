#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nudge {

// Base for every error raised by the library. Callers that only need a
// diagnostic string can catch this; the subclasses exist for tests and for
// the CLI to pick exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

enum class Topic { kSports, kEntertainment, kLifestyle };

inline constexpr std::array<Topic, 3> kAllTopics = {
    Topic::kSports, Topic::kEntertainment, Topic::kLifestyle};

std::string_view to_string(Topic topic);
std::optional<Topic> parse_topic(std::string_view text);
inline constexpr std::size_t index_of(Topic t) { return static_cast<std::size_t>(t); }

enum class Arm { kControl, kMaleBot, kFemaleBot };

inline constexpr std::array<Arm, 3> kAllArms = {Arm::kControl, Arm::kMaleBot,
                                                Arm::kFemaleBot};

std::string_view to_string(Arm arm);
// Accepts the canonical names plus "male"/"female".
std::optional<Arm> parse_arm(std::string_view text);
inline constexpr std::size_t index_of(Arm a) { return static_cast<std::size_t>(a); }
inline constexpr bool is_treatment(Arm a) { return a != Arm::kControl; }

// The five engagement outcomes, in the column order of the regression tables.
enum class Outcome {
  kNewsFollows,
  kNewsRetweets,
  kNewsLikes,
  kPoliticalRetweets,
  kPoliticalLikes,
};

inline constexpr std::size_t kOutcomeCount = 5;
inline constexpr std::array<Outcome, kOutcomeCount> kAllOutcomes = {
    Outcome::kNewsFollows, Outcome::kNewsRetweets, Outcome::kNewsLikes,
    Outcome::kPoliticalRetweets, Outcome::kPoliticalLikes};

// Machine name, e.g. "news_like_pct".
std::string_view to_string(Outcome outcome);
// Table heading, e.g. "News Likes".
std::string_view label(Outcome outcome);
std::optional<Outcome> parse_outcome(std::string_view text);
inline constexpr std::size_t index_of(Outcome o) { return static_cast<std::size_t>(o); }

}  // namespace nudge
