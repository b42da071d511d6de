#include "nudge/types.h"

namespace nudge {

std::string_view to_string(Topic topic) {
  switch (topic) {
    case Topic::kSports:
      return "sports";
    case Topic::kEntertainment:
      return "entertainment";
    case Topic::kLifestyle:
      return "lifestyle";
  }
  return "unknown";
}

std::optional<Topic> parse_topic(std::string_view text) {
  for (Topic t : kAllTopics) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::string_view to_string(Arm arm) {
  switch (arm) {
    case Arm::kControl:
      return "control";
    case Arm::kMaleBot:
      return "male_bot";
    case Arm::kFemaleBot:
      return "female_bot";
  }
  return "unknown";
}

std::optional<Arm> parse_arm(std::string_view text) {
  if (text == "control") return Arm::kControl;
  if (text == "male_bot" || text == "male") return Arm::kMaleBot;
  if (text == "female_bot" || text == "female") return Arm::kFemaleBot;
  return std::nullopt;
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kNewsFollows:
      return "news_follows";
    case Outcome::kNewsRetweets:
      return "news_rt_pct";
    case Outcome::kNewsLikes:
      return "news_like_pct";
    case Outcome::kPoliticalRetweets:
      return "pol_rt_pct";
    case Outcome::kPoliticalLikes:
      return "pol_like_pct";
  }
  return "unknown";
}

std::string_view label(Outcome outcome) {
  switch (outcome) {
    case Outcome::kNewsFollows:
      return "Following";
    case Outcome::kNewsRetweets:
      return "News (Re)tweets";
    case Outcome::kNewsLikes:
      return "News Likes";
    case Outcome::kPoliticalRetweets:
      return "Political Tweets";
    case Outcome::kPoliticalLikes:
      return "Political Likes";
  }
  return "Unknown";
}

std::optional<Outcome> parse_outcome(std::string_view text) {
  for (Outcome o : kAllOutcomes) {
    if (to_string(o) == text) return o;
  }
  return std::nullopt;
}

}  // namespace nudge
