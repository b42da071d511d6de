#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "nudge/generator.h"
#include "nudge/lexicon.h"
#include "nudge/outlets.h"
#include "nudge/replygen.h"
#include "nudge/rng.h"
#include "nudge/types.h"

namespace nudge {

// Probabilities indexed by Outcome. For news follows this is the per-slot
// follow probability; for the window outcomes it is the per-item share.
using Propensities = std::array<double, kOutcomeCount>;

// Additive shifts on post-period propensities, [arm][outcome].
using OutcomeEffects = std::array<Propensities, 3>;

inline constexpr std::size_t kTopicSlots = 4;  // sports, entertainment, lifestyle, none

struct ActivityModel {
  double posts_per_day = 0.0;
  std::array<double, kTopicSlots> topic_mixture{0.0, 0.0, 0.0, 1.0};
  Propensities baseline{};
  void validate() const;
};

struct SimConfig {
  int duration_days = 14;
  int scrape_interval_hours = 8;
  int reply_cooldown_hours = 24;
  std::uint64_t seed = 0;
  OutcomeEffects true_effects{};
  double like_reply_prob = 0.02;
  double follow_outlet_prob = 0.005;
  unsigned generator_threads = 1;
  void validate() const;
};

// clamp(baseline + effect * treated, 0, 1); the control arm never shifts.
Propensities behavioral_response(Arm arm, bool treated, const Propensities& baseline,
                                 const OutcomeEffects& effects);

// Per-user reply cooldown. A reply at `now` is allowed iff the user got no
// reply in (now - cooldown, now]; allowed replies are recorded under the same
// lock as the decision.
class RateLimiter {
 public:
  explicit RateLimiter(std::int64_t cooldown_seconds);
  bool check_and_record(const std::string& user_id, std::int64_t now);

 private:
  std::int64_t cooldown_;
  std::mutex mu_;
  std::unordered_map<std::string, std::vector<std::int64_t>> replies_;
};

enum class SuppressReason { kCooldown, kControlArm, kComposeFailed };
std::string_view to_string(SuppressReason reason);

struct PostPayload {
  std::string post_id;
  std::string text;
};
struct ScrapePayload {
  int tick = 0;
  std::size_t posts = 0;
  std::size_t keyword_posts = 0;
};
struct ReplySentPayload {
  std::string post_id;
  std::string reply_id;
  std::string bot;
  Topic topic = Topic::kSports;
  std::string keyword;
  std::string outlet;
  std::string url;
  Provenance provenance = Provenance::kTemplate;
  std::string full_text;
};
struct ReplySuppressedPayload {
  std::string post_id;
  SuppressReason reason = SuppressReason::kCooldown;
};
struct LikePayload {
  std::string reply_id;
  std::string bot;
};
struct FollowPayload {
  std::string handle;
};

using EventPayload = std::variant<PostPayload, ScrapePayload, ReplySentPayload,
                                  ReplySuppressedPayload, LikePayload, FollowPayload>;

// Scrape events are not tied to a user and carry this id.
inline constexpr std::string_view kSystemUser = "*";

struct Event {
  std::int64_t time = 0;  // seconds since the start of the experiment
  std::string user_id;
  EventPayload payload;
};

using EventLog = std::vector<Event>;

inline constexpr int kEventSchemaVersion = 1;

std::string_view event_type(const Event& event);
nlohmann::json to_json(const Event& event);
Event event_from_json(const nlohmann::json& j);
std::string events_to_jsonl(std::span<const Event> events);
EventLog parse_events_jsonl(std::string_view content, const std::string& source);

struct SimUser {
  std::string user_id;
  Arm arm = Arm::kControl;
  ActivityModel activity;
};

struct SimPost {
  std::int64_t time = 0;
  std::string text;
};

// Supplies the posts a user makes in [start, start + length). Must be
// deterministic given the rng state.
class PostSource {
 public:
  virtual ~PostSource() = default;
  virtual std::vector<SimPost> posts(const SimUser& user, std::int64_t start,
                                     std::int64_t length, Rng& rng) const = 0;
};

// Homogeneous Poisson posting thinned to the tick; each post draws a topic
// slot from the user's mixture. Keyword posts carry one keyword of that
// topic; "none" posts carry none.
class PoissonPostSource final : public PostSource {
 public:
  explicit PoissonPostSource(const Lexicon& lexicon);
  std::vector<SimPost> posts(const SimUser& user, std::int64_t start, std::int64_t length,
                             Rng& rng) const override;

 private:
  std::array<std::vector<std::string>, 3> keywords_;
  std::vector<std::string> keyword_frames_;  // contain "{}"
  std::vector<std::string> plain_posts_;
};

// Fixed posts per user, for tests and replays.
class ScriptedPostSource final : public PostSource {
 public:
  void add(const std::string& user_id, std::int64_t time, std::string text);
  std::vector<SimPost> posts(const SimUser& user, std::int64_t start, std::int64_t length,
                             Rng& rng) const override;

 private:
  std::map<std::string, std::vector<SimPost>> posts_;
};

struct ReplyBundle {
  const Generator* generator = nullptr;
  const GateLexicons* gates = nullptr;
  std::vector<std::string> templates;
};

struct UserExposure {
  Arm arm = Arm::kControl;
  bool treated = false;
  std::size_t replies = 0;
  std::size_t posts = 0;
  std::size_t keyword_posts = 0;
  std::optional<Topic> topic;  // classify_user_topic over the user's posts
};

struct SimResult {
  EventLog events;
  std::map<std::string, UserExposure> exposure;
  std::size_t posts = 0;
  std::size_t keyword_posts = 0;
  std::size_t replies = 0;
};

// Bot accounts per gender.
inline constexpr int kBotsPerGender = 14;

SimResult run_simulation(std::span<const SimUser> users, const Lexicon& lexicon,
                         std::span<const OutletRecord> outlets, const ReplyBundle& bundle,
                         const PostSource& source, const SimConfig& config);

// CSV `user_id,arm,treated,replies,posts,keyword_posts,topic`.
std::string exposure_to_csv(const std::map<std::string, UserExposure>& exposure);
std::map<std::string, UserExposure> parse_exposure_csv(std::string_view csv,
                                                       const std::string& source);

}  // namespace nudge
