#include "nudge/simulator.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/core.h>

#include "nudge/csv.h"
#include "nudge/text.h"

namespace nudge {

namespace {

constexpr std::uint64_t kReplyStream = 0x7265706c79ULL;

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

}  // namespace

void ActivityModel::validate() const {
  if (!std::isfinite(posts_per_day) || posts_per_day < 0.0) {
    throw ConfigError("activity: posts_per_day must be a finite rate >= 0");
  }
  double sum = 0.0;
  for (double m : topic_mixture) {
    if (!is_probability(m)) throw ConfigError("activity: topic mixture entries must be in [0, 1]");
    sum += m;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("activity: topic mixture must sum to 1");
  for (double p : baseline) {
    if (!is_probability(p)) throw ConfigError("activity: propensities must be in [0, 1]");
  }
}

void SimConfig::validate() const {
  if (duration_days <= 0) throw ConfigError("simulate: duration must be > 0 days");
  if (scrape_interval_hours <= 0 || 24 % scrape_interval_hours != 0) {
    throw ConfigError("simulate: scrape interval must divide 24 hours");
  }
  if (reply_cooldown_hours < scrape_interval_hours) {
    throw ConfigError("simulate: reply cooldown must be at least the scrape interval");
  }
  if (!is_probability(like_reply_prob) || !is_probability(follow_outlet_prob)) {
    throw ConfigError("simulate: like/follow probabilities must be in [0, 1]");
  }
  for (auto arm : kAllArms) {
    for (double e : true_effects[index_of(arm)]) {
      if (!std::isfinite(e)) throw ConfigError("simulate: true effects must be finite");
      if (arm == Arm::kControl && e != 0.0) {
        throw ConfigError("simulate: the control arm cannot carry a true effect");
      }
    }
  }
  if (generator_threads == 0) throw ConfigError("simulate: generator_threads must be >= 1");
}

Propensities behavioral_response(Arm arm, bool treated, const Propensities& baseline,
                                 const OutcomeEffects& effects) {
  Propensities out = baseline;
  if (arm == Arm::kControl || !treated) return out;
  for (std::size_t i = 0; i < kOutcomeCount; ++i) {
    out[i] = std::clamp(baseline[i] + effects[index_of(arm)][i], 0.0, 1.0);
  }
  return out;
}

RateLimiter::RateLimiter(std::int64_t cooldown_seconds) : cooldown_(cooldown_seconds) {}

bool RateLimiter::check_and_record(const std::string& user_id, std::int64_t now) {
  std::lock_guard lock(mu_);
  auto& times = replies_[user_id];
  for (auto t : times) {
    if (t > now - cooldown_ && t <= now) return false;
  }
  times.push_back(now);
  return true;
}

std::string_view to_string(SuppressReason reason) {
  switch (reason) {
    case SuppressReason::kCooldown:
      return "cooldown";
    case SuppressReason::kControlArm:
      return "control_arm";
    case SuppressReason::kComposeFailed:
      return "compose_failed";
  }
  return "unknown";
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

SuppressReason parse_reason(std::string_view s) {
  for (auto r : {SuppressReason::kCooldown, SuppressReason::kControlArm,
                 SuppressReason::kComposeFailed}) {
    if (s == to_string(r)) return r;
  }
  throw FormatError(fmt::format("unknown suppression reason '{}'", s));
}

}  // namespace

std::string_view event_type(const Event& event) {
  return std::visit(Overloaded{
                        [](const PostPayload&) { return std::string_view("post"); },
                        [](const ScrapePayload&) { return std::string_view("scrape"); },
                        [](const ReplySentPayload&) { return std::string_view("reply_sent"); },
                        [](const ReplySuppressedPayload&) {
                          return std::string_view("reply_suppressed");
                        },
                        [](const LikePayload&) { return std::string_view("like"); },
                        [](const FollowPayload&) { return std::string_view("follow"); },
                    },
                    event.payload);
}

nlohmann::json to_json(const Event& event) {
  nlohmann::json j{{"v", kEventSchemaVersion},
                   {"t", event.time},
                   {"type", event_type(event)},
                   {"user", event.user_id}};
  std::visit(Overloaded{
                 [&](const PostPayload& p) {
                   j["post_id"] = p.post_id;
                   j["text"] = p.text;
                 },
                 [&](const ScrapePayload& p) {
                   j["tick"] = p.tick;
                   j["posts"] = p.posts;
                   j["keyword_posts"] = p.keyword_posts;
                 },
                 [&](const ReplySentPayload& p) {
                   j["post_id"] = p.post_id;
                   j["reply_id"] = p.reply_id;
                   j["bot"] = p.bot;
                   j["topic"] = to_string(p.topic);
                   j["keyword"] = p.keyword;
                   j["outlet"] = p.outlet;
                   j["url"] = p.url;
                   j["provenance"] = to_string(p.provenance);
                   j["text"] = p.full_text;
                 },
                 [&](const ReplySuppressedPayload& p) {
                   j["post_id"] = p.post_id;
                   j["reason"] = to_string(p.reason);
                 },
                 [&](const LikePayload& p) {
                   j["reply_id"] = p.reply_id;
                   j["bot"] = p.bot;
                 },
                 [&](const FollowPayload& p) { j["handle"] = p.handle; },
             },
             event.payload);
  return j;
}

Event event_from_json(const nlohmann::json& j) {
  try {
    if (j.at("v").get<int>() != kEventSchemaVersion) {
      throw FormatError(fmt::format("unsupported event schema version {}", j.at("v").dump()));
    }
    Event e;
    e.time = j.at("t").get<std::int64_t>();
    e.user_id = j.at("user").get<std::string>();
    const auto type = j.at("type").get<std::string>();
    if (type == "post") {
      e.payload = PostPayload{j.at("post_id").get<std::string>(), j.at("text").get<std::string>()};
    } else if (type == "scrape") {
      e.payload = ScrapePayload{j.at("tick").get<int>(), j.at("posts").get<std::size_t>(),
                                j.at("keyword_posts").get<std::size_t>()};
    } else if (type == "reply_sent") {
      ReplySentPayload p;
      p.post_id = j.at("post_id").get<std::string>();
      p.reply_id = j.at("reply_id").get<std::string>();
      p.bot = j.at("bot").get<std::string>();
      const auto topic = parse_topic(j.at("topic").get<std::string>());
      if (!topic) throw FormatError("reply_sent: unknown topic");
      p.topic = *topic;
      p.keyword = j.at("keyword").get<std::string>();
      p.outlet = j.at("outlet").get<std::string>();
      p.url = j.at("url").get<std::string>();
      const auto prov = j.at("provenance").get<std::string>();
      if (prov == "generated") {
        p.provenance = Provenance::kGenerated;
      } else if (prov == "template") {
        p.provenance = Provenance::kTemplate;
      } else {
        throw FormatError(fmt::format("reply_sent: unknown provenance '{}'", prov));
      }
      p.full_text = j.at("text").get<std::string>();
      e.payload = std::move(p);
    } else if (type == "reply_suppressed") {
      e.payload = ReplySuppressedPayload{j.at("post_id").get<std::string>(),
                                         parse_reason(j.at("reason").get<std::string>())};
    } else if (type == "like") {
      e.payload = LikePayload{j.at("reply_id").get<std::string>(), j.at("bot").get<std::string>()};
    } else if (type == "follow") {
      e.payload = FollowPayload{j.at("handle").get<std::string>()};
    } else {
      throw FormatError(fmt::format("unknown event type '{}'", type));
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("malformed event: ") + ex.what());
  }
}

std::string events_to_jsonl(std::span<const Event> events) {
  std::string out;
  for (const auto& e : events) {
    out += to_json(e).dump();
    out += '\n';
  }
  return out;
}

EventLog parse_events_jsonl(std::string_view content, const std::string& source) {
  EventLog log;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const auto line = trim(content.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty()) continue;
    try {
      log.push_back(event_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(fmt::format("{}:{}: {}", source, line_no, ex.what()));
    } catch (const FormatError& ex) {
      throw FormatError(fmt::format("{}:{}: {}", source, line_no, ex.what()));
    }
  }
  return log;
}

namespace {

const std::vector<std::string>& default_keyword_frames() {
  static const std::vector<std::string> frames = {
      "{} is all I can think about today",
      "anyone else watching {} right now",
      "honestly {} made my week",
      "can we talk about {} for a second",
      "not gonna lie {} hits different",
      "{} again?? every single time",
      "still thinking about {} tbh",
      "my whole feed is {} and I am not mad",
  };
  return frames;
}

const std::vector<std::string>& default_plain_posts() {
  static const std::vector<std::string> posts = {
      "good morning everyone",
      "coffee first then everything else",
      "traffic was terrible today",
      "cannot believe it is already friday",
      "need a nap so bad",
      "this weather though",
      "long day at work",
      "who else is up this late",
      "grocery run done",
      "my dog refuses to walk in the rain",
  };
  return posts;
}

bool has_keyword(std::string_view text, const Lexicon& lexicon) {
  return !match_keywords(text, lexicon).empty();
}

}  // namespace

PoissonPostSource::PoissonPostSource(const Lexicon& lexicon) {
  for (auto topic : kAllTopics) {
    for (auto kw : lexicon.keywords(topic)) keywords_[index_of(topic)].emplace_back(kw);
  }
  for (const auto& frame : default_keyword_frames()) {
    std::string bare = frame;
    bare.replace(bare.find("{}"), 2, " ");
    if (!has_keyword(bare, lexicon)) keyword_frames_.push_back(frame);
  }
  if (keyword_frames_.empty()) keyword_frames_.push_back("{}");
  for (const auto& post : default_plain_posts()) {
    if (!has_keyword(post, lexicon)) plain_posts_.push_back(post);
  }
  if (plain_posts_.empty()) plain_posts_.push_back("...");
}

std::vector<SimPost> PoissonPostSource::posts(const SimUser& user, std::int64_t start,
                                              std::int64_t length, Rng& rng) const {
  const double mean =
      user.activity.posts_per_day * static_cast<double>(length) / 86400.0;
  const auto count = mean > 0.0 ? rng.poisson(mean) : 0;
  std::vector<SimPost> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    SimPost post;
    post.time = start + static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(length)));
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t slot = kTopicSlots - 1;
    for (std::size_t s = 0; s < kTopicSlots; ++s) {
      acc += user.activity.topic_mixture[s];
      if (u < acc) {
        slot = s;
        break;
      }
    }
    if (slot < 3 && !keywords_[slot].empty()) {
      const auto& kw = keywords_[slot][rng.index(keywords_[slot].size())];
      const auto& frame = keyword_frames_[rng.index(keyword_frames_.size())];
      post.text = fmt::format(fmt::runtime(frame), kw);
    } else {
      post.text = plain_posts_[rng.index(plain_posts_.size())];
    }
    out.push_back(std::move(post));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SimPost& a, const SimPost& b) { return a.time < b.time; });
  return out;
}

void ScriptedPostSource::add(const std::string& user_id, std::int64_t time, std::string text) {
  auto& list = posts_[user_id];
  list.push_back({time, std::move(text)});
  std::stable_sort(list.begin(), list.end(),
                   [](const SimPost& a, const SimPost& b) { return a.time < b.time; });
}

std::vector<SimPost> ScriptedPostSource::posts(const SimUser& user, std::int64_t start,
                                               std::int64_t length, Rng&) const {
  std::vector<SimPost> out;
  const auto it = posts_.find(user.user_id);
  if (it == posts_.end()) return out;
  for (const auto& p : it->second) {
    if (p.time >= start && p.time < start + length) out.push_back(p);
  }
  return out;
}

namespace {

std::string bot_name(Arm arm, const std::string& user_id) {
  const auto n = 1 + stable_hash(user_id) % kBotsPerGender;
  return fmt::format("{}_{:02}", arm == Arm::kFemaleBot ? "female_bot" : "male_bot", n);
}

struct Candidate {
  std::size_t user = 0;
  std::string post_id;
  std::string text;
  KeywordMatch match;
};

struct Decision {
  std::size_t user = 0;
  std::string post_id;
  std::optional<SuppressReason> suppressed;
  std::size_t candidate = 0;  // index into candidates when not suppressed
};

struct ReplyOutcome {
  std::optional<ReplySentPayload> sent;
  bool liked = false;
  bool followed = false;
  std::int64_t like_offset = 0;
  std::int64_t follow_offset = 0;
};

ReplyOutcome make_reply(const Candidate& c, const SimUser& user, std::span<const OutletRecord> outlets,
                        const ReplyBundle& bundle, const SimConfig& config,
                        std::int64_t tick_len) {
  Rng rng(mix_seed(config.seed ^ kReplyStream, stable_hash(c.post_id)));
  ReplyOutcome out;
  const auto draft =
      generate_reply(c.text, *bundle.generator, *bundle.gates, bundle.templates, rng);
  const auto outlet = select_outlet(c.match.topic, outlets, rng);
  try {
    const auto composed = compose_reply(draft.text, c.match.topic, outlet.handle, outlet.url);
    ReplySentPayload p;
    p.post_id = c.post_id;
    p.reply_id = c.post_id + "/r";
    p.bot = bot_name(user.arm, user.user_id);
    p.topic = c.match.topic;
    p.keyword = c.match.keyword;
    p.outlet = outlet.handle;
    p.url = outlet.url;
    p.provenance = draft.provenance;
    p.full_text = composed.full_text;
    out.sent = std::move(p);
  } catch (const Error&) {
    return out;
  }
  out.liked = rng.bernoulli(config.like_reply_prob);
  out.like_offset = 1 + static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(tick_len)));
  out.followed = rng.bernoulli(config.follow_outlet_prob);
  out.follow_offset =
      1 + static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(tick_len)));
  return out;
}

void run_parallel(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

SimResult run_simulation(std::span<const SimUser> users, const Lexicon& lexicon,
                         std::span<const OutletRecord> outlets, const ReplyBundle& bundle,
                         const PostSource& source, const SimConfig& config) {
  config.validate();
  std::vector<std::size_t> order(users.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return users[a].user_id < users[b].user_id; });
  for (std::size_t i = 0; i < order.size(); ++i) {
    users[order[i]].activity.validate();
    if (i > 0 && users[order[i]].user_id == users[order[i - 1]].user_id) {
      throw ConfigError(fmt::format("simulate: duplicate user id '{}'", users[order[i]].user_id));
    }
  }
  const bool any_treatment = std::any_of(users.begin(), users.end(),
                                         [](const SimUser& u) { return is_treatment(u.arm); });
  if (any_treatment) {
    if (bundle.generator == nullptr || bundle.gates == nullptr) {
      throw ConfigError("simulate: reply bundle needs a generator and gate lexicons");
    }
    if (bundle.templates.empty()) throw ConfigError("simulate: reply bundle has no templates");
    if (outlets.empty()) throw ConfigError("simulate: no outlets");
  }

  const std::int64_t tick_len = std::int64_t{config.scrape_interval_hours} * 3600;
  const int ticks = config.duration_days * 24 / config.scrape_interval_hours;
  RateLimiter limiter(std::int64_t{config.reply_cooldown_hours} * 3600);

  std::vector<Rng> rngs;
  rngs.reserve(users.size());
  for (const auto& u : users) rngs.emplace_back(mix_seed(config.seed, stable_hash(u.user_id)));
  std::vector<std::size_t> post_counter(users.size(), 0);
  std::vector<std::vector<std::string>> keyword_texts(users.size());

  SimResult result;
  for (const auto& u : users) result.exposure[u.user_id].arm = u.arm;

  for (int tick = 0; tick < ticks; ++tick) {
    const std::int64_t start = tick * tick_len;
    const std::int64_t end = start + tick_len;
    std::vector<Candidate> candidates;
    std::vector<Decision> decisions;
    std::size_t tick_posts = 0;
    std::size_t tick_keyword = 0;

    for (auto ui : order) {
      const auto& user = users[ui];
      auto& exposure = result.exposure[user.user_id];
      for (auto& post : source.posts(user, start, tick_len, rngs[ui])) {
        if (post.time < start || post.time >= end) {
          throw Error(fmt::format("simulate: post source returned a post outside the tick for {}",
                                  user.user_id));
        }
        auto post_id = fmt::format("{}-{}", user.user_id, post_counter[ui]++);
        ++tick_posts;
        ++exposure.posts;
        auto matches = match_keywords(post.text, lexicon);
        if (!matches.empty()) {
          ++tick_keyword;
          ++exposure.keyword_posts;
          keyword_texts[ui].push_back(post.text);
          Decision d{ui, post_id, std::nullopt, 0};
          if (!is_treatment(user.arm)) {
            d.suppressed = SuppressReason::kControlArm;
          } else if (limiter.check_and_record(user.user_id, end)) {
            d.candidate = candidates.size();
            candidates.push_back({ui, post_id, post.text, std::move(matches.front())});
          } else {
            d.suppressed = SuppressReason::kCooldown;
          }
          decisions.push_back(std::move(d));
        }
        result.events.push_back({post.time, user.user_id, PostPayload{post_id, post.text}});
      }
    }
    result.posts += tick_posts;
    result.keyword_posts += tick_keyword;
    result.events.push_back(
        {end, std::string(kSystemUser), ScrapePayload{tick, tick_posts, tick_keyword}});

    std::vector<ReplyOutcome> outcomes(candidates.size());
    run_parallel(candidates.size(), config.generator_threads, [&](std::size_t i) {
      outcomes[i] =
          make_reply(candidates[i], users[candidates[i].user], outlets, bundle, config, tick_len);
    });

    for (const auto& d : decisions) {
      const auto& user = users[d.user];
      if (d.suppressed) {
        result.events.push_back({end, user.user_id, ReplySuppressedPayload{d.post_id, *d.suppressed}});
        continue;
      }
      auto& outcome = outcomes[d.candidate];
      if (!outcome.sent) {
        result.events.push_back(
            {end, user.user_id, ReplySuppressedPayload{d.post_id, SuppressReason::kComposeFailed}});
        continue;
      }
      auto& exposure = result.exposure[user.user_id];
      ++exposure.replies;
      exposure.treated = true;
      ++result.replies;
      const auto reply_id = outcome.sent->reply_id;
      const auto bot = outcome.sent->bot;
      const auto handle = outcome.sent->outlet;
      result.events.push_back({end, user.user_id, std::move(*outcome.sent)});
      if (outcome.liked) {
        result.events.push_back({end + outcome.like_offset, user.user_id, LikePayload{reply_id, bot}});
      }
      if (outcome.followed) {
        result.events.push_back({end + outcome.follow_offset, user.user_id, FollowPayload{handle}});
      }
    }
  }

  std::stable_sort(result.events.begin(), result.events.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (!keyword_texts[i].empty()) {
      result.exposure[users[i].user_id].topic = classify_user_topic(keyword_texts[i], lexicon);
    }
  }
  return result;
}

std::string exposure_to_csv(const std::map<std::string, UserExposure>& exposure) {
  std::ostringstream out;
  write_csv_row(out, {"user_id", "arm", "treated", "replies", "posts", "keyword_posts", "topic"});
  for (const auto& [id, e] : exposure) {
    write_csv_row(out, {id, std::string(to_string(e.arm)), e.treated ? "1" : "0",
                        std::to_string(e.replies), std::to_string(e.posts),
                        std::to_string(e.keyword_posts),
                        e.topic ? std::string(to_string(*e.topic)) : std::string()});
  }
  return out.str();
}

std::map<std::string, UserExposure> parse_exposure_csv(std::string_view csv,
                                                       const std::string& source) {
  const auto table = CsvTable::parse(csv, source);
  table.require_header({"user_id", "arm", "treated", "replies", "posts", "keyword_posts", "topic"});
  std::map<std::string, UserExposure> out;
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto& row = table.rows()[r];
    const auto where = fmt::format("{}:{}", source, r + 2);
    UserExposure e;
    const auto arm = parse_arm(row[1]);
    if (!arm) throw FormatError(fmt::format("{}: unknown arm '{}'", where, row[1]));
    e.arm = *arm;
    e.treated = row[2] == "1";
    e.replies = parse_count(row[3], where);
    e.posts = parse_count(row[4], where);
    e.keyword_posts = parse_count(row[5], where);
    if (!row[6].empty()) {
      e.topic = parse_topic(row[6]);
      if (!e.topic) throw FormatError(fmt::format("{}: unknown topic '{}'", where, row[6]));
    }
    if (!out.emplace(row[0], e).second) {
      throw FormatError(fmt::format("{}: duplicate user '{}'", where, row[0]));
    }
  }
  return out;
}

}  // namespace nudge
