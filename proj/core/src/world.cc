#include "nudge/world.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "nudge/rng.h"

namespace nudge {

namespace {

constexpr std::uint64_t kActivityStream = 0x61637469ULL;
constexpr std::uint64_t kWindowStream = 0x77696e64ULL;
constexpr double kStatusesLogMedian = 9.9;  // ~20k statuses
constexpr double kStatusesLogSigma = 1.2;

double beta_with_mean(Rng& rng, double mean, double concentration) {
  if (mean <= 0.0) return 0.0;
  if (mean >= 1.0) return 1.0;
  return rng.beta(mean * concentration, (1.0 - mean) * concentration);
}

std::uint64_t lognormal_count(Rng& rng, double log_median, double sigma) {
  return static_cast<std::uint64_t>(std::llround(rng.lognormal(log_median, sigma)));
}

}  // namespace

void WorldCalibration::validate() const {
  auto prob = [](double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; };
  if (!prob(dormant_share) || !prob(keyword_share_mean) || !prob(dominant_topic_share) ||
      !prob(follow_retention) || !prob(activity_statuses_corr)) {
    throw ConfigError("world: shares must be in [0, 1]");
  }
  if (!(posts_per_day_mean >= 0.0) || !(posts_per_day_sigma >= 0.0) || !(keyword_share_a > 0.0) ||
      !(propensity_concentration > 0.0)) {
    throw ConfigError("world: rate parameters must be positive");
  }
  for (double m : propensity_means) {
    if (!prob(m)) throw ConfigError("world: propensity means must be in [0, 1]");
  }
}

std::vector<UserProfile> synthesize_candidates(std::size_t n, std::uint64_t seed) {
  std::vector<UserProfile> users;
  users.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, i));
    UserProfile u;
    u.user_id = fmt::format("u{:06}", i);
    u.us_based = rng.bernoulli(0.95);
    u.english = rng.bernoulli(0.95);
    u.verified = rng.bernoulli(0.02);
    u.reply_only = rng.bernoulli(0.03);
    u.username = rng.bernoulli(0.01) ? fmt::format("news_bot{}", i) : fmt::format("user{}", i);
    u.followers = lognormal_count(rng, std::log(700.0), 1.4);
    u.following = lognormal_count(rng, std::log(650.0), 1.1);
    u.statuses = lognormal_count(rng, kStatusesLogMedian, kStatusesLogSigma);
    u.favorites = lognormal_count(rng, std::log(18000.0), 1.3);
    u.listed = lognormal_count(rng, std::log(8.0), 1.0);
    u.bot_score = std::round(rng.beta(2.0, 6.0) * 1e4) / 1e4;
    u.weekly_keyword_tweets = 1 + static_cast<std::uint64_t>(rng.lognormal(std::log(2.0), 1.0));
    users.push_back(std::move(u));
  }
  return users;
}

ActivityModel derive_activity(const UserProfile& profile, std::uint64_t seed,
                              const WorldCalibration& cal) {
  Rng rng(mix_seed(seed ^ kActivityStream, stable_hash(profile.user_id)));
  ActivityModel model;
  const bool dormant = rng.bernoulli(cal.dormant_share);
  const double z_statuses =
      profile.statuses > 0
          ? (std::log(static_cast<double>(profile.statuses)) - kStatusesLogMedian) /
                kStatusesLogSigma
          : 0.0;
  const double rho = cal.activity_statuses_corr;
  const double mix = rho * std::clamp(z_statuses, -4.0, 4.0) + std::sqrt(1.0 - rho * rho) * rng.normal();
  const double sigma = cal.posts_per_day_sigma;
  const double mu = std::log(std::max(cal.posts_per_day_mean, 1e-12)) - sigma * sigma / 2.0;
  const double rate = std::exp(mu + sigma * mix);
  model.posts_per_day = dormant || cal.posts_per_day_mean == 0.0 ? 0.0 : rate;

  const double m = cal.keyword_share_mean;
  double share = 0.0;
  if (m >= 1.0) {
    share = 1.0;
  } else if (m > 0.0) {
    share = rng.beta(cal.keyword_share_a, cal.keyword_share_a * (1.0 - m) / m);
  }
  static constexpr double kTopicPrior[3] = {0.4, 0.4, 0.2};
  const double u = rng.uniform();
  std::size_t dominant = u < kTopicPrior[0] ? 0 : (u < kTopicPrior[0] + kTopicPrior[1] ? 1 : 2);
  const double rest = (1.0 - cal.dominant_topic_share) / 2.0;
  for (std::size_t t = 0; t < 3; ++t) {
    model.topic_mixture[t] = share * (t == dominant ? cal.dominant_topic_share : rest);
  }
  model.topic_mixture[3] = 1.0 - share;

  for (std::size_t o = 0; o < kOutcomeCount; ++o) {
    model.baseline[o] = beta_with_mean(rng, cal.propensity_means[o], cal.propensity_concentration);
  }
  return model;
}

const std::vector<std::string>& political_sentences() {
  static const std::vector<std::string> bank = {
      "the senate vote tonight is going to be close",
      "watching the debate and taking notes",
      "polls say the election is a toss up",
      "congress needs to get this bill done",
      "the governor signed the new law today",
      "midterm turnout could break records",
      "the president spoke about inflation again",
      "supreme court ruling changes everything",
      "republicans and democrats both dodged the question",
      "who are you voting for this year",
  };
  return bank;
}

const std::vector<std::string>& neutral_sentences() {
  static const std::vector<std::string> bank = {
      "this made me laugh way too hard",
      "okay this recipe looks amazing",
      "sunsets like this never get old",
      "new playlist just dropped",
      "cannot wait for the weekend",
      "my cat has opinions again",
      "that ending was wild",
      "best coffee in town right here",
      "the little things matter",
      "saving this for later",
  };
  return bank;
}

namespace {

std::string decorate(std::string text, Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.15) {
    text += fmt::format(" https://t.co/{:x}", rng.next() & 0xffffffULL);
  } else if (u < 0.25) {
    text += " \xF0\x9F\x98\x82";  // face with tears of joy
  }
  return text;
}

std::vector<ActivityItem> draw_items(std::size_t n, double p_news, double p_political,
                                     const NewsHandleList& handles, Rng& rng) {
  std::vector<ActivityItem> items;
  items.reserve(n);
  const auto& pol = political_sentences();
  const auto& neutral = neutral_sentences();
  for (std::size_t i = 0; i < n; ++i) {
    ActivityItem item;
    if (rng.bernoulli(p_news) && handles.size() > 0) {
      item.author_id = handles.entries()[rng.index(handles.size())].media_user_id;
    } else {
      item.author_id = fmt::format("acct{}", rng.index(10'000'000));
    }
    const bool political = rng.bernoulli(p_political);
    const auto& bank = political ? pol : neutral;
    item.text = decorate(bank[rng.index(bank.size())], rng);
    items.push_back(std::move(item));
  }
  return items;
}

std::uint64_t drift_following(std::uint64_t pre, Rng& rng) {
  const double base = static_cast<double>(pre);
  double post = base * (1.0 + 0.04 * rng.normal());
  const double u = rng.uniform();
  if (u < 0.03) {
    post = base * (1.5 + rng.uniform());  // follow spree
  } else if (u < 0.06) {
    post = base + 200.0 + 500.0 * rng.uniform();  // large absolute jump
  } else if (u < 0.08) {
    post = base * (0.4 + 0.35 * rng.uniform());  // purge
  }
  return static_cast<std::uint64_t>(std::max(0.0, std::round(post)));
}

}  // namespace

UserPeriods generate_periods(const UserProfile& profile, const Propensities& pre,
                             const Propensities& post, const NewsHandleList& handles,
                             std::uint64_t seed, const WorldCalibration& cal) {
  Rng rng(mix_seed(seed ^ kWindowStream, stable_hash(profile.user_id)));
  UserPeriods out;

  // News follow slots: a fixed random subset of the handle list.
  const std::size_t slots = std::min(cal.follow_slots, handles.size());
  std::vector<std::size_t> idx(handles.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < slots; ++i) {
    const auto j = i + rng.index(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  const double p0 = pre[index_of(Outcome::kNewsFollows)];
  const double p1 = post[index_of(Outcome::kNewsFollows)];
  const double keep = p0 > 0.0 ? std::min(cal.follow_retention, p1 / p0) : 0.0;
  const double join = p0 < 1.0 ? std::clamp((p1 - p0 * keep) / (1.0 - p0), 0.0, 1.0) : 0.0;
  for (std::size_t s = 0; s < slots; ++s) {
    const auto& id = handles.entries()[idx[s]].media_user_id;
    const bool before = rng.bernoulli(p0);
    const bool after = before ? rng.bernoulli(keep) : rng.bernoulli(join);
    if (before) out.pre.followed.push_back(id);
    if (after) out.post.followed.push_back(id);
  }
  const std::size_t filler = std::min<std::uint64_t>(cal.filler_follows, profile.following);
  for (std::size_t k = 0; k < filler; ++k) {
    auto id = fmt::format("acct:{}:{}", profile.user_id, k);
    out.pre.followed.push_back(id);
    out.post.followed.push_back(std::move(id));
  }
  out.pre.following_total = profile.following;
  out.post.following_total = drift_following(profile.following, rng);

  const std::size_t n_likes = std::min<std::uint64_t>(kWindowLimit, profile.favorites);
  const std::size_t n_tweets = std::min<std::uint64_t>(kWindowLimit, profile.statuses);
  auto fill = [&](PeriodWindow& w, const Propensities& p) {
    w.likes = draw_items(n_likes, p[index_of(Outcome::kNewsLikes)],
                         p[index_of(Outcome::kPoliticalLikes)], handles, rng);
    w.tweets = draw_items(n_tweets, p[index_of(Outcome::kNewsRetweets)],
                          p[index_of(Outcome::kPoliticalRetweets)], handles, rng);
  };
  fill(out.pre, pre);
  fill(out.post, post);
  return out;
}

}  // namespace nudge
