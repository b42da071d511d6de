#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nudge/cohort.h"
#include "nudge/metrics.h"
#include "nudge/simulator.h"

namespace nudge {

// Synthetic stand-in for the platform population: candidate profiles,
// activity models, and the last-100 activity windows around the experiment.
struct WorldCalibration {
  double dormant_share = 0.228;
  double posts_per_day_mean = 3.81;
  double posts_per_day_sigma = 1.0;
  double activity_statuses_corr = 0.4;
  double keyword_share_mean = 0.132;
  double keyword_share_a = 1.4;
  double dominant_topic_share = 0.7;
  // Means of the baseline propensities, indexed by Outcome.
  Propensities propensity_means{0.13, 0.006, 0.008, 0.10, 0.11};
  double propensity_concentration = 20.0;
  double follow_retention = 0.9;
  std::size_t follow_slots = 100;
  std::size_t filler_follows = 20;
  void validate() const;
};

std::vector<UserProfile> synthesize_candidates(std::size_t n, std::uint64_t seed);

// Per-user posting rate, topic mixture and baseline propensities. Depends
// only on (profile, seed).
ActivityModel derive_activity(const UserProfile& profile, std::uint64_t seed,
                              const WorldCalibration& calibration = {});

struct PeriodWindow {
  std::vector<ActivityItem> likes;
  std::vector<ActivityItem> tweets;
  std::vector<std::string> followed;  // news follows plus a filler sample
  std::uint64_t following_total = 0;
};

struct UserPeriods {
  PeriodWindow pre;
  PeriodWindow post;
};

// Draws pre-period windows from `pre` and post-period windows from `post`.
// News follows persist across periods; the post follow state is drawn so its
// expectation equals the post propensity.
UserPeriods generate_periods(const UserProfile& profile, const Propensities& pre,
                             const Propensities& post, const NewsHandleList& handles,
                             std::uint64_t seed, const WorldCalibration& calibration = {});

// Text banks used for window items. Political sentences each contain a term
// from the shipped political term list; neutral ones contain none.
const std::vector<std::string>& political_sentences();
const std::vector<std::string>& neutral_sentences();

}  // namespace nudge
