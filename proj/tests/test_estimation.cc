#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "nudge/estimation.h"
#include "nudge/rng.h"

namespace nudge {
namespace {

// Synthetic analysis records. `effect(r)` is added to every outcome delta of
// treatment-side users that are treated.
template <typename Effect>
std::vector<AnalysisRecord> synthetic(std::size_t n, std::uint64_t seed, Effect effect) {
  Rng rng(seed);
  std::vector<AnalysisRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    AnalysisRecord r;
    r.delta.user_id = "u" + std::to_string(i);
    r.delta.arm = kAllArms[i % 3];
    r.delta.treated = r.delta.arm != Arm::kControl && rng.uniform() < 0.7;
    r.delta.pre_political_tweets = rng.index(12);
    r.delta.topic = kAllTopics[rng.index(3)];
    r.delta.pre_following_total = 200 + rng.index(300);
    r.delta.post_following_total = r.delta.pre_following_total + rng.index(20);
    r.delta.follow_included = {true, true, true};
    for (auto& c : r.covariates) c = std::exp(rng.normal());
    for (auto o : kAllOutcomes) {
      double v = rng.normal();
      if (r.delta.treated) v += effect(r);
      r.delta.delta[index_of(o)] = v;
    }
    out.push_back(r);
  }
  return out;
}

TEST(Estimation, NamesRoundTrip) {
  for (auto e : kAllEstimands) EXPECT_EQ(parse_estimand(to_string(e)), e);
  for (auto p : kAllPairs) EXPECT_EQ(parse_pair(to_string(p)), p);
  for (auto s : {SubgroupSplit::kPoliticalEngagement, SubgroupSplit::kTopic}) {
    EXPECT_EQ(parse_split(to_string(s)), s);
  }
  EXPECT_TRUE(in_pair(Pair::kCombined, Arm::kMaleBot));
  EXPECT_FALSE(in_pair(Pair::kFemale, Arm::kMaleBot));
  EXPECT_FALSE(in_pair(Pair::kCombined, Arm::kControl));
}

TEST(Estimation, NullDataGivesSmallEffects) {
  const auto recs = synthetic(900, 1, [](const AnalysisRecord&) { return 0.0; });
  const EstimationConfig cfg;
  for (auto pair : kAllPairs) {
    for (auto estimand : kAllEstimands) {
      const auto e = estimate_effect(recs, pair, estimand, Outcome::kNewsLikes, FollowCap::k200, cfg);
      ASSERT_TRUE(e.available) << e.note;
      EXPECT_LT(std::abs(e.fit.coef), 4 * e.fit.se);
      EXPECT_GT(e.fit.se, 0.0);
      EXPECT_LE(e.fit.ci_low, e.fit.coef);
      EXPECT_GE(e.fit.ci_high, e.fit.coef);
    }
  }
}

TEST(Estimation, TreatedEstimandUsesTreatedUsersOnly) {
  const auto recs = synthetic(600, 2, [](const AnalysisRecord&) { return 0.0; });
  const EstimationConfig cfg;
  std::size_t female = 0, female_treated = 0, control = 0;
  for (const auto& r : recs) {
    female += r.delta.arm == Arm::kFemaleBot;
    female_treated += r.delta.arm == Arm::kFemaleBot && r.delta.treated;
    control += r.delta.arm == Arm::kControl;
  }
  const auto itt = estimate_effect(recs, Pair::kFemale, Estimand::kITT, Outcome::kPoliticalLikes,
                                   FollowCap::k200, cfg);
  const auto tr = estimate_effect(recs, Pair::kFemale, Estimand::kTreated, Outcome::kPoliticalLikes,
                                  FollowCap::k200, cfg);
  EXPECT_EQ(itt.n_treatment, female);
  EXPECT_EQ(tr.n_treatment, female_treated);
  EXPECT_EQ(itt.n_control, control);
  EXPECT_EQ(tr.n_control, control);
}

TEST(Estimation, FollowCapFiltersOnlyFollows) {
  auto recs = synthetic(600, 3, [](const AnalysisRecord&) { return 0.0; });
  for (std::size_t i = 0; i < recs.size(); i += 4) recs[i].delta.follow_included[0] = false;
  const EstimationConfig cfg;
  const auto capped = estimate_effect(recs, Pair::kCombined, Estimand::kITT, Outcome::kNewsFollows,
                                      FollowCap::k200, cfg);
  const auto open = estimate_effect(recs, Pair::kCombined, Estimand::kITT, Outcome::kNewsFollows,
                                    FollowCap::kNone, cfg);
  EXPECT_EQ(capped.n_treatment + capped.n_control + 150, open.n_treatment + open.n_control);
  const auto likes = estimate_effect(recs, Pair::kCombined, Estimand::kITT, Outcome::kNewsLikes,
                                     FollowCap::k200, cfg);
  EXPECT_EQ(likes.n_treatment + likes.n_control, 600u);
}

TEST(Estimation, SmallGroupsFlaggedUnavailable) {
  const auto recs = synthetic(15, 4, [](const AnalysisRecord&) { return 0.0; });
  const auto e = estimate_effect(recs, Pair::kFemale, Estimand::kITT, Outcome::kNewsLikes,
                                 FollowCap::k200, EstimationConfig{});
  EXPECT_FALSE(e.available);
  EXPECT_FALSE(e.note.empty());
}

TEST(Subgroups, AllHighLeavesLowUnavailable) {
  auto recs = synthetic(300, 5, [](const AnalysisRecord&) { return 0.0; });
  for (auto& r : recs) r.delta.pre_political_tweets = 50;
  const EstimationConfig cfg;
  const auto est = subgroup_estimates(recs, SubgroupSplit::kPoliticalEngagement, cfg);
  ASSERT_FALSE(est.empty());
  bool saw_high = false, saw_low = false;
  for (const auto& e : est) {
    if (e.subgroup == "political_low") {
      saw_low = true;
      EXPECT_FALSE(e.available);
      EXPECT_EQ(e.n_treatment + e.n_control, 0u);
    } else {
      ASSERT_EQ(e.subgroup, "political_high");
      saw_high = true;
      EXPECT_TRUE(e.available) << e.note;
    }
  }
  EXPECT_TRUE(saw_high && saw_low);
}

TEST(Subgroups, EffectOnlyInHighSubgroupIsRecovered) {
  const double effect = 0.6;
  const EstimationConfig cfg;
  const auto recs = synthetic(6000, 6, [&](const AnalysisRecord& r) {
    return r.delta.pre_political_tweets > cfg.political_threshold ? effect : 0.0;
  });
  for (const auto& e : subgroup_estimates(recs, SubgroupSplit::kPoliticalEngagement, cfg)) {
    if (e.pair != Pair::kCombined || e.estimand != Estimand::kTreated ||
        e.outcome != Outcome::kNewsLikes) {
      continue;
    }
    ASSERT_TRUE(e.available) << e.note;
    const double truth = e.subgroup == "political_high" ? effect / e.outcome_sd : 0.0;
    EXPECT_NEAR(e.fit.coef, truth, 4 * e.fit.se) << e.subgroup;
    if (e.subgroup == "political_high") EXPECT_GT(e.fit.coef, 6 * e.fit.se);
  }
}

TEST(Subgroups, TopicLabels) {
  AnalysisRecord r;
  EXPECT_EQ(subgroup_label(r, SubgroupSplit::kTopic, EstimationConfig{}), std::nullopt);
  r.delta.topic = Topic::kLifestyle;
  EXPECT_EQ(subgroup_label(r, SubgroupSplit::kTopic, EstimationConfig{}), "topic_lifestyle");
  r.delta.pre_political_tweets = 5;
  EXPECT_EQ(subgroup_label(r, SubgroupSplit::kPoliticalEngagement, EstimationConfig{}),
            "political_low");
  EXPECT_EQ(subgroup_labels(SubgroupSplit::kTopic).size(), 3u);
}

TEST(Balance, TreatedWeightsCloseTheGap) {
  auto recs = synthetic(900, 7, [](const AnalysisRecord&) { return 0.0; });
  // Treated users are more active than control.
  for (auto& r : recs) {
    if (r.delta.treated) r.covariates[1] *= 1.5;
  }
  const EstimationConfig cfg;
  const auto rows = balance_diagnostics(recs, Pair::kCombined, Estimand::kTreated, cfg);
  ASSERT_EQ(rows.size(), kCovariateCount);
  for (const auto& row : rows) {
    ASSERT_TRUE(row.available);
    EXPECT_LE(row.after, 1e-6) << row.covariate;
  }
  EXPECT_GT(rows[1].before, 0.1);
  for (const auto& row : balance_diagnostics(recs, Pair::kCombined, Estimand::kITT, cfg)) {
    EXPECT_NEAR(row.before, row.after, 1e-12);
  }
}

TEST(Estimation, CsvRoundTripsAndJson) {
  const auto recs = synthetic(600, 8, [](const AnalysisRecord&) { return 0.1; });
  EstimationConfig cfg;
  const auto result = run_estimation(recs, cfg);
  ASSERT_FALSE(result.effects.empty());
  const auto csv = estimates_to_csv(result.effects);
  EXPECT_EQ(estimates_to_csv(parse_estimates_csv(csv, "mem")), csv);
  const auto bcsv = balance_rows_to_csv(result.balance);
  EXPECT_EQ(balance_rows_to_csv(parse_balance_rows_csv(bcsv, "mem")), bcsv);
  const auto j = to_json(result.effects.front());
  EXPECT_TRUE(j.contains("coef"));
  EXPECT_TRUE(j.contains("subgroup"));
  // All users carry every follow cap; subgroups only the primary one.
  std::set<FollowCap> all_caps, sub_caps;
  for (const auto& e : result.effects) {
    if (e.outcome != Outcome::kNewsFollows) continue;
    (e.subgroup == kAllUsers ? all_caps : sub_caps).insert(e.follow_cap);
  }
  EXPECT_EQ(all_caps.size(), 3u);
  EXPECT_EQ(sub_caps, std::set<FollowCap>{cfg.primary_cap});
}

TEST(Estimation, ConfigValidation) {
  EstimationConfig cfg;
  cfg.estimands.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = EstimationConfig{};
  cfg.min_group_size = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace nudge
