#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <unistd.h>

#include "nudge/csv.h"
#include "nudge/hash.h"
#include "nudge/pipeline.h"
#include "nudge/report.h"

namespace nudge {
namespace {

namespace fs = std::filesystem;
const fs::path kConfigs = NUDGE_CONFIG_DIR;

nlohmann::json demo_json() { return nlohmann::json::parse(read_file(kConfigs / "demo.json")); }

ExperimentConfig small_config(std::size_t candidates = 400) {
  auto j = demo_json();
  j["population"]["candidates"] = candidates;
  return ExperimentConfig::from_json(j, kConfigs);
}

class PipelineDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nudge_pipeline_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  RunOptions opts() const { return {dir_, false}; }
  fs::path dir_;
};

TEST(Config, ParsesDemoAndDerivesSeeds) {
  const auto c = ExperimentConfig::load(kConfigs / "demo.json");
  EXPECT_EQ(c.seed, 20221015u);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.population, 1100u);
  EXPECT_NE(c.assignment_seed, c.world_seed);
  EXPECT_NE(c.world_seed, c.measure_seed);
  EXPECT_EQ(c.exclusion.cap, FollowCap::k200);
  const auto override = ExperimentConfig::load(kConfigs / "demo.json", 7);
  EXPECT_EQ(override.seed, 7u);
  EXPECT_NE(override.hash(), c.hash());
  EXPECT_EQ(ExperimentConfig::load(kConfigs / "demo.json").hash(), c.hash());
}

TEST(Config, RejectsBadInput) {
  auto j = demo_json();
  j["colour"] = "blue";
  EXPECT_THROW(ExperimentConfig::from_json(j, kConfigs), ConfigError);
  j = demo_json();
  j.erase("seed");
  EXPECT_THROW(ExperimentConfig::from_json(j, kConfigs), ConfigError);
  j = demo_json();
  j["simulation"]["true_effects"]["control"] = {{"news_follows", 0.1}};
  EXPECT_THROW(ExperimentConfig::from_json(j, kConfigs), ConfigError);
  j = demo_json();
  j["paths"]["lexicon"] = "missing.csv";
  const auto c = ExperimentConfig::from_json(j, kConfigs);
  try {
    c.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("missing.csv"), std::string::npos);
  }
  EXPECT_THROW(ExperimentConfig::load(kConfigs / "nope.json"), Error);
}

TEST(Config, StageAndFormatNames) {
  for (auto s : kAllStages) EXPECT_EQ(parse_stage(to_string(s)), s);
  for (auto f : {ReportFormat::kCsv, ReportFormat::kJson, ReportFormat::kText}) {
    EXPECT_EQ(parse_report_format(to_string(f)), f);
  }
  EXPECT_FALSE(parse_stage("deploy").has_value());
}

TEST_F(PipelineDir, DemoRunIsFastAndRerunSkips) {
  const auto config = ExperimentConfig::load(kConfigs / "demo.json");
  const auto t0 = std::chrono::steady_clock::now();
  const auto first = run_pipeline(config, kAllStages, opts());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 60.0);
  ASSERT_EQ(first.stages.size(), 6u);
  for (const auto& [name, rec] : first.stages) {
    EXPECT_FALSE(rec.skipped) << name;
    EXPECT_FALSE(rec.input_hash.empty());
    for (const auto& [file, digest] : rec.outputs) {
      EXPECT_EQ(sha256_hex(read_file(dir_ / file)), digest) << file;
    }
  }
  const auto users = CsvTable::read(dir_ / "cohort/users.csv");
  EXPECT_GT(users.rows().size(), 400u);
  EXPECT_LT(users.rows().size(), 600u);

  const auto second = run_pipeline(config, kAllStages, opts());
  for (const auto& [name, rec] : second.stages) {
    EXPECT_TRUE(rec.skipped) << name;
    EXPECT_EQ(rec.input_hash, first.stages.at(name).input_hash);
    EXPECT_EQ(rec.outputs, first.stages.at(name).outputs);
  }
  const auto loaded = RunManifest::load(dir_);
  ASSERT_TRUE(loaded.has_value());
  EXPECT_EQ(loaded->to_json(), RunManifest::from_json(loaded->to_json()).to_json());
}

TEST_F(PipelineDir, TamperedOutputIsRebuilt) {
  const auto config = small_config();
  const std::array<Stage, 2> stages = {Stage::kCohort, Stage::kAssign};
  const auto first = run_pipeline(config, stages, opts());
  write_file(dir_ / "assign/assignment.csv", "user_id,arm\n");
  const auto second = run_pipeline(config, stages, opts());
  EXPECT_TRUE(second.stages.at("cohort").skipped);
  EXPECT_FALSE(second.stages.at("assign").skipped);
  EXPECT_EQ(second.stages.at("assign").outputs, first.stages.at("assign").outputs);
}

TEST_F(PipelineDir, MissingUpstreamNamesStage) {
  const auto config = small_config();
  const std::array<Stage, 1> estimate = {Stage::kEstimate};
  EXPECT_THROW(run_pipeline(config, estimate, opts()), StageError);
  const std::array<Stage, 3> upstream = {Stage::kCohort, Stage::kAssign, Stage::kSimulate};
  run_pipeline(config, upstream, opts());
  try {
    run_pipeline(config, estimate, opts());
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_NE(std::string(e.what()).find("run measure first"), std::string::npos) << e.what();
    EXPECT_EQ(e.stage(), "estimate");
  }
}

TEST_F(PipelineDir, LockedDirectoryRefused) {
  fs::create_directories(dir_);
  write_file(dir_ / ".lock", "12345\n");
  const std::array<Stage, 1> cohort = {Stage::kCohort};
  EXPECT_THROW(run_pipeline(small_config(), cohort, opts()), Error);
  fs::remove(dir_ / ".lock");
  EXPECT_NO_THROW(run_pipeline(small_config(), cohort, opts()));
  EXPECT_FALSE(fs::exists(dir_ / ".lock"));
}

TEST_F(PipelineDir, ReportLayoutAndJsonRoundTrip) {
  const auto config = small_config(700);
  run_pipeline(config, kAllStages, opts());
  run_audit(config, opts());
  const auto tables = build_report_tables(dir_, config.exclusion.cap);
  const auto json = report_to_json(tables);
  EXPECT_EQ(json.at("schema"), kReportSchema);
  EXPECT_EQ(report_from_json(json), tables);
  EXPECT_EQ(report_from_json(nlohmann::json::parse(json.dump())), tables);

  auto find = [&](const std::string& name) -> const ReportTable& {
    for (const auto& t : tables) {
      if (t.name == name) return t;
    }
    throw Error("no table " + name);
  };
  const auto& means = find("means");
  EXPECT_EQ(means.columns,
            (std::vector<std::string>{"Metric", "Control", "Female (Treated)", "Male (Treated)"}));
  ASSERT_EQ(means.rows.size(), 11u);
  EXPECT_EQ(means.rows[0][0], "Pre News Accounts Followed");
  EXPECT_EQ(means.rows[1][0], "Post News Accounts Followed");
  EXPECT_EQ(means.rows[10][0], "Total User Count");

  const auto& variants = find("exclusion_variants_itt");
  EXPECT_EQ(variants.columns, (std::vector<std::string>{"Treatment", "200", "500", "none"}));
  EXPECT_EQ(variants.rows.size(), 3u);

  const auto& effects = find("effects_treated");
  EXPECT_EQ(effects.columns.size(), 6u);
  EXPECT_EQ(effects.rows.size(), 3u);
  EXPECT_NO_THROW(find("audit"));
  EXPECT_NO_THROW(find("sentiment"));

  const auto text = render_report(tables, ReportFormat::kText);
  ASSERT_EQ(text.size(), 1u);
  EXPECT_NE(text.begin()->second.find("Total User Count"), std::string::npos);
  const auto csv = render_report(tables, ReportFormat::kCsv);
  EXPECT_EQ(csv.size(), tables.size());
  EXPECT_EQ(parse_csv(csv.at("means.csv")).size(), 12u);
}

TEST(Measure, DeltasCoverCohortAndAnalysisRecordsAlign) {
  const auto config = small_config(300);
  const auto cands = synthesize_candidates(300, 3);
  const auto cohort = build_cohort(cands, config.cohort);
  std::vector<UserProfile> members;
  for (const auto& u : cands) {
    if (std::find(cohort.final_ids.begin(), cohort.final_ids.end(), u.user_id) !=
        cohort.final_ids.end()) {
      members.push_back(u);
    }
  }
  ASSERT_GT(members.size(), 30u);
  std::vector<std::string> ids;
  for (const auto& u : members) ids.push_back(u.user_id);
  const auto arms = assign_arms(ids, 1);
  std::map<std::string, UserExposure> exposure;
  for (const auto& [id, arm] : arms) exposure[id].arm = arm;
  const auto handles = load_news_handles(config.paths.news_handles);
  const auto classifier = KeywordPoliticalClassifier::load(config.paths.political_terms);
  const auto out = measure_cohort(members, exposure, handles, classifier, config.exclusion,
                                  OutcomeEffects{}, 5, 6, config.world);
  EXPECT_EQ(out.pre.size(), members.size());
  EXPECT_EQ(out.deltas.size(), members.size());
  for (std::size_t i = 0; i < out.deltas.size(); ++i) {
    EXPECT_EQ(out.deltas[i].arm, arms.at(out.deltas[i].user_id));
  }
  const auto recs = analysis_records(members, out.deltas);
  ASSERT_EQ(recs.size(), members.size());
  const auto again = measure_cohort(members, exposure, handles, classifier, config.exclusion,
                                    OutcomeEffects{}, 5, 6, config.world);
  EXPECT_EQ(again.deltas, out.deltas);
}

}  // namespace
}  // namespace nudge
