#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nudge/assignment.h"
#include "nudge/cohort.h"
#include "nudge/estimation.h"
#include "nudge/generator.h"
#include "nudge/metrics.h"
#include "nudge/simulator.h"
#include "nudge/world.h"

namespace nudge {

enum class Stage { kCohort, kAssign, kSimulate, kMeasure, kEstimate, kReport };
inline constexpr std::array<Stage, 6> kAllStages = {Stage::kCohort,   Stage::kAssign,
                                                    Stage::kSimulate, Stage::kMeasure,
                                                    Stage::kEstimate, Stage::kReport};
std::string_view to_string(Stage stage);
std::optional<Stage> parse_stage(std::string_view text);

enum class ReportFormat { kCsv, kJson, kText };
std::string_view to_string(ReportFormat format);
std::optional<ReportFormat> parse_report_format(std::string_view text);

// An error tied to one pipeline stage; what() starts with "<stage>: ".
class StageError : public Error {
 public:
  StageError(std::string_view stage, const std::string& message);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct GeneratorSpec {
  std::string kind = "template_echo";  // or "http"
  std::string url;
  int timeout_ms = 5000;
  std::unique_ptr<Generator> make() const;
};

struct ExperimentPaths {
  std::filesystem::path lexicon;
  std::filesystem::path outlets;
  std::filesystem::path news_handles;
  std::filesystem::path templates;
  std::filesystem::path profanity;
  std::filesystem::path platform_terms;
  std::filesystem::path generic_responses;
  std::filesystem::path political_terms;
  std::optional<std::filesystem::path> candidates;  // else synthesized
  std::optional<std::filesystem::path> annotations;
  std::optional<std::filesystem::path> sentiment_labels;
};

// JSON config; relative paths resolve against the config file's directory.
// Every stage seed derives from `seed` unless given explicitly.
struct ExperimentConfig {
  nlohmann::json source;  // canonical form, seed override applied
  ExperimentPaths paths;
  std::uint64_t seed = 0;
  std::size_t population = 0;
  CohortConfig cohort;
  ArmProportions proportions;
  std::uint64_t assignment_seed = 0;
  SimConfig simulation;
  GeneratorSpec generator;
  WorldCalibration world;
  std::uint64_t world_seed = 0;
  std::uint64_t measure_seed = 0;
  FollowExclusionPolicy exclusion;
  EstimationConfig estimation;
  std::vector<ReportFormat> formats{ReportFormat::kCsv, ReportFormat::kJson,
                                    ReportFormat::kText};

  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                    std::optional<std::uint64_t> seed_override = std::nullopt);
  static ExperimentConfig load(const std::filesystem::path& path,
                               std::optional<std::uint64_t> seed_override = std::nullopt);
  // Throws ConfigError naming the first missing file.
  void validate() const;
  std::string hash() const;
};

struct StageRecord {
  std::string input_hash;
  std::map<std::string, std::string> outputs;  // path relative to out dir -> sha256
  std::int64_t wall_ms = 0;
  bool skipped = false;
};

struct RunManifest {
  std::string tool_version;
  std::string config_hash;
  std::map<std::string, StageRecord> stages;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  static std::optional<RunManifest> load(const std::filesystem::path& out_dir);
};

std::string_view tool_version();

struct RunOptions {
  std::filesystem::path out_dir = "out";
  bool force = false;
};

// Runs the requested stages in canonical order. A stage is skipped when its
// input hash and output files match the existing manifest.
RunManifest run_pipeline(const ExperimentConfig& config, std::span<const Stage> stages,
                         const RunOptions& options);

// Majority-vote audit and sentiment aggregation over the configured fixtures.
RunManifest run_audit(const ExperimentConfig& config, const RunOptions& options);

// Building blocks shared by the stages and the validation suites.
std::vector<SimUser> build_sim_users(std::span<const UserProfile> cohort,
                                     const std::map<std::string, Arm>& assignment,
                                     std::uint64_t world_seed, const WorldCalibration& world);

struct MeasureOutput {
  std::vector<EngagementSnapshot> pre;
  std::vector<EngagementSnapshot> post;
  std::vector<DeltaRecord> deltas;
};

MeasureOutput measure_cohort(std::span<const UserProfile> cohort,
                             const std::map<std::string, UserExposure>& exposure,
                             const NewsHandleList& handles, const PoliticalClassifier& classifier,
                             const FollowExclusionPolicy& exclusion,
                             const OutcomeEffects& true_effects, std::uint64_t world_seed,
                             std::uint64_t measure_seed, const WorldCalibration& world);

std::vector<AnalysisRecord> analysis_records(std::span<const UserProfile> cohort,
                                             std::span<const DeltaRecord> deltas);

}  // namespace nudge
