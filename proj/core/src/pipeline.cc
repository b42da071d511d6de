#include "nudge/pipeline.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <functional>
#include <set>
#include <sstream>

#include <fmt/core.h>

#include "nudge/audit.h"
#include "nudge/csv.h"
#include "nudge/hash.h"
#include "nudge/lexicon.h"
#include "nudge/outlets.h"
#include "nudge/replygen.h"
#include "nudge/report.h"

#ifndef NUDGE_VERSION
#define NUDGE_VERSION "0.0.0"
#endif

namespace nudge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kPopulationStream = 0;
constexpr std::uint64_t kWorldStream = 1;
constexpr std::uint64_t kSimulationStream = 2;
constexpr std::uint64_t kAssignmentStream = 3;
constexpr std::uint64_t kMeasureStream = 4;

}  // namespace

std::string_view tool_version() { return NUDGE_VERSION; }

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kCohort:
      return "cohort";
    case Stage::kAssign:
      return "assign";
    case Stage::kSimulate:
      return "simulate";
    case Stage::kMeasure:
      return "measure";
    case Stage::kEstimate:
      return "estimate";
    case Stage::kReport:
      return "report";
  }
  return "unknown";
}

std::optional<Stage> parse_stage(std::string_view text) {
  for (auto s : kAllStages) {
    if (text == to_string(s)) return s;
  }
  return std::nullopt;
}

std::string_view to_string(ReportFormat format) {
  switch (format) {
    case ReportFormat::kCsv:
      return "csv";
    case ReportFormat::kJson:
      return "json";
    case ReportFormat::kText:
      return "text";
  }
  return "unknown";
}

std::optional<ReportFormat> parse_report_format(std::string_view text) {
  for (auto f : {ReportFormat::kCsv, ReportFormat::kJson, ReportFormat::kText}) {
    if (text == to_string(f)) return f;
  }
  return std::nullopt;
}

StageError::StageError(std::string_view stage, const std::string& message)
    : Error(fmt::format("{}: {}", stage, message)), stage_(stage) {}

std::unique_ptr<Generator> GeneratorSpec::make() const {
  if (kind == "template_echo") return std::make_unique<TemplateEchoGenerator>();
  if (kind == "http") {
    return std::make_unique<HttpGenerator>(url, std::chrono::milliseconds(timeout_ms));
  }
  throw ConfigError(fmt::format("unknown generator kind '{}'", kind));
}

namespace {

void check_keys(const json& j, std::string_view section, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(fmt::format("config: '{}' must be an object", section));
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(fmt::format("config: unknown key '{}' in '{}'", key, section));
  }
}

template <class T>
T get_or(const json& j, std::string_view section, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("config: '{}.{}' has the wrong type", section, key));
  }
}

const json& section_of(const json& j, const char* key) {
  static const json empty = json::object();
  return j.contains(key) ? j.at(key) : empty;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& input, const fs::path& base_dir,
                                             std::optional<std::uint64_t> seed_override) {
  ExperimentConfig c;
  c.source = input;
  check_keys(input, "<root>",
             {"seed", "paths", "population", "cohort", "assignment", "simulation", "world",
              "exclusion", "estimation", "report"});
  if (seed_override) c.source["seed"] = *seed_override;
  if (!c.source.contains("seed")) throw ConfigError("config: 'seed' is required");
  c.seed = get_or<std::uint64_t>(c.source, "<root>", "seed", 0);

  const auto& paths = section_of(input, "paths");
  check_keys(paths, "paths",
             {"lexicon", "outlets", "news_handles", "templates", "profanity", "platform_terms",
              "generic_responses", "political_terms", "candidates", "annotations",
              "sentiment_labels"});
  auto required = [&](const char* key) {
    if (!paths.contains(key)) throw ConfigError(fmt::format("config: 'paths.{}' is required", key));
    return resolve(base_dir, get_or<std::string>(paths, "paths", key, ""));
  };
  auto optional_path = [&](const char* key) -> std::optional<fs::path> {
    if (!paths.contains(key) || paths.at(key).is_null()) return std::nullopt;
    return resolve(base_dir, get_or<std::string>(paths, "paths", key, ""));
  };
  c.paths.lexicon = required("lexicon");
  c.paths.outlets = required("outlets");
  c.paths.news_handles = required("news_handles");
  c.paths.templates = required("templates");
  c.paths.profanity = required("profanity");
  c.paths.platform_terms = required("platform_terms");
  c.paths.generic_responses = required("generic_responses");
  c.paths.political_terms = required("political_terms");
  c.paths.candidates = optional_path("candidates");
  c.paths.annotations = optional_path("annotations");
  c.paths.sentiment_labels = optional_path("sentiment_labels");

  const auto& pop = section_of(input, "population");
  check_keys(pop, "population", {"candidates"});
  c.population = get_or<std::size_t>(pop, "population", "candidates", 0);

  const auto& co = section_of(input, "cohort");
  check_keys(co, "cohort",
             {"preset", "cap_mode", "cap_percentile", "absolute_cap", "min_weekly_keyword_tweets",
              "followers_min", "followers_max", "following_min", "following_max",
              "bot_score_cutoff"});
  const auto preset = get_or<std::string>(co, "cohort", "preset", "supplementary");
  if (preset == "supplementary") {
    c.cohort = CohortConfig::supplementary_preset();
  } else if (preset == "main_text") {
    c.cohort = CohortConfig::main_text_preset();
  } else {
    throw ConfigError(fmt::format("config: unknown cohort preset '{}'", preset));
  }
  if (co.contains("cap_mode")) {
    const auto mode = get_or<std::string>(co, "cohort", "cap_mode", "");
    if (mode == "percentile") {
      c.cohort.cap_mode = ActivityCapMode::kPercentile;
    } else if (mode == "absolute") {
      c.cohort.cap_mode = ActivityCapMode::kAbsolute;
    } else {
      throw ConfigError(fmt::format("config: unknown cohort.cap_mode '{}'", mode));
    }
  }
  c.cohort.cap_percentile = get_or(co, "cohort", "cap_percentile", c.cohort.cap_percentile);
  c.cohort.absolute_cap = get_or(co, "cohort", "absolute_cap", c.cohort.absolute_cap);
  c.cohort.min_weekly_keyword_tweets =
      get_or(co, "cohort", "min_weekly_keyword_tweets", c.cohort.min_weekly_keyword_tweets);
  c.cohort.followers_min = get_or(co, "cohort", "followers_min", c.cohort.followers_min);
  c.cohort.followers_max = get_or(co, "cohort", "followers_max", c.cohort.followers_max);
  c.cohort.following_min = get_or(co, "cohort", "following_min", c.cohort.following_min);
  c.cohort.following_max = get_or(co, "cohort", "following_max", c.cohort.following_max);
  c.cohort.bot_score_cutoff = get_or(co, "cohort", "bot_score_cutoff", c.cohort.bot_score_cutoff);

  const auto& as = section_of(input, "assignment");
  check_keys(as, "assignment", {"seed", "proportions"});
  c.assignment_seed =
      get_or<std::uint64_t>(as, "assignment", "seed", mix_seed(c.seed, kAssignmentStream));
  if (as.contains("proportions")) {
    const auto v = get_or<std::vector<double>>(as, "assignment", "proportions", {});
    if (v.size() != 3) throw ConfigError("config: 'assignment.proportions' needs 3 weights");
    std::copy(v.begin(), v.end(), c.proportions.weights.begin());
  }

  const auto& sim = section_of(input, "simulation");
  check_keys(sim, "simulation",
             {"duration_days", "scrape_interval_hours", "reply_cooldown_hours", "seed",
              "true_effects", "like_reply_prob", "follow_outlet_prob", "generator_threads",
              "generator"});
  c.simulation.duration_days = get_or(sim, "simulation", "duration_days", c.simulation.duration_days);
  c.simulation.scrape_interval_hours =
      get_or(sim, "simulation", "scrape_interval_hours", c.simulation.scrape_interval_hours);
  c.simulation.reply_cooldown_hours =
      get_or(sim, "simulation", "reply_cooldown_hours", c.simulation.reply_cooldown_hours);
  c.simulation.seed =
      get_or<std::uint64_t>(sim, "simulation", "seed", mix_seed(c.seed, kSimulationStream));
  c.simulation.like_reply_prob =
      get_or(sim, "simulation", "like_reply_prob", c.simulation.like_reply_prob);
  c.simulation.follow_outlet_prob =
      get_or(sim, "simulation", "follow_outlet_prob", c.simulation.follow_outlet_prob);
  c.simulation.generator_threads =
      get_or(sim, "simulation", "generator_threads", c.simulation.generator_threads);
  if (sim.contains("true_effects")) {
    const auto& te = sim.at("true_effects");
    if (!te.is_object()) throw ConfigError("config: 'simulation.true_effects' must be an object");
    for (const auto& [arm_name, outcomes] : te.items()) {
      const auto arm = parse_arm(arm_name);
      if (!arm) throw ConfigError(fmt::format("config: unknown arm '{}' in true_effects", arm_name));
      if (!outcomes.is_object()) throw ConfigError("config: true_effects entries must be objects");
      for (const auto& [outcome_name, value] : outcomes.items()) {
        const auto outcome = parse_outcome(outcome_name);
        if (!outcome || !value.is_number()) {
          throw ConfigError(
              fmt::format("config: bad true_effects entry '{}.{}'", arm_name, outcome_name));
        }
        c.simulation.true_effects[index_of(*arm)][index_of(*outcome)] = value.get<double>();
      }
    }
  }
  const auto& gen = section_of(sim, "generator");
  check_keys(gen, "simulation.generator", {"kind", "url", "timeout_ms"});
  c.generator.kind = get_or(gen, "simulation.generator", "kind", c.generator.kind);
  c.generator.url = get_or(gen, "simulation.generator", "url", c.generator.url);
  c.generator.timeout_ms = get_or(gen, "simulation.generator", "timeout_ms", c.generator.timeout_ms);

  const auto& world = section_of(input, "world");
  check_keys(world, "world",
             {"seed", "dormant_share", "posts_per_day_mean", "posts_per_day_sigma",
              "keyword_share_mean", "keyword_share_a", "dominant_topic_share",
              "propensity_concentration", "follow_retention"});
  c.world_seed = get_or<std::uint64_t>(world, "world", "seed", mix_seed(c.seed, kWorldStream));
  c.world.dormant_share = get_or(world, "world", "dormant_share", c.world.dormant_share);
  c.world.posts_per_day_mean = get_or(world, "world", "posts_per_day_mean", c.world.posts_per_day_mean);
  c.world.posts_per_day_sigma =
      get_or(world, "world", "posts_per_day_sigma", c.world.posts_per_day_sigma);
  c.world.keyword_share_mean = get_or(world, "world", "keyword_share_mean", c.world.keyword_share_mean);
  c.world.keyword_share_a = get_or(world, "world", "keyword_share_a", c.world.keyword_share_a);
  c.world.dominant_topic_share =
      get_or(world, "world", "dominant_topic_share", c.world.dominant_topic_share);
  c.world.propensity_concentration =
      get_or(world, "world", "propensity_concentration", c.world.propensity_concentration);
  c.world.follow_retention = get_or(world, "world", "follow_retention", c.world.follow_retention);
  c.measure_seed = mix_seed(c.seed, kMeasureStream);

  const auto& ex = section_of(input, "exclusion");
  check_keys(ex, "exclusion", {"min_relative_change", "max_relative_change", "primary_cap"});
  c.exclusion.min_relative_change =
      get_or(ex, "exclusion", "min_relative_change", c.exclusion.min_relative_change);
  c.exclusion.max_relative_change =
      get_or(ex, "exclusion", "max_relative_change", c.exclusion.max_relative_change);
  if (ex.contains("primary_cap")) {
    const auto& v = ex.at("primary_cap");
    const auto text = v.is_number() ? std::to_string(v.get<long long>())
                                    : get_or<std::string>(ex, "exclusion", "primary_cap", "");
    const auto cap = parse_follow_cap(text);
    if (!cap) throw ConfigError("config: 'exclusion.primary_cap' must be 200, 500 or \"none\"");
    c.exclusion.cap = *cap;
  }

  const auto& est = section_of(input, "estimation");
  check_keys(est, "estimation",
             {"estimands", "splits", "hc", "p_value", "confidence", "outcome_covariates",
              "min_group_size", "political_threshold", "balance_tol", "balance_max_iter"});
  if (est.contains("estimands")) {
    c.estimation.estimands.clear();
    for (const auto& name : get_or<std::vector<std::string>>(est, "estimation", "estimands", {})) {
      const auto e = parse_estimand(name);
      if (!e) throw ConfigError(fmt::format("config: unknown estimand '{}'", name));
      c.estimation.estimands.push_back(*e);
    }
  }
  if (est.contains("splits")) {
    c.estimation.splits.clear();
    for (const auto& name : get_or<std::vector<std::string>>(est, "estimation", "splits", {})) {
      const auto s = parse_split(name);
      if (!s) throw ConfigError(fmt::format("config: unknown subgroup split '{}'", name));
      c.estimation.splits.push_back(*s);
    }
  }
  const auto hc = get_or<std::string>(est, "estimation", "hc", "HC0");
  if (hc == "HC0") {
    c.estimation.gcomp.hc = HcVariant::kHC0;
  } else if (hc == "HC1") {
    c.estimation.gcomp.hc = HcVariant::kHC1;
  } else {
    throw ConfigError(fmt::format("config: unknown estimation.hc '{}'", hc));
  }
  const auto pv = get_or<std::string>(est, "estimation", "p_value", "normal");
  if (pv == "normal") {
    c.estimation.gcomp.p_value = PValueMethod::kNormal;
  } else if (pv == "t") {
    c.estimation.gcomp.p_value = PValueMethod::kStudentT;
  } else {
    throw ConfigError(fmt::format("config: unknown estimation.p_value '{}'", pv));
  }
  c.estimation.gcomp.confidence =
      get_or(est, "estimation", "confidence", c.estimation.gcomp.confidence);
  c.estimation.outcome_covariates =
      get_or(est, "estimation", "outcome_covariates", c.estimation.outcome_covariates);
  c.estimation.min_group_size =
      get_or(est, "estimation", "min_group_size", c.estimation.min_group_size);
  c.estimation.political_threshold =
      get_or(est, "estimation", "political_threshold", c.estimation.political_threshold);
  c.estimation.balance.tol = get_or(est, "estimation", "balance_tol", c.estimation.balance.tol);
  c.estimation.balance.max_iter =
      get_or(est, "estimation", "balance_max_iter", c.estimation.balance.max_iter);
  c.estimation.primary_cap = c.exclusion.cap;

  const auto& rep = section_of(input, "report");
  check_keys(rep, "report", {"formats"});
  if (rep.contains("formats")) {
    c.formats.clear();
    for (const auto& name : get_or<std::vector<std::string>>(rep, "report", "formats", {})) {
      const auto f = parse_report_format(name);
      if (!f) throw ConfigError(fmt::format("config: unknown report format '{}'", name));
      c.formats.push_back(*f);
    }
  }

  c.cohort.validate();
  c.proportions.validate();
  c.simulation.validate();
  c.world.validate();
  c.estimation.validate();
  if (!c.paths.candidates && c.population == 0) {
    throw ConfigError("config: set 'population.candidates' or 'paths.candidates'");
  }
  if (c.generator.kind != "template_echo" && c.generator.kind != "http") {
    throw ConfigError(fmt::format("config: unknown generator kind '{}'", c.generator.kind));
  }
  if (c.generator.kind == "http" && c.generator.url.empty()) {
    throw ConfigError("config: http generator needs 'url'");
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path,
                                        std::optional<std::uint64_t> seed_override) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return from_json(j, path.parent_path(), seed_override);
}

void ExperimentConfig::validate() const {
  std::vector<std::pair<const char*, fs::path>> files = {
      {"lexicon", paths.lexicon},
      {"outlets", paths.outlets},
      {"news_handles", paths.news_handles},
      {"templates", paths.templates},
      {"profanity", paths.profanity},
      {"platform_terms", paths.platform_terms},
      {"generic_responses", paths.generic_responses},
      {"political_terms", paths.political_terms}};
  if (paths.candidates) files.emplace_back("candidates", *paths.candidates);
  if (paths.annotations) files.emplace_back("annotations", *paths.annotations);
  if (paths.sentiment_labels) files.emplace_back("sentiment_labels", *paths.sentiment_labels);
  for (const auto& [name, p] : files) {
    if (!fs::is_regular_file(p)) {
      throw ConfigError(fmt::format("config: paths.{} does not exist: {}", name, p.string()));
    }
  }
}

std::string ExperimentConfig::hash() const { return sha256_hex(source.dump()); }

json RunManifest::to_json() const {
  json stages_json = json::object();
  for (const auto& [name, rec] : stages) {
    stages_json[name] = {{"input_hash", rec.input_hash},
                         {"outputs", rec.outputs},
                         {"wall_ms", rec.wall_ms},
                         {"skipped", rec.skipped}};
  }
  return {{"tool_version", tool_version},
          {"config_hash", config_hash},
          {"stages", stages_json}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& [name, rec] : j.at("stages").items()) {
      StageRecord r;
      r.input_hash = rec.at("input_hash").get<std::string>();
      r.outputs = rec.at("outputs").get<std::map<std::string, std::string>>();
      r.wall_ms = rec.value("wall_ms", std::int64_t{0});
      r.skipped = rec.value("skipped", false);
      m.stages[name] = std::move(r);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  return m;
}

std::optional<RunManifest> RunManifest::load(const fs::path& out_dir) {
  const auto path = out_dir / "manifest.json";
  if (!fs::exists(path)) return std::nullopt;
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<SimUser> build_sim_users(std::span<const UserProfile> cohort,
                                     const std::map<std::string, Arm>& assignment,
                                     std::uint64_t world_seed, const WorldCalibration& world) {
  std::vector<SimUser> users;
  users.reserve(cohort.size());
  std::set<std::string> seen;
  for (const auto& profile : cohort) {
    const auto it = assignment.find(profile.user_id);
    if (it == assignment.end()) {
      throw Error(fmt::format("user {} has no arm assignment", profile.user_id));
    }
    seen.insert(profile.user_id);
    users.push_back({profile.user_id, it->second, derive_activity(profile, world_seed, world)});
  }
  for (const auto& [id, arm] : assignment) {
    if (!seen.contains(id)) throw Error(fmt::format("assigned user {} is not in the cohort", id));
  }
  return users;
}

MeasureOutput measure_cohort(std::span<const UserProfile> cohort,
                             const std::map<std::string, UserExposure>& exposure,
                             const NewsHandleList& handles, const PoliticalClassifier& classifier,
                             const FollowExclusionPolicy& exclusion,
                             const OutcomeEffects& true_effects, std::uint64_t world_seed,
                             std::uint64_t measure_seed, const WorldCalibration& world) {
  std::map<std::string_view, const UserProfile*> by_id;
  for (const auto& p : cohort) by_id[p.user_id] = &p;
  MeasureOutput out;
  for (const auto& [id, exp] : exposure) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(fmt::format("exposed user {} is not in the cohort", id));
    const auto& profile = *it->second;
    const auto activity = derive_activity(profile, world_seed, world);
    const auto& pre_p = activity.baseline;
    const auto post_p = behavioral_response(exp.arm, exp.treated, pre_p, true_effects);
    const auto periods = generate_periods(profile, pre_p, post_p, handles, measure_seed, world);
    auto pre = snapshot_engagement(id, periods.pre.likes, periods.pre.tweets,
                                   periods.pre.followed, handles, classifier);
    auto post = snapshot_engagement(id, periods.post.likes, periods.post.tweets,
                                    periods.post.followed, handles, classifier);
    auto delta = compute_delta(pre, post);
    delta.arm = exp.arm;
    delta.treated = exp.treated;
    delta.topic = exp.topic;
    delta.pre_following_total = periods.pre.following_total;
    delta.post_following_total = periods.post.following_total;
    mark_follow_exclusions(delta, exclusion);
    out.pre.push_back(std::move(pre));
    out.post.push_back(std::move(post));
    out.deltas.push_back(std::move(delta));
  }
  return out;
}

std::vector<AnalysisRecord> analysis_records(std::span<const UserProfile> cohort,
                                             std::span<const DeltaRecord> deltas) {
  std::map<std::string_view, const UserProfile*> by_id;
  for (const auto& p : cohort) by_id[p.user_id] = &p;
  std::vector<AnalysisRecord> out;
  out.reserve(deltas.size());
  for (const auto& d : deltas) {
    const auto it = by_id.find(d.user_id);
    if (it == by_id.end()) throw Error(fmt::format("user {} is not in the cohort", d.user_id));
    const auto& p = *it->second;
    out.push_back({d,
                   {static_cast<double>(p.favorites), static_cast<double>(p.statuses),
                    static_cast<double>(p.followers), static_cast<double>(p.following)}});
  }
  return out;
}

namespace {

class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      if (errno == EEXIST) {
        throw Error(fmt::format("{} is locked by another run (remove {} if it is stale)",
                                dir.string(), path_.string()));
      }
      throw Error(fmt::format("cannot create {}: {}", path_.string(), std::strerror(errno)));
    }
    const auto pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd_, pid.data(), pid.size());
  }
  ~DirLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

using Outputs = std::map<std::string, std::string>;  // relative path -> content

struct Input {
  fs::path path;
  std::string producer;  // stage that writes it; empty for config-referenced files
  bool optional = false;
};

class Runner {
 public:
  Runner(const ExperimentConfig& config, const RunOptions& options)
      : config_(config), options_(options) {
    fs::create_directories(options_.out_dir);
    lock_.emplace(options_.out_dir);
    manifest_ = RunManifest::load(options_.out_dir).value_or(RunManifest{});
    manifest_.tool_version = std::string(tool_version());
    manifest_.config_hash = config_.hash();
  }

  fs::path out(const std::string& rel) const { return options_.out_dir / rel; }

  void run(std::string_view stage, const std::vector<Input>& inputs, const json& params,
           const std::function<Outputs()>& body) {
    std::string material = fmt::format("{}\n{}\n{}\n", stage, tool_version(), params.dump());
    for (const auto& in : inputs) {
      if (!fs::is_regular_file(in.path)) {
        if (in.optional) continue;
        if (!in.producer.empty()) throw StageError(stage, fmt::format("run {} first", in.producer));
        throw StageError(stage, fmt::format("missing input {}", in.path.string()));
      }
      material += fmt::format("{}={}\n", display(in.path), sha256_file(in.path));
    }
    const auto input_hash = sha256_hex(material);
    const std::string key(stage);
    if (!options_.force) {
      const auto it = manifest_.stages.find(key);
      if (it != manifest_.stages.end() && it->second.input_hash == input_hash &&
          outputs_intact(it->second)) {
        it->second.skipped = true;
        save();
        return;
      }
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outputs produced;
    try {
      produced = body();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage, e.what());
    }
    StageRecord rec;
    rec.input_hash = input_hash;
    for (const auto& [rel, content] : produced) {
      write_file(out(rel), content);
      rec.outputs[rel] = sha256_hex(content);
    }
    rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    manifest_.stages[key] = std::move(rec);
    save();
  }

  const RunManifest& manifest() const { return manifest_; }

 private:
  std::string display(const fs::path& p) const {
    const auto rel = p.lexically_relative(options_.out_dir);
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    return p.filename().generic_string();
  }

  bool outputs_intact(const StageRecord& rec) const {
    for (const auto& [rel, hash] : rec.outputs) {
      if (!fs::is_regular_file(out(rel)) || sha256_file(out(rel)) != hash) return false;
    }
    return true;
  }

  void save() { write_file(out("manifest.json"), manifest_.to_json().dump(2) + "\n"); }

  const ExperimentConfig& config_;
  const RunOptions& options_;
  std::optional<DirLock> lock_;
  RunManifest manifest_;
};

json effects_json(const OutcomeEffects& effects) {
  json j = json::object();
  for (auto arm : kAllArms) {
    for (auto o : kAllOutcomes) {
      const double v = effects[index_of(arm)][index_of(o)];
      if (v != 0.0) j[std::string(to_string(arm))][std::string(to_string(o))] = v;
    }
  }
  return j;
}

json world_json(const ExperimentConfig& c) {
  return {{"seed", c.world_seed},
          {"dormant_share", c.world.dormant_share},
          {"posts_per_day_mean", c.world.posts_per_day_mean},
          {"posts_per_day_sigma", c.world.posts_per_day_sigma},
          {"keyword_share_mean", c.world.keyword_share_mean},
          {"keyword_share_a", c.world.keyword_share_a},
          {"dominant_topic_share", c.world.dominant_topic_share},
          {"propensity_concentration", c.world.propensity_concentration},
          {"follow_retention", c.world.follow_retention}};
}

std::vector<UserProfile> read_cohort(const fs::path& p) { return read_users_csv(p); }

std::string anova_csv(const std::vector<std::pair<std::string, std::map<Arm, std::vector<double>>>>& metrics) {
  std::vector<BalanceReport> reports;
  for (const auto& [name, groups] : metrics) reports.push_back(anova_balance(name, groups));
  return balance_table_csv(reports);
}

void stage_cohort(Runner& r, const ExperimentConfig& c) {
  std::vector<Input> inputs;
  if (c.paths.candidates) inputs.push_back({*c.paths.candidates, ""});
  const json params = {{"population", c.population},
                       {"population_seed", mix_seed(c.seed, kPopulationStream)},
                       {"cohort", c.source.value("cohort", json::object())}};
  r.run("cohort", inputs, params, [&] {
    const auto candidates = c.paths.candidates
                                ? read_users_csv(*c.paths.candidates)
                                : synthesize_candidates(c.population,
                                                        mix_seed(c.seed, kPopulationStream));
    const auto report = build_cohort(candidates, c.cohort);
    const std::set<std::string> keep(report.final_ids.begin(), report.final_ids.end());
    std::vector<UserProfile> cohort;
    for (const auto& u : candidates) {
      if (keep.contains(u.user_id)) cohort.push_back(u);
    }
    if (cohort.empty()) throw Error("no candidates survived the filters");
    return Outputs{{"cohort/candidates.csv", users_to_csv(candidates)},
                   {"cohort/users.csv", users_to_csv(cohort)},
                   {"cohort/funnel.json", to_json(report).dump(2) + "\n"}};
  });
}

void stage_assign(Runner& r, const ExperimentConfig& c) {
  const json params = {{"seed", c.assignment_seed}, {"proportions", c.proportions.weights}};
  r.run("assign", {{r.out("cohort/users.csv"), "cohort"}}, params, [&] {
    const auto cohort = read_cohort(r.out("cohort/users.csv"));
    std::vector<std::string> ids;
    for (const auto& u : cohort) ids.push_back(u.user_id);
    const auto assignment = assign_arms(ids, c.assignment_seed, c.proportions);
    std::vector<std::pair<std::string, std::map<Arm, std::vector<double>>>> metrics = {
        {"Listed (Count)", {}},
        {"Likes (Count)", {}},
        {"Tweets (Count)", {}},
        {"Following (Count)", {}},
        {"Followers (Count)", {}}};
    for (const auto& u : cohort) {
      const auto arm = assignment.at(u.user_id);
      metrics[0].second[arm].push_back(static_cast<double>(u.listed));
      metrics[1].second[arm].push_back(static_cast<double>(u.favorites));
      metrics[2].second[arm].push_back(static_cast<double>(u.statuses));
      metrics[3].second[arm].push_back(static_cast<double>(u.following));
      metrics[4].second[arm].push_back(static_cast<double>(u.followers));
    }
    return Outputs{{"assign/assignment.csv", assignment_to_csv(assignment)},
                   {"assign/balance.csv", anova_csv(metrics)}};
  });
}

void stage_simulate(Runner& r, const ExperimentConfig& c) {
  const auto& s = c.simulation;
  const json params = {{"duration_days", s.duration_days},
                       {"scrape_interval_hours", s.scrape_interval_hours},
                       {"reply_cooldown_hours", s.reply_cooldown_hours},
                       {"seed", s.seed},
                       {"like_reply_prob", s.like_reply_prob},
                       {"follow_outlet_prob", s.follow_outlet_prob},
                       {"generator", {{"kind", c.generator.kind}, {"url", c.generator.url}}},
                       {"world", world_json(c)}};
  const std::vector<Input> inputs = {{r.out("cohort/users.csv"), "cohort"},
                                     {r.out("assign/assignment.csv"), "assign"},
                                     {c.paths.lexicon, ""},
                                     {c.paths.outlets, ""},
                                     {c.paths.templates, ""},
                                     {c.paths.profanity, ""},
                                     {c.paths.platform_terms, ""},
                                     {c.paths.generic_responses, ""}};
  r.run("simulate", inputs, params, [&] {
    const auto cohort = read_cohort(r.out("cohort/users.csv"));
    const auto assignment = read_assignment_csv(r.out("assign/assignment.csv"));
    const auto lexicon = load_lexicon(c.paths.lexicon);
    const auto all_outlets = load_outlets(c.paths.outlets);
    const auto outlets = filter_eligible(all_outlets);
    const auto gates =
        GateLexicons::load(c.paths.profanity, c.paths.platform_terms, c.paths.generic_responses);
    const auto generator = c.generator.make();
    ReplyBundle bundle{generator.get(), &gates, load_templates(c.paths.templates)};
    const auto users = build_sim_users(cohort, assignment, c.world_seed, c.world);
    const PoissonPostSource source(lexicon);
    const auto result = run_simulation(users, lexicon, outlets, bundle, source, s);

    json per_arm = json::object();
    for (auto arm : kAllArms) {
      std::size_t n = 0, treated = 0, replies = 0;
      for (const auto& [id, e] : result.exposure) {
        if (e.arm != arm) continue;
        ++n;
        treated += e.treated ? 1 : 0;
        replies += e.replies;
      }
      per_arm[std::string(to_string(arm))] = {
          {"users", n}, {"treated", treated}, {"replies", replies}};
    }
    std::size_t silent = 0, no_keyword = 0;
    for (const auto& [id, e] : result.exposure) {
      silent += e.posts == 0 ? 1 : 0;
      no_keyword += e.keyword_posts == 0 ? 1 : 0;
    }
    const json summary = {
        {"users", users.size()},
        {"posts", result.posts},
        {"keyword_posts", result.keyword_posts},
        {"keyword_share",
         result.posts > 0 ? static_cast<double>(result.keyword_posts) / result.posts : 0.0},
        {"replies", result.replies},
        {"silent_users", silent},
        {"no_keyword_users", no_keyword},
        {"arms", per_arm}};
    return Outputs{{"simulate/events.jsonl", events_to_jsonl(result.events)},
                   {"simulate/exposure.csv", exposure_to_csv(result.exposure)},
                   {"simulate/summary.json", summary.dump(2) + "\n"}};
  });
}

void stage_measure(Runner& r, const ExperimentConfig& c) {
  const json params = {{"world", world_json(c)},
                       {"measure_seed", c.measure_seed},
                       {"true_effects", effects_json(c.simulation.true_effects)},
                       {"exclusion",
                        {{"min_relative_change", c.exclusion.min_relative_change},
                         {"max_relative_change", c.exclusion.max_relative_change}}}};
  const std::vector<Input> inputs = {{r.out("cohort/users.csv"), "cohort"},
                                     {r.out("simulate/exposure.csv"), "simulate"},
                                     {c.paths.news_handles, ""},
                                     {c.paths.political_terms, ""}};
  r.run("measure", inputs, params, [&] {
    const auto cohort = read_cohort(r.out("cohort/users.csv"));
    const auto exposure_path = r.out("simulate/exposure.csv");
    const auto exposure = parse_exposure_csv(read_file(exposure_path), exposure_path.string());
    const auto handles = load_news_handles(c.paths.news_handles);
    const auto classifier = KeywordPoliticalClassifier::load(c.paths.political_terms);
    const auto m = measure_cohort(cohort, exposure, handles, classifier, c.exclusion,
                                  c.simulation.true_effects, c.world_seed, c.measure_seed,
                                  c.world);
    std::vector<std::pair<std::string, std::map<Arm, std::vector<double>>>> metrics;
    for (auto o : kAllOutcomes) metrics.push_back({std::string(label(o)), {}});
    for (std::size_t i = 0; i < m.pre.size(); ++i) {
      const auto arm = m.deltas[i].arm;
      for (auto o : kAllOutcomes) {
        if (const auto v = m.pre[i].value(o)) metrics[index_of(o)].second[arm].push_back(*v);
      }
    }
    return Outputs{{"measure/pre.csv", snapshots_to_csv(m.pre)},
                   {"measure/post.csv", snapshots_to_csv(m.post)},
                   {"measure/deltas.csv", deltas_to_csv(m.deltas)},
                   {"measure/activity_balance.csv", anova_csv(metrics)}};
  });
}

void stage_estimate(Runner& r, const ExperimentConfig& c) {
  const json params = {{"estimation", c.source.value("estimation", json::object())},
                       {"primary_cap", to_string(c.exclusion.cap)}};
  const std::vector<Input> inputs = {{r.out("cohort/users.csv"), "cohort"},
                                     {r.out("measure/deltas.csv"), "measure"}};
  r.run("estimate", inputs, params, [&] {
    const auto cohort = read_cohort(r.out("cohort/users.csv"));
    const auto deltas_path = r.out("measure/deltas.csv");
    const auto deltas = parse_deltas_csv(read_file(deltas_path), deltas_path.string());
    const auto records = analysis_records(cohort, deltas);
    const auto result = run_estimation(records, c.estimation);
    json arr = json::array();
    for (const auto& e : result.effects) arr.push_back(to_json(e));
    return Outputs{{"estimate/estimates.csv", estimates_to_csv(result.effects)},
                   {"estimate/estimates.json", arr.dump(2) + "\n"},
                   {"estimate/balance.csv", balance_rows_to_csv(result.balance)}};
  });
}

void stage_report(Runner& r, const ExperimentConfig& c) {
  json formats = json::array();
  for (auto f : c.formats) formats.push_back(to_string(f));
  const json params = {{"formats", formats}, {"primary_cap", to_string(c.exclusion.cap)}};
  const std::vector<Input> inputs = {
      {r.out("cohort/funnel.json"), "cohort"},
      {r.out("assign/balance.csv"), "assign"},
      {r.out("simulate/exposure.csv"), "simulate"},
      {r.out("simulate/summary.json"), "simulate"},
      {r.out("measure/pre.csv"), "measure"},
      {r.out("measure/post.csv"), "measure"},
      {r.out("measure/activity_balance.csv"), "measure"},
      {r.out("estimate/estimates.csv"), "estimate"},
      {r.out("estimate/balance.csv"), "estimate"},
      {r.out("audit/audit.json"), "audit", true},
      {r.out("audit/sentiment.csv"), "audit", true}};
  r.run("report", inputs, params, [&] {
    const auto tables = build_report_tables(r.out(""), c.exclusion.cap);
    Outputs outputs;
    for (auto f : c.formats) {
      for (auto& [name, content] : render_report(tables, f)) outputs["report/" + name] = content;
    }
    return outputs;
  });
}

}  // namespace

RunManifest run_pipeline(const ExperimentConfig& config, std::span<const Stage> stages,
                         const RunOptions& options) {
  config.validate();
  Runner runner(config, options);
  for (auto stage : kAllStages) {
    if (std::find(stages.begin(), stages.end(), stage) == stages.end()) continue;
    switch (stage) {
      case Stage::kCohort:
        stage_cohort(runner, config);
        break;
      case Stage::kAssign:
        stage_assign(runner, config);
        break;
      case Stage::kSimulate:
        stage_simulate(runner, config);
        break;
      case Stage::kMeasure:
        stage_measure(runner, config);
        break;
      case Stage::kEstimate:
        stage_estimate(runner, config);
        break;
      case Stage::kReport:
        stage_report(runner, config);
        break;
    }
  }
  return runner.manifest();
}

RunManifest run_audit(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  if (!config.paths.annotations && !config.paths.sentiment_labels) {
    throw StageError("audit", "set paths.annotations and/or paths.sentiment_labels");
  }
  Runner runner(config, options);
  std::vector<Input> inputs;
  if (config.paths.annotations) inputs.push_back({*config.paths.annotations, ""});
  if (config.paths.sentiment_labels) inputs.push_back({*config.paths.sentiment_labels, ""});
  runner.run("audit", inputs, json::object(), [&] {
    Outputs outputs;
    json audit = json::object();
    if (config.paths.annotations) {
      const auto matrix = AnnotationMatrix::load(*config.paths.annotations);
      const auto result = audit_majority_vote(matrix);
      audit["responses"] = matrix.rows();
      audit["annotators"] = matrix.annotators();
      audit["satisfactory"] = result.satisfactory;
      audit["unsatisfactory"] = result.unsatisfactory;
      audit["rate_pct"] = std::round(result.rate * 1000.0) / 10.0;
      outputs["audit/audit.json"] = audit.dump(2) + "\n";
    }
    if (config.paths.sentiment_labels) {
      const auto labels = load_sentiment_labels(*config.paths.sentiment_labels);
      outputs["audit/sentiment.csv"] = sentiment_table_csv(aggregate_sentiment(labels));
    }
    return outputs;
  });
  return runner.manifest();
}

}  // namespace nudge
