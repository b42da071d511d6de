// nudge: run the experiment pipeline stage by stage from a JSON config.
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "nudge/pipeline.h"

namespace {

void print_manifest(const nudge::RunManifest& manifest, const std::vector<std::string>& stages) {
  for (const auto& name : stages) {
    const auto it = manifest.stages.find(name);
    if (it == manifest.stages.end()) continue;
    if (it->second.skipped) {
      fmt::print("{}: skipped (inputs unchanged)\n", name);
    } else {
      fmt::print("{}: done in {} ms, {} output(s)\n", name, it->second.wall_ms,
                 it->second.outputs.size());
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiment pipeline for news-nudging reply bots"};
  app.set_version_flag("--version", std::string(nudge::tool_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  bool force = false;
  app.add_option("--config", config_path, "Experiment config (JSON)")->required();
  app.add_option("--seed", seed, "Override the master seed");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_flag("--force", force, "Rerun stages even when inputs are unchanged");

  std::vector<std::pair<CLI::App*, std::vector<nudge::Stage>>> stage_commands;
  for (auto stage : nudge::kAllStages) {
    auto* sub = app.add_subcommand(std::string(nudge::to_string(stage)),
                                   fmt::format("Run the {} stage", nudge::to_string(stage)));
    sub->fallthrough();
    stage_commands.push_back({sub, {stage}});
  }
  auto* run = app.add_subcommand("run", "Run every stage in order");
  run->fallthrough();
  stage_commands.push_back({run, {nudge::kAllStages.begin(), nudge::kAllStages.end()}});
  auto* audit = app.add_subcommand("audit", "Aggregate reply-quality annotations and sentiment");
  audit->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = nudge::ExperimentConfig::load(config_path, seed);
    const nudge::RunOptions options{out_dir, force};
    if (audit->parsed()) {
      print_manifest(nudge::run_audit(config, options), {"audit"});
      return 0;
    }
    for (const auto& [sub, stages] : stage_commands) {
      if (!sub->parsed()) continue;
      const auto manifest = nudge::run_pipeline(config, stages, options);
      std::vector<std::string> names;
      for (auto s : stages) names.emplace_back(nudge::to_string(s));
      print_manifest(manifest, names);
    }
  } catch (const nudge::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
