#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nudge/metrics.h"

namespace nudge {

enum class ReportFormat;

struct ReportTable {
  std::string name;   // file stem, e.g. "effects_treated"
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  friend bool operator==(const ReportTable&, const ReportTable&) = default;
};

// Reads the stage outputs under `out_dir` and assembles every report table.
// Audit and sentiment tables appear only when the audit outputs exist.
std::vector<ReportTable> build_report_tables(const std::filesystem::path& out_dir,
                                             FollowCap primary_cap);

// File name (relative to the report dir) -> content.
std::map<std::string, std::string> render_report(std::span<const ReportTable> tables,
                                                 ReportFormat format);

std::string render_table_text(const ReportTable& table);

inline constexpr std::string_view kReportSchema = "nudge-report/1";
nlohmann::json report_to_json(std::span<const ReportTable> tables);
std::vector<ReportTable> report_from_json(const nlohmann::json& j);

}  // namespace nudge
