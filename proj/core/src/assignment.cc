#include "nudge/assignment.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/core.h>

#include "nudge/csv.h"
#include "nudge/rng.h"
#include "nudge/stats.h"
#include "nudge/text.h"

namespace nudge {

void ArmProportions::validate() const {
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw ConfigError("assignment: arm proportions must be positive and finite");
    }
  }
}

std::array<std::size_t, 3> arm_sizes(std::size_t n, const ArmProportions& proportions) {
  proportions.validate();
  const double total = std::accumulate(proportions.weights.begin(), proportions.weights.end(), 0.0);
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> fraction{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * proportions.weights[i] / total;
    sizes[i] = static_cast<std::size_t>(std::floor(exact));
    fraction[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fraction[a] > fraction[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[order[k % 3]];
  return sizes;
}

std::map<std::string, Arm> assign_arms(std::span<const std::string> user_ids,
                                       std::uint64_t seed, const ArmProportions& proportions) {
  if (user_ids.empty()) throw Error("assign_arms: no users");
  std::vector<std::string> ids(user_ids.begin(), user_ids.end());
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw Error("assign_arms: duplicate user id");
  }
  Rng rng(seed);
  for (std::size_t i = ids.size() - 1; i > 0; --i) {
    std::swap(ids[i], ids[rng.index(i + 1)]);
  }
  const auto sizes = arm_sizes(ids.size(), proportions);
  std::map<std::string, Arm> out;
  std::size_t pos = 0;
  for (Arm arm : kAllArms) {
    for (std::size_t k = 0; k < sizes[index_of(arm)]; ++k) out.emplace(ids[pos++], arm);
  }
  return out;
}

BalanceReport anova_balance(std::string metric_name,
                            const std::map<Arm, std::vector<double>>& groups) {
  std::vector<std::vector<double>> data;
  BalanceReport report;
  report.metric_name = std::move(metric_name);
  for (Arm arm : kAllArms) {
    auto it = groups.find(arm);
    if (it == groups.end()) {
      throw Error(fmt::format("anova_balance: missing arm {}", to_string(arm)));
    }
    const auto& values = it->second;
    report.group_sizes[index_of(arm)] = values.size();
    report.group_means[index_of(arm)] =
        values.empty() ? 0.0
                       : std::accumulate(values.begin(), values.end(), 0.0) /
                             static_cast<double>(values.size());
    data.push_back(values);
  }
  const auto anova = one_way_anova(data);
  report.f_stat = anova.f_stat;
  report.p_value = anova.p_value;
  report.degenerate = anova.degenerate;
  return report;
}

std::string balance_table_csv(std::span<const BalanceReport> reports) {
  std::ostringstream out;
  std::vector<std::string> header{"treatment"};
  for (const auto& r : reports) header.push_back(r.metric_name);
  write_csv_row(out, header);
  for (Arm arm : kAllArms) {
    std::vector<std::string> row{std::string(to_string(arm))};
    for (const auto& r : reports) row.push_back(fmt::format("{:.6f}", r.group_means[index_of(arm)]));
    write_csv_row(out, row);
  }
  std::vector<std::string> row{"ANOVA"};
  for (const auto& r : reports) row.push_back(fmt::format("{:.6f}", r.p_value));
  write_csv_row(out, row);
  return out.str();
}

std::string assignment_to_csv(const std::map<std::string, Arm>& assignment) {
  std::ostringstream out;
  write_csv_row(out, {"user_id", "arm"});
  for (const auto& [id, arm] : assignment) write_csv_row(out, {id, std::string(to_string(arm))});
  return out.str();
}

std::map<std::string, Arm> read_assignment_csv(const std::filesystem::path& path) {
  const auto table = CsvTable::read(path);
  table.require_header({"user_id", "arm"});
  std::map<std::string, Arm> out;
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto& row = table.rows()[r];
    const auto arm = parse_arm(trim(row[1]));
    if (!arm) throw FormatError(fmt::format("{}: row {}: unknown arm '{}'", path.string(), r + 2, row[1]));
    if (!out.emplace(std::string(trim(row[0])), *arm).second) {
      throw FormatError(fmt::format("{}: row {}: duplicate user", path.string(), r + 2));
    }
  }
  return out;
}

}  // namespace nudge
