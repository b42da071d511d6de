#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nudge/types.h"

namespace nudge {

// Relative arm weights, indexed by Arm. Normalized internally.
struct ArmProportions {
  std::array<double, 3> weights{1.0, 1.0, 1.0};
  void validate() const;
};

// Target arm sizes for n users: floor of the exact split, remainder handed
// out by largest fractional part (ties to the earlier arm). Every size is
// within 1 of n * weight.
std::array<std::size_t, 3> arm_sizes(std::size_t n, const ArmProportions& proportions);

// Seeded randomization: ids are sorted, shuffled with Fisher-Yates, and cut
// into contiguous slices of arm_sizes(). The result depends only on the set
// of ids and the seed. Throws on empty input or duplicate ids.
std::map<std::string, Arm> assign_arms(std::span<const std::string> user_ids,
                                       std::uint64_t seed,
                                       const ArmProportions& proportions = {});

struct BalanceReport {
  std::string metric_name;
  std::array<double, 3> group_means{};
  std::array<std::size_t, 3> group_sizes{};
  double f_stat = 0.0;
  double p_value = 1.0;
  bool degenerate = false;
};

// One-way ANOVA of a pre-treatment metric across the three arms.
BalanceReport anova_balance(std::string metric_name,
                            const std::map<Arm, std::vector<double>>& groups);

// CSV shaped like the balance tables: one row per arm with a column per
// metric, then a final "ANOVA" row of p-values.
std::string balance_table_csv(std::span<const BalanceReport> reports);

std::string assignment_to_csv(const std::map<std::string, Arm>& assignment);
std::map<std::string, Arm> read_assignment_csv(const std::filesystem::path& path);

}  // namespace nudge
