#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nudge/rng.h"
#include "nudge/types.h"

namespace nudge {

struct OutletRecord {
  std::string name;
  double credibility = 0.0;
  double bias = 0.0;
  std::string handle;                  // "@..."
  std::map<Topic, std::string> sections;  // absent topic = no section

  bool has_section(Topic topic) const { return sections.contains(topic); }
};

// Throws FormatError unless the handle starts with '@' and at least one
// section is present.
void validate(const OutletRecord& outlet);

struct EligibilityRule {
  double min_credibility = 40.0;  // strict: credibility > min
  double min_bias = -18.0;        // inclusive
  double max_bias = 18.0;         // inclusive
};

bool is_eligible(const OutletRecord& outlet, const EligibilityRule& rule = {});
std::vector<OutletRecord> filter_eligible(std::span<const OutletRecord> records,
                                          const EligibilityRule& rule = {});

struct OutletChoice {
  std::string name;
  std::string handle;
  std::string url;
};

// Uniform draw over the records that carry a section for `topic`. Throws if
// none does.
OutletChoice select_outlet(Topic topic, std::span<const OutletRecord> records, Rng& rng);

// CSV: name,credibility,bias,handle,entertainment_url,lifestyle_url,sports_url
std::vector<OutletRecord> parse_outlets(std::string_view csv, const std::string& source);
std::vector<OutletRecord> load_outlets(const std::filesystem::path& path);

}  // namespace nudge
