#include "nudge/outlets.h"

#include <fmt/core.h>

#include "nudge/csv.h"
#include "nudge/text.h"

namespace nudge {

void validate(const OutletRecord& outlet) {
  if (outlet.handle.size() < 2 || outlet.handle.front() != '@') {
    throw FormatError(fmt::format("outlet '{}': handle must start with '@'", outlet.name));
  }
  if (outlet.sections.empty()) {
    throw FormatError(fmt::format("outlet '{}': no section URLs", outlet.name));
  }
}

bool is_eligible(const OutletRecord& outlet, const EligibilityRule& rule) {
  return outlet.credibility > rule.min_credibility && outlet.bias >= rule.min_bias &&
         outlet.bias <= rule.max_bias;
}

std::vector<OutletRecord> filter_eligible(std::span<const OutletRecord> records,
                                          const EligibilityRule& rule) {
  std::vector<OutletRecord> out;
  for (const auto& r : records) {
    if (is_eligible(r, rule)) out.push_back(r);
  }
  return out;
}

OutletChoice select_outlet(Topic topic, std::span<const OutletRecord> records, Rng& rng) {
  std::vector<const OutletRecord*> candidates;
  for (const auto& r : records) {
    if (r.has_section(topic)) candidates.push_back(&r);
  }
  if (candidates.empty()) {
    throw Error(fmt::format("select_outlet: no outlet has a {} section", to_string(topic)));
  }
  const auto* pick = candidates[rng.index(candidates.size())];
  return {pick->name, pick->handle, pick->sections.at(topic)};
}

std::vector<OutletRecord> parse_outlets(std::string_view csv, const std::string& source) {
  const auto table = CsvTable::parse(csv, source);
  table.require_header({"name", "credibility", "bias", "handle", "entertainment_url",
                        "lifestyle_url", "sports_url"});
  std::vector<OutletRecord> out;
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto& row = table.rows()[r];
    const auto where = fmt::format("{}: row {}", source, r + 2);
    OutletRecord rec;
    rec.name = std::string(trim(row[0]));
    rec.credibility = parse_double(row[1], where);
    rec.bias = parse_double(row[2], where);
    rec.handle = std::string(trim(row[3]));
    const std::pair<Topic, std::size_t> cols[] = {
        {Topic::kEntertainment, 4}, {Topic::kLifestyle, 5}, {Topic::kSports, 6}};
    for (auto [topic, col] : cols) {
      auto url = trim(row[col]);
      if (!url.empty()) rec.sections.emplace(topic, std::string(url));
    }
    validate(rec);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<OutletRecord> load_outlets(const std::filesystem::path& path) {
  return parse_outlets(read_file(path), path.string());
}

}  // namespace nudge
