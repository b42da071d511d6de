#include "nudge/report.h"

#include <algorithm>
#include <sstream>

#include <fmt/core.h>

#include "nudge/csv.h"
#include "nudge/estimation.h"
#include "nudge/pipeline.h"
#include "nudge/simulator.h"
#include "nudge/text.h"

namespace nudge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ReportTable table_from_csv(std::string name, std::string title, const fs::path& path) {
  const auto rows = parse_csv(read_file(path));
  ReportTable t{std::move(name), std::move(title), {}, {}};
  if (rows.empty()) return t;
  t.columns = rows.front();
  t.rows.assign(rows.begin() + 1, rows.end());
  return t;
}

ReportTable funnel_table(const fs::path& path) {
  const auto j = json::parse(read_file(path));
  ReportTable t{"funnel", "Cohort Funnel", {"Stage", "Survivors"}, {}};
  for (const auto& s : j.at("stages")) {
    t.rows.push_back({s.at("stage").get<std::string>(), std::to_string(s.at("survivors").get<std::size_t>())});
  }
  t.rows.push_back({"activity_cap_threshold", std::to_string(j.at("activity_cap").get<std::uint64_t>())});
  return t;
}

ReportTable means_table(const fs::path& out) {
  const auto pre = parse_snapshots_csv(read_file(out / "measure/pre.csv"), "measure/pre.csv");
  const auto post = parse_snapshots_csv(read_file(out / "measure/post.csv"), "measure/post.csv");
  const auto exposure =
      parse_exposure_csv(read_file(out / "simulate/exposure.csv"), "simulate/exposure.csv");
  if (pre.size() != post.size()) throw FormatError("pre/post snapshot counts differ");

  // Control: all control users. Treatment arms: users who received a reply.
  const std::array<Arm, 3> columns = {Arm::kControl, Arm::kFemaleBot, Arm::kMaleBot};
  auto member = [&](const std::string& id, Arm arm) {
    const auto it = exposure.find(id);
    if (it == exposure.end() || it->second.arm != arm) return false;
    return arm == Arm::kControl || it->second.treated;
  };
  ReportTable t{"means",
                "Mean Metrics for the Pre- and Post- Experiments",
                {"Metric", "Control", "Female (Treated)", "Male (Treated)"},
                {}};
  const std::array<std::pair<Outcome, std::string_view>, kOutcomeCount> metrics = {
      {{Outcome::kNewsFollows, "News Accounts Followed"},
       {Outcome::kNewsLikes, "News Likes"},
       {Outcome::kNewsRetweets, "News (Re)tweets"},
       {Outcome::kPoliticalLikes, "Political Likes"},
       {Outcome::kPoliticalRetweets, "Political Tweets"}}};
  for (const auto& [outcome, name] : metrics) {
    for (int period = 0; period < 2; ++period) {
      const auto& snaps = period == 0 ? pre : post;
      std::vector<std::string> row{fmt::format("{} {}", period == 0 ? "Pre" : "Post", name)};
      for (auto arm : columns) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& s : snaps) {
          if (!member(s.user_id, arm)) continue;
          if (const auto v = s.value(outcome)) {
            sum += *v;
            ++n;
          }
        }
        row.push_back(n > 0 ? fmt::format("{:.2f}", sum / static_cast<double>(n)) : "n/a");
      }
      t.rows.push_back(std::move(row));
    }
  }
  std::vector<std::string> count_row{"Total User Count"};
  for (auto arm : columns) {
    std::size_t n = 0;
    for (const auto& s : pre) n += member(s.user_id, arm) ? 1 : 0;
    count_row.push_back(std::to_string(n));
  }
  t.rows.push_back(std::move(count_row));
  return t;
}

std::string_view covariate_label(std::string_view name) {
  if (name == "favorites") return "Favourites count";
  if (name == "statuses") return "Statuses count";
  if (name == "followers") return "Followers count";
  if (name == "following") return "Friends count";
  return name;
}

std::string pair_label(Pair pair) {
  switch (pair) {
    case Pair::kFemale:
      return "Female";
    case Pair::kMale:
      return "Male";
    case Pair::kCombined:
      return "Combined";
  }
  return "?";
}

ReportTable weighting_table(const std::vector<BalanceRow>& rows) {
  ReportTable t{"balance_weighting",
                "Balance Between Groups After Entropy Matching, Adjusted Mean Difference",
                {"Pair", "Covariate", "Adjusted Mean Diff. (ITT)", "Unweighted (Treated)",
                 "Adjusted Mean Diff. (Treated)"},
                {}};
  auto find = [&](Pair p, Estimand e, std::string_view cov) -> const BalanceRow* {
    for (const auto& r : rows) {
      if (r.subgroup == kAllUsers && r.pair == p && r.estimand == e && r.covariate == cov) {
        return &r;
      }
    }
    return nullptr;
  };
  auto cell = [](const BalanceRow* r, bool after) {
    if (r == nullptr || !r->available) return std::string("n/a");
    return fmt::format("{:.4f}", after ? r->after : r->before);
  };
  for (auto pair : kAllPairs) {
    for (auto cov : kCovariateNames) {
      const auto* itt = find(pair, Estimand::kITT, cov);
      const auto* tr = find(pair, Estimand::kTreated, cov);
      t.rows.push_back({"Control - " + pair_label(pair), std::string(covariate_label(cov)),
                        cell(itt, true), cell(tr, false), cell(tr, true)});
    }
  }
  return t;
}

std::string stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

std::string effect_cell(const EffectEstimate* e) {
  if (e == nullptr || !e->available) return "n/a";
  return fmt::format("{:.4f}{} ({:.4f})", e->fit.coef, stars(e->fit.p_value), e->fit.se);
}

const EffectEstimate* find_effect(const std::vector<EffectEstimate>& effects,
                                  std::string_view subgroup, Pair pair, Estimand estimand,
                                  Outcome outcome, FollowCap cap) {
  for (const auto& e : effects) {
    if (e.subgroup == subgroup && e.pair == pair && e.estimand == estimand &&
        e.outcome == outcome && (outcome != Outcome::kNewsFollows || e.follow_cap == cap)) {
      return &e;
    }
  }
  return nullptr;
}

std::string estimand_title(Estimand e) {
  return e == Estimand::kITT ? "Intention to Treat" : "Treated";
}

std::string subgroup_title(std::string_view subgroup) {
  if (subgroup == "political_high") return "High Political";
  if (subgroup == "political_low") return "Low Political";
  if (subgroup.starts_with("topic_")) {
    auto topic = std::string(subgroup.substr(6));
    if (!topic.empty()) topic[0] = static_cast<char>(topic[0] - 'a' + 'A');
    return topic + " Users";
  }
  return "Full";
}

ReportTable effects_table(const std::vector<EffectEstimate>& effects, std::string_view subgroup,
                          Estimand estimand, FollowCap cap) {
  ReportTable t;
  t.name = subgroup == kAllUsers
               ? fmt::format("effects_{}", to_string(estimand))
               : fmt::format("effects_{}_{}", subgroup, to_string(estimand));
  t.title = fmt::format("{} Engagement Regression with Entropy Balancing ({})",
                        subgroup_title(subgroup), estimand_title(estimand));
  t.columns = {"Treatment"};
  for (auto o : kAllOutcomes) t.columns.emplace_back(label(o));
  for (auto pair : kAllPairs) {
    std::vector<std::string> row{pair_label(pair)};
    for (auto o : kAllOutcomes) {
      row.push_back(effect_cell(find_effect(effects, subgroup, pair, estimand, o, cap)));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

ReportTable exclusion_table(const std::vector<EffectEstimate>& effects, Estimand estimand) {
  ReportTable t{fmt::format("exclusion_variants_{}", to_string(estimand)),
                fmt::format("News Following Effects by Exclusion Criteria ({})",
                            estimand_title(estimand)),
                {"Treatment", "200", "500", "none"},
                {}};
  for (auto pair : kAllPairs) {
    std::vector<std::string> row{pair_label(pair)};
    for (auto cap : kAllFollowCaps) {
      const auto* e =
          find_effect(effects, kAllUsers, pair, estimand, Outcome::kNewsFollows, cap);
      if (e == nullptr || !e->available) {
        row.push_back("n/a");
      } else {
        row.push_back(fmt::format("{:.4f} [{:.4f}, {:.4f}] n={}", e->fit.coef, e->fit.ci_low,
                                  e->fit.ci_high, e->fit.n));
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

ReportTable simulation_table(const fs::path& path) {
  const auto j = json::parse(read_file(path));
  ReportTable t{"simulation", "Simulated Deployment Summary", {"Quantity", "Value"}, {}};
  t.rows.push_back({"users", std::to_string(j.at("users").get<std::size_t>())});
  t.rows.push_back({"posts", std::to_string(j.at("posts").get<std::size_t>())});
  t.rows.push_back({"keyword_posts", std::to_string(j.at("keyword_posts").get<std::size_t>())});
  t.rows.push_back(
      {"keyword_share_pct", fmt::format("{:.1f}", 100.0 * j.at("keyword_share").get<double>())});
  t.rows.push_back({"replies", std::to_string(j.at("replies").get<std::size_t>())});
  t.rows.push_back({"silent_users", std::to_string(j.at("silent_users").get<std::size_t>())});
  t.rows.push_back(
      {"no_keyword_users", std::to_string(j.at("no_keyword_users").get<std::size_t>())});
  for (auto arm : kAllArms) {
    const auto& a = j.at("arms").at(std::string(to_string(arm)));
    t.rows.push_back({fmt::format("{}_treated", to_string(arm)),
                      fmt::format("{} of {}", a.at("treated").get<std::size_t>(),
                                  a.at("users").get<std::size_t>())});
  }
  return t;
}

}  // namespace

std::vector<ReportTable> build_report_tables(const fs::path& out, FollowCap primary_cap) {
  std::vector<ReportTable> tables;
  tables.push_back(funnel_table(out / "cohort/funnel.json"));
  tables.push_back(simulation_table(out / "simulate/summary.json"));
  tables.push_back(means_table(out));
  tables.push_back(table_from_csv("balance_account",
                                  "Pre-Treatment Account-Level Variable Balance by Treatment",
                                  out / "assign/balance.csv"));
  tables.push_back(table_from_csv("balance_activity",
                                  "Pre-Treatment Activity-Level Variable Balance by Treatment",
                                  out / "measure/activity_balance.csv"));
  const auto balance =
      parse_balance_rows_csv(read_file(out / "estimate/balance.csv"), "estimate/balance.csv");
  tables.push_back(weighting_table(balance));

  const auto effects =
      parse_estimates_csv(read_file(out / "estimate/estimates.csv"), "estimate/estimates.csv");
  std::vector<Estimand> estimands;
  std::vector<std::string> subgroups;
  for (const auto& e : effects) {
    if (std::find(estimands.begin(), estimands.end(), e.estimand) == estimands.end()) {
      estimands.push_back(e.estimand);
    }
    if (std::find(subgroups.begin(), subgroups.end(), e.subgroup) == subgroups.end()) {
      subgroups.push_back(e.subgroup);
    }
  }
  std::sort(estimands.begin(), estimands.end());
  for (const auto& subgroup : subgroups) {
    for (auto estimand : estimands) {
      tables.push_back(effects_table(effects, subgroup, estimand, primary_cap));
    }
  }
  for (auto estimand : estimands) tables.push_back(exclusion_table(effects, estimand));

  if (fs::is_regular_file(out / "audit/audit.json")) {
    const auto j = json::parse(read_file(out / "audit/audit.json"));
    ReportTable t{"audit", "Reply Quality Audit (Majority Vote)", {"Outcome", "Count"}, {}};
    t.rows.push_back({"satisfactory", std::to_string(j.at("satisfactory").get<std::size_t>())});
    t.rows.push_back(
        {"unsatisfactory", std::to_string(j.at("unsatisfactory").get<std::size_t>())});
    t.rows.push_back({"accuracy_pct", fmt::format("{:.1f}", j.at("rate_pct").get<double>())});
    tables.push_back(std::move(t));
  }
  if (fs::is_regular_file(out / "audit/sentiment.csv")) {
    tables.push_back(table_from_csv("sentiment", "Sentiment Analysis of Responses",
                                    out / "audit/sentiment.csv"));
  }
  return tables;
}

std::string render_table_text(const ReportTable& table) {
  std::vector<std::size_t> width(table.columns.size(), 0);
  auto measure = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) {
      width[i] = std::max(width[i], code_point_length(row[i]));
    }
  };
  measure(table.columns);
  for (const auto& row : table.rows) measure(row);
  std::string out = table.title + "\n";
  auto line = [&](const std::vector<std::string>& row) {
    std::string s;
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) {
      if (i > 0) s += "  ";
      s += row[i];
      if (i + 1 < row.size()) s.append(width[i] - code_point_length(row[i]), ' ');
    }
    out += s + "\n";
  };
  line(table.columns);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') + "\n";
  for (const auto& row : table.rows) line(row);
  return out;
}

json report_to_json(std::span<const ReportTable> tables) {
  json arr = json::array();
  for (const auto& t : tables) {
    arr.push_back({{"name", t.name}, {"title", t.title}, {"columns", t.columns}, {"rows", t.rows}});
  }
  return {{"schema", kReportSchema}, {"tables", arr}};
}

std::vector<ReportTable> report_from_json(const json& j) {
  try {
    if (j.at("schema").get<std::string>() != kReportSchema) {
      throw FormatError("report: unsupported schema " + j.at("schema").dump());
    }
    std::vector<ReportTable> tables;
    for (const auto& t : j.at("tables")) {
      ReportTable table;
      table.name = t.at("name").get<std::string>();
      table.title = t.at("title").get<std::string>();
      table.columns = t.at("columns").get<std::vector<std::string>>();
      table.rows = t.at("rows").get<std::vector<std::vector<std::string>>>();
      for (const auto& row : table.rows) {
        if (row.size() != table.columns.size()) {
          throw FormatError("report: row width differs from the column count in " + table.name);
        }
      }
      tables.push_back(std::move(table));
    }
    return tables;
  } catch (const json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

std::map<std::string, std::string> render_report(std::span<const ReportTable> tables,
                                                 ReportFormat format) {
  std::map<std::string, std::string> files;
  switch (format) {
    case ReportFormat::kCsv:
      for (const auto& t : tables) {
        std::ostringstream out;
        write_csv_row(out, t.columns);
        for (const auto& row : t.rows) write_csv_row(out, row);
        files[t.name + ".csv"] = out.str();
      }
      break;
    case ReportFormat::kJson:
      files["report.json"] = report_to_json(tables).dump(2) + "\n";
      break;
    case ReportFormat::kText: {
      std::string text;
      for (const auto& t : tables) {
        if (!text.empty()) text += "\n";
        text += render_table_text(t);
      }
      files["report.txt"] = text;
      break;
    }
  }
  return files;
}

}  // namespace nudge
