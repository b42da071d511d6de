#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace nudge {

using CsvRow = std::vector<std::string>;

// RFC 4180 parsing: quoted fields, doubled quotes, embedded commas and
// newlines. A trailing CR before LF is tolerated on read; writers emit LF.
std::vector<CsvRow> parse_csv(std::string_view content);

// A CSV file with a header row. Row numbers in diagnostics are 1-based file
// lines counting the header as line 1.
class CsvTable {
 public:
  CsvTable(CsvRow header, std::vector<CsvRow> rows, std::string source);

  static CsvTable parse(std::string_view content, std::string source);
  static CsvTable read(const std::filesystem::path& path);

  const CsvRow& header() const { return header_; }
  const std::vector<CsvRow>& rows() const { return rows_; }
  const std::string& source() const { return source_; }

  std::optional<std::size_t> find_column(std::string_view name) const;
  // Throws FormatError naming the file when the column is missing.
  std::size_t column(std::string_view name) const;

  // Throws unless the header equals `expected` exactly.
  void require_header(const std::vector<std::string_view>& expected) const;

 private:
  CsvRow header_;
  std::vector<CsvRow> rows_;
  std::string source_;
};

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

std::string read_file(const std::filesystem::path& path);
// Writes via a temporary sibling and rename so readers never see partial files.
void write_file(const std::filesystem::path& path, std::string_view content);

// One entry per non-empty line, trimmed; lines starting with '#' are skipped.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Parses a decimal field; throws FormatError with the source location on
// malformed input.
double parse_double(std::string_view text, std::string_view where);
unsigned long long parse_count(std::string_view text, std::string_view where);

}  // namespace nudge
