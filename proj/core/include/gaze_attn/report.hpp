#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gaze_attn {

/// Empty cell, text, integer, real or boolean.
using Cell = std::variant<std::monostate, std::string, std::int64_t, double, bool>;

/// Tabular metric output with a fixed column list.
struct ReportTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  ReportTable() = default;
  explicit ReportTable(std::vector<std::string> cols) : columns(std::move(cols)) {}

  /// Appends a row; throws UsageError if the width does not match.
  void add_row(std::vector<Cell> row);
  std::size_t column_index(std::string_view name) const;

  bool operator==(const ReportTable&) const = default;
};

enum class ReportFormat { csv, json };

ReportFormat parse_report_format(std::string_view text);
std::string_view extension(ReportFormat format);

/// Text rendering. CSV quotes per RFC 4180 and uses CRLF line breaks; reals
/// are printed in shortest round-trip form so parsing back is exact.
std::string render_report(const ReportTable& table, ReportFormat format);
void write_report(const ReportTable& table, const std::filesystem::path& file, ReportFormat format);

/// Parses a rendered table. CSV cells come back typed by their text
/// ("true"/"false" booleans, integers, reals, otherwise strings).
ReportTable parse_report(std::string_view text, ReportFormat format);
ReportTable read_report(const std::filesystem::path& file, ReportFormat format);

}  // namespace gaze_attn
