#include "gaze_attn/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <json.hpp>

#include "gaze_attn/error.hpp"
#include "gaze_attn/file_util.hpp"

namespace gaze_attn {
using nlohmann::ordered_json;

void ReportTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw UsageError("report row has " + std::to_string(row.size()) + " cells, expected " +
                     std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

std::size_t ReportTable::column_index(std::string_view name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw UsageError("no column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::csv;
  if (text == "json") return ReportFormat::json;
  throw UsageError("unknown report format '" + std::string(text) + "' (expected csv or json)");
}

std::string_view extension(ReportFormat format) { return format == ReportFormat::csv ? ".csv" : ".json"; }

namespace {

std::string cell_text(const Cell& cell) {
  struct Visitor {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const {
      // Keep reals distinguishable from integers when parsed back.
      std::string text = format_double(v);
      if (std::isfinite(v) && text.find_first_of(".e") == std::string::npos) text += ".0";
      return text;
    }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
  };
  return std::visit(Visitor{}, cell);
}

std::string csv_field(const std::string& text) {
  const bool needs_quotes = text.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quotes) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

ordered_json cell_json(const Cell& cell) {
  struct Visitor {
    ordered_json operator()(std::monostate) const { return nullptr; }
    ordered_json operator()(const std::string& s) const { return s; }
    ordered_json operator()(std::int64_t v) const { return v; }
    ordered_json operator()(double v) const {
      // JSON has no inf/nan.
      if (!std::isfinite(v)) return format_double(v);
      return v;
    }
    ordered_json operator()(bool v) const { return v; }
  };
  return std::visit(Visitor{}, cell);
}

Cell typed_cell(const std::string& text) {
  if (text.empty()) return std::monostate{};
  if (text == "true") return true;
  if (text == "false") return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  std::int64_t iv = 0;
  if (auto [p, ec] = std::from_chars(first, last, iv); ec == std::errc{} && p == last) return iv;
  double dv = 0.0;
  if (auto [p, ec] = std::from_chars(first, last, dv); ec == std::errc{} && p == last) return dv;
  if (text == "nan") return std::nan("");
  if (text == "inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  return text;
}

std::vector<std::vector<std::string>> parse_csv_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    records.push_back(std::move(record));
    record.clear();
    field_started = false;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        quoted = false;
      } else {
        field += c;
      }
      ++i;
      continue;
    }
    if (c == '"') {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\r' || c == '\n') {
      end_record();
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      field += c;
      field_started = true;
    }
    ++i;
  }
  if (quoted) throw DataError("unterminated quoted CSV field");
  if (field_started || !record.empty()) end_record();
  return records;
}

}  // namespace

std::string render_report(const ReportTable& table, ReportFormat format) {
  if (format == ReportFormat::csv) {
    std::string out;
    auto emit = [&out](const std::vector<std::string>& fields) {
      for (std::size_t k = 0; k < fields.size(); ++k) {
        if (k > 0) out += ',';
        out += csv_field(fields[k]);
      }
      out += "\r\n";
    };
    emit(table.columns);
    for (const auto& row : table.rows) {
      std::vector<std::string> fields;
      fields.reserve(row.size());
      for (const auto& cell : row) fields.push_back(cell_text(cell));
      emit(fields);
    }
    return out;
  }
  ordered_json doc = ordered_json::array();
  for (const auto& row : table.rows) {
    ordered_json obj = ordered_json::object();
    for (std::size_t k = 0; k < row.size(); ++k) obj[table.columns[k]] = cell_json(row[k]);
    doc.push_back(std::move(obj));
  }
  return doc.dump(2) + "\n";
}

void write_report(const ReportTable& table, const std::filesystem::path& file, ReportFormat format) {
  write_file_atomic(file, render_report(table, format));
}

ReportTable parse_report(std::string_view text, ReportFormat format) {
  ReportTable table;
  if (format == ReportFormat::csv) {
    auto records = parse_csv_records(text);
    if (records.empty()) throw DataError("CSV report has no header");
    table.columns = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
      std::vector<Cell> row;
      for (auto& field : records[r]) row.push_back(typed_cell(field));
      if (row.size() != table.columns.size()) throw DataError("CSV row width mismatch");
      table.rows.push_back(std::move(row));
    }
    return table;
  }
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const ordered_json::exception& e) {
    throw DataError(std::string("corrupt JSON report: ") + e.what());
  }
  if (!doc.is_array()) throw DataError("JSON report must be an array of row objects");
  for (const auto& obj : doc) {
    if (table.columns.empty()) {
      for (const auto& [key, value] : obj.items()) table.columns.push_back(key);
    }
    std::vector<Cell> row;
    for (const auto& column : table.columns) {
      if (!obj.contains(column)) throw DataError("JSON report row lacks column " + column);
      const auto& v = obj.at(column);
      if (v.is_null()) row.emplace_back(std::monostate{});
      else if (v.is_boolean()) row.emplace_back(v.get<bool>());
      else if (v.is_number_integer()) row.emplace_back(v.get<std::int64_t>());
      else if (v.is_number()) row.emplace_back(v.get<double>());
      else row.emplace_back(typed_cell(v.get<std::string>()));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

ReportTable read_report(const std::filesystem::path& file, ReportFormat format) {
  return parse_report(read_file(file), format);
}

}  // namespace gaze_attn
