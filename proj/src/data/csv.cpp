#include "malmas/data/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "malmas/data/datetime.hpp"

namespace malmas::data {

CsvRecords parse_csv(std::string_view content) {
  if (content.starts_with("\xEF\xBB\xBF")) content.remove_prefix(3);

  std::vector<std::vector<std::optional<std::string>>> records;
  std::vector<std::optional<std::string>> record;
  std::string field;
  bool quoted = false;       // inside quotes
  bool was_quoted = false;   // current field started with a quote
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    if (field.empty()) record.emplace_back(std::nullopt);
    else record.emplace_back(std::move(field));
    field.clear();
    was_quoted = false;
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // Skip blank lines: a single missing field and nothing else.
    if (!(record.size() == 1 && !record.front())) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char ch = content[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started || was_quoted)
          throw DataError(fmt::format("CSV line {}: unexpected quote inside unquoted field", line));
        quoted = true;
        was_quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < content.size() && content[i + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        if (was_quoted) throw DataError(fmt::format("CSV line {}: characters after closing quote", line));
        field.push_back(ch);
        field_started = true;
    }
  }
  if (quoted) throw DataError("CSV: unterminated quoted field");
  if (field_started || was_quoted || !record.empty()) end_record();

  if (records.empty()) throw DataError("CSV: missing header row");
  CsvRecords out;
  for (std::size_t c = 0; c < records.front().size(); ++c) {
    const auto& name = records.front()[c];
    if (!name) throw DataError(fmt::format("CSV: header column {} is empty", c + 1));
    out.header.push_back(*name);
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != out.header.size())
      throw DataError(fmt::format("CSV: ragged row {} has {} fields, header has {}", r + 1, records[r].size(),
                                  out.header.size()));
    out.rows.push_back(std::move(records[r]));
  }
  return out;
}

std::optional<double> parse_number(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (text.starts_with('+')) text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec == std::errc::result_out_of_range) {
    // Overflowing decimals are still numbers; zero-fill happens at preprocessing.
    return text.front() == '-' ? -HUGE_VAL : HUGE_VAL;
  }
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<bool> parse_boolean(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "true" || lower == "1") return true;
  if (lower == "false" || lower == "0") return false;
  return std::nullopt;
}

ColumnKind infer_kind(const std::vector<std::optional<std::string>>& cells) {
  bool all_datetime = true, all_numeric = true, all_boolean = true, any = false;
  for (const auto& cell : cells) {
    if (!cell) continue;
    any = true;
    if (all_datetime && !parse_iso8601(*cell)) all_datetime = false;
    if (all_numeric && !parse_number(*cell)) all_numeric = false;
    if (all_boolean && !parse_boolean(*cell)) all_boolean = false;
    if (!all_datetime && !all_numeric && !all_boolean) break;
  }
  if (!any) return ColumnKind::numeric;
  if (all_datetime) return ColumnKind::datetime;
  if (all_numeric) return ColumnKind::numeric;
  if (all_boolean) return ColumnKind::boolean;
  return ColumnKind::categorical;
}

Table table_from_records(const CsvRecords& records, std::string_view target, Task task) {
  const auto target_it = std::find(records.header.begin(), records.header.end(), target);
  if (target_it == records.header.end()) throw DataError(fmt::format("target column '{}' not found", target));
  if (records.rows.empty()) throw DataError("CSV has zero data rows");

  std::vector<ColumnSchema> schema;
  std::vector<Column> columns;
  for (std::size_t c = 0; c < records.header.size(); ++c) {
    std::vector<std::optional<std::string>> cells;
    cells.reserve(records.rows.size());
    for (const auto& row : records.rows) cells.push_back(row[c]);

    const ColumnKind kind = infer_kind(cells);
    Column column;
    if (kind == ColumnKind::categorical) {
      column.text = std::move(cells);
    } else {
      column.values.reserve(cells.size());
      for (const auto& cell : cells) {
        double v = std::nan("");
        if (cell) {
          switch (kind) {
            case ColumnKind::datetime: v = *parse_iso8601(*cell); break;
            case ColumnKind::numeric: v = *parse_number(*cell); break;
            case ColumnKind::boolean: v = *parse_boolean(*cell) ? 1.0 : 0.0; break;
            case ColumnKind::categorical: break;
          }
        }
        column.values.push_back(v);
      }
    }
    schema.push_back(ColumnSchema{records.header[c], kind, 0, 0});
    columns.push_back(std::move(column));
  }
  return Table(std::move(schema), std::move(columns), std::string(target), task);
}

Table table_from_csv_text(std::string_view content, std::string_view target, Task task) {
  return table_from_records(parse_csv(content), target, task);
}

Table load_csv(const std::filesystem::path& path, std::string_view target, Task task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open CSV file '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return table_from_csv_text(buffer.str(), target, task);
}

namespace {

std::string quote_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

}  // namespace

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.column_count(); ++c) {
    if (c) out += ',';
    out += quote_field(table.schema()[c].name);
  }
  out += '\n';
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    for (std::size_t c = 0; c < table.column_count(); ++c) {
      if (c) out += ',';
      const Column& col = table.columns()[c];
      if (!col.text.empty()) {
        if (col.text[r]) out += quote_field(*col.text[r]);
      } else if (!std::isnan(col.values[r])) {
        out += fmt::format("{}", col.values[r]);
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace malmas::data
