#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "malmas/data/table.hpp"

namespace malmas::data {

/// Raw RFC-4180 records; an empty field is returned as nullopt.
struct CsvRecords {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<std::string>>> rows;
};

CsvRecords parse_csv(std::string_view content);

/// Kind inference: datetime if every non-missing cell is ISO-8601, numeric if
/// every cell parses as a decimal number, boolean if the distinct cells are a
/// subset of {true, false, 0, 1}, categorical otherwise.
ColumnKind infer_kind(const std::vector<std::optional<std::string>>& cells);

std::optional<double> parse_number(std::string_view text);
std::optional<bool> parse_boolean(std::string_view text);

Table table_from_records(const CsvRecords& records, std::string_view target, Task task);
Table table_from_csv_text(std::string_view content, std::string_view target, Task task);
Table load_csv(const std::filesystem::path& path, std::string_view target, Task task);

/// Writes an encoded or raw table back out as CSV (values in shortest
/// round-trip form, categorical cells as their text).
std::string to_csv(const Table& table);

}  // namespace malmas::data
