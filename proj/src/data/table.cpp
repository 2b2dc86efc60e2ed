#include "malmas/data/table.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

namespace malmas::data {

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::datetime: return "datetime";
    case ColumnKind::boolean: return "boolean";
  }
  return "numeric";
}

std::string_view to_string(Task task) {
  return task == Task::classification ? "classification" : "regression";
}

ColumnKind parse_column_kind(std::string_view text) {
  if (text == "numeric") return ColumnKind::numeric;
  if (text == "categorical") return ColumnKind::categorical;
  if (text == "datetime") return ColumnKind::datetime;
  if (text == "boolean") return ColumnKind::boolean;
  throw DataError(fmt::format("unknown column kind '{}'", text));
}

Task parse_task(std::string_view text) {
  if (text == "classification") return Task::classification;
  if (text == "regression") return Task::regression;
  throw DataError(fmt::format("unknown task '{}' (expected classification or regression)", text));
}

CategoryEncoder::CategoryEncoder(std::vector<std::string> categories) : categories_(std::move(categories)) {
  std::sort(categories_.begin(), categories_.end());
  categories_.erase(std::unique(categories_.begin(), categories_.end()), categories_.end());
}

CategoryEncoder CategoryEncoder::fit(std::span<const std::optional<std::string>> cells,
                                     std::string_view missing_label) {
  std::set<std::string> seen;
  for (const auto& cell : cells) seen.insert(cell ? *cell : std::string(missing_label));
  return CategoryEncoder(std::vector<std::string>(seen.begin(), seen.end()));
}

double CategoryEncoder::encode(std::string_view category) const {
  auto it = std::lower_bound(categories_.begin(), categories_.end(), category);
  if (it == categories_.end() || *it != category) return -1.0;
  return static_cast<double>(it - categories_.begin());
}

const std::string& CategoryEncoder::decode(int code) const {
  if (code < 0 || static_cast<std::size_t>(code) >= categories_.size())
    throw DataError(fmt::format("category code {} out of range", code));
  return categories_[static_cast<std::size_t>(code)];
}

bool Column::encoded() const {
  if (!text.empty()) return false;
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

bool Column::operator==(const Column& other) const {
  if (values.size() != other.values.size()) return false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double a = values[i], b = other.values[i];
    if (!(a == b || (std::isnan(a) && std::isnan(b)))) return false;
  }
  return text == other.text && encoder == other.encoder;
}

namespace {

std::size_t cell_count(const Column& column) {
  return column.text.empty() ? column.values.size() : column.text.size();
}

void refresh_stats(ColumnSchema& schema, const Column& column) {
  std::size_t missing = 0;
  if (!column.text.empty() || (schema.kind == ColumnKind::categorical && column.values.empty())) {
    std::unordered_set<std::string> distinct;
    for (const auto& cell : column.text) {
      if (cell) distinct.insert(*cell);
      else ++missing;
    }
    schema.distinct_count = distinct.size();
  } else {
    std::set<double> distinct;
    for (double v : column.values) {
      if (std::isnan(v)) ++missing;
      else distinct.insert(v);
    }
    schema.distinct_count = distinct.size();
  }
  schema.missing_count = missing;
}

}  // namespace

Table::Table(std::vector<ColumnSchema> schema, std::vector<Column> columns, std::string target, Task task)
    : schema_(std::move(schema)), columns_(std::move(columns)), target_(std::move(target)), task_(task) {
  if (schema_.size() != columns_.size()) throw DataError("schema and column counts differ");
  std::unordered_set<std::string> names;
  for (const auto& s : schema_) {
    if (!names.insert(s.name).second) throw DataError(fmt::format("duplicate column name '{}'", s.name));
  }
  row_count_ = columns_.empty() ? 0 : cell_count(columns_.front());
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (cell_count(columns_[i]) != row_count_)
      throw DataError(fmt::format("column '{}' has {} values, expected {}", schema_[i].name,
                                  cell_count(columns_[i]), row_count_));
    refresh_stats(schema_[i], columns_[i]);
  }
  if (!target_.empty()) {
    if (!names.contains(target_)) throw DataError(fmt::format("target column '{}' not found", target_));
    if (task_ == Task::classification && row_count_ > 0 && column_schema(target_).distinct_count +
                                                                   (column_schema(target_).missing_count > 0) < 2)
      throw DataError(fmt::format("classification target '{}' has fewer than two classes", target_));
  }
}

std::optional<std::size_t> Table::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < schema_.size(); ++i)
    if (schema_[i].name == name) return i;
  return std::nullopt;
}

const Column& Table::column(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx) throw DataError(fmt::format("unknown column '{}'", name));
  return columns_[*idx];
}

const ColumnSchema& Table::column_schema(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx) throw DataError(fmt::format("unknown column '{}'", name));
  return schema_[*idx];
}

std::vector<ColumnSchema> Table::feature_schema() const {
  std::vector<ColumnSchema> out;
  for (const auto& s : schema_)
    if (s.name != target_) out.push_back(s);
  return out;
}

std::vector<std::string> Table::feature_names() const {
  std::vector<std::string> out;
  for (const auto& s : schema_)
    if (s.name != target_) out.push_back(s.name);
  return out;
}

bool Table::encoded() const {
  return std::all_of(columns_.begin(), columns_.end(), [](const Column& c) { return c.encoded(); });
}

Table Table::select_rows(std::span<const std::size_t> rows) const {
  std::vector<Column> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) {
    Column picked;
    picked.encoder = c.encoder;
    if (!c.text.empty()) {
      picked.text.reserve(rows.size());
      for (auto r : rows) picked.text.push_back(c.text.at(r));
    } else {
      picked.values.reserve(rows.size());
      for (auto r : rows) picked.values.push_back(c.values.at(r));
    }
    out.push_back(std::move(picked));
  }
  Table t;
  t.schema_ = schema_;
  t.columns_ = std::move(out);
  t.row_count_ = rows.size();
  t.target_ = target_;
  t.task_ = task_;
  for (std::size_t i = 0; i < t.schema_.size(); ++i) refresh_stats(t.schema_[i], t.columns_[i]);
  return t;
}

Table Table::with_column(std::string name, ColumnKind kind, std::vector<double> values) const {
  if (index_of(name)) throw DataError(fmt::format("column '{}' already exists", name));
  if (values.size() != row_count_) throw DataError(fmt::format("column '{}' has wrong length", name));
  Table t = *this;
  ColumnSchema s{std::move(name), kind, 0, 0};
  Column c;
  c.values = std::move(values);
  refresh_stats(s, c);
  t.schema_.push_back(std::move(s));
  t.columns_.push_back(std::move(c));
  return t;
}

}  // namespace malmas::data
