#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace malmas::data {

enum class ColumnKind { numeric, categorical, datetime, boolean };
enum class Task { classification, regression };

std::string_view to_string(ColumnKind kind);
std::string_view to_string(Task task);
ColumnKind parse_column_kind(std::string_view text);
Task parse_task(std::string_view text);

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::size_t distinct_count = 0;
  std::size_t missing_count = 0;

  bool operator==(const ColumnSchema&) const = default;
};

/// Label encoder with codes assigned by ascending byte order of the category
/// string. Unseen categories encode to -1.
class CategoryEncoder {
 public:
  CategoryEncoder() = default;
  explicit CategoryEncoder(std::vector<std::string> categories);

  static CategoryEncoder fit(std::span<const std::optional<std::string>> cells,
                             std::string_view missing_label);

  double encode(std::string_view category) const;
  /// Throws DataError for codes outside [0, size).
  const std::string& decode(int code) const;

  const std::vector<std::string>& categories() const { return categories_; }
  std::size_t size() const { return categories_.size(); }

  bool operator==(const CategoryEncoder&) const = default;

 private:
  std::vector<std::string> categories_;  // sorted, unique
};

/// One column. Before preprocessing a categorical column keeps its cells in
/// `text` (nullopt = missing) and `values` is empty; every other kind stores
/// `values` with NaN marking a missing cell. After preprocessing every column
/// has finite `values`, `text` is empty, and categorical columns carry the
/// encoder that produced their codes.
struct Column {
  std::vector<double> values;
  std::vector<std::optional<std::string>> text;
  std::optional<CategoryEncoder> encoder;

  bool encoded() const;
  bool operator==(const Column&) const;
};

/// Immutable columnar table. Schema statistics (distinct/missing counts) are
/// recomputed from the cells on construction.
class Table {
 public:
  Table() = default;
  Table(std::vector<ColumnSchema> schema, std::vector<Column> columns, std::string target, Task task);

  const std::vector<ColumnSchema>& schema() const { return schema_; }
  const std::vector<Column>& columns() const { return columns_; }
  std::size_t row_count() const { return row_count_; }
  std::size_t column_count() const { return schema_.size(); }
  const std::string& target() const { return target_; }
  Task task() const { return task_; }

  std::optional<std::size_t> index_of(std::string_view name) const;
  const Column& column(std::string_view name) const;
  const ColumnSchema& column_schema(std::string_view name) const;
  const Column& target_column() const { return column(target_); }

  /// Schema entries excluding the target, in schema order.
  std::vector<ColumnSchema> feature_schema() const;
  std::vector<std::string> feature_names() const;

  /// True when every column has finite numeric values.
  bool encoded() const;

  Table select_rows(std::span<const std::size_t> rows) const;
  /// Appends a numeric column; the name must be new.
  Table with_column(std::string name, ColumnKind kind, std::vector<double> values) const;

  bool operator==(const Table&) const = default;

 private:
  std::vector<ColumnSchema> schema_;
  std::vector<Column> columns_;
  std::size_t row_count_ = 0;
  std::string target_;
  Task task_ = Task::classification;
};

}  // namespace malmas::data
