#include "malmas/data/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

namespace malmas::data {

Preprocessor Preprocessor::fit(const Table& table) {
  Preprocessor p;
  for (std::size_t i = 0; i < table.column_count(); ++i) {
    const auto& schema = table.schema()[i];
    const auto& column = table.columns()[i];
    if (schema.kind != ColumnKind::categorical) continue;
    if (column.encoder) p.encoders_.emplace(schema.name, *column.encoder);
    else p.encoders_.emplace(schema.name, CategoryEncoder::fit(column.text, kMissingCategory));
  }
  return p;
}

Table Preprocessor::transform(const Table& table) const {
  std::vector<ColumnSchema> schema = table.schema();
  std::vector<Column> columns;
  columns.reserve(table.column_count());
  for (std::size_t i = 0; i < table.column_count(); ++i) {
    const Column& in = table.columns()[i];
    Column out;
    if (schema[i].kind == ColumnKind::categorical) {
      auto it = encoders_.find(schema[i].name);
      if (it == encoders_.end())
        throw DataError(fmt::format("no fitted encoder for categorical column '{}'", schema[i].name));
      if (in.text.empty() && in.encoder) {
        // Already encoded. Re-map only if the encoders differ.
        if (*in.encoder == it->second) {
          out = in;
        } else {
          out.values.reserve(in.values.size());
          for (double code : in.values) {
            const int c = static_cast<int>(code);
            out.values.push_back(c < 0 ? -1.0 : it->second.encode(in.encoder->decode(c)));
          }
        }
      } else {
        out.values.reserve(in.text.size());
        for (const auto& cell : in.text) out.values.push_back(it->second.encode(cell ? *cell : kMissingCategory));
      }
      out.encoder = it->second;
    } else {
      out.values = in.values;
      for (double& v : out.values)
        if (!std::isfinite(v)) v = 0.0;
    }
    columns.push_back(std::move(out));
  }
  return Table(std::move(schema), std::move(columns), table.target(), table.task());
}

Table preprocess(const Table& table) { return Preprocessor::fit(table).transform(table); }

Table encode_target(const Table& table, TargetClasses* classes) {
  const auto idx = table.index_of(table.target());
  if (!idx) throw DataError(fmt::format("target column '{}' not found", table.target()));
  const ColumnSchema& ts = table.schema()[*idx];
  const Column& tc = table.columns()[*idx];

  std::vector<double> values;
  std::vector<ColumnSchema> schema = table.schema();
  std::vector<Column> columns = table.columns();

  if (table.task() == Task::regression) {
    if (ts.kind == ColumnKind::categorical)
      throw DataError(fmt::format("regression target '{}' is not numeric", ts.name));
    values = tc.values;
    for (double& v : values)
      if (!std::isfinite(v)) v = 0.0;
    schema[*idx].kind = ColumnKind::numeric;
  } else {
    std::vector<std::string> names;
    if (!tc.text.empty() || (ts.kind == ColumnKind::categorical && !tc.encoder)) {
      std::set<std::string> seen;
      for (const auto& cell : tc.text) seen.insert(cell ? *cell : std::string(kMissingCategory));
      names.assign(seen.begin(), seen.end());
      for (const auto& cell : tc.text) {
        const std::string key = cell ? *cell : std::string(kMissingCategory);
        values.push_back(static_cast<double>(std::lower_bound(names.begin(), names.end(), key) - names.begin()));
      }
    } else if (tc.encoder) {
      // Encoded categorical: codes already follow byte order.
      names = tc.encoder->categories();
      values = tc.values;
    } else {
      std::set<double> seen;
      for (double v : tc.values) seen.insert(std::isfinite(v) ? v : 0.0);
      std::vector<double> sorted(seen.begin(), seen.end());
      for (double v : sorted) names.push_back(fmt::format("{}", v));
      for (double v : tc.values) {
        const double key = std::isfinite(v) ? v : 0.0;
        values.push_back(static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), key) - sorted.begin()));
      }
    }
    if (names.size() < 2) throw DataError(fmt::format("classification target '{}' has fewer than two classes", ts.name));
    if (classes) classes->names = names;
    schema[*idx].kind = ColumnKind::numeric;
  }
  Column out;
  out.values = std::move(values);
  columns[*idx] = std::move(out);
  return Table(std::move(schema), std::move(columns), table.target(), table.task());
}

}  // namespace malmas::data
