#include "malmas/data/metadata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "malmas/data/datetime.hpp"

namespace malmas::data {

namespace {

std::string iso_date(double epoch) {
  const CivilTime t = civil_from_epoch(epoch);
  return fmt::format("{:04d}-{:02d}-{:02d}", t.year, t.month, t.day);
}

std::string top_categories(const Column& column) {
  std::map<std::string, std::size_t> counts;
  if (!column.text.empty()) {
    for (const auto& cell : column.text) ++counts[cell ? *cell : "<missing>"];
  } else {
    for (double v : column.values) {
      const int code = static_cast<int>(v);
      const bool known = column.encoder && code >= 0 && static_cast<std::size_t>(code) < column.encoder->size();
      ++counts[known ? column.encoder->decode(code) : "<unseen>"];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::string out = "top=[";
  for (std::size_t i = 0; i < items.size() && i < 5; ++i) {
    if (i) out += ", ";
    out += fmt::format("{}:{}", items[i].first, items[i].second);
  }
  out += "]";
  return out;
}

}  // namespace

std::string metadata_text(const Table& table) {
  std::string out = fmt::format("task={} rows={} columns={} target={}\n", to_string(table.task()), table.row_count(),
                                table.column_count(), table.target());
  for (std::size_t i = 0; i < table.column_count(); ++i) {
    const ColumnSchema& s = table.schema()[i];
    const Column& c = table.columns()[i];
    out += fmt::format("- {}: {}, distinct={}, missing={}", s.name, to_string(s.kind), s.distinct_count,
                       s.missing_count);
    if (s.kind == ColumnKind::categorical) {
      out += ", " + top_categories(c);
    } else {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
      std::size_t n = 0;
      for (double v : c.values) {
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
        ++n;
      }
      if (n == 0) {
        out += ", min=NA, max=NA, mean=NA";
      } else if (s.kind == ColumnKind::datetime) {
        out += fmt::format(", min={}, max={}", iso_date(lo), iso_date(hi));
      } else {
        out += fmt::format(", min={:.6g}, max={:.6g}, mean={:.6g}", lo, hi, sum / static_cast<double>(n));
      }
    }
    if (s.name == table.target()) out += " (target)";
    out += '\n';
  }
  return out;
}

}  // namespace malmas::data
