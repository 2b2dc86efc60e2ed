#pragma once

#include <map>
#include <string>
#include <vector>

#include "malmas/data/table.hpp"

namespace malmas::data {

inline constexpr std::string_view kMissingCategory = "NA";

/// Zero-fill and label-encode. Fit on one table (the training split), then
/// transform any table with the same columns: categories unseen at fit time
/// encode to -1.
class Preprocessor {
 public:
  static Preprocessor fit(const Table& table);

  Table transform(const Table& table) const;

  const std::map<std::string, CategoryEncoder>& encoders() const { return encoders_; }

 private:
  std::map<std::string, CategoryEncoder> encoders_;
};

/// Fit-and-transform on the same table. Idempotent on encoded tables.
Table preprocess(const Table& table);

/// Class labels for a classification target.
struct TargetClasses {
  std::vector<std::string> names;  // index = class id
};

/// Replaces the target column with class indices 0..C-1 (classification) or
/// a zero-filled numeric column (regression). Class order is ascending
/// numeric order for numeric targets and byte order otherwise. Throws
/// DataError when a classification target has fewer than two classes or a
/// regression target is not numeric.
Table encode_target(const Table& table, TargetClasses* classes = nullptr);

}  // namespace malmas::data
