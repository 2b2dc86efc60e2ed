#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "malmas/common/rng.hpp"
#include "malmas/data/csv.hpp"
#include "malmas/data/datetime.hpp"
#include "malmas/data/metadata.hpp"
#include "malmas/data/preprocess.hpp"
#include "malmas/data/split.hpp"
#include "support.hpp"

using namespace malmas::data;

TEST(Csv, InfersNumericAndCategorical) {
  const auto t = table_from_csv_text("age,job,y\n31,clerk,1\n45,chef,0\n22,clerk,1\n", "y", Task::classification);
  EXPECT_EQ(t.target(), "y");
  const auto fs = t.feature_schema();
  ASSERT_EQ(fs.size(), 2u);
  EXPECT_EQ(fs[0].kind, ColumnKind::numeric);
  EXPECT_EQ(fs[1].kind, ColumnKind::categorical);
}

TEST(Csv, InfersDatetime) {
  const auto t = table_from_csv_text("d,y\n2020-01-01,1\n2020-02-03,0\n", "y", Task::classification);
  EXPECT_EQ(t.column_schema("d").kind, ColumnKind::datetime);
}

TEST(Csv, InferenceIgnoresRowOrder) {
  const std::vector<std::optional<std::string>> cells = {"1", "2.5", std::nullopt, "x", "2020-01-01"};
  auto perm = cells;
  std::reverse(perm.begin(), perm.end());
  EXPECT_EQ(infer_kind(cells), infer_kind(perm));
  const std::vector<std::optional<std::string>> flags = {"true", "0", "false"};
  EXPECT_EQ(infer_kind(flags), ColumnKind::boolean);
}

TEST(Csv, QuotedFieldsAndMissingTarget) {
  const auto rec = parse_csv("a,b\n\"x,1\",\"he said \"\"hi\"\"\"\n,2\n");
  ASSERT_EQ(rec.rows.size(), 2u);
  EXPECT_EQ(*rec.rows[0][0], "x,1");
  EXPECT_EQ(*rec.rows[0][1], "he said \"hi\"");
  EXPECT_FALSE(rec.rows[1][0].has_value());
  EXPECT_THROW(table_from_csv_text("a,b\n1,2\n", "zz", Task::classification), DataError);
}

TEST(Preprocess, CategoricalCodesFollowByteOrder) {
  const auto t = table_from_csv_text("job,y\na,1\n,0\nb,1\n", "y", Task::classification);
  const auto e = preprocess(t);
  EXPECT_EQ(e.column("job").values, (std::vector<double>{1, 0, 2}));
  EXPECT_EQ(e.column("job").encoder->categories(), (std::vector<std::string>{"NA", "a", "b"}));
}

TEST(Preprocess, NonFiniteAndMissingNumericBecomeZero) {
  const auto t = table_from_csv_text("v,y\n1.0,1\ninf,0\n,1\n", "y", Task::classification);
  EXPECT_EQ(preprocess(t).column("v").values, (std::vector<double>{1.0, 0.0, 0.0}));
}

TEST(Preprocess, UnseenCategoryEncodesMinusOne) {
  const auto train = table_from_csv_text("job,y\na,1\nb,0\n", "y", Task::classification);
  const auto test = table_from_csv_text("job,y\nzz,1\nb,0\n", "y", Task::classification);
  const auto p = Preprocessor::fit(train);
  EXPECT_EQ(p.transform(test).column("job").values, (std::vector<double>{-1.0, 1.0}));
}

TEST(Preprocess, IdempotentAndDecodes) {
  const auto t = table_from_csv_text("job,v,y\nb,1,1\na,2,0\n,nan,1\nc,3,0\n", "y", Task::classification);
  const auto once = preprocess(t);
  EXPECT_EQ(preprocess(once), once);
  const auto& enc = *once.column("job").encoder;
  for (const auto& c : enc.categories()) EXPECT_EQ(enc.decode(static_cast<int>(enc.encode(c))), c);
  EXPECT_EQ(enc.encode("unseen"), -1.0);
}

TEST(Preprocess, EncodeTargetOrdersClasses) {
  const auto t = table_from_csv_text("a,y\n1,10\n2,2\n3,10\n", "y", Task::classification);
  TargetClasses classes;
  const auto e = encode_target(t, &classes);
  EXPECT_EQ(classes.names, (std::vector<std::string>{"2", "10"}));
  EXPECT_EQ(e.target_column().values, (std::vector<double>{1, 0, 1}));
  EXPECT_THROW(encode_target(table_from_csv_text("a,y\n1,k\n2,k\n", "y", Task::classification)), DataError);
}

TEST(Split, PartitionsTenRows) {
  std::vector<double> a(10), y(10);
  std::iota(a.begin(), a.end(), 0.0);
  for (int i = 0; i < 10; ++i) y[i] = i % 2;
  const auto t = malmas::fixture::numeric_table({"a"}, {a}, y);
  const auto s = split(t, {0.6, 0, 5});
  EXPECT_EQ(s.train.row_count(), 6u);
  EXPECT_EQ(s.test.row_count(), 4u);
  std::set<std::size_t> all(s.train_rows.begin(), s.train_rows.end());
  for (auto r : s.test_rows) EXPECT_TRUE(all.insert(r).second);
  EXPECT_EQ(all.size(), 10u);
  const auto again = split(t, {0.6, 0, 5});
  EXPECT_EQ(again.train_rows, s.train_rows);
  EXPECT_EQ(again.test_rows, s.test_rows);
  // 5/5 labels at 0.6: three of each class in train.
  const auto& ty = s.train.target_column().values;
  EXPECT_EQ(std::count(ty.begin(), ty.end(), 1.0), 3);
}

TEST(Split, SizesOverRandomTables) {
  malmas::Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.below(200);
    std::vector<double> a(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<double>(i);
      y[i] = static_cast<double>(rng.below(3));
    }
    const auto s = split(malmas::fixture::numeric_table({"a"}, {a}, y, Task::regression), {0.6, rng.next(), 5});
    EXPECT_EQ(s.train.row_count(), train_size(n, 0.6));
    EXPECT_EQ(s.train.row_count() + s.test.row_count(), n);
  }
  EXPECT_EQ(train_size(10, 0.6), 6u);
  EXPECT_EQ(train_size(5, 0.5), 3u);
}

TEST(Metadata, FormatAndDeterminism) {
  const auto t = preprocess(table_from_csv_text("x,job,y\n1,a,0\n3,b,1\n", "y", Task::classification));
  const auto m = metadata_text(t);
  EXPECT_NE(m.find("rows=2"), std::string::npos);
  EXPECT_NE(m.find("min=1"), std::string::npos);
  EXPECT_NE(m.find("max=3"), std::string::npos);
  EXPECT_NE(m.find("mean=2"), std::string::npos);
  EXPECT_EQ(m, metadata_text(t));
}

TEST(Datetime, ParsesIsoForms) {
  EXPECT_EQ(*parse_iso8601("1970-01-02"), 86400.0);
  EXPECT_EQ(*parse_iso8601("1970-01-01T01:00:00Z"), 3600.0);
  EXPECT_EQ(*parse_iso8601("1970-01-01T02:00:00+01:00"), 3600.0);
  EXPECT_FALSE(parse_iso8601("2020-13-01").has_value());
  const auto c = civil_from_epoch(*parse_iso8601("2024-02-29T13:00:00"));
  EXPECT_EQ(c.year, 2024);
  EXPECT_EQ(c.month, 2);
  EXPECT_EQ(c.day, 29);
  EXPECT_EQ(c.day_of_week, 3);  // Thursday
  EXPECT_EQ(c.hour, 13);
}
