#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace malmas::dsl {

/// Heap cell with value semantics, for recursive variants.
template <typename T>
class Box {
 public:
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}  // NOLINT(google-explicit-constructor)
  Box(const Box& other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = std::make_unique<T>(*other.ptr_);
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;
  ~Box() = default;

  const T& operator*() const { return *ptr_; }
  T& operator*() { return *ptr_; }
  const T* operator->() const { return ptr_.get(); }
  T* operator->() { return ptr_.get(); }

  bool operator==(const Box& other) const { return *ptr_ == *other.ptr_; }

 private:
  std::unique_ptr<T> ptr_;
};

enum class UnaryOp { neg, abs, sq, sqrt_s, log_s, recip_s };
enum class BinaryOp { add, sub, mul, div_s };
enum class CmpOp { lt, le, gt, ge, eq };
enum class AggOp { mean, std, min, max, count };
enum class DatePartKind { year, month, day, dow, hour };

std::string_view name(UnaryOp op);
std::string_view name(BinaryOp op);
std::string_view name(CmpOp op);
std::string_view symbol(CmpOp op);
std::string_view name(AggOp op);
std::string_view name(DatePartKind part);

std::optional<UnaryOp> parse_unary_op(std::string_view text);
std::optional<BinaryOp> parse_binary_op(std::string_view text);
std::optional<AggOp> parse_agg_op(std::string_view text);
std::optional<DatePartKind> parse_date_part(std::string_view text);

struct Expr;

struct Literal {
  double value = 0.0;
  bool operator==(const Literal&) const = default;
};

struct ColumnRef {
  std::string name;
  std::size_t offset = 0;
  bool operator==(const ColumnRef& o) const { return name == o.name; }
};

struct Unary {
  UnaryOp op;
  Box<Expr> arg;
  bool operator==(const Unary&) const = default;
};

struct Binary {
  BinaryOp op;
  Box<Expr> lhs;
  Box<Expr> rhs;
  bool operator==(const Binary&) const = default;
};

struct IfThenElse {
  CmpOp cmp;
  Box<Expr> lhs;
  Box<Expr> rhs;
  Box<Expr> then_branch;
  Box<Expr> else_branch;
  bool operator==(const IfThenElse&) const = default;
};

struct GroupAgg {
  AggOp agg;
  ColumnRef key;
  Box<Expr> value;
  bool operator==(const GroupAgg&) const = default;
};

struct Bin {
  Box<Expr> arg;
  int bins;
  bool operator==(const Bin&) const = default;
};

struct Clip {
  Box<Expr> arg;
  double lo;
  double hi;
  bool operator==(const Clip&) const = default;
};

struct ZScore {
  Box<Expr> arg;
  bool operator==(const ZScore&) const = default;
};

struct Cluster {
  int k;
  std::vector<ColumnRef> cols;
  bool operator==(const Cluster&) const = default;
};

struct DatePart {
  DatePartKind part;
  ColumnRef col;
  bool operator==(const DatePart&) const = default;
};

/// Days elapsed from `from` to `to`: (to - from) / 86400.
struct ElapsedDays {
  ColumnRef to;
  ColumnRef from;
  bool operator==(const ElapsedDays&) const = default;
};

struct Expr {
  using Node = std::variant<Literal, ColumnRef, Unary, Binary, IfThenElse, GroupAgg, Bin, Clip, ZScore, Cluster,
                            DatePart, ElapsedDays>;
  Node node;
  std::size_t offset = 0;  // byte offset in the source; ignored by ==

  bool operator==(const Expr& other) const { return node == other.node; }
};

/// One named feature definition: `FEATURE <name> = <expr>`.
struct Program {
  std::string feature_name;
  Expr body;
  bool operator==(const Program&) const = default;
};

inline constexpr int kMaxDepth = 12;
inline constexpr int kMaxNodes = 64;
inline constexpr int kMinBins = 2, kMaxBins = 32;
inline constexpr int kMinClusters = 2, kMaxClusters = 16;

struct Shape {
  int depth = 0;
  int nodes = 0;
};

/// Depth and node count; column operands of group_agg, cluster, date_part and
/// elapsed_days count as child nodes, the three operands plus two branches of
/// an if are its children.
Shape measure(const Expr& expr);

/// Names of the operations a program uses: the unary/binary op names plus
/// if_then_else, group_agg, bin, clip, zscore, cluster, date_part, elapsed_days.
std::set<std::string> ops_used(const Expr& expr);

/// Every column name referenced, in first-appearance order, without repeats.
std::vector<std::string> columns_used(const Expr& expr);

bool is_identifier(std::string_view text);

// Builders, mostly for tests and generators.
namespace make {
Expr lit(double v);
Expr col(std::string name);
Expr unary(UnaryOp op, Expr arg);
Expr binary(BinaryOp op, Expr lhs, Expr rhs);
Expr if_then_else(CmpOp cmp, Expr lhs, Expr rhs, Expr then_branch, Expr else_branch);
Expr group_agg(AggOp agg, std::string key, Expr value);
Expr bin(Expr arg, int bins);
Expr clip(Expr arg, double lo, double hi);
Expr zscore(Expr arg);
Expr cluster(int k, std::vector<std::string> cols);
Expr date_part(DatePartKind part, std::string col);
Expr elapsed_days(std::string to, std::string from);
}  // namespace make

}  // namespace malmas::dsl
