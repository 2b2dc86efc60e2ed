#pragma once

#include <algorithm>
#include <cmath>

#include "malmas/dsl/ast.hpp"

namespace malmas::dsl::scalar {

inline constexpr double kDivisionEpsilon = 1e-12;
inline constexpr double kStdEpsilon = 1e-12;

/// Totality guard applied to every node output.
inline double finite_or_zero(double x) { return std::isfinite(x) ? x : 0.0; }

inline double div_s(double a, double b) { return std::fabs(b) > kDivisionEpsilon ? a / b : 0.0; }

inline double apply(UnaryOp op, double x) {
  double r = 0.0;
  switch (op) {
    case UnaryOp::neg: r = -x; break;
    case UnaryOp::abs: r = std::fabs(x); break;
    case UnaryOp::sq: r = x * x; break;
    case UnaryOp::sqrt_s: r = std::sqrt(std::max(x, 0.0)); break;
    case UnaryOp::log_s: r = std::log1p(std::max(x, 0.0)); break;
    case UnaryOp::recip_s: r = div_s(1.0, x); break;
  }
  return finite_or_zero(r);
}

inline double apply(BinaryOp op, double a, double b) {
  double r = 0.0;
  switch (op) {
    case BinaryOp::add: r = a + b; break;
    case BinaryOp::sub: r = a - b; break;
    case BinaryOp::mul: r = a * b; break;
    case BinaryOp::div_s: r = div_s(a, b); break;
  }
  return finite_or_zero(r);
}

inline bool compare(CmpOp op, double a, double b) {
  switch (op) {
    case CmpOp::lt: return a < b;
    case CmpOp::le: return a <= b;
    case CmpOp::gt: return a > b;
    case CmpOp::ge: return a >= b;
    case CmpOp::eq: return a == b;
  }
  return false;
}

inline double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

/// Equal-width bin index of x over [lo, hi] with n bins, clamped to [0, n-1].
inline double bin_index(double x, double lo, double hi, int n) {
  const double width = hi - lo;
  if (!(width > 0.0) || !std::isfinite(width)) return 0.0;
  const double pos = std::floor((x - lo) / width * n);
  if (!std::isfinite(pos)) return 0.0;
  return std::clamp(pos, 0.0, static_cast<double>(n - 1));
}

}  // namespace malmas::dsl::scalar
