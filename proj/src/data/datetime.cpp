#include "malmas/data/datetime.hpp"

#include <cmath>

namespace malmas::data {

namespace {

bool is_leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(std::int64_t y, int m) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}
  bool done() const { return pos_ == s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }
  bool take(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }
  std::optional<int> digits(int count) {
    int value = 0;
    for (int i = 0; i < count; ++i) {
      char c = peek();
      if (c < '0' || c > '9') return std::nullopt;
      value = value * 10 + (c - '0');
      ++pos_;
    }
    return value;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::int64_t days_from_civil(std::int64_t y, int m, int d) {
  // Howard Hinnant's days_from_civil.
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::optional<double> parse_iso8601(std::string_view text) {
  Cursor c(text);
  auto year = c.digits(4);
  if (!year || !c.take('-')) return std::nullopt;
  auto month = c.digits(2);
  if (!month || !c.take('-')) return std::nullopt;
  auto day = c.digits(2);
  if (!day) return std::nullopt;
  if (*month < 1 || *month > 12 || *day < 1 || *day > days_in_month(*year, *month)) return std::nullopt;

  int hour = 0, minute = 0;
  double second = 0.0;
  int offset_minutes = 0;
  if (!c.done()) {
    if (!c.take('T') && !c.take(' ')) return std::nullopt;
    auto h = c.digits(2);
    if (!h || !c.take(':')) return std::nullopt;
    auto mi = c.digits(2);
    if (!mi) return std::nullopt;
    hour = *h;
    minute = *mi;
    if (c.take(':')) {
      auto s = c.digits(2);
      if (!s) return std::nullopt;
      second = *s;
      if (c.take('.')) {
        double scale = 0.1;
        bool any = false;
        while (c.peek() >= '0' && c.peek() <= '9') {
          second += scale * (c.peek() - '0');
          scale /= 10.0;
          c.take(c.peek());
          any = true;
        }
        if (!any) return std::nullopt;
      }
    }
    if (hour > 23 || minute > 59 || second >= 61.0) return std::nullopt;
    if (c.take('Z')) {
    } else if (c.peek() == '+' || c.peek() == '-') {
      const int sign = c.peek() == '+' ? 1 : -1;
      c.take(c.peek());
      auto oh = c.digits(2);
      if (!oh) return std::nullopt;
      c.take(':');
      auto om = c.digits(2);
      if (!om || *oh > 23 || *om > 59) return std::nullopt;
      offset_minutes = sign * (*oh * 60 + *om);
    }
    if (!c.done()) return std::nullopt;
  }
  const double days = static_cast<double>(days_from_civil(*year, *month, *day));
  return days * 86400.0 + hour * 3600.0 + minute * 60.0 + second - offset_minutes * 60.0;
}

CivilTime civil_from_epoch(double epoch_seconds) {
  if (!std::isfinite(epoch_seconds) || std::fabs(epoch_seconds) > 1e15) epoch_seconds = 0.0;
  const double day_floor = std::floor(epoch_seconds / 86400.0);
  auto z = static_cast<std::int64_t>(day_floor);
  const double seconds_of_day = epoch_seconds - day_floor * 86400.0;
  CivilTime out{};
  out.hour = static_cast<int>(std::floor(seconds_of_day / 3600.0));
  if (out.hour > 23) out.hour = 23;
  // 1970-01-01 was a Thursday (= 3 with Monday = 0).
  out.day_of_week = static_cast<int>(((z % 7) + 7 + 3) % 7);
  // Howard Hinnant's civil_from_days.
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  out.day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  out.month = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  out.year = y + (out.month <= 2);
  return out;
}

}  // namespace malmas::data
