#include "pdv/core/time.hpp"

#include <cctype>
#include <cstdio>
#include <cstdint>

#include "pdv/core/error.hpp"

namespace pdv {
namespace {

// Howard Hinnant's civil calendar algorithms.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

bool is_leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(std::int64_t y, unsigned m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  bool digits(int n, int& out) {
    if (pos_ + static_cast<std::size_t>(n) > s_.size()) return false;
    int v = 0;
    for (int i = 0; i < n; ++i) {
      const char c = s_[pos_ + i];
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
      v = v * 10 + (c - '0');
    }
    pos_ += n;
    out = v;
    return true;
  }
  bool lit(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool lit_ci(char c) {
    if (pos_ < s_.size() && std::toupper(static_cast<unsigned char>(s_[pos_])) == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool peek_digit() const {
    return pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]));
  }
  std::size_t pos() const { return pos_; }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::optional<Timestamp> scan_rfc3339(std::string_view text, std::size_t& consumed) {
  Cursor c(text);
  int year, month, day, hour, minute, second;
  if (!c.digits(4, year) || !c.lit('-') || !c.digits(2, month) || !c.lit('-') ||
      !c.digits(2, day) || !c.lit_ci('T') || !c.digits(2, hour) || !c.lit(':') ||
      !c.digits(2, minute) || !c.lit(':') || !c.digits(2, second)) {
    return std::nullopt;
  }
  if (month < 1 || month > 12 || day < 1 ||
      static_cast<unsigned>(day) > days_in_month(year, static_cast<unsigned>(month)) ||
      hour > 23 || minute > 59 || second > 60) {
    return std::nullopt;
  }
  std::int64_t millis = 0;
  if (c.lit('.')) {
    if (!c.peek_digit()) return std::nullopt;
    int scale = 100;
    int d;
    while (c.peek_digit()) {
      c.digits(1, d);
      millis += d * scale;
      scale /= 10;
    }
  }
  std::int64_t offset_minutes = 0;
  if (c.lit_ci('Z')) {
  } else {
    int sign = 0;
    if (c.lit('+')) sign = 1;
    else if (c.lit('-')) sign = -1;
    else return std::nullopt;
    int oh, om;
    if (!c.digits(2, oh) || !c.lit(':') || !c.digits(2, om) || oh > 23 || om > 59) {
      return std::nullopt;
    }
    offset_minutes = sign * (oh * 60 + om);
  }
  const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                            static_cast<unsigned>(day));
  const std::int64_t secs = days * 86400 + hour * 3600 + minute * 60 + second - offset_minutes * 60;
  consumed = c.pos();
  return Timestamp{std::chrono::milliseconds{secs * 1000 + millis}};
}

Timestamp parse_rfc3339(std::string_view text) {
  std::size_t consumed = 0;
  auto t = scan_rfc3339(text, consumed);
  if (!t || consumed != text.size()) {
    throw Error(Errc::invalid_argument, "not an RFC 3339 timestamp: '" + std::string(text) + "'");
  }
  return *t;
}

std::string format_rfc3339(Timestamp t) {
  const std::int64_t ms = t.time_since_epoch().count();
  std::int64_t secs = ms / 1000;
  std::int64_t frac = ms % 1000;
  if (frac < 0) {
    frac += 1000;
    secs -= 1;
  }
  std::int64_t days = secs / 86400;
  std::int64_t rem = secs % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[40];
  if (frac != 0) {
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ",
                  static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                  static_cast<long long>(rem / 60 % 60), static_cast<long long>(rem % 60),
                  static_cast<long long>(frac));
  } else {
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                  static_cast<long long>(rem / 60 % 60), static_cast<long long>(rem % 60));
  }
  return buf;
}

Duration parse_duration(std::string_view text) {
  std::size_t i = 0;
  long long value = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    value = value * 10 + (text[i] - '0');
    if (value > 1'000'000'000LL) throw Error(Errc::invalid_argument, "duration too large");
    ++i;
  }
  if (i == 0) throw Error(Errc::invalid_argument, "duration must start with digits: '" + std::string(text) + "'");
  const std::string_view unit = text.substr(i);
  if (unit == "s") return Duration{value};
  if (unit == "m") return Duration{value * 60};
  if (unit == "h") return Duration{value * 3600};
  throw Error(Errc::unknown_duration_unit, "'" + std::string(unit) + "' in '" + std::string(text) + "'");
}

std::string format_duration(Duration d) {
  const long long s = d.count();
  if (s != 0 && s % 3600 == 0) return std::to_string(s / 3600) + "h";
  if (s != 0 && s % 60 == 0) return std::to_string(s / 60) + "m";
  return std::to_string(s) + "s";
}

}  // namespace pdv
