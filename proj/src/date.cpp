#include "hierport/date.hpp"

#include <cstdio>

#include "hierport/error.hpp"

namespace hierport {

namespace {

bool read_digits(std::string_view s, std::size_t pos, std::size_t count, int& out) {
  out = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    out = out * 10 + (s[i] - '0');
  }
  return true;
}

}  // namespace

Date::Date(std::chrono::year_month_day ymd)
    : serial_(static_cast<int>(std::chrono::sys_days{ymd}.time_since_epoch().count())) {}

std::optional<Date> Date::parse(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (!read_digits(text, 0, 4, y) || !read_digits(text, 5, 2, m) || !read_digits(text, 8, 2, d)) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

Date Date::from_string(std::string_view text) {
  auto d = parse(text);
  if (!d) invalid("invalid date '" + std::string(text) + "' (expected YYYY-MM-DD)");
  return *d;
}

std::string Date::to_string() const {
  const auto v = ymd();
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(v.year()), static_cast<unsigned>(v.month()),
                static_cast<unsigned>(v.day()));
  return buf;
}

Date Date::plus_days(int n) const {
  Date out = *this;
  out.serial_ += n;
  return out;
}

}  // namespace hierport
