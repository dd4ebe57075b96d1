#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace hierport {

/// Calendar date stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  explicit Date(std::chrono::year_month_day ymd);

  /// Strict ISO-8601 `YYYY-MM-DD`; std::nullopt on any deviation or impossible date.
  static std::optional<Date> parse(std::string_view text);
  /// Same as parse() but throws hierport::Error naming the text.
  static Date from_string(std::string_view text);

  std::chrono::sys_days days() const { return std::chrono::sys_days{std::chrono::days{serial_}}; }
  std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days()}; }
  std::string to_string() const;

  Date plus_days(int n) const;

  friend constexpr auto operator<=>(const Date&, const Date&) = default;

 private:
  int serial_ = 0;
};

}  // namespace hierport
