#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace mhac {

// Calendar day backed by std::chrono::sys_days. All persisted dates are ISO-8601.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
  Date(int year, unsigned month, unsigned day);

  // Throws Error(kParse) on anything other than a valid YYYY-MM-DD.
  static Date parse(std::string_view iso);

  std::string iso() const;

  int year() const;
  unsigned month() const;
  unsigned day() const;

  Date plus_days(std::int64_t n) const { return Date(days_ + std::chrono::days{n}); }
  // Signed number of days from `other` to this date.
  std::int64_t days_since(const Date& other) const { return (days_ - other.days_).count(); }

  std::chrono::sys_days sys_days() const { return days_; }

  friend constexpr auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

// Inclusive [first, last] day range.
struct DateInterval {
  Date first;
  Date last;

  bool contains(const Date& d) const { return first <= d && d <= last; }
  friend bool operator==(const DateInterval&, const DateInterval&) = default;
};

}  // namespace mhac
