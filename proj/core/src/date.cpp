#include "mhac/date.hpp"

#include <charconv>

#include <fmt/format.h>

#include "mhac/error.hpp"

namespace mhac {

namespace {

template <typename T>
bool parse_field(std::string_view text, T& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok()) fail(ErrorCode::kInvalidArgument, fmt::format("invalid date {}-{}-{}", year, month, day));
  days_ = std::chrono::sys_days{ymd};
}

Date Date::parse(std::string_view iso) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  const bool shaped = iso.size() == 10 && iso[4] == '-' && iso[7] == '-';
  if (!shaped || !parse_field(iso.substr(0, 4), y) || !parse_field(iso.substr(5, 2), m) ||
      !parse_field(iso.substr(8, 2), d)) {
    fail(ErrorCode::kParse, fmt::format("not an ISO-8601 date: '{}'", iso));
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) fail(ErrorCode::kParse, fmt::format("not a calendar date: '{}'", iso));
  return Date(std::chrono::sys_days{ymd});
}

std::string Date::iso() const {
  return fmt::format("{:04d}-{:02d}-{:02d}", year(), month(), day());
}

int Date::year() const { return static_cast<int>(std::chrono::year_month_day{days_}.year()); }
unsigned Date::month() const { return static_cast<unsigned>(std::chrono::year_month_day{days_}.month()); }
unsigned Date::day() const { return static_cast<unsigned>(std::chrono::year_month_day{days_}.day()); }

}  // namespace mhac
