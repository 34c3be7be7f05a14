#include <algorithm>

#include <fmt/format.h>

#include "mhac/error.hpp"
#include "mhac/frame.hpp"

namespace mhac::data {

RawSeries build_interval_dummy(const VariableSpec& spec, Date start, std::size_t length) {
  require(spec.kind == VariableKind::kDummyInterval, ErrorCode::kInvalidArgument,
          fmt::format("variable '{}' is not a dummy-interval variable", spec.name));
  require(length > 0, ErrorCode::kInvalidArgument, "dummy series needs at least one day");
  const Date last = start.plus_days(static_cast<std::int64_t>(length) - 1);

  std::vector<DateInterval> sorted = spec.intervals;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const DateInterval& iv = sorted[i];
    require(iv.first <= iv.last, ErrorCode::kInvalidArgument,
            fmt::format("{}: interval [{}, {}] is reversed", spec.name, iv.first.iso(), iv.last.iso()));
    require(iv.first >= start && iv.last <= last, ErrorCode::kRange,
            fmt::format("{}: interval [{}, {}] outside [{}, {}]", spec.name, iv.first.iso(), iv.last.iso(),
                        start.iso(), last.iso()));
    require(i == 0 || sorted[i - 1].last < iv.first, ErrorCode::kInvalidArgument,
            fmt::format("{}: interval starting {} overlaps its predecessor", spec.name, iv.first.iso()));
  }

  RawSeries out{spec.name, 1, start, std::vector<double>(length, 0.0)};
  for (const DateInterval& iv : sorted) {
    const auto a = static_cast<std::size_t>(iv.first.days_since(start));
    const auto b = static_cast<std::size_t>(iv.last.days_since(start));
    std::fill(out.values.begin() + static_cast<std::ptrdiff_t>(a), out.values.begin() + static_cast<std::ptrdiff_t>(b + 1),
              1.0);
  }
  return out;
}

std::size_t season_channel(const Date& date) {
  switch (date.month()) {
    case 3: case 4: case 5: return 0;
    case 6: case 7: case 8: return 1;
    case 9: case 10: case 11: return 2;
    default: return 3;
  }
}

RawSeries build_season_dummy(Date start, std::size_t length) {
  RawSeries out{"season", kSeasonChannels.size(), start, std::vector<double>(length * kSeasonChannels.size(), 0.0)};
  for (std::size_t d = 0; d < length; ++d) {
    const Date day = start.plus_days(static_cast<std::int64_t>(d));
    out.values[d * kSeasonChannels.size() + season_channel(day)] = 1.0;
  }
  return out;
}

}  // namespace mhac::data
