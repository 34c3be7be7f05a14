#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mhac/date.hpp"

namespace mhac::data {

enum class VariableKind { kNumeric, kDummyInterval, kDummySeason };

std::string_view to_string(VariableKind kind);
VariableKind parse_variable_kind(std::string_view text);

struct VariableSpec {
  std::string name;
  VariableKind kind = VariableKind::kNumeric;
  std::vector<DateInterval> intervals;  // dummy-interval only
  std::size_t channel_count = 1;

  bool is_dummy() const { return kind != VariableKind::kNumeric; }
  friend bool operator==(const VariableSpec&, const VariableSpec&) = default;
};

// Variable order follows the model's head numbering; the target is always first.
inline constexpr std::array<std::string_view, 5> kCanonicalVariables = {"entrant", "politics", "disease", "season",
                                                                        "attraction"};
inline constexpr std::array<std::size_t, 5> kCanonicalChannels = {1, 1, 1, 4, 1};
inline constexpr std::string_view kTargetVariable = "entrant";
inline constexpr std::array<std::string_view, 4> kSeasonChannels = {"spring", "summer", "autumn", "winter"};

// One daily series; values are row-major (one row of channel_count per day).
struct RawSeries {
  std::string name;
  std::size_t channel_count = 1;
  Date start_date;
  std::vector<double> values;

  std::size_t length() const { return channel_count == 0 ? 0 : values.size() / channel_count; }
  Date end_date() const { return start_date.plus_days(static_cast<std::int64_t>(length()) - 1); }
  double at(std::size_t day, std::size_t channel) const { return values[day * channel_count + channel]; }
};

struct FrameVariable {
  VariableSpec spec;
  std::vector<double> values;  // length_days x channel_count, row-major

  double at(std::size_t day, std::size_t channel) const { return values[day * spec.channel_count + channel]; }
  friend bool operator==(const FrameVariable&, const FrameVariable&) = default;
};

// Date-aligned daily table. Variables are an ordered subsequence of
// kCanonicalVariables with their canonical channel counts, entrant first.
class MultivariateFrame {
 public:
  MultivariateFrame(Date start_date, std::size_t length_days, std::vector<FrameVariable> variables);

  Date start_date() const { return start_; }
  Date end_date() const { return start_.plus_days(static_cast<std::int64_t>(length_) - 1); }
  Date date_at(std::size_t day) const { return start_.plus_days(static_cast<std::int64_t>(day)); }
  std::size_t length() const { return length_; }

  const std::vector<FrameVariable>& variables() const { return variables_; }
  std::vector<VariableSpec> specs() const;
  bool has_variable(std::string_view name) const;
  std::size_t variable_index(std::string_view name) const;
  const FrameVariable& variable(std::string_view name) const { return variables_[variable_index(name)]; }
  const FrameVariable& target() const { return variables_.front(); }

  // Day offset of `date`; Error(kRange) if outside the frame.
  std::size_t day_index(const Date& date) const;

  MultivariateFrame slice(std::size_t first_day, std::size_t count) const;
  MultivariateFrame without_variable(std::string_view name) const;
  MultivariateFrame with_variable_values(std::size_t index, std::vector<double> values) const;

  friend bool operator==(const MultivariateFrame&, const MultivariateFrame&) = default;

 private:
  Date start_;
  std::size_t length_;
  std::vector<FrameVariable> variables_;
};

// --- construction -------------------------------------------------------

// Parses `date,<c1>[,<c2>...]` CSV text. Dates must be strictly consecutive.
// Errors: kEmptyInput (no header/rows), kGap (names the first missing date),
// kParse (names the 1-based line number).
RawSeries parse_series_csv(std::string_view text, const VariableSpec& spec);
RawSeries ingest_csv(const std::filesystem::path& path, const VariableSpec& spec);

// 1.0 inside any interval, 0.0 elsewhere. Errors: kRange for intervals outside
// [start, start + length), kInvalidArgument for overlaps or wrong kind.
RawSeries build_interval_dummy(const VariableSpec& spec, Date start, std::size_t length);

// Meteorological seasons, one-hot over (spring, summer, autumn, winter).
RawSeries build_season_dummy(Date start, std::size_t length);
std::size_t season_channel(const Date& date);

// Aligns `series[i]` (described by `specs[i]`) on `range`. Requires the full
// canonical variable set in canonical order (kConfig) and complete coverage of
// the range by every series (kCoverage, naming series and date).
MultivariateFrame assemble_frame(std::span<const VariableSpec> specs, std::span<const RawSeries> series,
                                 DateInterval range);

struct TrainTestSplit {
  MultivariateFrame train;
  std::optional<MultivariateFrame> test;  // nullopt when the boundary is the last day
};

// train = days <= boundary, test = days > boundary.
TrainTestSplit split_train_test(const MultivariateFrame& frame, const Date& boundary);

// --- persistence --------------------------------------------------------

// Directory of `<variable>.csv` files plus `manifest.json`. Doubles are written
// in shortest round-trip form, so save/load is bit-exact.
void save_frame(const MultivariateFrame& frame, const std::filesystem::path& dir);
MultivariateFrame load_frame(const std::filesystem::path& dir);

}  // namespace mhac::data
