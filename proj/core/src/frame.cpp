#include "mhac/frame.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "mhac/error.hpp"

namespace mhac::data {

std::string_view to_string(VariableKind kind) {
  switch (kind) {
    case VariableKind::kNumeric: return "numeric";
    case VariableKind::kDummyInterval: return "dummy-interval";
    case VariableKind::kDummySeason: return "dummy-season";
  }
  return "numeric";
}

VariableKind parse_variable_kind(std::string_view text) {
  if (text == "numeric") return VariableKind::kNumeric;
  if (text == "dummy-interval") return VariableKind::kDummyInterval;
  if (text == "dummy-season") return VariableKind::kDummySeason;
  fail(ErrorCode::kConfig, fmt::format("unknown variable kind '{}'", text));
}

namespace {

std::size_t canonical_position(std::string_view name) {
  const auto it = std::find(kCanonicalVariables.begin(), kCanonicalVariables.end(), name);
  require(it != kCanonicalVariables.end(), ErrorCode::kConfig, fmt::format("unknown variable '{}'", name));
  return static_cast<std::size_t>(it - kCanonicalVariables.begin());
}

}  // namespace

MultivariateFrame::MultivariateFrame(Date start_date, std::size_t length_days, std::vector<FrameVariable> variables)
    : start_(start_date), length_(length_days), variables_(std::move(variables)) {
  require(length_ > 0, ErrorCode::kInvalidArgument, "frame must cover at least one day");
  require(!variables_.empty() && variables_.front().spec.name == kTargetVariable, ErrorCode::kConfig,
          "frame must start with the entrant variable");
  std::size_t previous = 0;
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    const VariableSpec& spec = variables_[i].spec;
    const std::size_t pos = canonical_position(spec.name);
    require(i == 0 || pos > previous, ErrorCode::kConfig,
            fmt::format("variable '{}' is out of canonical order", spec.name));
    require(spec.channel_count == kCanonicalChannels[pos], ErrorCode::kConfig,
            fmt::format("variable '{}' has {} channels, expected {}", spec.name, spec.channel_count,
                        kCanonicalChannels[pos]));
    require(variables_[i].values.size() == length_ * spec.channel_count, ErrorCode::kShapeMismatch,
            fmt::format("variable '{}' has {} values for {} days", spec.name, variables_[i].values.size(), length_));
    previous = pos;
  }
}

std::vector<VariableSpec> MultivariateFrame::specs() const {
  std::vector<VariableSpec> out;
  out.reserve(variables_.size());
  for (const auto& v : variables_) out.push_back(v.spec);
  return out;
}

bool MultivariateFrame::has_variable(std::string_view name) const {
  return std::any_of(variables_.begin(), variables_.end(), [&](const auto& v) { return v.spec.name == name; });
}

std::size_t MultivariateFrame::variable_index(std::string_view name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (variables_[i].spec.name == name) return i;
  fail(ErrorCode::kConfig, fmt::format("frame has no variable '{}'", name));
}

std::size_t MultivariateFrame::day_index(const Date& date) const {
  require(date >= start_ && date <= end_date(), ErrorCode::kRange,
          fmt::format("{} is outside the frame [{}, {}]", date.iso(), start_.iso(), end_date().iso()));
  return static_cast<std::size_t>(date.days_since(start_));
}

MultivariateFrame MultivariateFrame::slice(std::size_t first_day, std::size_t count) const {
  require(count > 0 && first_day + count <= length_, ErrorCode::kRange,
          fmt::format("slice [{}, {}) outside frame of {} days", first_day, first_day + count, length_));
  std::vector<FrameVariable> vars;
  for (const auto& v : variables_) {
    const std::size_t ch = v.spec.channel_count;
    FrameVariable out{v.spec, {}};
    out.values.assign(v.values.begin() + static_cast<std::ptrdiff_t>(first_day * ch),
                      v.values.begin() + static_cast<std::ptrdiff_t>((first_day + count) * ch));
    vars.push_back(std::move(out));
  }
  return MultivariateFrame(date_at(first_day), count, std::move(vars));
}

MultivariateFrame MultivariateFrame::without_variable(std::string_view name) const {
  require(name != kTargetVariable, ErrorCode::kConfig, "the target variable cannot be dropped");
  const std::size_t idx = variable_index(name);
  std::vector<FrameVariable> vars = variables_;
  vars.erase(vars.begin() + static_cast<std::ptrdiff_t>(idx));
  return MultivariateFrame(start_, length_, std::move(vars));
}

MultivariateFrame MultivariateFrame::with_variable_values(std::size_t index, std::vector<double> values) const {
  require(index < variables_.size(), ErrorCode::kRange, "variable index out of range");
  std::vector<FrameVariable> vars = variables_;
  vars[index].values = std::move(values);
  return MultivariateFrame(start_, length_, std::move(vars));
}

MultivariateFrame assemble_frame(std::span<const VariableSpec> specs, std::span<const RawSeries> series,
                                 DateInterval range) {
  require(specs.size() == series.size(), ErrorCode::kConfig,
          fmt::format("{} variable specs for {} series", specs.size(), series.size()));
  require(specs.size() == kCanonicalVariables.size(), ErrorCode::kConfig,
          fmt::format("expected {} variables, got {}", kCanonicalVariables.size(), specs.size()));
  require(range.first <= range.last, ErrorCode::kRange, "empty date range");
  const std::size_t length = static_cast<std::size_t>(range.last.days_since(range.first)) + 1;
  std::vector<FrameVariable> vars;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const VariableSpec& spec = specs[i];
    const RawSeries& s = series[i];
    require(spec.name == kCanonicalVariables[i], ErrorCode::kConfig,
            fmt::format("position {} holds '{}', expected '{}'", i, spec.name, kCanonicalVariables[i]));
    require(s.channel_count == spec.channel_count, ErrorCode::kConfig,
            fmt::format("series '{}' has {} channels, spec says {}", spec.name, s.channel_count, spec.channel_count));
    if (s.length() == 0 || s.start_date > range.first) {
      fail(ErrorCode::kCoverage, fmt::format("series '{}' has no value for {}", spec.name, range.first.iso()));
    }
    if (s.end_date() < range.last) {
      fail(ErrorCode::kCoverage,
           fmt::format("series '{}' has no value for {}", spec.name, s.end_date().plus_days(1).iso()));
    }
    const auto offset = static_cast<std::size_t>(range.first.days_since(s.start_date));
    const std::size_t ch = s.channel_count;
    FrameVariable var{spec, {}};
    var.values.assign(s.values.begin() + static_cast<std::ptrdiff_t>(offset * ch),
                      s.values.begin() + static_cast<std::ptrdiff_t>((offset + length) * ch));
    vars.push_back(std::move(var));
  }
  return MultivariateFrame(range.first, length, std::move(vars));
}

TrainTestSplit split_train_test(const MultivariateFrame& frame, const Date& boundary) {
  const std::size_t idx = frame.day_index(boundary);
  TrainTestSplit out{frame.slice(0, idx + 1), std::nullopt};
  if (idx + 1 < frame.length()) out.test = frame.slice(idx + 1, frame.length() - idx - 1);
  return out;
}

}  // namespace mhac::data
