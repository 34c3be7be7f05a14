#include "mhac/segment.hpp"

#include <fmt/format.h>

#include "mhac/error.hpp"

namespace mhac::data {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kTrain: return "train";
    case Provenance::kTest: return "test";
    case Provenance::kAugmented: return "augmented";
  }
  return "train";
}

namespace {

std::vector<nn::Tensor> input_block(const MultivariateFrame& frame, std::size_t first_day, std::size_t m) {
  std::vector<nn::Tensor> inputs;
  inputs.reserve(frame.variables().size());
  for (const FrameVariable& var : frame.variables()) {
    const std::size_t ch = var.spec.channel_count;
    nn::Tensor x({ch, m});
    for (std::size_t c = 0; c < ch; ++c)
      for (std::size_t t = 0; t < m; ++t) x.at(c, t) = var.at(first_day + t, c);
    inputs.push_back(std::move(x));
  }
  return inputs;
}

}  // namespace

SegmentSet make_segments(const MultivariateFrame& frame, std::size_t m, std::size_t k, Provenance provenance) {
  require(m >= 1 && k >= 1, ErrorCode::kInvalidArgument, "window sizes m and k must be positive");
  const std::size_t length = frame.length();
  require(length >= m + k, ErrorCode::kInsufficientData,
          fmt::format("frame of {} days cannot hold an input window of {} plus a target window of {}", length, m, k));
  SegmentSet set;
  set.m = m;
  set.k = k;
  set.provenance = provenance;
  set.variables = frame.specs();
  const std::size_t count = length - m - k + 1;
  set.segments.reserve(count);
  const FrameVariable& target = frame.target();
  for (std::size_t i = 0; i < count; ++i) {
    Segment s;
    s.t_index = i + m - 1;
    s.anchor_date = frame.date_at(s.t_index);
    s.inputs = input_block(frame, i, m);
    s.target.resize(k);
    for (std::size_t h = 0; h < k; ++h) s.target[h] = target.at(i + m + h, 0);
    set.segments.push_back(std::move(s));
  }
  return set;
}

SegmentSet make_test_segments(const MultivariateFrame& frame, const Date& boundary, std::size_t m, std::size_t k) {
  const std::size_t last_train = frame.day_index(boundary);
  require(last_train + 1 >= m, ErrorCode::kInsufficientData,
          fmt::format("need {} days of history up to {}", m, boundary.iso()));
  const std::size_t first = last_train + 1 - m;
  require(frame.length() - first >= m + k, ErrorCode::kInsufficientData,
          fmt::format("fewer than {} days after {}", k, boundary.iso()));
  SegmentSet set = make_segments(frame.slice(first, frame.length() - first), m, k, Provenance::kTest);
  for (Segment& s : set.segments) s.t_index += first;
  return set;
}

Segment make_input_segment(const MultivariateFrame& frame, const Date& as_of, std::size_t m) {
  const std::size_t t = frame.day_index(as_of);
  if (t + 1 < m) {
    fail(ErrorCode::kInsufficientData,
         fmt::format("forecast as of {} needs data from {} but the frame starts {}", as_of.iso(),
                     as_of.plus_days(1 - static_cast<std::int64_t>(m)).iso(), frame.start_date().iso()));
  }
  Segment s;
  s.t_index = t;
  s.anchor_date = as_of;
  s.inputs = input_block(frame, t + 1 - m, m);
  return s;
}

}  // namespace mhac::data
