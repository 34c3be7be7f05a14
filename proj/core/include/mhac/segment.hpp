#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "mhac/date.hpp"
#include "mhac/frame.hpp"
#include "mhac/tensor.hpp"

namespace mhac::data {

enum class Provenance { kTrain, kTest, kAugmented };
std::string_view to_string(Provenance p);

// One (input window, target window) example. `t_index` is the frame offset of
// the last input day; inputs cover [t-m+1, t] and the target [t+1, t+k].
struct Segment {
  std::size_t t_index = 0;
  Date anchor_date;                 // date of day t
  std::vector<nn::Tensor> inputs;   // per variable: channel_count x m
  std::vector<double> target;       // entrant, length k
};

struct SegmentSet {
  std::vector<Segment> segments;
  std::size_t m = 0;
  std::size_t k = 0;
  Provenance provenance = Provenance::kTrain;
  std::vector<VariableSpec> variables;

  std::size_t size() const { return segments.size(); }
  bool empty() const { return segments.empty(); }
};

// Slides an (m + k)-day window one day at a time: exactly L - m - k + 1
// segments. Error(kInsufficientData) when L < m + k.
SegmentSet make_segments(const MultivariateFrame& frame, std::size_t m, std::size_t k,
                         Provenance provenance = Provenance::kTrain);

// Segments whose targets lie entirely after `boundary`; inputs may reach back
// across it into pre-boundary days. Yields (days after boundary) - k + 1 segments.
SegmentSet make_test_segments(const MultivariateFrame& frame, const Date& boundary, std::size_t m, std::size_t k);

// Segment whose input window ends on `as_of`; no target (empty).
Segment make_input_segment(const MultivariateFrame& frame, const Date& as_of, std::size_t m);

}  // namespace mhac::data
