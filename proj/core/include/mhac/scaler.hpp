#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhac/date.hpp"
#include "mhac/frame.hpp"

namespace mhac::data {

struct ScalerEntry {
  std::string name;
  bool scaled = false;  // dummies are never scaled
  double mean = 0.0;
  double stddev = 1.0;

  friend bool operator==(const ScalerEntry&, const ScalerEntry&) = default;
};

// Z-score statistics of the numeric variables, fit on a training prefix.
struct Scaler {
  Date fit_end;
  std::vector<ScalerEntry> entries;

  const ScalerEntry& entry(std::string_view name) const;
  const ScalerEntry& target() const { return entries.front(); }

  // Target-variable conversions between original units and scaled space.
  double scale_target(double value) const { return (value - target().mean) / target().stddev; }
  double invert_target(double value) const { return value * target().stddev + target().mean; }
  std::vector<double> invert_target(std::span<const double> values) const;

  nlohmann::json to_json() const;
  static Scaler from_json(const nlohmann::json& j);

  friend bool operator==(const Scaler&, const Scaler&) = default;
};

// Population mean/std of every numeric variable over days <= train_end only.
// Errors: kRange if train_end is outside the frame, kZeroVariance for a flat
// numeric variable.
Scaler fit_scaler(const MultivariateFrame& frame, const Date& train_end);

// Variables are matched by name; variables absent from the scaler pass through.
MultivariateFrame apply_scaler(const MultivariateFrame& frame, const Scaler& scaler);
MultivariateFrame invert_scaler(const MultivariateFrame& frame, const Scaler& scaler);

}  // namespace mhac::data
