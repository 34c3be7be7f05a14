#include "mhac/scaler.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mhac/error.hpp"

namespace mhac::data {

const ScalerEntry& Scaler::entry(std::string_view name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  fail(ErrorCode::kConfig, fmt::format("scaler has no variable '{}'", name));
}

std::vector<double> Scaler::invert_target(std::span<const double> values) const {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = invert_target(values[i]);
  return out;
}

nlohmann::json Scaler::to_json() const {
  nlohmann::json j;
  j["fit_end"] = fit_end.iso();
  j["variables"] = nlohmann::json::array();
  for (const auto& e : entries) {
    j["variables"].push_back({{"name", e.name}, {"scaled", e.scaled}, {"mean", e.mean}, {"stddev", e.stddev}});
  }
  return j;
}

Scaler Scaler::from_json(const nlohmann::json& j) {
  try {
    Scaler s;
    s.fit_end = Date::parse(j.at("fit_end").get<std::string>());
    for (const auto& v : j.at("variables")) {
      s.entries.push_back({v.at("name").get<std::string>(), v.at("scaled").get<bool>(), v.at("mean").get<double>(),
                           v.at("stddev").get<double>()});
    }
    require(!s.entries.empty() && s.entries.front().name == kTargetVariable, ErrorCode::kParse,
            "scaler must list the target variable first");
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, fmt::format("scaler: {}", e.what()));
  }
}

Scaler fit_scaler(const MultivariateFrame& frame, const Date& train_end) {
  const std::size_t days = frame.day_index(train_end) + 1;
  Scaler scaler;
  scaler.fit_end = train_end;
  for (const FrameVariable& var : frame.variables()) {
    ScalerEntry e{var.spec.name, !var.spec.is_dummy(), 0.0, 1.0};
    if (e.scaled) {
      const std::size_t n = days * var.spec.channel_count;
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += var.values[i];
      e.mean = sum / static_cast<double>(n);
      double sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) sq += (var.values[i] - e.mean) * (var.values[i] - e.mean);
      e.stddev = std::sqrt(sq / static_cast<double>(n));
      require(e.stddev > 0.0, ErrorCode::kZeroVariance,
              fmt::format("variable '{}' is constant up to {}", var.spec.name, train_end.iso()));
    }
    scaler.entries.push_back(std::move(e));
  }
  return scaler;
}

namespace {

template <typename Fn>
MultivariateFrame transform(const MultivariateFrame& frame, const Scaler& scaler, Fn fn) {
  MultivariateFrame out = frame;
  for (std::size_t i = 0; i < frame.variables().size(); ++i) {
    const FrameVariable& var = frame.variables()[i];
    const ScalerEntry* entry = nullptr;
    for (const auto& e : scaler.entries)
      if (e.name == var.spec.name) entry = &e;
    if (entry == nullptr || !entry->scaled || var.spec.is_dummy()) continue;
    std::vector<double> values = var.values;
    for (double& v : values) v = fn(v, *entry);
    out = out.with_variable_values(i, std::move(values));
  }
  return out;
}

}  // namespace

MultivariateFrame apply_scaler(const MultivariateFrame& frame, const Scaler& scaler) {
  return transform(frame, scaler, [](double v, const ScalerEntry& e) { return (v - e.mean) / e.stddev; });
}

MultivariateFrame invert_scaler(const MultivariateFrame& frame, const Scaler& scaler) {
  return transform(frame, scaler, [](double v, const ScalerEntry& e) { return v * e.stddev + e.mean; });
}

}  // namespace mhac::data
