#include "mhac/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <fmt/format.h>

#include "mhac/error.hpp"
#include "mhac/rng.hpp"

namespace mhac::data {

SynthSpec SynthSpec::paper_like() {
  SynthSpec spec;
  spec.political_shocks = {{{Date(2017, 3, 1), Date(2020, 9, 30)}, 0.7}};
  spec.disease_shocks = {{{Date(2015, 6, 1), Date(2015, 8, 31)}, 0.55},
                         {{Date(2020, 2, 1), Date(2020, 9, 30)}, 0.1}};
  return spec;
}

void SynthSpec::validate() const {
  require(length_days > 0, ErrorCode::kConfig, "synth.length_days must be positive");
  require(base_level > 0.0, ErrorCode::kConfig, "synth.base_level must be positive");
  require(noise_scale >= 0.0 && attraction_noise >= 0.0, ErrorCode::kConfig, "synth noise scales must be >= 0");
  require(std::abs(noise_persistence) < 1.0, ErrorCode::kConfig, "synth.noise_persistence must be in (-1, 1)");
  require(attraction_window >= 1, ErrorCode::kConfig, "synth.attraction_window must be >= 1");
  const Date last = start_date.plus_days(static_cast<std::int64_t>(length_days) - 1);
  for (const auto* shocks : {&political_shocks, &disease_shocks}) {
    for (const Shock& s : *shocks) {
      require(s.factor >= 0.0, ErrorCode::kConfig, "shock factors must be >= 0");
      require(s.interval.first <= s.interval.last && s.interval.first >= start_date && s.interval.last <= last,
              ErrorCode::kConfig,
              fmt::format("shock [{}, {}] outside [{}, {}]", s.interval.first.iso(), s.interval.last.iso(),
                          start_date.iso(), last.iso()));
    }
  }
}

namespace {

nlohmann::json shocks_to_json(const std::vector<Shock>& shocks) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : shocks) {
    arr.push_back({{"first", s.interval.first.iso()}, {"last", s.interval.last.iso()}, {"factor", s.factor}});
  }
  return arr;
}

std::vector<Shock> shocks_from_json(const nlohmann::json& arr) {
  std::vector<Shock> out;
  for (const auto& s : arr) {
    for (const auto& [key, value] : s.items()) {
      require(key == "first" || key == "last" || key == "factor", ErrorCode::kConfig,
              fmt::format("unknown shock key '{}'", key));
    }
    out.push_back({{Date::parse(s.at("first").get<std::string>()), Date::parse(s.at("last").get<std::string>())},
                   s.at("factor").get<double>()});
  }
  return out;
}

}  // namespace

nlohmann::json SynthSpec::to_json() const {
  return {{"start_date", start_date.iso()},
          {"length_days", length_days},
          {"base_level", base_level},
          {"linear_growth", linear_growth},
          {"quadratic_growth", quadratic_growth},
          {"annual_amplitude", annual_amplitude},
          {"annual_peak_day", annual_peak_day},
          {"weekly_amplitude", weekly_amplitude},
          {"political_shocks", shocks_to_json(political_shocks)},
          {"disease_shocks", shocks_to_json(disease_shocks)},
          {"noise_scale", noise_scale},
          {"noise_persistence", noise_persistence},
          {"attraction_window", attraction_window},
          {"attraction_lag", attraction_lag},
          {"attraction_noise", attraction_noise},
          {"seed", seed}};
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
  SynthSpec spec = paper_like();
  const nlohmann::json defaults = spec.to_json();
  try {
    for (const auto& [key, value] : j.items()) {
      require(defaults.contains(key), ErrorCode::kConfig, fmt::format("unknown synth key '{}'", key));
    }
    if (j.contains("start_date")) spec.start_date = Date::parse(j["start_date"].get<std::string>());
    if (j.contains("length_days")) spec.length_days = j["length_days"].get<std::size_t>();
    if (j.contains("base_level")) spec.base_level = j["base_level"].get<double>();
    if (j.contains("linear_growth")) spec.linear_growth = j["linear_growth"].get<double>();
    if (j.contains("quadratic_growth")) spec.quadratic_growth = j["quadratic_growth"].get<double>();
    if (j.contains("annual_amplitude")) spec.annual_amplitude = j["annual_amplitude"].get<double>();
    if (j.contains("annual_peak_day")) spec.annual_peak_day = j["annual_peak_day"].get<double>();
    if (j.contains("weekly_amplitude")) spec.weekly_amplitude = j["weekly_amplitude"].get<double>();
    if (j.contains("political_shocks")) spec.political_shocks = shocks_from_json(j["political_shocks"]);
    if (j.contains("disease_shocks")) spec.disease_shocks = shocks_from_json(j["disease_shocks"]);
    if (j.contains("noise_scale")) spec.noise_scale = j["noise_scale"].get<double>();
    if (j.contains("noise_persistence")) spec.noise_persistence = j["noise_persistence"].get<double>();
    if (j.contains("attraction_window")) spec.attraction_window = j["attraction_window"].get<std::size_t>();
    if (j.contains("attraction_lag")) spec.attraction_lag = j["attraction_lag"].get<std::int64_t>();
    if (j.contains("attraction_noise")) spec.attraction_noise = j["attraction_noise"].get<double>();
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, fmt::format("synth: {}", e.what()));
  }
  spec.validate();
  return spec;
}

MultivariateFrame synth_generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n = spec.length_days;
  std::mt19937_64 rng = make_rng(spec.seed, {0x5e4d});
  std::normal_distribution<double> normal(0.0, 1.0);

  auto shock_factor = [](const std::vector<Shock>& shocks, const Date& d) {
    double f = 1.0;
    for (const Shock& s : shocks)
      if (s.interval.contains(d)) f *= s.factor;
    return f;
  };

  std::vector<double> entrant(n);
  const double innovation_scale = spec.noise_scale * std::sqrt(1.0 - spec.noise_persistence * spec.noise_persistence);
  double log_noise = spec.noise_scale * normal(rng);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (std::size_t t = 0; t < n; ++t) {
    const Date day = spec.start_date.plus_days(static_cast<std::int64_t>(t));
    const double years = static_cast<double>(t) / 365.25;
    const double trend = spec.base_level * (1.0 + spec.linear_growth * years + spec.quadratic_growth * years * years);
    const double day_of_year = static_cast<double>(day.days_since(Date(day.year(), 1, 1)));
    const double seasonal = 1.0 +
                            spec.annual_amplitude * std::cos(kTwoPi * (day_of_year - spec.annual_peak_day) / 365.25) +
                            spec.weekly_amplitude * std::sin(kTwoPi * static_cast<double>(t) / 7.0);
    const double shocks = shock_factor(spec.political_shocks, day) * shock_factor(spec.disease_shocks, day);
    if (t > 0) log_noise = spec.noise_persistence * log_noise + innovation_scale * normal(rng);
    entrant[t] = std::max(0.0, trend * seasonal * shocks * std::exp(log_noise));
  }

  // Trailing mean of entrant ending `attraction_lag` days earlier (clamped at the edges).
  std::vector<double> attraction(n);
  double peak = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const std::int64_t end = std::clamp<std::int64_t>(static_cast<std::int64_t>(t) - spec.attraction_lag, 0,
                                                      static_cast<std::int64_t>(n) - 1);
    const std::int64_t begin = std::max<std::int64_t>(0, end - static_cast<std::int64_t>(spec.attraction_window) + 1);
    double sum = 0.0;
    for (std::int64_t s = begin; s <= end; ++s) sum += entrant[static_cast<std::size_t>(s)];
    attraction[t] = sum / static_cast<double>(end - begin + 1) * std::exp(spec.attraction_noise * normal(rng));
    peak = std::max(peak, attraction[t]);
  }
  for (double& a : attraction) a = peak > 0.0 ? std::clamp(100.0 * a / peak, 0.0, 100.0) : 0.0;

  const auto intervals = [](const std::vector<Shock>& shocks) {
    std::vector<DateInterval> out;
    for (const Shock& s : shocks) out.push_back(s.interval);
    return out;
  };
  const VariableSpec entrant_spec{"entrant", VariableKind::kNumeric, {}, 1};
  const VariableSpec politics_spec{"politics", VariableKind::kDummyInterval, intervals(spec.political_shocks), 1};
  const VariableSpec disease_spec{"disease", VariableKind::kDummyInterval, intervals(spec.disease_shocks), 1};
  const VariableSpec season_spec{"season", VariableKind::kDummySeason, {}, kSeasonChannels.size()};
  const VariableSpec attraction_spec{"attraction", VariableKind::kNumeric, {}, 1};

  const std::vector<VariableSpec> specs = {entrant_spec, politics_spec, disease_spec, season_spec, attraction_spec};
  const std::vector<RawSeries> series = {
      RawSeries{"entrant", 1, spec.start_date, std::move(entrant)},
      build_interval_dummy(politics_spec, spec.start_date, n),
      build_interval_dummy(disease_spec, spec.start_date, n),
      build_season_dummy(spec.start_date, n),
      RawSeries{"attraction", 1, spec.start_date, std::move(attraction)},
  };
  return assemble_frame(specs, series,
                        {spec.start_date, spec.start_date.plus_days(static_cast<std::int64_t>(n) - 1)});
}

}  // namespace mhac::data
