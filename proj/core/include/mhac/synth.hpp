#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhac/date.hpp"
#include "mhac/frame.hpp"

namespace mhac::data {

struct Shock {
  DateInterval interval;
  double factor = 1.0;  // multiplicative level change while active
};

// Parameters of the synthetic daily arrivals series:
//   entrant = trend * seasonal * shocks * exp(noise), clipped at 0
// with the politics/disease dummies marking the declared shock intervals and
// the attraction index a smoothed, lagged copy of entrant rescaled to [0, 100].
struct SynthSpec {
  Date start_date{2010, 1, 1};
  std::size_t length_days = 3926;

  double base_level = 30000.0;
  double linear_growth = 0.08;      // fraction of base per year
  double quadratic_growth = 0.0;    // fraction of base per year^2
  double annual_amplitude = 0.15;
  double annual_peak_day = 280.0;   // day of year with the seasonal maximum
  double weekly_amplitude = 0.05;

  std::vector<Shock> political_shocks;
  std::vector<Shock> disease_shocks;

  double noise_scale = 0.08;        // std of the log-noise
  double noise_persistence = 0.6;   // AR(1) coefficient of the log-noise

  std::size_t attraction_window = 14;
  std::int64_t attraction_lag = 7;
  double attraction_noise = 0.05;

  std::uint64_t seed = 0;

  // Shocks echoing the 2010-2020 arrivals record (sanctions, MERS, COVID-19).
  static SynthSpec paper_like();

  void validate() const;
  nlohmann::json to_json() const;
  // Strict: unknown keys are rejected with Error(kConfig).
  static SynthSpec from_json(const nlohmann::json& j);
};

MultivariateFrame synth_generate(const SynthSpec& spec);

}  // namespace mhac::data
