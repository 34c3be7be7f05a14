#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhac/augment.hpp"
#include "mhac/date.hpp"
#include "mhac/model.hpp"
#include "mhac/synth.hpp"
#include "mhac/train.hpp"

namespace mhac::pipeline {

enum class DataSourceKind { kSynth, kFrameDir, kCsv };

// Raw CSV inputs: entrant and attraction files; the dummies are rebuilt from
// the declared intervals and the calendar.
struct CsvSource {
  std::filesystem::path entrant;
  std::filesystem::path attraction;
  std::vector<DateInterval> politics_intervals;
  std::vector<DateInterval> disease_intervals;
  std::optional<Date> first_day;  // defaults to the entrant file's range
  std::optional<Date> last_day;
};

struct DataSource {
  DataSourceKind kind = DataSourceKind::kSynth;
  data::SynthSpec synth = data::SynthSpec::paper_like();
  std::filesystem::path frame_dir;
  CsvSource csv;
};

struct AugmentSettings {
  std::size_t augment_factor = 9;
  double noise_sigma_scale = 0.2;
  std::optional<std::uint64_t> augment_seed;  // defaults to the master seed
  augment::NoiseParameterization parameterization = augment::NoiseParameterization::kVariance;
};

struct EvalSettings {
  double zero_floor = 1e-6;
  std::size_t plot_horizon = 1;
  bool use_best_epoch = false;
};

struct RunConfig {
  DataSource data;
  Date train_end{2018, 12, 31};
  std::size_t m = 30;
  std::size_t k = 30;
  model::MhacConfig model;  // m/k are taken from the fields above
  train::TrainConfig train;
  AugmentSettings augment;
  EvalSettings eval;
  std::vector<std::string> drop_variables;
  std::filesystem::path output_dir = "mhac-run";
  std::uint64_t seed = 0;
  std::size_t repeat_count = 5;

  // Model config with m/k applied and dropped heads removed.
  model::MhacConfig effective_model_config() const;

  // Relative paths in the JSON resolve against `base_dir`.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  void validate() const;
};

// Ablation presets: no_attention, no_weightnorm, single_cnn,
// drop_variable:<name>, augment_factor:<n>, batch_size:<n>.
std::vector<std::string> preset_names();
RunConfig apply_preset(const RunConfig& config, std::string_view preset);

}  // namespace mhac::pipeline
