#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhac/checkpoint.hpp"
#include "mhac/error.hpp"
#include "mhac/frame.hpp"
#include "mhac/metrics.hpp"
#include "mhac/run_config.hpp"
#include "mhac/scaler.hpp"
#include "mhac/segment.hpp"
#include "mhac/train.hpp"

namespace mhac::pipeline {

// A library error re-raised with the name of the pipeline stage it came from.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, ErrorCode code, const std::string& what);

  const std::string& stage() const noexcept { return stage_; }
  ErrorCode code() const noexcept { return code_; }

 private:
  std::string stage_;
  ErrorCode code_;
};

// Progress messages for the caller's logger; may be empty.
using Progress = std::function<void(const std::string&)>;

struct RunSeeds {
  std::uint64_t train = 0;
  std::uint64_t augment = 0;
};
RunSeeds run_seeds(const RunConfig& config, std::size_t run);

// File layout of one run inside the output directory.
struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path checkpoint;
  std::filesystem::path best_checkpoint;
  std::filesystem::path scaler;
  std::filesystem::path history;
  std::filesystem::path report;
};
RunPaths run_paths(const std::filesystem::path& output_dir, std::size_t run);
std::filesystem::path mean_report_path(const std::filesystem::path& output_dir);

// The configured dataset with dropped variables removed (original units).
data::MultivariateFrame load_data(const RunConfig& config);

struct TrainingRun {
  train::TrainResult result;
  data::Scaler scaler;
  std::size_t train_segments = 0;      // before augmentation
  std::size_t validation_segments = 0;
  std::size_t augmented_segments = 0;  // what the optimizer saw
};

// split -> scale -> segment -> validation split -> augment -> train.
TrainingRun run_training(const RunConfig& config, const data::MultivariateFrame& frame, std::size_t run,
                         const train::EpochCallback& on_epoch = {});

// Test-period forecasts of a trained network in original units.
eval::ForecastMatrix forecast_test_period(const RunConfig& config, const data::MultivariateFrame& frame,
                                          const model::MhacParams& params, const data::Scaler& scaler);

// k dated predictions (original units) from the window ending on `as_of`.
struct DatedValue {
  Date date;
  double value = 0.0;
};
std::vector<DatedValue> forecast_from(const data::MultivariateFrame& frame, const model::MhacParams& params,
                                      const data::Scaler& scaler, const Date& as_of);

// --- commands -----------------------------------------------------------

// Writes the synthetic frame into config.output_dir. Refuses a non-empty
// directory unless `force`.
std::filesystem::path cmd_synth(const RunConfig& config, bool force, const Progress& progress = {});

// repeat_count independent runs; each writes checkpoint, best checkpoint,
// scaler and history under run_XX/.
std::vector<RunPaths> cmd_train(const RunConfig& config, const Progress& progress = {});

struct EvaluationSet {
  std::vector<eval::EvalReport> runs;
  std::optional<eval::EvalReport> mean;  // when more than one run was evaluated
  std::vector<eval::ForecastMatrix> forecasts;
};

// Without `checkpoint`: evaluates every run_XX of the output directory. With
// it: evaluates that file alone (scaler.json is read from its directory) and
// writes report.json / plot_h<h>.svg next to the output directory.
EvaluationSet cmd_evaluate(const RunConfig& config, const std::optional<std::filesystem::path>& checkpoint = {},
                           const Progress& progress = {});

// Applies the preset, then trains and evaluates into output_dir/<preset>.
EvaluationSet cmd_ablate(const RunConfig& config, std::string_view preset, const Progress& progress = {});

// JSON array of {date, value} objects.
nlohmann::json cmd_forecast(const RunConfig& config, const std::filesystem::path& checkpoint, const Date& as_of);

// Directory name used by cmd_ablate for a preset.
std::string preset_dir_name(std::string_view preset);

}  // namespace mhac::pipeline
