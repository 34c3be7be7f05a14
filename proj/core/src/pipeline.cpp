#include "mhac/pipeline.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "mhac/augment.hpp"
#include "mhac/error.hpp"
#include "mhac/model.hpp"
#include "mhac/rng.hpp"
#include "mhac/synth.hpp"

namespace mhac::pipeline {

namespace fs = std::filesystem;

namespace {

template <typename Fn>
auto stage(std::string_view name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(std::string(name), e.code(), e.what());
  } catch (const nlohmann::json::exception& e) {
    throw StageError(std::string(name), ErrorCode::kParse, e.what());
  } catch (const fs::filesystem_error& e) {
    throw StageError(std::string(name), ErrorCode::kIo, e.what());
  }
}

void say(const Progress& progress, const std::string& message) {
  if (progress) progress(message);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  out << text;
  require(static_cast<bool>(out), ErrorCode::kIo, fmt::format("write failed for {}", path.string()));
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, fmt::format("cannot open {}", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

data::Scaler load_scaler(const fs::path& path) {
  return data::Scaler::from_json(nlohmann::json::parse(read_text(path)));
}

data::MultivariateFrame load_csv_source(const CsvSource& csv) {
  using data::VariableKind;
  using data::VariableSpec;
  const VariableSpec entrant_spec{"entrant", VariableKind::kNumeric, {}, 1};
  const VariableSpec attraction_spec{"attraction", VariableKind::kNumeric, {}, 1};
  const data::RawSeries entrant = data::ingest_csv(csv.entrant, entrant_spec);
  const data::RawSeries attraction = data::ingest_csv(csv.attraction, attraction_spec);
  const DateInterval range{csv.first_day.value_or(std::max(entrant.start_date, attraction.start_date)),
                           csv.last_day.value_or(std::min(entrant.end_date(), attraction.end_date()))};
  require(range.first <= range.last, ErrorCode::kCoverage, "the entrant and attraction files do not overlap");
  const auto length = static_cast<std::size_t>(range.last.days_since(range.first)) + 1;
  const VariableSpec politics{"politics", VariableKind::kDummyInterval, csv.politics_intervals, 1};
  const VariableSpec disease{"disease", VariableKind::kDummyInterval, csv.disease_intervals, 1};
  const VariableSpec season{"season", VariableKind::kDummySeason, {}, 4};
  const std::vector<VariableSpec> specs = {entrant_spec, politics, disease, season, attraction_spec};
  const std::vector<data::RawSeries> series = {entrant, data::build_interval_dummy(politics, range.first, length),
                                               data::build_interval_dummy(disease, range.first, length),
                                               data::build_season_dummy(range.first, length), attraction};
  return data::assemble_frame(specs, series, range);
}

nlohmann::json run_echo(const RunConfig& config, std::size_t run) {
  const RunSeeds seeds = run_seeds(config, run);
  nlohmann::json echo = config.to_json();
  echo["run"] = run;
  echo["run_seeds"] = {{"train", seeds.train}, {"augment", seeds.augment}};
  return echo;
}

void write_report_and_plot(const RunConfig& config, const eval::ForecastMatrix& forecasts, eval::EvalReport& report,
                           const fs::path& report_path, const fs::path& plot_path, const std::string& title) {
  eval::emit_report(report, report_path);
  eval::PlotOptions options;
  options.title = title;
  options.metadata = report.config_echo;
  eval::emit_plot(eval::horizon_series(forecasts, config.eval.plot_horizon), plot_path, options);
}

eval::EvalReport evaluate_checkpoint(const RunConfig& config, const data::MultivariateFrame& frame,
                                     const fs::path& checkpoint_path, const fs::path& scaler_path,
                                     eval::ForecastMatrix& forecasts) {
  const model::Checkpoint checkpoint = stage("load checkpoint", [&] {
    return model::load_checkpoint(checkpoint_path, config.effective_model_config());
  });
  const data::Scaler scaler = stage("load scaler", [&] { return load_scaler(scaler_path); });
  forecasts = stage("forecast", [&] { return forecast_test_period(config, frame, checkpoint.params, scaler); });
  eval::EvalReport report = stage("evaluate", [&] { return eval::evaluate(forecasts, config.eval.zero_floor); });
  report.config_echo = checkpoint.run_config;
  return report;
}

}  // namespace

StageError::StageError(std::string stage, ErrorCode code, const std::string& what)
    : std::runtime_error(fmt::format("stage '{}' failed: {}", stage, what)), stage_(std::move(stage)), code_(code) {}

RunSeeds run_seeds(const RunConfig& config, std::size_t run) {
  return {derive_seed(config.seed, {0x7261, run}),
          derive_seed(config.augment.augment_seed.value_or(config.seed), {0x6175, run})};
}

RunPaths run_paths(const fs::path& output_dir, std::size_t run) {
  const fs::path dir = output_dir / fmt::format("run_{:02}", run);
  return {dir,
          dir / "checkpoint.json",
          dir / "checkpoint_best.json",
          dir / "scaler.json",
          dir / "history.jsonl",
          dir / "report.json"};
}

fs::path mean_report_path(const fs::path& output_dir) { return output_dir / "report_mean.json"; }

data::MultivariateFrame load_data(const RunConfig& config) {
  data::MultivariateFrame frame = [&] {
    switch (config.data.kind) {
      case DataSourceKind::kSynth: return data::synth_generate(config.data.synth);
      case DataSourceKind::kFrameDir: return data::load_frame(config.data.frame_dir);
      case DataSourceKind::kCsv: return load_csv_source(config.data.csv);
    }
    fail(ErrorCode::kConfig, "unknown data source");
  }();
  for (const auto& name : config.drop_variables) frame = frame.without_variable(name);
  return frame;
}

TrainingRun run_training(const RunConfig& config, const data::MultivariateFrame& frame, std::size_t run,
                         const train::EpochCallback& on_epoch) {
  const RunSeeds seeds = run_seeds(config, run);
  const model::MhacConfig model_config = config.effective_model_config();
  train::TrainConfig train_config = config.train;
  train_config.seed = seeds.train;

  TrainingRun out;
  const data::TrainTestSplit split = stage("split", [&] { return data::split_train_test(frame, config.train_end); });
  out.scaler = stage("scale", [&] { return data::fit_scaler(frame, config.train_end); });
  const data::MultivariateFrame scaled_train = data::apply_scaler(split.train, out.scaler);
  const data::SegmentSet segments =
      stage("segment", [&] { return data::make_segments(scaled_train, config.m, config.k); });
  out.train_segments = segments.size();
  auto [fit_set, val_set] = stage("validation split", [&] {
    return train::split_validation(segments, train_config.validation_fraction, train_config.seed,
                                   train_config.validation_split);
  });
  out.validation_segments = val_set.size();
  const data::SegmentSet augmented = stage("augment", [&] {
    const augment::NoiseModel noise = augment::make_noise_model(fit_set, config.augment.noise_sigma_scale,
                                                                seeds.augment, config.augment.parameterization);
    return augment::augment_set(fit_set, config.augment.augment_factor, noise);
  });
  out.augmented_segments = augmented.size();
  out.result = stage("train", [&] {
    return train::train_model(model_config, train_config, augmented, val_set, on_epoch);
  });
  return out;
}

eval::ForecastMatrix forecast_test_period(const RunConfig& config, const data::MultivariateFrame& frame,
                                          const model::MhacParams& params, const data::Scaler& scaler) {
  const data::MultivariateFrame scaled = data::apply_scaler(frame, scaler);
  const data::SegmentSet test = data::make_test_segments(scaled, config.train_end, config.m, config.k);
  const nn::Tensor raw = model::predict_batch(params, test);
  const std::vector<double>& truth_values = frame.target().values;

  eval::ForecastMatrix fm;
  const std::size_t n = test.size();
  const std::size_t k = config.k;
  fm.predictions = nn::Tensor({n, k}, 0.0);
  fm.truths = nn::Tensor({n, k}, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const data::Segment& seg = test.segments[s];
    fm.anchor_dates.push_back(seg.anchor_date);
    for (std::size_t h = 0; h < k; ++h) {
      fm.predictions.at(s, h) = scaler.invert_target(raw.at(s, h));
      fm.truths.at(s, h) = truth_values[seg.t_index + 1 + h];
    }
  }
  fm.validate();
  return fm;
}

std::vector<DatedValue> forecast_from(const data::MultivariateFrame& frame, const model::MhacParams& params,
                                      const data::Scaler& scaler, const Date& as_of) {
  const data::MultivariateFrame scaled = data::apply_scaler(frame, scaler);
  const data::Segment input = data::make_input_segment(scaled, as_of, params.config().m);
  const std::vector<double> raw = model::forward(params, input.inputs);
  std::vector<DatedValue> out;
  out.reserve(raw.size());
  for (std::size_t h = 0; h < raw.size(); ++h) {
    out.push_back({as_of.plus_days(static_cast<std::int64_t>(h) + 1), scaler.invert_target(raw[h])});
  }
  return out;
}

fs::path cmd_synth(const RunConfig& config, bool force, const Progress& progress) {
  return stage("synth", [&] {
    const fs::path& dir = config.output_dir;
    if (fs::exists(dir)) {
      require(fs::is_directory(dir), ErrorCode::kIo, fmt::format("{} exists and is not a directory", dir.string()));
      if (!fs::is_empty(dir)) {
        require(force, ErrorCode::kIo,
                fmt::format("refusing to overwrite non-empty directory {} (use --force)", dir.string()));
        for (const auto& entry : fs::directory_iterator(dir)) fs::remove_all(entry.path());
      }
    }
    const data::MultivariateFrame frame = data::synth_generate(config.data.synth);
    data::save_frame(frame, dir);
    say(progress, fmt::format("wrote {} days ({} .. {}) to {}", frame.length(), frame.start_date().iso(),
                              frame.end_date().iso(), dir.string()));
    return dir;
  });
}

std::vector<RunPaths> cmd_train(const RunConfig& config, const Progress& progress) {
  const data::MultivariateFrame frame = stage("load data", [&] { return load_data(config); });
  std::vector<RunPaths> written;
  for (std::size_t run = 0; run < config.repeat_count; ++run) {
    const RunPaths paths = run_paths(config.output_dir, run);
    const TrainingRun outcome = run_training(config, frame, run, [&](const train::EpochRecord& r) {
      say(progress, fmt::format("run {} epoch {}: train {:.6g} val {:.6g} ({} steps, {:.1f}s)", run, r.epoch,
                                r.train_loss, r.val_loss, r.steps, r.seconds));
    });
    stage("write artifacts", [&] {
      fs::create_directories(paths.dir);
      const nlohmann::json echo = run_echo(config, run);
      model::Checkpoint checkpoint{outcome.result.final_params.config(), config.train, outcome.result.final_params,
                                   echo};
      checkpoint.train_config.seed = run_seeds(config, run).train;
      model::save_checkpoint(paths.checkpoint, checkpoint);
      checkpoint.params = outcome.result.best_params;
      model::save_checkpoint(paths.best_checkpoint, checkpoint);
      write_text(paths.scaler, outcome.scaler.to_json().dump(2) + "\n");
      write_text(paths.history, outcome.result.history.to_jsonl());
    });
    say(progress, fmt::format("run {}: {} segments ({} after augmentation, {} validation), best epoch {}", run,
                              outcome.train_segments, outcome.augmented_segments, outcome.validation_segments,
                              outcome.result.history.best_epoch));
    written.push_back(paths);
  }
  return written;
}

EvaluationSet cmd_evaluate(const RunConfig& config, const std::optional<fs::path>& checkpoint,
                           const Progress& progress) {
  const data::MultivariateFrame frame = stage("load data", [&] { return load_data(config); });
  EvaluationSet out;
  if (checkpoint) {
    eval::ForecastMatrix fm;
    eval::EvalReport report =
        evaluate_checkpoint(config, frame, *checkpoint, checkpoint->parent_path() / "scaler.json", fm);
    stage("write report", [&] {
      fs::create_directories(config.output_dir);
      write_report_and_plot(config, fm, report, config.output_dir / "report.json",
                            config.output_dir / fmt::format("plot_h{}.svg", config.eval.plot_horizon),
                            fmt::format("Horizon {} forecast", config.eval.plot_horizon));
    });
    say(progress, fmt::format("MAPE {:.4f}%  RMSE {:.4f}  CORR {:.4f}", report.mape_percent, report.rmse, report.corr));
    out.runs.push_back(std::move(report));
    out.forecasts.push_back(std::move(fm));
    return out;
  }
  for (std::size_t run = 0; run < config.repeat_count; ++run) {
    const RunPaths paths = run_paths(config.output_dir, run);
    eval::ForecastMatrix fm;
    eval::EvalReport report = evaluate_checkpoint(
        config, frame, config.eval.use_best_epoch ? paths.best_checkpoint : paths.checkpoint, paths.scaler, fm);
    stage("write report", [&] {
      const fs::path plot = paths.dir / fmt::format("plot_h{}.svg", config.eval.plot_horizon);
      write_report_and_plot(config, fm, report, paths.report, plot,
                            fmt::format("Run {} horizon {} forecast", run, config.eval.plot_horizon));
    });
    say(progress, fmt::format("run {}: MAPE {:.4f}%  RMSE {:.4f}  CORR {:.4f}", run, report.mape_percent, report.rmse,
                              report.corr));
    out.runs.push_back(std::move(report));
    out.forecasts.push_back(std::move(fm));
  }
  if (out.runs.size() > 1) {
    out.mean = stage("aggregate", [&] {
      eval::EvalReport mean = eval::average_reports(out.runs);
      mean.config_echo = config.to_json();
      eval::emit_report(mean, mean_report_path(config.output_dir));
      return mean;
    });
    say(progress, fmt::format("mean of {} runs: MAPE {:.4f}%  RMSE {:.4f}  CORR {:.4f}", out.runs.size(),
                              out.mean->mape_percent, out.mean->rmse, out.mean->corr));
  }
  return out;
}

std::string preset_dir_name(std::string_view preset) {
  std::string name(preset);
  std::replace(name.begin(), name.end(), ':', '_');
  return name;
}

EvaluationSet cmd_ablate(const RunConfig& config, std::string_view preset, const Progress& progress) {
  RunConfig applied = apply_preset(config, preset);
  applied.output_dir = config.output_dir / preset_dir_name(preset);
  say(progress, fmt::format("preset {} -> {}", preset, applied.output_dir.string()));
  cmd_train(applied, progress);
  return cmd_evaluate(applied, std::nullopt, progress);
}

nlohmann::json cmd_forecast(const RunConfig& config, const fs::path& checkpoint_path, const Date& as_of) {
  const data::MultivariateFrame frame = stage("load data", [&] { return load_data(config); });
  const model::Checkpoint checkpoint = stage("load checkpoint", [&] {
    return model::load_checkpoint(checkpoint_path, config.effective_model_config());
  });
  const data::Scaler scaler =
      stage("load scaler", [&] { return load_scaler(checkpoint_path.parent_path() / "scaler.json"); });
  const std::vector<DatedValue> values =
      stage("forecast", [&] { return forecast_from(frame, checkpoint.params, scaler, as_of); });
  nlohmann::json out = nlohmann::json::array();
  for (const DatedValue& v : values) out.push_back({{"date", v.date.iso()}, {"value", v.value}});
  return out;
}

}  // namespace mhac::pipeline
