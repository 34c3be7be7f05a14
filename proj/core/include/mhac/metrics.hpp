#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhac/date.hpp"
#include "mhac/tensor.hpp"

namespace mhac::eval {

inline constexpr double kDefaultZeroFloor = 1e-6;

struct MapeResult {
  double percent = 0.0;
  std::size_t counted = 0;
  std::size_t excluded = 0;  // points with |truth| < zero_floor
};

// 100 * mean(|y - yhat| / |y|) over points with |y| >= zero_floor.
// Error(kInsufficientData) if every point is excluded.
MapeResult mape(std::span<const double> pred, std::span<const double> truth, double zero_floor = kDefaultZeroFloor);

double rmse(std::span<const double> pred, std::span<const double> truth);

// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct CorrResult {
  double value = 0.0;                               // mean over usable horizons
  std::vector<std::optional<double>> per_horizon;   // nullopt: zero-variance truth
  std::size_t excluded_horizons = 0;
};

// Per-horizon Pearson correlation across segments (rows), averaged over horizons.
CorrResult corr(const nn::Tensor& pred, const nn::Tensor& truth);

// Predictions and aligned truths in original units; row s is the k-day
// forecast made on anchor_dates[s] (the last input day).
struct ForecastMatrix {
  nn::Tensor predictions;  // segments x k
  nn::Tensor truths;       // segments x k
  std::vector<Date> anchor_dates;

  std::size_t segments() const { return predictions.rank() == 2 ? predictions.dim(0) : 0; }
  std::size_t horizon() const { return predictions.rank() == 2 ? predictions.dim(1) : 0; }
  void validate() const;
};

struct HorizonSeries {
  std::size_t horizon = 1;
  std::vector<Date> dates;  // anchor + h
  std::vector<double> predictions;
  std::vector<double> truths;
};

// Exact column slice h (1-based) of the forecast matrix.
HorizonSeries horizon_series(const ForecastMatrix& forecasts, std::size_t h);

struct EvalReport {
  double mape_percent = 0.0;
  double rmse = 0.0;
  double corr = 0.0;
  std::vector<std::optional<double>> mape_by_horizon;
  std::vector<double> rmse_by_horizon;
  std::vector<std::optional<double>> corr_by_horizon;
  std::size_t excluded_mape_points = 0;
  std::size_t excluded_corr_horizons = 0;
  std::size_t segments = 0;
  std::size_t runs = 1;
  nlohmann::json config_echo = nlohmann::json::object();

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Aggregates pool every (segment, horizon) pair; CORR is the horizon mean.
EvalReport evaluate(const ForecastMatrix& forecasts, double zero_floor = kDefaultZeroFloor);

// Metric-wise mean of several runs (per-horizon entries averaged where defined).
EvalReport average_reports(std::span<const EvalReport> reports);

void emit_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport load_report(const std::filesystem::path& path);

struct PlotOptions {
  std::string title = "Forecast";
  std::string y_label = "entrants";
  nlohmann::json metadata = nlohmann::json::object();  // embedded in <metadata>
  int width = 960;
  int height = 420;
};

// Standalone SVG 1.1: truth and prediction polylines, axes, date ticks.
std::string render_plot_svg(const HorizonSeries& series, const PlotOptions& options = {});
void emit_plot(const HorizonSeries& series, const std::filesystem::path& path, const PlotOptions& options = {});

}  // namespace mhac::eval
