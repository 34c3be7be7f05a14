#include "mhac/metrics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mhac/error.hpp"

namespace mhac::eval {

namespace {

void expect_aligned(std::span<const double> a, std::span<const double> b, const char* what) {
  require(a.size() == b.size(), ErrorCode::kShapeMismatch,
          fmt::format("{}: {} predictions vs {} truths", what, a.size(), b.size()));
  require(!a.empty(), ErrorCode::kEmptyInput, fmt::format("{} of no points", what));
}

std::vector<double> column(const nn::Tensor& m, std::size_t c) {
  std::vector<double> out(m.dim(0));
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = m.at(r, c);
  return out;
}

}  // namespace

MapeResult mape(std::span<const double> pred, std::span<const double> truth, double zero_floor) {
  expect_aligned(pred, truth, "mape");
  MapeResult r;
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (std::abs(truth[i]) < zero_floor) {
      ++r.excluded;
      continue;
    }
    total += std::abs(truth[i] - pred[i]) / std::abs(truth[i]);
    ++r.counted;
  }
  require(r.counted > 0, ErrorCode::kInsufficientData,
          fmt::format("mape: all {} truths are below the zero floor {}", pred.size(), zero_floor));
  r.percent = 100.0 * total / static_cast<double>(r.counted);
  return r;
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  expect_aligned(pred, truth, "rmse");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return std::sqrt(total / static_cast<double>(pred.size()));
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  expect_aligned(x, y, "pearson");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrResult corr(const nn::Tensor& pred, const nn::Tensor& truth) {
  require(pred.rank() == 2 && pred.shape() == truth.shape(), ErrorCode::kShapeMismatch,
          fmt::format("corr: {} vs {}", nn::to_string(pred.shape()), nn::to_string(truth.shape())));
  require(pred.dim(0) >= 2, ErrorCode::kInsufficientData, "corr needs at least two segments");
  CorrResult r;
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t h = 0; h < pred.dim(1); ++h) {
    const auto p = column(pred, h);
    const auto t = column(truth, h);
    // A flat truth column has no defined correlation; flat predictions do not
    // either, so both drop out of the average.
    auto c = pearson(p, t);
    r.per_horizon.push_back(c);
    if (c.has_value()) {
      total += *c;
      ++used;
    } else {
      ++r.excluded_horizons;
    }
  }
  require(used > 0, ErrorCode::kInsufficientData, "corr: every horizon has zero variance");
  r.value = total / static_cast<double>(used);
  return r;
}

void ForecastMatrix::validate() const {
  require(predictions.rank() == 2 && predictions.shape() == truths.shape(), ErrorCode::kShapeMismatch,
          fmt::format("forecast matrix: predictions {} vs truths {}", nn::to_string(predictions.shape()),
                      nn::to_string(truths.shape())));
  require(anchor_dates.size() == segments(), ErrorCode::kShapeMismatch,
          fmt::format("{} anchor dates for {} rows", anchor_dates.size(), segments()));
  for (std::size_t i = 1; i < anchor_dates.size(); ++i) {
    require(anchor_dates[i].days_since(anchor_dates[i - 1]) == 1, ErrorCode::kInvalidArgument,
            fmt::format("anchor dates jump from {} to {}", anchor_dates[i - 1].iso(), anchor_dates[i].iso()));
  }
}

HorizonSeries horizon_series(const ForecastMatrix& forecasts, std::size_t h) {
  forecasts.validate();
  require(h >= 1 && h <= forecasts.horizon(), ErrorCode::kRange,
          fmt::format("horizon {} outside [1, {}]", h, forecasts.horizon()));
  HorizonSeries s;
  s.horizon = h;
  for (std::size_t r = 0; r < forecasts.segments(); ++r) {
    s.dates.push_back(forecasts.anchor_dates[r].plus_days(static_cast<std::int64_t>(h)));
    s.predictions.push_back(forecasts.predictions.at(r, h - 1));
    s.truths.push_back(forecasts.truths.at(r, h - 1));
  }
  return s;
}

EvalReport evaluate(const ForecastMatrix& forecasts, double zero_floor) {
  forecasts.validate();
  EvalReport report;
  report.segments = forecasts.segments();
  const MapeResult overall = mape(forecasts.predictions.data(), forecasts.truths.data(), zero_floor);
  report.mape_percent = overall.percent;
  report.excluded_mape_points = overall.excluded;
  report.rmse = rmse(forecasts.predictions.data(), forecasts.truths.data());
  const CorrResult c = corr(forecasts.predictions, forecasts.truths);
  report.corr = c.value;
  report.corr_by_horizon = c.per_horizon;
  report.excluded_corr_horizons = c.excluded_horizons;
  for (std::size_t h = 0; h < forecasts.horizon(); ++h) {
    const auto p = column(forecasts.predictions, h);
    const auto t = column(forecasts.truths, h);
    report.rmse_by_horizon.push_back(rmse(p, t));
    try {
      report.mape_by_horizon.push_back(mape(p, t, zero_floor).percent);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientData) throw;
      report.mape_by_horizon.push_back(std::nullopt);
    }
  }
  return report;
}

EvalReport average_reports(std::span<const EvalReport> reports) {
  require(!reports.empty(), ErrorCode::kEmptyInput, "no reports to average");
  EvalReport mean;
  const std::size_t k = reports.front().rmse_by_horizon.size();
  mean.segments = reports.front().segments;
  mean.runs = reports.size();
  mean.config_echo = reports.front().config_echo;
  mean.rmse_by_horizon.assign(k, 0.0);
  std::vector<double> mape_sum(k, 0.0);
  std::vector<double> corr_sum(k, 0.0);
  std::vector<std::size_t> mape_n(k, 0);
  std::vector<std::size_t> corr_n(k, 0);
  const double n = static_cast<double>(reports.size());
  for (const EvalReport& r : reports) {
    require(r.rmse_by_horizon.size() == k, ErrorCode::kShapeMismatch, "reports have different horizons");
    mean.mape_percent += r.mape_percent / n;
    mean.rmse += r.rmse / n;
    mean.corr += r.corr / n;
    mean.excluded_mape_points += r.excluded_mape_points;
    mean.excluded_corr_horizons += r.excluded_corr_horizons;
    for (std::size_t h = 0; h < k; ++h) {
      mean.rmse_by_horizon[h] += r.rmse_by_horizon[h] / n;
      if (r.mape_by_horizon[h]) {
        mape_sum[h] += *r.mape_by_horizon[h];
        ++mape_n[h];
      }
      if (r.corr_by_horizon[h]) {
        corr_sum[h] += *r.corr_by_horizon[h];
        ++corr_n[h];
      }
    }
  }
  for (std::size_t h = 0; h < k; ++h) {
    mean.mape_by_horizon.push_back(mape_n[h] ? std::optional(mape_sum[h] / static_cast<double>(mape_n[h]))
                                             : std::nullopt);
    mean.corr_by_horizon.push_back(corr_n[h] ? std::optional(corr_sum[h] / static_cast<double>(corr_n[h]))
                                             : std::nullopt);
  }
  return mean;
}

}  // namespace mhac::eval
