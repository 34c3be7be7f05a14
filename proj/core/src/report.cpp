#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "mhac/error.hpp"
#include "mhac/metrics.hpp"

namespace mhac::eval {

namespace {

nlohmann::json optional_array(const std::vector<std::optional<double>>& values) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& v : values) arr.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
  return arr;
}

std::vector<std::optional<double>> optional_array_from(const nlohmann::json& arr) {
  std::vector<std::optional<double>> out;
  for (const auto& v : arr) out.push_back(v.is_null() ? std::nullopt : std::optional(v.get<double>()));
  return out;
}

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
  return {{"mape_percent", mape_percent},
          {"rmse", rmse},
          {"corr", corr},
          {"mape_by_horizon", optional_array(mape_by_horizon)},
          {"rmse_by_horizon", rmse_by_horizon},
          {"corr_by_horizon", optional_array(corr_by_horizon)},
          {"excluded_mape_points", excluded_mape_points},
          {"excluded_corr_horizons", excluded_corr_horizons},
          {"segments", segments},
          {"runs", runs},
          {"config", config_echo}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.mape_percent = j.at("mape_percent").get<double>();
    r.rmse = j.at("rmse").get<double>();
    r.corr = j.at("corr").get<double>();
    r.mape_by_horizon = optional_array_from(j.at("mape_by_horizon"));
    r.rmse_by_horizon = j.at("rmse_by_horizon").get<std::vector<double>>();
    r.corr_by_horizon = optional_array_from(j.at("corr_by_horizon"));
    r.excluded_mape_points = j.at("excluded_mape_points").get<std::size_t>();
    r.excluded_corr_horizons = j.at("excluded_corr_horizons").get<std::size_t>();
    r.segments = j.at("segments").get<std::size_t>();
    r.runs = j.at("runs").get<std::size_t>();
    r.config_echo = j.at("config");
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, fmt::format("report: {}", e.what()));
  }
}

void emit_report(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  out << report.to_json().dump(2) << "\n";
  require(static_cast<bool>(out), ErrorCode::kIo, fmt::format("short write to {}", path.string()));
}

EvalReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIo, fmt::format("cannot open {}", path.string()));
  try {
    return EvalReport::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string render_plot_svg(const HorizonSeries& series, const PlotOptions& options) {
  const double width = options.width;
  const double height = options.height;
  constexpr double left = 80.0;
  constexpr double right = 20.0;
  constexpr double top = 40.0;
  constexpr double bottom = 60.0;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double lo = 0.0;
  double hi = 1.0;
  if (!series.truths.empty()) {
    lo = std::min(*std::min_element(series.truths.begin(), series.truths.end()),
                  *std::min_element(series.predictions.begin(), series.predictions.end()));
    hi = std::max(*std::max_element(series.truths.begin(), series.truths.end()),
                  *std::max_element(series.predictions.begin(), series.predictions.end()));
  }
  if (hi <= lo) hi = lo + 1.0;
  const std::size_t n = series.truths.size();
  auto x_of = [&](std::size_t i) {
    return left + (n > 1 ? plot_w * static_cast<double>(i) / static_cast<double>(n - 1) : plot_w / 2.0);
  };
  auto y_of = [&](double v) { return top + plot_h * (1.0 - (v - lo) / (hi - lo)); };
  auto points = [&](const std::vector<double>& values) {
    std::string pts;
    for (std::size_t i = 0; i < values.size(); ++i) {
      pts += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", x_of(i), y_of(values[i]));
    }
    return pts;
  };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n";
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\">\n",
      options.width, options.height, options.width, options.height);
  svg += fmt::format("  <title>{}</title>\n", xml_escape(options.title));
  svg += fmt::format("  <metadata>{}</metadata>\n", xml_escape(options.metadata.dump()));
  svg += fmt::format("  <rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", options.width,
                     options.height);
  svg += fmt::format("  <text x=\"{:.1f}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
                     "text-anchor=\"middle\">{}</text>\n",
                     width / 2.0, xml_escape(options.title));
  svg += fmt::format("  <line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", left, top, top + plot_h);
  svg += fmt::format("  <line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", left, top + plot_h,
                     left + plot_w);

  constexpr int kYTicks = 5;
  for (int i = 0; i <= kYTicks; ++i) {
    const double v = lo + (hi - lo) * i / kYTicks;
    svg += fmt::format("  <text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
                       "text-anchor=\"end\">{:.0f}</text>\n",
                       left - 6.0, y_of(v) + 4.0, v);
  }
  const std::size_t x_ticks = std::min<std::size_t>(n, 6);
  for (std::size_t i = 0; i < x_ticks; ++i) {
    const std::size_t idx = x_ticks > 1 ? i * (n - 1) / (x_ticks - 1) : 0;
    svg += fmt::format("  <line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n",
                       x_of(idx), top + plot_h, top + plot_h + 5.0);
    svg += fmt::format("  <text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\" "
                       "text-anchor=\"middle\">{}</text>\n",
                       x_of(idx), top + plot_h + 18.0, series.dates[idx].iso());
  }
  svg += fmt::format("  <text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"12\" "
                     "text-anchor=\"middle\">date (horizon {})</text>\n",
                     left + plot_w / 2.0, height - 14.0, series.horizon);
  svg += fmt::format("  <text x=\"16\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"12\" "
                     "text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1f})\">{}</text>\n",
                     top + plot_h / 2.0, top + plot_h / 2.0, xml_escape(options.y_label));
  svg += fmt::format("  <polyline id=\"truth\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.2\" "
                     "points=\"{}\"/>\n",
                     points(series.truths));
  svg += fmt::format("  <polyline id=\"prediction\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.2\" "
                     "points=\"{}\"/>\n",
                     points(series.predictions));
  svg += fmt::format("  <text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
                     "fill=\"#1f4e9c\">actual</text>\n",
                     left + 10.0, top + 14.0);
  svg += fmt::format("  <text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
                     "fill=\"#c0392b\">predicted</text>\n",
                     left + 70.0, top + 14.0);
  svg += "</svg>\n";
  return svg;
}

void emit_plot(const HorizonSeries& series, const std::filesystem::path& path, const PlotOptions& options) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  out << render_plot_svg(series, options);
  require(static_cast<bool>(out), ErrorCode::kIo, fmt::format("short write to {}", path.string()));
}

}  // namespace mhac::eval
