#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "mhac/error.hpp"
#include "mhac/frame.hpp"

namespace mhac::data {

namespace {

constexpr std::string_view kManifestName = "manifest.json";
constexpr int kManifestVersion = 1;

std::vector<std::string> column_names(const VariableSpec& spec) {
  if (spec.kind == VariableKind::kDummySeason && spec.channel_count == kSeasonChannels.size()) {
    return {kSeasonChannels.begin(), kSeasonChannels.end()};
  }
  if (spec.channel_count == 1) return {spec.name};
  std::vector<std::string> names;
  for (std::size_t c = 0; c < spec.channel_count; ++c) names.push_back(fmt::format("{}_{}", spec.name, c));
  return names;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  out << text;
  require(static_cast<bool>(out), ErrorCode::kIo, fmt::format("short write to {}", path.string()));
}

}  // namespace

void save_frame(const MultivariateFrame& frame, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::kIo, fmt::format("cannot create {}: {}", dir.string(), ec.message()));

  nlohmann::json manifest;
  manifest["format"] = "mhac-frame";
  manifest["version"] = kManifestVersion;
  manifest["start_date"] = frame.start_date().iso();
  manifest["end_date"] = frame.end_date().iso();
  manifest["length_days"] = frame.length();
  manifest["variables"] = nlohmann::json::array();

  for (const FrameVariable& var : frame.variables()) {
    const std::string file = var.spec.name + ".csv";
    std::string text = "date";
    for (const auto& col : column_names(var.spec)) text += "," + col;
    text += "\n";
    for (std::size_t d = 0; d < frame.length(); ++d) {
      text += frame.date_at(d).iso();
      for (std::size_t c = 0; c < var.spec.channel_count; ++c) text += fmt::format(",{}", var.at(d, c));
      text += "\n";
    }
    write_text(dir / file, text);

    nlohmann::json intervals = nlohmann::json::array();
    for (const auto& iv : var.spec.intervals) intervals.push_back({iv.first.iso(), iv.last.iso()});
    manifest["variables"].push_back({{"name", var.spec.name},
                                     {"kind", std::string(to_string(var.spec.kind))},
                                     {"channel_count", var.spec.channel_count},
                                     {"file", file},
                                     {"intervals", intervals}});
  }
  write_text(dir / kManifestName, manifest.dump(2) + "\n");
}

MultivariateFrame load_frame(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifestName);
  require(static_cast<bool>(in), ErrorCode::kIo, fmt::format("no {} in {}", kManifestName, dir.string()));
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, fmt::format("{}: {}", (dir / kManifestName).string(), e.what()));
  }
  try {
    require(manifest.at("format") == "mhac-frame" && manifest.at("version") == kManifestVersion, ErrorCode::kParse,
            "unsupported frame manifest");
    const Date start = Date::parse(manifest.at("start_date").get<std::string>());
    const auto length = manifest.at("length_days").get<std::size_t>();
    std::vector<FrameVariable> vars;
    for (const auto& entry : manifest.at("variables")) {
      VariableSpec spec;
      spec.name = entry.at("name").get<std::string>();
      spec.kind = parse_variable_kind(entry.at("kind").get<std::string>());
      spec.channel_count = entry.at("channel_count").get<std::size_t>();
      for (const auto& iv : entry.at("intervals")) {
        spec.intervals.push_back({Date::parse(iv.at(0).get<std::string>()), Date::parse(iv.at(1).get<std::string>())});
      }
      RawSeries series = ingest_csv(dir / entry.at("file").get<std::string>(), spec);
      require(series.start_date == start && series.length() == length, ErrorCode::kCoverage,
              fmt::format("{}: covers {}..{}, manifest says {} days from {}", spec.name, series.start_date.iso(),
                          series.end_date().iso(), length, start.iso()));
      vars.push_back({std::move(spec), std::move(series.values)});
    }
    return MultivariateFrame(start, length, std::move(vars));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, fmt::format("{}: {}", (dir / kManifestName).string(), e.what()));
  }
}

}  // namespace mhac::data
