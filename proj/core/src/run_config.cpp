#include "mhac/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mhac/error.hpp"

namespace mhac::pipeline {

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  require(j.is_object(), ErrorCode::kConfig, fmt::format("{} must be an object", where));
  for (const auto& [key, value] : j.items()) {
    const bool ok = std::find(allowed.begin(), allowed.end(), key) != allowed.end();
    require(ok, ErrorCode::kConfig, fmt::format("unknown key '{}' in {}", key, where));
  }
}

std::vector<DateInterval> intervals_from(const nlohmann::json& arr) {
  std::vector<DateInterval> out;
  for (const auto& iv : arr) {
    require(iv.is_array() && iv.size() == 2, ErrorCode::kConfig, "intervals are [first, last] date pairs");
    out.push_back({Date::parse(iv[0].get<std::string>()), Date::parse(iv[1].get<std::string>())});
  }
  return out;
}

nlohmann::json intervals_to(const std::vector<DateInterval>& intervals) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& iv : intervals) arr.push_back({iv.first.iso(), iv.last.iso()});
  return arr;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string_view to_string(DataSourceKind kind) {
  switch (kind) {
    case DataSourceKind::kSynth: return "synth";
    case DataSourceKind::kFrameDir: return "frame_dir";
    case DataSourceKind::kCsv: return "csv";
  }
  return "synth";
}

std::size_t parse_count(std::string_view text, std::string_view preset) {
  std::size_t n = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
  require(!text.empty() && ec == std::errc() && ptr == text.data() + text.size(), ErrorCode::kConfig,
          fmt::format("preset '{}' needs a non-negative integer argument", preset));
  return n;
}

}  // namespace

model::MhacConfig RunConfig::effective_model_config() const {
  model::MhacConfig cfg = model;
  cfg.m = m;
  cfg.k = k;
  for (const auto& name : drop_variables) cfg = cfg.without_head(name);
  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  require(m >= 1 && k >= 1, ErrorCode::kConfig, "m and k must be positive");
  require(repeat_count >= 1, ErrorCode::kConfig, "repeat_count must be >= 1");
  require(eval.zero_floor >= 0.0, ErrorCode::kConfig, "eval.zero_floor must be >= 0");
  require(eval.plot_horizon >= 1 && eval.plot_horizon <= k, ErrorCode::kConfig,
          fmt::format("eval.plot_horizon must be in [1, {}]", k));
  require(augment.noise_sigma_scale >= 0.0, ErrorCode::kConfig, "augment.noise_sigma_scale must be >= 0");
  for (const auto& name : drop_variables) {
    require(std::find(data::kCanonicalVariables.begin(), data::kCanonicalVariables.end(), name) !=
                data::kCanonicalVariables.end(),
            ErrorCode::kConfig, fmt::format("cannot drop unknown variable '{}'", name));
  }
  if (data.kind == DataSourceKind::kSynth) data.synth.validate();
  train.validate();
  (void)effective_model_config();
}

RunConfig RunConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  try {
    reject_unknown(j,
                   {"data", "train_end", "m", "k", "model", "train", "augment", "eval", "drop_variables", "output_dir",
                    "seed", "repeat_count"},
                   "run config");
    if (j.contains("data")) {
      const auto& d = j["data"];
      reject_unknown(d, {"source", "synth", "frame_dir", "csv"}, "data");
      const std::string source = d.value("source", "synth");
      if (source == "synth") {
        c.data.kind = DataSourceKind::kSynth;
      } else if (source == "frame_dir") {
        c.data.kind = DataSourceKind::kFrameDir;
      } else if (source == "csv") {
        c.data.kind = DataSourceKind::kCsv;
      } else {
        fail(ErrorCode::kConfig, fmt::format("data.source must be synth, frame_dir or csv, got '{}'", source));
      }
      if (d.contains("synth")) c.data.synth = data::SynthSpec::from_json(d["synth"]);
      if (d.contains("frame_dir")) c.data.frame_dir = resolve(base_dir, d["frame_dir"].get<std::string>());
      if (d.contains("csv")) {
        const auto& csv = d["csv"];
        reject_unknown(csv, {"entrant", "attraction", "politics_intervals", "disease_intervals", "first_day", "last_day"},
                       "data.csv");
        c.data.csv.entrant = resolve(base_dir, csv.at("entrant").get<std::string>());
        c.data.csv.attraction = resolve(base_dir, csv.at("attraction").get<std::string>());
        if (csv.contains("politics_intervals")) c.data.csv.politics_intervals = intervals_from(csv["politics_intervals"]);
        if (csv.contains("disease_intervals")) c.data.csv.disease_intervals = intervals_from(csv["disease_intervals"]);
        if (csv.contains("first_day")) c.data.csv.first_day = Date::parse(csv["first_day"].get<std::string>());
        if (csv.contains("last_day")) c.data.csv.last_day = Date::parse(csv["last_day"].get<std::string>());
      }
      require(c.data.kind != DataSourceKind::kFrameDir || !c.data.frame_dir.empty(), ErrorCode::kConfig,
              "data.frame_dir is required for source 'frame_dir'");
      require(c.data.kind != DataSourceKind::kCsv || d.contains("csv"), ErrorCode::kConfig,
              "data.csv is required for source 'csv'");
    }
    if (j.contains("train_end")) c.train_end = Date::parse(j["train_end"].get<std::string>());
    if (j.contains("m")) c.m = j["m"].get<std::size_t>();
    if (j.contains("k")) c.k = j["k"].get<std::size_t>();
    if (j.contains("model")) {
      require(!j["model"].contains("m") && !j["model"].contains("k"), ErrorCode::kConfig,
              "set the window sizes with top-level 'm' and 'k', not inside 'model'");
      c.model = model::MhacConfig::from_json(j["model"]);
    }
    if (j.contains("train")) {
      require(!j["train"].contains("seed"), ErrorCode::kConfig,
              "per-run training seeds derive from the top-level 'seed'");
      c.train = train::TrainConfig::from_json(j["train"]);
    }
    if (j.contains("augment")) {
      const auto& a = j["augment"];
      reject_unknown(a, {"augment_factor", "noise_sigma_scale", "augment_seed", "noise_parameterization"}, "augment");
      c.augment.augment_factor = a.value("augment_factor", c.augment.augment_factor);
      c.augment.noise_sigma_scale = a.value("noise_sigma_scale", c.augment.noise_sigma_scale);
      if (a.contains("augment_seed") && !a["augment_seed"].is_null()) {
        c.augment.augment_seed = a["augment_seed"].get<std::uint64_t>();
      }
      if (a.contains("noise_parameterization")) {
        c.augment.parameterization =
            augment::parse_noise_parameterization(a["noise_parameterization"].get<std::string>());
      }
    }
    if (j.contains("eval")) {
      const auto& e = j["eval"];
      reject_unknown(e, {"zero_floor", "plot_horizon", "use_best_epoch"}, "eval");
      c.eval.zero_floor = e.value("zero_floor", c.eval.zero_floor);
      c.eval.plot_horizon = e.value("plot_horizon", c.eval.plot_horizon);
      c.eval.use_best_epoch = e.value("use_best_epoch", c.eval.use_best_epoch);
    }
    if (j.contains("drop_variables")) c.drop_variables = j["drop_variables"].get<std::vector<std::string>>();
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("repeat_count")) c.repeat_count = j["repeat_count"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, fmt::format("run config: {}", e.what()));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    fail(ErrorCode::kConfig, e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kConfig, fmt::format("cannot open config {}", path.string()));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, fmt::format("{}: {}", path.string(), e.what()));
  }
  return from_json(j, path.parent_path());
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json d = {{"source", std::string(to_string(data.kind))}};
  if (data.kind == DataSourceKind::kSynth) d["synth"] = data.synth.to_json();
  if (data.kind == DataSourceKind::kFrameDir) d["frame_dir"] = data.frame_dir.string();
  if (data.kind == DataSourceKind::kCsv) {
    nlohmann::json csv = {{"entrant", data.csv.entrant.string()},
                          {"attraction", data.csv.attraction.string()},
                          {"politics_intervals", intervals_to(data.csv.politics_intervals)},
                          {"disease_intervals", intervals_to(data.csv.disease_intervals)}};
    if (data.csv.first_day) csv["first_day"] = data.csv.first_day->iso();
    if (data.csv.last_day) csv["last_day"] = data.csv.last_day->iso();
    d["csv"] = csv;
  }
  nlohmann::json model_json = model.to_json();
  model_json.erase("m");
  model_json.erase("k");
  nlohmann::json train_json = train.to_json();
  train_json.erase("seed");
  return {{"data", d},
          {"train_end", train_end.iso()},
          {"m", m},
          {"k", k},
          {"model", model_json},
          {"train", train_json},
          {"augment",
           {{"augment_factor", augment.augment_factor},
            {"noise_sigma_scale", augment.noise_sigma_scale},
            {"augment_seed", augment.augment_seed ? nlohmann::json(*augment.augment_seed) : nlohmann::json(nullptr)},
            {"noise_parameterization", std::string(augment::to_string(augment.parameterization))}}},
          {"eval",
           {{"zero_floor", eval.zero_floor},
            {"plot_horizon", eval.plot_horizon},
            {"use_best_epoch", eval.use_best_epoch}}},
          {"drop_variables", drop_variables},
          {"output_dir", output_dir.string()},
          {"seed", seed},
          {"repeat_count", repeat_count}};
}

std::vector<std::string> preset_names() {
  return {"no_attention", "no_weightnorm", "single_cnn", "drop_variable:<name>", "augment_factor:<n>",
          "batch_size:<n>"};
}

RunConfig apply_preset(const RunConfig& config, std::string_view preset) {
  RunConfig out = config;
  const auto colon = preset.find(':');
  const std::string_view name = preset.substr(0, colon);
  const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : preset.substr(colon + 1);
  const bool takes_arg = name == "drop_variable" || name == "augment_factor" || name == "batch_size";
  const bool known = takes_arg || name == "no_attention" || name == "no_weightnorm" || name == "single_cnn";
  require(known && takes_arg == (colon != std::string_view::npos), ErrorCode::kConfig,
          fmt::format("unknown preset '{}'; valid presets: {}", preset, fmt::join(preset_names(), ", ")));
  if (name == "no_attention") {
    out.model.use_attention = false;
  } else if (name == "no_weightnorm") {
    out.model.use_weightnorm = false;
  } else if (name == "single_cnn") {
    out.model.single_cnn = true;
  } else if (name == "drop_variable") {
    out.drop_variables.emplace_back(arg);
  } else if (name == "augment_factor") {
    out.augment.augment_factor = parse_count(arg, preset);
  } else if (name == "batch_size") {
    out.train.batch_size = parse_count(arg, preset);
  }
  out.validate();
  return out;
}

}  // namespace mhac::pipeline
