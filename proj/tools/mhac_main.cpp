#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mhac/error.hpp"
#include "mhac/pipeline.hpp"
#include "mhac/run_config.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPipeline = 1;
constexpr int kExitUsage = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("mhac");
  logger->set_pattern("[%H:%M:%S] [%^%l%$] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("MHAC_LOG")) {
    const std::string name(env);
    const auto level = spdlog::level::from_str(name);
    if (level == spdlog::level::off && name != "off") {
      spdlog::warn("unknown MHAC_LOG level '{}', using info", name);
    } else {
      spdlog::set_level(level);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Multi-head attention CNN forecaster for daily arrivals"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool force = false;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory (overrides output_dir)");
  app.add_option("--seed", seed, "Master seed (synth: generator seed)");
  app.add_flag("--force", force, "Overwrite a non-empty output directory");

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset directory");
  auto* train = app.add_subcommand("train", "Train repeat_count runs");
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate trained runs on the test period");
  std::string eval_checkpoint;
  evaluate->add_option("--checkpoint", eval_checkpoint, "Evaluate this checkpoint only")->check(CLI::ExistingFile);
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate with an ablation preset");
  std::string preset;
  ablate->add_option("preset", preset, "no_attention | no_weightnorm | single_cnn | drop_variable:<name> | "
                                       "augment_factor:<n> | batch_size:<n>")
      ->required();
  auto* forecast = app.add_subcommand("forecast", "Print a k-day forecast as JSON");
  std::string forecast_checkpoint;
  std::string as_of;
  forecast->add_option("--checkpoint", forecast_checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  forecast->add_option("--as-of", as_of, "Last observed day (YYYY-MM-DD)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  using namespace mhac;
  pipeline::RunConfig config;
  try {
    if (!config_path.empty()) config = pipeline::RunConfig::load(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (seed) {
      if (synth->parsed()) {
        config.data.synth.seed = *seed;
      } else {
        config.seed = *seed;
      }
    }
    config.validate();
    if (ablate->parsed()) (void)pipeline::apply_preset(config, preset);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  }

  const pipeline::Progress progress = [](const std::string& message) { spdlog::info("{}", message); };
  try {
    if (synth->parsed()) {
      pipeline::cmd_synth(config, force, progress);
    } else if (train->parsed()) {
      for (const auto& paths : pipeline::cmd_train(config, progress)) {
        spdlog::info("wrote {}", paths.checkpoint.string());
      }
    } else if (evaluate->parsed()) {
      std::optional<std::filesystem::path> checkpoint;
      if (!eval_checkpoint.empty()) checkpoint = eval_checkpoint;
      pipeline::cmd_evaluate(config, checkpoint, progress);
    } else if (ablate->parsed()) {
      pipeline::cmd_ablate(config, preset, progress);
    } else if (forecast->parsed()) {
      Date date;
      try {
        date = Date::parse(as_of);
      } catch (const Error& e) {
        spdlog::error("--as-of: {}", e.what());
        return kExitUsage;
      }
      std::cout << pipeline::cmd_forecast(config, forecast_checkpoint, date).dump(2) << '\n';
    }
  } catch (const pipeline::StageError& e) {
    spdlog::error("{}", e.what());
    return kExitPipeline;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitPipeline;
  }
  return kExitOk;
}
