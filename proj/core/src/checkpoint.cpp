#include "mhac/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "mhac/error.hpp"

namespace mhac::model {

nlohmann::json checkpoint_to_json(const Checkpoint& checkpoint) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const nn::Param& p : checkpoint.params.params()) {
    tensors.push_back({{"name", p.name}, {"shape", p.value.shape()}, {"data", p.value.values()}});
  }
  return {{"format", "mhac-checkpoint"},
          {"version", kCheckpointVersion},
          {"model_config", checkpoint.model_config.to_json()},
          {"train_config", checkpoint.train_config.to_json()},
          {"run_config", checkpoint.run_config},
          {"tensors", tensors}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    require(j.at("format") == "mhac-checkpoint", ErrorCode::kCheckpoint, "not an mhac checkpoint");
    const int version = j.at("version").get<int>();
    require(version == kCheckpointVersion, ErrorCode::kCheckpoint,
            fmt::format("checkpoint version {} (this build reads {})", version, kCheckpointVersion));
    Checkpoint c;
    c.model_config = MhacConfig::from_json(j.at("model_config"));
    c.train_config = train::TrainConfig::from_json(j.at("train_config"));
    c.run_config = j.value("run_config", nlohmann::json::object());
    std::vector<nn::Param> params;
    for (const auto& t : j.at("tensors")) {
      params.emplace_back(t.at("name").get<std::string>(),
                          nn::Tensor(t.at("shape").get<nn::Shape>(), t.at("data").get<std::vector<double>>()));
    }
    c.params = MhacParams(c.model_config, std::move(params));
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kCheckpoint, fmt::format("malformed checkpoint: {}", e.what()));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCheckpoint) throw;
    fail(ErrorCode::kCheckpoint, e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::kIo, fmt::format("cannot write {}", tmp.string()));
    out << checkpoint_to_json(checkpoint).dump() << "\n";
    require(static_cast<bool>(out), ErrorCode::kIo, fmt::format("short write to {}", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorCode::kIo, fmt::format("cannot move checkpoint into {}: {}", path.string(), ec.message()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<MhacConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kCheckpoint, fmt::format("cannot open {}", path.string()));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kCheckpoint, fmt::format("{} is not a readable checkpoint: {}", path.string(), e.what()));
  }
  Checkpoint c = checkpoint_from_json(j);
  if (expected.has_value()) {
    require(c.model_config == *expected, ErrorCode::kCheckpoint,
            fmt::format("{} was trained with a different model config", path.string()));
  }
  return c;
}

}  // namespace mhac::model
