#pragma once

#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "mhac/model.hpp"
#include "mhac/train.hpp"

namespace mhac::model {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  MhacConfig model_config;
  train::TrainConfig train_config;
  MhacParams params;
  nlohmann::json run_config = nlohmann::json::object();  // echo of the producing run
};

nlohmann::json checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

// Written to a temporary sibling and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

// Error(kCheckpoint) on unreadable/truncated files, version mismatches, shape
// mismatches against the embedded config, or a config differing from `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<MhacConfig>& expected = std::nullopt);

}  // namespace mhac::model
