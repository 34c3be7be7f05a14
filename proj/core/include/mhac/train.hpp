#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhac/model.hpp"
#include "mhac/segment.hpp"
#include "mhac/tensor.hpp"

namespace mhac::train {

enum class ValidationSplit { kShuffled, kChronologicalTail };

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t epochs = 50;
  std::size_t batch_size = 4;
  double validation_fraction = 0.2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  ValidationSplit validation_split = ValidationSplit::kShuffled;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochRecord {
  std::size_t epoch = 0;     // 1-based
  double train_loss = 0.0;   // mean MSE over the epoch's mini-batches (train mode)
  double val_loss = 0.0;     // MSE over the validation set (inference mode)
  double seconds = 0.0;
  std::size_t steps = 0;     // optimizer steps taken this epoch
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based epoch with the lowest validation loss

  std::size_t total_steps() const;
  // One JSON object per line: epoch, train_loss, val_loss, seconds, steps.
  std::string to_jsonl() const;
};

struct AdamState {
  std::vector<nn::Tensor> first_moment;
  std::vector<nn::Tensor> second_moment;
  std::size_t step = 0;

  static AdamState zeros_like(std::span<const nn::Param> params);
};

// Mean over all batch*k elements of the squared error.
double mse_loss(const nn::Tensor& pred, const nn::Tensor& truth);

// One bias-corrected Adam update from the gradients stored in params[i].grad.
void adam_step(std::span<nn::Param> params, AdamState& state, const TrainConfig& config);

// Seeded partition into (train, validation) with |val| = round(fraction * n).
// Errors: kInsufficientData when either side would be empty.
std::pair<data::SegmentSet, data::SegmentSet> split_validation(const data::SegmentSet& segments, double fraction,
                                                               std::uint64_t seed,
                                                               ValidationSplit mode = ValidationSplit::kShuffled);

// MSE of inference-mode predictions over the whole set.
double evaluate_loss(const model::MhacParams& params, const data::SegmentSet& segments);

struct TrainResult {
  model::MhacParams final_params;
  model::MhacParams best_params;
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Runs epochs * ceil(|train| / batch_size) Adam steps over mini-batches that
// are reshuffled every epoch. Non-finite losses abort with Error(kNonFinite)
// naming the epoch and batch.
TrainResult train_model(const model::MhacConfig& model_config, const TrainConfig& config,
                        const data::SegmentSet& train_set, const data::SegmentSet& validation_set,
                        const EpochCallback& on_epoch = {});

// Splits `segments` with split_validation first, then trains.
TrainResult train(const model::MhacConfig& model_config, const TrainConfig& config, const data::SegmentSet& segments,
                  const EpochCallback& on_epoch = {});

// Gradients of the mean MSE of one mini-batch (accumulated into params' grads,
// which are zeroed first). Returns the loss.
double batch_gradient(model::MhacParams& params, const data::SegmentSet& set, std::span<const std::size_t> batch,
                      nn::Mode mode, std::mt19937_64& rng);

}  // namespace mhac::train
