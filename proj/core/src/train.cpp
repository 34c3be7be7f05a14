#include "mhac/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "mhac/error.hpp"
#include "mhac/rng.hpp"

namespace mhac::train {

namespace {

constexpr std::uint64_t kSplitStream = 2;
constexpr std::uint64_t kShuffleStream = 3;
constexpr std::uint64_t kDropoutStream = 4;

std::string_view to_string(ValidationSplit mode) {
  return mode == ValidationSplit::kShuffled ? "shuffled" : "chronological";
}

}  // namespace

void TrainConfig::validate() const {
  require(learning_rate > 0.0, ErrorCode::kConfig, "train.learning_rate must be positive");
  require(epochs >= 1, ErrorCode::kConfig, "train.epochs must be >= 1");
  require(batch_size >= 1, ErrorCode::kConfig, "train.batch_size must be >= 1");
  require(validation_fraction > 0.0 && validation_fraction < 1.0, ErrorCode::kConfig,
          "train.validation_fraction must be in (0, 1)");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ErrorCode::kConfig,
          "Adam betas must be in [0, 1)");
  require(epsilon > 0.0, ErrorCode::kConfig, "train.epsilon must be positive");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"validation_fraction", validation_fraction},
          {"beta1", beta1},
          {"beta2", beta2},
          {"epsilon", epsilon},
          {"validation_split", std::string(to_string(validation_split))},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  const nlohmann::json defaults = c.to_json();
  try {
    require(j.is_object(), ErrorCode::kConfig, "train config must be an object");
    for (const auto& [key, value] : j.items()) {
      require(defaults.contains(key), ErrorCode::kConfig, fmt::format("unknown train key '{}'", key));
    }
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.seed = j.value("seed", c.seed);
    if (j.contains("validation_split")) {
      const auto mode = j["validation_split"].get<std::string>();
      require(mode == "shuffled" || mode == "chronological", ErrorCode::kConfig,
              fmt::format("train.validation_split must be 'shuffled' or 'chronological', got '{}'", mode));
      c.validation_split = mode == "shuffled" ? ValidationSplit::kShuffled : ValidationSplit::kChronologicalTail;
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, fmt::format("train: {}", e.what()));
  }
  c.validate();
  return c;
}

std::size_t TrainHistory::total_steps() const {
  std::size_t n = 0;
  for (const auto& e : epochs) n += e.steps;
  return n;
}

std::string TrainHistory::to_jsonl() const {
  std::string out;
  for (const auto& e : epochs) {
    const nlohmann::json line = {{"epoch", e.epoch},
                                 {"train_loss", e.train_loss},
                                 {"val_loss", e.val_loss},
                                 {"seconds", e.seconds},
                                 {"steps", e.steps}};
    out += line.dump() + "\n";
  }
  return out;
}

AdamState AdamState::zeros_like(std::span<const nn::Param> params) {
  AdamState s;
  for (const nn::Param& p : params) {
    s.first_moment.emplace_back(p.value.shape());
    s.second_moment.emplace_back(p.value.shape());
  }
  return s;
}

double mse_loss(const nn::Tensor& pred, const nn::Tensor& truth) {
  require(pred.shape() == truth.shape(), ErrorCode::kShapeMismatch,
          fmt::format("mse_loss: {} vs {}", nn::to_string(pred.shape()), nn::to_string(truth.shape())));
  require(!pred.empty(), ErrorCode::kEmptyInput, "mse_loss of empty tensors");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return total / static_cast<double>(pred.size());
}

void adam_step(std::span<nn::Param> params, AdamState& state, const TrainConfig& config) {
  if (state.first_moment.size() != params.size()) state = AdamState::zeros_like(params);
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto value = params[p].value.data();
    auto grad = params[p].grad.data();
    auto m = state.first_moment[p].data();
    auto v = state.second_moment[p].data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

std::pair<data::SegmentSet, data::SegmentSet> split_validation(const data::SegmentSet& segments, double fraction,
                                                               std::uint64_t seed, ValidationSplit mode) {
  require(fraction > 0.0 && fraction < 1.0, ErrorCode::kConfig, "validation fraction must be in (0, 1)");
  const std::size_t n = segments.size();
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  require(n_val >= 1 && n_val < n, ErrorCode::kInsufficientData,
          fmt::format("splitting {} segments at fraction {} leaves an empty side", n, fraction));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (mode == ValidationSplit::kShuffled) {
    std::mt19937_64 rng = make_rng(seed, {kSplitStream});
    std::shuffle(order.begin(), order.end(), rng);
  }
  // Chronological mode: the last n_val segments validate.
  std::vector<bool> is_val(n, false);
  for (std::size_t i = n - n_val; i < n; ++i) is_val[order[i]] = true;

  data::SegmentSet train_set;
  data::SegmentSet val_set;
  for (auto* s : {&train_set, &val_set}) {
    s->m = segments.m;
    s->k = segments.k;
    s->provenance = segments.provenance;
    s->variables = segments.variables;
  }
  for (std::size_t i = 0; i < n; ++i) (is_val[i] ? val_set : train_set).segments.push_back(segments.segments[i]);
  return {std::move(train_set), std::move(val_set)};
}

double evaluate_loss(const model::MhacParams& params, const data::SegmentSet& segments) {
  const nn::Tensor pred = model::predict_batch(params, segments);
  nn::Tensor truth({segments.size(), segments.k});
  for (std::size_t s = 0; s < segments.size(); ++s)
    for (std::size_t h = 0; h < segments.k; ++h) truth.at(s, h) = segments.segments[s].target[h];
  return mse_loss(pred, truth);
}

double batch_gradient(model::MhacParams& params, const data::SegmentSet& set, std::span<const std::size_t> batch,
                      nn::Mode mode, std::mt19937_64& rng) {
  const std::size_t k = params.config().k;
  params.zero_grad();
  nn::Tape tape;
  const model::BoundParams bound(tape, params);
  std::vector<nn::Var> rows;
  rows.reserve(batch.size());
  nn::Tensor truth({batch.size(), k});
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const data::Segment& seg = set.segments[batch[b]];
    const nn::Var y = model::forward_graph(bound, seg.inputs, mode, &rng).output;
    rows.push_back(nn::reshape(y, {1, k}));
    for (std::size_t h = 0; h < k; ++h) truth.at(b, h) = seg.target[h];
  }
  const nn::Var loss = nn::mse_loss(nn::concat(rows, 0), truth);
  tape.backward(loss);
  return loss.value()[0];
}

TrainResult train_model(const model::MhacConfig& model_config, const TrainConfig& config,
                        const data::SegmentSet& train_set, const data::SegmentSet& validation_set,
                        const EpochCallback& on_epoch) {
  config.validate();
  require(!train_set.empty(), ErrorCode::kInsufficientData, "no training segments");
  require(!validation_set.empty(), ErrorCode::kInsufficientData, "no validation segments");
  model::check_compatible(model_config, train_set);
  model::check_compatible(model_config, validation_set);

  model::MhacParams params = model::init_params(model_config, derive_seed(config.seed, {1}));
  AdamState adam = AdamState::zeros_like(params.params());
  TrainResult result{params, params, {}};
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::mt19937_64 shuffle_rng = make_rng(config.seed, {kShuffleStream, epoch});
    std::mt19937_64 dropout_rng = make_rng(config.seed, {kDropoutStream, epoch});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochRecord record;
    record.epoch = epoch;
    double weighted_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t first = 0; first < order.size(); first += config.batch_size, ++batch_index) {
      const std::size_t count = std::min(config.batch_size, order.size() - first);
      const std::span<const std::size_t> batch(order.data() + first, count);
      double loss = 0.0;
      try {
        loss = batch_gradient(params, train_set, batch, nn::Mode::kTrain, dropout_rng);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNonFinite) throw;
        fail(ErrorCode::kNonFinite, fmt::format("epoch {}, batch {}: {}", epoch, batch_index, e.what()));
      }
      if (!std::isfinite(loss)) {
        fail(ErrorCode::kNonFinite, fmt::format("epoch {}, batch {}: loss is {}", epoch, batch_index, loss));
      }
      adam_step(params.params(), adam, config);
      weighted_loss += loss * static_cast<double>(count);
      ++record.steps;
    }
    record.train_loss = weighted_loss / static_cast<double>(order.size());
    record.val_loss = evaluate_loss(params, validation_set);
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (record.val_loss < best_val) {
      best_val = record.val_loss;
      result.best_params = params;
      result.history.best_epoch = epoch;
    }
    result.history.epochs.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  result.final_params = std::move(params);
  return result;
}

TrainResult train(const model::MhacConfig& model_config, const TrainConfig& config, const data::SegmentSet& segments,
                  const EpochCallback& on_epoch) {
  auto [train_set, val_set] = split_validation(segments, config.validation_fraction, config.seed,
                                               config.validation_split);
  return train_model(model_config, config, train_set, val_set, on_epoch);
}

}  // namespace mhac::train
