#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "mhac/checkpoint.hpp"
#include "mhac/error.hpp"
#include "mhac/rng.hpp"
#include "mhac/train.hpp"
#include "support.hpp"

namespace mhac::train {
namespace {

using nn::Tensor;
using testing::random_segments;
using testing::random_tensor;
using testing::tiny_config;

TEST(MseLoss, Values) {
  const Tensor truth = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(mse_loss(truth, truth), 0.0);
  EXPECT_DOUBLE_EQ(mse_loss(Tensor::matrix(2, 3, {3, 4, 5, 6, 7, 8}), truth), 4.0);
  EXPECT_THROW((void)mse_loss(Tensor({3, 2}), truth), Error);
}

TEST(MseLoss, RandomAgainstHandSum) {
  auto rng = make_rng(1);
  const Tensor a = random_tensor({3, 4}, rng);
  const Tensor b = random_tensor({3, 4}, rng);
  double s = 0.0;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) s += (a.at(r, c) - b.at(r, c)) * (a.at(r, c) - b.at(r, c));
  EXPECT_NEAR(mse_loss(a, b), s / 12.0, 1e-12);
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  auto rng = make_rng(2);
  std::vector<nn::Param> params = {nn::Param("w", random_tensor({5}, rng))};
  const Tensor before = params[0].value;
  AdamState state = AdamState::zeros_like(params);
  adam_step(params, state, TrainConfig{});
  EXPECT_EQ(params[0].value, before);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FirstStepIsLearningRateTimesSign) {
  std::vector<nn::Param> params = {nn::Param("w", Tensor::vector({0.5, -0.5, 2.0}))};
  params[0].grad = Tensor::vector({3.0, -0.02, 1e-3});
  AdamState state = AdamState::zeros_like(params);
  TrainConfig cfg;
  adam_step(params, state, cfg);
  const std::vector<double> expected = {0.5 - cfg.learning_rate, -0.5 + cfg.learning_rate, 2.0 - cfg.learning_rate};
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(params[0].value[i], expected[i], 1e-8);
}

TEST(Adam, MatchesClosedFormOverSteps) {
  std::vector<nn::Param> params = {nn::Param("w", Tensor::vector({1.0}))};
  AdamState state = AdamState::zeros_like(params);
  const TrainConfig cfg;
  double w = 1.0, m = 0.0, v = 0.0;
  const std::vector<double> grads = {0.3, -0.1, 0.7, 0.05};
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1];
    params[0].grad = Tensor::vector({g});
    adam_step(params, state, cfg);
    m = cfg.beta1 * m + (1 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
    const double mh = m / (1 - std::pow(cfg.beta1, static_cast<double>(t)));
    const double vh = v / (1 - std::pow(cfg.beta2, static_cast<double>(t)));
    w -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon);
    EXPECT_NEAR(params[0].value[0], w, 1e-15);
  }
}

TEST(SplitValidation, EightTwo) {
  const auto set = random_segments(tiny_config(), 10, 3);
  const auto [train, val] = split_validation(set, 0.2, 7);
  EXPECT_EQ(train.size(), 8u);
  EXPECT_EQ(val.size(), 2u);
}

TEST(SplitValidation, IsPartitionAndSeeded) {
  const auto set = random_segments(tiny_config(), 41, 3);
  const auto [train, val] = split_validation(set, 0.2, 7);
  EXPECT_EQ(val.size(), 8u);
  std::multiset<std::size_t> seen;
  for (const auto& s : train.segments) seen.insert(s.t_index);
  for (const auto& s : val.segments) seen.insert(s.t_index);
  std::multiset<std::size_t> all;
  for (const auto& s : set.segments) all.insert(s.t_index);
  EXPECT_EQ(seen, all);
  const auto [train2, val2] = split_validation(set, 0.2, 7);
  for (std::size_t i = 0; i < val.size(); ++i) EXPECT_EQ(val.segments[i].t_index, val2.segments[i].t_index);
  const auto [train3, val3] = split_validation(set, 0.2, 8);
  bool differs = false;
  for (std::size_t i = 0; i < val.size(); ++i) differs = differs || val.segments[i].t_index != val3.segments[i].t_index;
  EXPECT_TRUE(differs);
}

TEST(SplitValidation, ChronologicalTail) {
  const auto set = random_segments(tiny_config(), 10, 3);
  const auto [train, val] = split_validation(set, 0.3, 1, ValidationSplit::kChronologicalTail);
  ASSERT_EQ(val.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(val.segments[i].t_index, set.segments[7 + i].t_index);
}

TEST(SplitValidation, EmptySideIsError) {
  const auto one = random_segments(tiny_config(), 1, 3);
  EXPECT_THROW((void)split_validation(one, 0.2, 1), Error);
  const auto four = random_segments(tiny_config(), 4, 3);
  EXPECT_THROW((void)split_validation(four, 0.1, 1), Error);
}

TEST(TrainConfigTest, ValidationAndJson) {
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.validation_split = ValidationSplit::kChronologicalTail;
  EXPECT_EQ(TrainConfig::from_json(cfg.to_json()), cfg);
  nlohmann::json j = cfg.to_json();
  j["momentum"] = 0.9;
  EXPECT_THROW((void)TrainConfig::from_json(j), Error);
  TrainConfig bad;
  bad.validation_fraction = 1.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = TrainConfig{};
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Train, StepCountPerEpoch) {
  model::MhacConfig mc = tiny_config();
  TrainConfig cfg;
  cfg.epochs = 1;
  const auto set = random_segments(mc, 41, 4);
  const TrainResult r = train(mc, cfg, set);
  ASSERT_EQ(r.history.epochs.size(), 1u);
  EXPECT_EQ(r.history.epochs[0].steps, 9u);
  EXPECT_EQ(r.history.total_steps(), 9u);
}

TEST(Train, BatchSizeSixteen) {
  model::MhacConfig mc = tiny_config();
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  const TrainResult r = train(mc, cfg, random_segments(mc, 41, 4));
  for (const auto& e : r.history.epochs) EXPECT_EQ(e.steps, 3u);
  EXPECT_EQ(r.history.total_steps(), 9u);
}

TEST(Train, OverfitsTinySet) {
  model::MhacConfig mc = tiny_config();
  mc.dropout_rate = 0.0;
  TrainConfig cfg;
  cfg.epochs = 200;
  const TrainResult r = train_model(mc, cfg, random_segments(mc, 8, 5), random_segments(mc, 2, 6));
  ASSERT_EQ(r.history.epochs.size(), 200u);
  EXPECT_LT(r.history.epochs.back().train_loss, 0.05 * r.history.epochs.front().train_loss);
}

// Random targets cannot be predicted, but the inference-mode training error
// still collapses when the model memorizes them.
TEST(Train, MemorizesRandomTargets) {
  const model::MhacConfig mc = tiny_config();
  TrainConfig cfg;
  const auto train_set = random_segments(mc, 8, 5);
  const auto val_set = random_segments(mc, 2, 6);
  cfg.epochs = 1;
  const double after_first = evaluate_loss(train_model(mc, cfg, train_set, val_set).final_params, train_set);
  cfg.epochs = 200;
  const double after_last = evaluate_loss(train_model(mc, cfg, train_set, val_set).final_params, train_set);
  EXPECT_LT(after_last, 0.05 * after_first);
}

TEST(Train, DeterministicHistoryAndParams) {
  model::MhacConfig mc = tiny_config();
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.seed = 77;
  const auto set = random_segments(mc, 20, 7);
  const TrainResult a = train(mc, cfg, set);
  const TrainResult b = train(mc, cfg, set);
  ASSERT_EQ(a.history.epochs.size(), b.history.epochs.size());
  for (std::size_t e = 0; e < a.history.epochs.size(); ++e) {
    EXPECT_EQ(a.history.epochs[e].train_loss, b.history.epochs[e].train_loss);
    EXPECT_EQ(a.history.epochs[e].val_loss, b.history.epochs[e].val_loss);
    EXPECT_EQ(a.history.epochs[e].steps, b.history.epochs[e].steps);
  }
  EXPECT_EQ(a.history.best_epoch, b.history.best_epoch);
  for (std::size_t i = 0; i < a.final_params.params().size(); ++i) {
    EXPECT_EQ(a.final_params.params()[i].value, b.final_params.params()[i].value);
  }
}

TEST(Train, BestParamsHaveBestValidationLoss) {
  model::MhacConfig mc = tiny_config();
  TrainConfig cfg;
  cfg.epochs = 6;
  const auto train_set = random_segments(mc, 12, 8);
  const auto val_set = random_segments(mc, 4, 9);
  const TrainResult r = train_model(mc, cfg, train_set, val_set);
  double best = r.history.epochs.front().val_loss;
  for (const auto& e : r.history.epochs) best = std::min(best, e.val_loss);
  EXPECT_EQ(r.history.epochs[r.history.best_epoch - 1].val_loss, best);
  EXPECT_EQ(evaluate_loss(r.best_params, val_set), best);
  EXPECT_EQ(evaluate_loss(r.final_params, val_set), r.history.epochs.back().val_loss);
}

TEST(Train, ValidationLossIsStable) {
  const model::MhacConfig mc = tiny_config();
  const auto params = model::init_params(mc, 1);
  const auto set = random_segments(mc, 5, 2);
  EXPECT_EQ(evaluate_loss(params, set), evaluate_loss(params, set));
}

TEST(Train, GradientsZeroedBetweenBatches) {
  const model::MhacConfig mc = tiny_config();
  auto params = model::init_params(mc, 1);
  const auto set = random_segments(mc, 4, 2);
  const std::vector<std::size_t> batch = {0, 1, 2, 3};
  const auto norm = [&] {
    double s = 0.0;
    for (const auto& p : params.params())
      for (double g : p.grad.values()) s += g * g;
    return s;
  };
  auto rng = make_rng(1);
  (void)batch_gradient(params, set, batch, nn::Mode::kInfer, rng);
  const double first = norm();
  (void)batch_gradient(params, set, batch, nn::Mode::kInfer, rng);
  EXPECT_GT(first, 0.0);
  EXPECT_EQ(norm(), first);
}

TEST(Train, NonFiniteLossNamesEpochAndBatch) {
  model::MhacConfig mc = tiny_config();
  TrainConfig cfg;
  cfg.epochs = 1;
  auto set = random_segments(mc, 6, 3);
  for (auto& s : set.segments) s.target.assign(mc.k, 1e200);
  try {
    (void)train_model(mc, cfg, set, random_segments(mc, 2, 4));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("batch"), std::string::npos) << e.what();
  }
}

TEST(Train, HistoryJsonLines) {
  TrainHistory h;
  h.epochs = {{1, 0.5, 0.6, 0.1, 3}, {2, 0.25, 0.3, 0.1, 3}};
  const std::string text = h.to_jsonl();
  std::size_t lines = 0;
  std::size_t pos = 0;
  while ((pos = text.find('\n', pos)) != std::string::npos) {
    ++lines;
    ++pos;
  }
  EXPECT_EQ(lines, 2u);
  const auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
  EXPECT_EQ(first["epoch"], 1);
  EXPECT_EQ(first["train_loss"], 0.5);
  EXPECT_TRUE(first.contains("seconds"));
}

TEST(Checkpoint, RoundTripPredictsIdentically) {
  testing::TempDir dir;
  const model::MhacConfig mc = tiny_config();
  model::Checkpoint ck{mc, TrainConfig{}, model::init_params(mc, 31), {{"note", "x"}}};
  model::save_checkpoint(dir / "ck.json", ck);
  const model::Checkpoint back = model::load_checkpoint(dir / "ck.json");
  EXPECT_EQ(back.model_config, mc);
  EXPECT_EQ(back.train_config, TrainConfig{});
  EXPECT_EQ(back.run_config, ck.run_config);
  for (std::size_t i = 0; i < ck.params.params().size(); ++i) {
    EXPECT_EQ(back.params.params()[i].value, ck.params.params()[i].value);
  }
  const auto set = random_segments(mc, 5, 1);
  EXPECT_EQ(model::predict_batch(back.params, set), model::predict_batch(ck.params, set));
}

TEST(Checkpoint, TruncatedFileIsRejected) {
  testing::TempDir dir;
  const model::MhacConfig mc = tiny_config();
  model::save_checkpoint(dir / "ck.json", {mc, TrainConfig{}, model::init_params(mc, 1), {}});
  const std::string text = testing::read_file(dir / "ck.json");
  testing::write_file(dir / "cut.json", text.substr(0, text.size() / 2));
  try {
    (void)model::load_checkpoint(dir / "cut.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCheckpoint);
  }
  EXPECT_THROW((void)model::load_checkpoint(dir / "absent.json"), Error);
}

TEST(Checkpoint, DifferentConfigRefused) {
  testing::TempDir dir;
  const model::MhacConfig mc = tiny_config();
  model::save_checkpoint(dir / "ck.json", {mc, TrainConfig{}, model::init_params(mc, 1), {}});
  model::MhacConfig other = mc;
  other.use_attention = false;
  try {
    (void)model::load_checkpoint(dir / "ck.json", other);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCheckpoint);
  }
  EXPECT_NO_THROW((void)model::load_checkpoint(dir / "ck.json", mc));
}

TEST(Checkpoint, VersionAndShapeMismatch) {
  testing::TempDir dir;
  const model::MhacConfig mc = tiny_config();
  nlohmann::json j = model::checkpoint_to_json({mc, TrainConfig{}, model::init_params(mc, 1), {}});
  nlohmann::json wrong_version = j;
  wrong_version["version"] = 99;
  EXPECT_THROW((void)model::checkpoint_from_json(wrong_version), Error);
  nlohmann::json wrong_shape = j;
  wrong_shape["tensors"][0]["shape"] = {1, 1, 1};
  wrong_shape["tensors"][0]["data"] = {0.0};
  EXPECT_THROW((void)model::checkpoint_from_json(wrong_shape), Error);
}

TEST(Checkpoint, SavingTwiceIsByteIdentical) {
  testing::TempDir dir;
  const model::MhacConfig mc = tiny_config();
  const model::Checkpoint ck{mc, TrainConfig{}, model::init_params(mc, 5), {}};
  model::save_checkpoint(dir / "a.json", ck);
  model::save_checkpoint(dir / "b.json", ck);
  EXPECT_EQ(testing::read_file(dir / "a.json"), testing::read_file(dir / "b.json"));
}

}  // namespace
}  // namespace mhac::train
