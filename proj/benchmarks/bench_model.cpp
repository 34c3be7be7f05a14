#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "mhac/model.hpp"
#include "mhac/ops.hpp"
#include "mhac/rng.hpp"
#include "mhac/tape.hpp"
#include "mhac/train.hpp"

namespace {

using mhac::nn::Tensor;

std::vector<Tensor> random_inputs(const mhac::model::MhacConfig& config, std::uint64_t seed) {
  auto rng = mhac::make_rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Tensor> inputs;
  for (const auto& head : config.heads) {
    Tensor t({head.in_channels, config.m}, 0.0);
    for (double& v : t.data()) v = normal(rng);
    inputs.push_back(std::move(t));
  }
  return inputs;
}

mhac::data::SegmentSet random_set(const mhac::model::MhacConfig& config, std::size_t n) {
  mhac::data::SegmentSet set;
  set.m = config.m;
  set.k = config.k;
  for (const auto& head : config.heads) {
    const auto kind = head.variable == "entrant" || head.variable == "attraction"
                          ? mhac::data::VariableKind::kNumeric
                          : (head.variable == "season" ? mhac::data::VariableKind::kDummySeason
                                                       : mhac::data::VariableKind::kDummyInterval);
    set.variables.push_back({head.variable, kind, {}, head.in_channels});
  }
  for (std::size_t i = 0; i < n; ++i) {
    mhac::data::Segment seg;
    seg.t_index = i;
    seg.inputs = random_inputs(config, i);
    seg.target.assign(config.k, 0.1 * static_cast<double>(i % 7));
    set.segments.push_back(std::move(seg));
  }
  return set;
}

void BM_Forward(benchmark::State& state) {
  const mhac::model::MhacConfig config;
  const auto params = mhac::model::init_params(config, 1);
  const auto inputs = random_inputs(config, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mhac::model::forward(params, inputs));
}
BENCHMARK(BM_Forward);

void BM_BatchGradient(benchmark::State& state) {
  const mhac::model::MhacConfig config;
  auto params = mhac::model::init_params(config, 1);
  const auto set = random_set(config, static_cast<std::size_t>(state.range(0)));
  std::vector<std::size_t> batch(set.size());
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;
  auto rng = mhac::make_rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mhac::train::batch_gradient(params, set, batch, mhac::nn::Mode::kTrain, rng));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BatchGradient)->Arg(4)->Arg(16);

void BM_PredictBatch(benchmark::State& state) {
  const mhac::model::MhacConfig config;
  const auto params = mhac::model::init_params(config, 1);
  const auto set = random_set(config, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mhac::model::predict_batch(params, set));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PredictBatch)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
