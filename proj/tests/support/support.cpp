#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "mhac/rng.hpp"

namespace mhac::testing {

namespace {
std::atomic<int> counter{0};
}

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          fmt::format("{}-{:x}-{}", tag, static_cast<std::uint64_t>(rd()) << 32 | rd(), counter++);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

nn::Tensor random_tensor(const nn::Shape& shape, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  nn::Tensor t(shape);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

nn::Tensor signed_tensor(const nn::Shape& shape, std::mt19937_64& rng, double margin) {
  std::uniform_real_distribution<double> dist(margin, 1.0);
  std::bernoulli_distribution sign(0.5);
  nn::Tensor t(shape);
  for (double& v : t.data()) v = sign(rng) ? dist(rng) : -dist(rng);
  return t;
}

nn::Tensor spaced_tensor(const nn::Shape& shape, std::mt19937_64& rng, double spacing) {
  nn::Tensor t(shape);
  std::vector<double> values(t.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = (static_cast<double>(i) - static_cast<double>(values.size()) / 2.0) * spacing;
  }
  std::shuffle(values.begin(), values.end(), rng);
  std::copy(values.begin(), values.end(), t.data().begin());
  return t;
}

data::MultivariateFrame toy_frame(Date start, std::size_t length, std::uint64_t seed,
                                  std::vector<DateInterval> politics, std::vector<DateInterval> disease) {
  using data::VariableKind;
  auto rng = make_rng(seed);
  std::normal_distribution<double> noise(0.0, 20.0);
  std::uniform_real_distribution<double> attraction(0.0, 100.0);
  data::RawSeries entrant{"entrant", 1, start, {}};
  data::RawSeries attr{"attraction", 1, start, {}};
  for (std::size_t t = 0; t < length; ++t) {
    entrant.values.push_back(1000.0 + 2.0 * static_cast<double>(t) + noise(rng));
    attr.values.push_back(attraction(rng));
  }
  const std::vector<data::VariableSpec> specs = {
      {"entrant", VariableKind::kNumeric, {}, 1},
      {"politics", VariableKind::kDummyInterval, std::move(politics), 1},
      {"disease", VariableKind::kDummyInterval, std::move(disease), 1},
      {"season", VariableKind::kDummySeason, {}, 4},
      {"attraction", VariableKind::kNumeric, {}, 1},
  };
  const std::vector<data::RawSeries> series = {entrant, data::build_interval_dummy(specs[1], start, length),
                                               data::build_interval_dummy(specs[2], start, length),
                                               data::build_season_dummy(start, length), attr};
  return data::assemble_frame(specs, series,
                              {start, start.plus_days(static_cast<std::int64_t>(length) - 1)});
}

model::MhacConfig tiny_config() {
  model::MhacConfig config;
  config.m = 6;
  config.k = 3;
  config.attention_dim = 4;
  return config;
}

std::vector<nn::Tensor> random_inputs(const model::MhacConfig& config, std::mt19937_64& rng) {
  std::vector<nn::Tensor> inputs;
  for (const auto& head : config.heads) inputs.push_back(random_tensor({head.in_channels, config.m}, rng));
  return inputs;
}

data::SegmentSet random_segments(const model::MhacConfig& config, std::size_t count, std::uint64_t seed) {
  auto rng = make_rng(seed);
  data::SegmentSet set;
  set.m = config.m;
  set.k = config.k;
  for (const auto& head : config.heads) {
    data::VariableKind kind = data::VariableKind::kNumeric;
    if (head.variable == "season") kind = data::VariableKind::kDummySeason;
    if (head.variable == "politics" || head.variable == "disease") kind = data::VariableKind::kDummyInterval;
    set.variables.push_back({head.variable, kind, {}, head.in_channels});
  }
  std::uniform_real_distribution<double> target(-1.0, 1.0);
  for (std::size_t i = 0; i < count; ++i) {
    data::Segment seg;
    seg.t_index = config.m - 1 + i;
    seg.anchor_date = Date(2020, 1, 1).plus_days(static_cast<std::int64_t>(i));
    seg.inputs = random_inputs(config, rng);
    for (std::size_t h = 0; h < config.k; ++h) seg.target.push_back(target(rng));
    set.segments.push_back(std::move(seg));
  }
  return set;
}

}  // namespace mhac::testing
