#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mhac/frame.hpp"
#include "mhac/model.hpp"
#include "mhac/segment.hpp"
#include "mhac/tensor.hpp"

namespace mhac::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "mhac");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

nn::Tensor random_tensor(const nn::Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0);
// Values at least `margin` away from zero.
nn::Tensor signed_tensor(const nn::Shape& shape, std::mt19937_64& rng, double margin);
// Shuffled, evenly spaced values (pairwise gaps >= spacing).
nn::Tensor spaced_tensor(const nn::Shape& shape, std::mt19937_64& rng, double spacing);

// Five-variable frame: entrant trending upwards with noise, attraction random
// in [0, 100], interval dummies from the given lists.
data::MultivariateFrame toy_frame(Date start, std::size_t length, std::uint64_t seed,
                                  std::vector<DateInterval> politics = {}, std::vector<DateInterval> disease = {});

model::MhacConfig tiny_config();
std::vector<nn::Tensor> random_inputs(const model::MhacConfig& config, std::mt19937_64& rng);
// Segments laid out for `config` with random inputs and targets.
data::SegmentSet random_segments(const model::MhacConfig& config, std::size_t count, std::uint64_t seed);

}  // namespace mhac::testing
