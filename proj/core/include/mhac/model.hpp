#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhac/ops.hpp"
#include "mhac/segment.hpp"
#include "mhac/tape.hpp"
#include "mhac/tensor.hpp"

namespace mhac::model {

struct HeadConfig {
  std::string variable;
  std::size_t in_channels = 1;
  std::size_t out_channels = 4;
  std::size_t kernel_size = 3;
  std::size_t stride = 1;

  friend bool operator==(const HeadConfig&, const HeadConfig&) = default;
};

struct MhacConfig {
  std::size_t m = 30;
  std::size_t k = 30;
  std::vector<HeadConfig> heads = default_heads();
  std::size_t pool_size = 2;
  std::size_t attention_dim = 20;
  double dropout_rate = 0.25;
  bool use_attention = true;
  bool use_weightnorm = true;
  bool single_cnn = false;
  std::size_t single_cnn_kernel_size = 5;

  // Heads for (entrant, politics, disease, season, attraction).
  static std::vector<HeadConfig> default_heads();

  std::size_t total_in_channels() const;
  // Width of Z's channel axis (sum of head outputs).
  std::size_t total_channels() const;
  // Input width of the output layer: m * C_total (+ m * d_a with attention).
  std::size_t feature_width() const;

  void validate() const;
  // Removes the head of `variable`, keeping the others in order.
  MhacConfig without_head(std::string_view variable) const;

  nlohmann::json to_json() const;
  // Strict: unknown keys raise Error(kConfig). Missing keys keep defaults.
  static MhacConfig from_json(const nlohmann::json& j);

  friend bool operator==(const MhacConfig&, const MhacConfig&) = default;
};

// All learnable tensors of one network, in a fixed order:
//   conv.<variable>.kernel/bias (or conv.shared.* with single_cnn),
//   attention.{w_query,w_key,w_value,score_query,score_key,score_bias},
//   output.{v,g,bias}.
class MhacParams {
 public:
  MhacParams() = default;
  MhacParams(MhacConfig config, std::vector<nn::Param> params);

  const MhacConfig& config() const { return config_; }
  std::vector<nn::Param>& params() { return params_; }
  const std::vector<nn::Param>& params() const { return params_; }

  nn::Param& get(std::string_view name);
  const nn::Param& get(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  void zero_grad();
  std::size_t parameter_count() const;

 private:
  MhacConfig config_;
  std::vector<nn::Param> params_;
};

// Expected names and shapes for `config`, in storage order.
std::vector<std::pair<std::string, nn::Shape>> parameter_layout(const MhacConfig& config);

// Glorot-uniform weights (a = sqrt(6 / (fan_in + fan_out))), zero biases,
// output.g set to the row norms of output.v.
MhacParams init_params(const MhacConfig& config, std::uint64_t seed);

// Parameters as tape leaves (trainable) or constants (inference).
class BoundParams {
 public:
  BoundParams(nn::Tape& tape, MhacParams& params);        // trainable leaves
  BoundParams(nn::Tape& tape, const MhacParams& params);  // constants
  // Caller-recorded nodes, one per parameter in storage order.
  BoundParams(nn::Tape& tape, const MhacParams& params, std::vector<nn::Var> vars);

  const nn::Var& operator[](std::string_view name) const;
  const MhacConfig& config() const { return *config_; }
  nn::Tape& tape() const { return *tape_; }

 private:
  nn::Tape* tape_;
  const MhacConfig* config_;
  const MhacParams* params_;
  std::vector<nn::Var> vars_;
};

// Intermediate nodes of one forward pass.
struct ForwardGraph {
  nn::Var features;           // Z: m x C_total
  nn::Var queries;            // m x d_a
  nn::Var keys;
  nn::Var values;
  nn::Var scores;             // m x m, after tanh
  nn::Var attention_weights;  // m x m, rows sum to 1
  nn::Var context;            // m * d_a
  nn::Var feature_vector;     // input of the output layer
  nn::Var output;             // k
  bool has_attention = false;
};

// Z = concat_i maxpool(relu(conv_i(X_i))) transposed to time-major m x C_total.
nn::Var extract_features(const BoundParams& p, std::span<const nn::Tensor> inputs);

struct AttentionNodes {
  nn::Var queries, keys, values, scores, weights, context;
};
// Q = Z Wq, K = Z Wk, V = Z Wv; Score = tanh(Q W'q + K W'k + b); A = softmax
// over each row; C = flatten(A V).
AttentionNodes attention(const BoundParams& p, const nn::Var& features);

ForwardGraph forward_graph(const BoundParams& p, std::span<const nn::Tensor> inputs, nn::Mode mode,
                           std::mt19937_64* rng);

// Value-level conveniences (inference, constants only).
nn::Tensor extract_features(const MhacParams& params, std::span<const nn::Tensor> inputs);
std::vector<double> forward(const MhacParams& params, std::span<const nn::Tensor> inputs);
std::vector<double> forward(const MhacParams& params, std::span<const nn::Tensor> inputs, nn::Mode mode,
                            std::mt19937_64& rng);

// Row s = forward(params, segments[s].inputs) in inference mode; |segments| x k.
// Error(kConfig) when the segment layout does not match the model's heads.
nn::Tensor predict_batch(const MhacParams& params, const data::SegmentSet& segments);

// Throws Error(kConfig) unless the segments' variables/shapes fit `config`.
void check_compatible(const MhacConfig& config, const data::SegmentSet& segments);

}  // namespace mhac::model
