#include "mhac/model.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "mhac/error.hpp"
#include "mhac/rng.hpp"

namespace mhac::model {

std::vector<HeadConfig> MhacConfig::default_heads() {
  return {
      {"entrant", 1, 4, 5, 1}, {"politics", 1, 4, 3, 1}, {"disease", 1, 4, 3, 1},
      {"season", 4, 4, 3, 1},  {"attraction", 1, 4, 5, 1},
  };
}

std::size_t MhacConfig::total_in_channels() const {
  return std::accumulate(heads.begin(), heads.end(), std::size_t{0},
                         [](std::size_t s, const HeadConfig& h) { return s + h.in_channels; });
}

std::size_t MhacConfig::total_channels() const {
  return std::accumulate(heads.begin(), heads.end(), std::size_t{0},
                         [](std::size_t s, const HeadConfig& h) { return s + h.out_channels; });
}

std::size_t MhacConfig::feature_width() const {
  return m * total_channels() + (use_attention ? m * attention_dim : 0);
}

void MhacConfig::validate() const {
  require(m >= 1 && k >= 1, ErrorCode::kConfig, "model.m and model.k must be positive");
  require(!heads.empty(), ErrorCode::kConfig, "model needs at least one head");
  require(heads.front().variable == data::kTargetVariable, ErrorCode::kConfig, "the first head must read 'entrant'");
  for (const HeadConfig& h : heads) {
    require(h.in_channels >= 1 && h.out_channels >= 1, ErrorCode::kConfig,
            fmt::format("head '{}': channel counts must be positive", h.variable));
    require(h.kernel_size >= 1, ErrorCode::kConfig, fmt::format("head '{}': kernel size must be positive", h.variable));
    require(h.stride == 1, ErrorCode::kConfig,
            fmt::format("head '{}': only stride 1 keeps the latent length at m", h.variable));
  }
  require(pool_size >= 1, ErrorCode::kConfig, "model.pool_size must be >= 1");
  require(attention_dim >= 1, ErrorCode::kConfig, "model.attention_dim must be >= 1");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, ErrorCode::kConfig, "model.dropout_rate must be in [0, 1)");
  require(single_cnn_kernel_size >= 1, ErrorCode::kConfig, "model.single_cnn_kernel_size must be >= 1");
}

MhacConfig MhacConfig::without_head(std::string_view variable) const {
  require(variable != data::kTargetVariable, ErrorCode::kConfig, "the entrant head cannot be removed");
  MhacConfig out = *this;
  const auto it = std::find_if(out.heads.begin(), out.heads.end(),
                               [&](const HeadConfig& h) { return h.variable == variable; });
  require(it != out.heads.end(), ErrorCode::kConfig, fmt::format("no head reads '{}'", variable));
  out.heads.erase(it);
  return out;
}

nlohmann::json MhacConfig::to_json() const {
  nlohmann::json hs = nlohmann::json::array();
  for (const HeadConfig& h : heads) {
    hs.push_back({{"variable", h.variable},
                  {"in_channels", h.in_channels},
                  {"out_channels", h.out_channels},
                  {"kernel_size", h.kernel_size},
                  {"stride", h.stride}});
  }
  return {{"m", m},
          {"k", k},
          {"heads", hs},
          {"pool_size", pool_size},
          {"attention_dim", attention_dim},
          {"dropout_rate", dropout_rate},
          {"use_attention", use_attention},
          {"use_weightnorm", use_weightnorm},
          {"single_cnn", single_cnn},
          {"single_cnn_kernel_size", single_cnn_kernel_size}};
}

MhacConfig MhacConfig::from_json(const nlohmann::json& j) {
  MhacConfig c;
  const nlohmann::json defaults = c.to_json();
  try {
    require(j.is_object(), ErrorCode::kConfig, "model config must be an object");
    for (const auto& [key, value] : j.items()) {
      require(defaults.contains(key), ErrorCode::kConfig, fmt::format("unknown model key '{}'", key));
    }
    if (j.contains("m")) c.m = j["m"].get<std::size_t>();
    if (j.contains("k")) c.k = j["k"].get<std::size_t>();
    if (j.contains("heads")) {
      c.heads.clear();
      for (const auto& h : j["heads"]) {
        for (const auto& [key, value] : h.items()) {
          require(key == "variable" || key == "in_channels" || key == "out_channels" || key == "kernel_size" ||
                      key == "stride",
                  ErrorCode::kConfig, fmt::format("unknown head key '{}'", key));
        }
        HeadConfig head;
        head.variable = h.at("variable").get<std::string>();
        head.in_channels = h.value("in_channels", head.in_channels);
        head.out_channels = h.value("out_channels", head.out_channels);
        head.kernel_size = h.value("kernel_size", head.kernel_size);
        head.stride = h.value("stride", head.stride);
        c.heads.push_back(std::move(head));
      }
    }
    if (j.contains("pool_size")) c.pool_size = j["pool_size"].get<std::size_t>();
    if (j.contains("attention_dim")) c.attention_dim = j["attention_dim"].get<std::size_t>();
    if (j.contains("dropout_rate")) c.dropout_rate = j["dropout_rate"].get<double>();
    if (j.contains("use_attention")) c.use_attention = j["use_attention"].get<bool>();
    if (j.contains("use_weightnorm")) c.use_weightnorm = j["use_weightnorm"].get<bool>();
    if (j.contains("single_cnn")) c.single_cnn = j["single_cnn"].get<bool>();
    if (j.contains("single_cnn_kernel_size")) c.single_cnn_kernel_size = j["single_cnn_kernel_size"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, fmt::format("model: {}", e.what()));
  }
  c.validate();
  return c;
}

std::vector<std::pair<std::string, nn::Shape>> parameter_layout(const MhacConfig& config) {
  config.validate();
  std::vector<std::pair<std::string, nn::Shape>> layout;
  const std::size_t channels = config.total_channels();
  if (config.single_cnn) {
    layout.push_back({"conv.shared.kernel", {channels, config.total_in_channels(), config.single_cnn_kernel_size}});
    layout.push_back({"conv.shared.bias", {channels}});
  } else {
    for (const HeadConfig& h : config.heads) {
      layout.push_back({fmt::format("conv.{}.kernel", h.variable), {h.out_channels, h.in_channels, h.kernel_size}});
      layout.push_back({fmt::format("conv.{}.bias", h.variable), {h.out_channels}});
    }
  }
  const std::size_t da = config.attention_dim;
  layout.push_back({"attention.w_query", {channels, da}});
  layout.push_back({"attention.w_key", {channels, da}});
  layout.push_back({"attention.w_value", {channels, da}});
  layout.push_back({"attention.score_query", {da, config.m}});
  layout.push_back({"attention.score_key", {da, config.m}});
  layout.push_back({"attention.score_bias", {config.m}});
  layout.push_back({"output.v", {config.k, config.feature_width()}});
  layout.push_back({"output.g", {config.k}});
  layout.push_back({"output.bias", {config.k}});
  return layout;
}

MhacParams::MhacParams(MhacConfig config, std::vector<nn::Param> params)
    : config_(std::move(config)), params_(std::move(params)) {
  const auto layout = parameter_layout(config_);
  require(layout.size() == params_.size(), ErrorCode::kShapeMismatch,
          fmt::format("config expects {} parameter tensors, got {}", layout.size(), params_.size()));
  for (std::size_t i = 0; i < layout.size(); ++i) {
    require(params_[i].name == layout[i].first && params_[i].value.shape() == layout[i].second,
            ErrorCode::kShapeMismatch,
            fmt::format("parameter {} is '{}' {}, expected '{}' {}", i, params_[i].name,
                        nn::to_string(params_[i].value.shape()), layout[i].first, nn::to_string(layout[i].second)));
    if (params_[i].grad.shape() != params_[i].value.shape()) params_[i].grad = nn::Tensor(params_[i].value.shape());
  }
}

std::size_t MhacParams::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  fail(ErrorCode::kInvalidArgument, fmt::format("no parameter named '{}'", name));
}

nn::Param& MhacParams::get(std::string_view name) { return params_[index_of(name)]; }
const nn::Param& MhacParams::get(std::string_view name) const { return params_[index_of(name)]; }

void MhacParams::zero_grad() {
  for (nn::Param& p : params_) p.zero_grad();
}

std::size_t MhacParams::parameter_count() const {
  std::size_t n = 0;
  for (const nn::Param& p : params_) n += p.value.size();
  return n;
}

namespace {

bool is_bias(const std::string& name) { return name.ends_with("bias"); }

std::pair<double, double> fans(const nn::Shape& shape) {
  if (shape.size() == 3) {
    return {static_cast<double>(shape[1] * shape[2]), static_cast<double>(shape[0] * shape[2])};
  }
  if (shape.size() == 2) return {static_cast<double>(shape[0]), static_cast<double>(shape[1])};
  return {static_cast<double>(shape[0]), static_cast<double>(shape[0])};
}

}  // namespace

MhacParams init_params(const MhacConfig& config, std::uint64_t seed) {
  const auto layout = parameter_layout(config);
  std::vector<nn::Param> params;
  params.reserve(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& [name, shape] = layout[i];
    nn::Tensor value(shape);
    if (!is_bias(name) && name != "output.g") {
      auto [fan_in, fan_out] = fans(shape);
      if (name == "output.v") std::swap(fan_in, fan_out);  // stored as d_out x d_in
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      std::mt19937_64 rng = make_rng(seed, {0x1417, i});
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (double& v : value.data()) v = dist(rng);
    }
    params.emplace_back(name, std::move(value));
  }
  nn::Param* v = nullptr;
  nn::Param* g = nullptr;
  for (auto& p : params) {
    if (p.name == "output.v") v = &p;
    if (p.name == "output.g") g = &p;
  }
  for (std::size_t j = 0; j < config.k; ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < v->value.dim(1); ++i) sq += v->value.at(j, i) * v->value.at(j, i);
    g->value[j] = std::sqrt(sq);
  }
  return MhacParams(config, std::move(params));
}

BoundParams::BoundParams(nn::Tape& tape, MhacParams& params)
    : tape_(&tape), config_(&params.config()), params_(&params) {
  vars_.reserve(params.params().size());
  for (nn::Param& p : params.params()) vars_.push_back(tape.param(p));
}

BoundParams::BoundParams(nn::Tape& tape, const MhacParams& params)
    : tape_(&tape), config_(&params.config()), params_(&params) {
  vars_.reserve(params.params().size());
  for (const nn::Param& p : params.params()) vars_.push_back(tape.constant(p.value));
}

BoundParams::BoundParams(nn::Tape& tape, const MhacParams& params, std::vector<nn::Var> vars)
    : tape_(&tape), config_(&params.config()), params_(&params), vars_(std::move(vars)) {
  require(vars_.size() == params.params().size(), ErrorCode::kShapeMismatch,
          fmt::format("{} nodes for {} parameters", vars_.size(), params.params().size()));
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    require(vars_[i].tape() == &tape && vars_[i].shape() == params.params()[i].value.shape(),
            ErrorCode::kShapeMismatch, fmt::format("node {} does not match '{}'", i, params.params()[i].name));
  }
}

const nn::Var& BoundParams::operator[](std::string_view name) const { return vars_[params_->index_of(name)]; }

nn::Var extract_features(const BoundParams& p, std::span<const nn::Tensor> inputs) {
  const MhacConfig& cfg = p.config();
  nn::Tape& tape = p.tape();
  require(inputs.size() == cfg.heads.size(), ErrorCode::kShapeMismatch,
          fmt::format("model has {} heads but got {} input variables", cfg.heads.size(), inputs.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const nn::Shape expected{cfg.heads[i].in_channels, cfg.m};
    require(inputs[i].shape() == expected, ErrorCode::kShapeMismatch,
            fmt::format("input '{}' is {}, expected {}", cfg.heads[i].variable, nn::to_string(inputs[i].shape()),
                        nn::to_string(expected)));
  }

  nn::Var stacked;
  if (cfg.single_cnn) {
    std::vector<nn::Var> xs;
    for (const nn::Tensor& x : inputs) xs.push_back(tape.constant(x));
    const nn::Var all = nn::concat(xs, 0);
    const nn::Var conv = nn::causal_conv1d(all, p["conv.shared.kernel"], p["conv.shared.bias"]);
    stacked = nn::maxpool1d_same(nn::relu(conv), cfg.pool_size);
  } else {
    std::vector<nn::Var> heads;
    heads.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const std::string& var = cfg.heads[i].variable;
      const nn::Var x = tape.constant(inputs[i]);
      const nn::Var conv =
          nn::causal_conv1d(x, p[fmt::format("conv.{}.kernel", var)], p[fmt::format("conv.{}.bias", var)]);
      heads.push_back(nn::maxpool1d_same(nn::relu(conv), cfg.pool_size));
    }
    stacked = nn::concat(heads, 0);
  }
  return nn::transpose(stacked);  // m x C_total
}

AttentionNodes attention(const BoundParams& p, const nn::Var& features) {
  AttentionNodes a;
  a.queries = nn::matmul(features, p["attention.w_query"]);
  a.keys = nn::matmul(features, p["attention.w_key"]);
  a.values = nn::matmul(features, p["attention.w_value"]);
  const nn::Var summed = nn::add(nn::matmul(a.queries, p["attention.score_query"]),
                                 nn::matmul(a.keys, p["attention.score_key"]));
  a.scores = nn::tanh(nn::add_row_bias(summed, p["attention.score_bias"]));
  a.weights = nn::softmax_rows(a.scores);
  a.context = nn::flatten(nn::matmul(a.weights, a.values));
  return a;
}

ForwardGraph forward_graph(const BoundParams& p, std::span<const nn::Tensor> inputs, nn::Mode mode,
                           std::mt19937_64* rng) {
  const MhacConfig& cfg = p.config();
  ForwardGraph g;
  g.features = extract_features(p, inputs);
  const nn::Var flat = nn::flatten(g.features);
  if (cfg.use_attention) {
    const AttentionNodes a = attention(p, g.features);
    g.queries = a.queries;
    g.keys = a.keys;
    g.values = a.values;
    g.scores = a.scores;
    g.attention_weights = a.weights;
    g.context = a.context;
    g.has_attention = true;
    const nn::Var parts[] = {flat, a.context};
    g.feature_vector = nn::concat(parts, 0);
  } else {
    g.feature_vector = flat;
  }
  require(g.feature_vector.value().size() == cfg.feature_width(), ErrorCode::kShapeMismatch,
          fmt::format("feature vector has {} entries, config expects {}", g.feature_vector.value().size(),
                      cfg.feature_width()));
  nn::Var dropped = g.feature_vector;
  if (mode == nn::Mode::kTrain && cfg.dropout_rate > 0.0) {
    require(rng != nullptr, ErrorCode::kInvalidArgument, "training-mode forward needs a dropout generator");
    dropped = nn::dropout(g.feature_vector, cfg.dropout_rate, mode, *rng);
  }
  g.output = cfg.use_weightnorm
                 ? nn::dense_weightnorm(dropped, p["output.v"], p["output.g"], p["output.bias"])
                 : nn::dense(dropped, p["output.v"], p["output.bias"]);
  return g;
}

nn::Tensor extract_features(const MhacParams& params, std::span<const nn::Tensor> inputs) {
  nn::Tape tape;
  const BoundParams bound(tape, params);
  return extract_features(bound, inputs).value();
}

std::vector<double> forward(const MhacParams& params, std::span<const nn::Tensor> inputs) {
  nn::Tape tape;
  const BoundParams bound(tape, params);
  return forward_graph(bound, inputs, nn::Mode::kInfer, nullptr).output.value().values();
}

std::vector<double> forward(const MhacParams& params, std::span<const nn::Tensor> inputs, nn::Mode mode,
                            std::mt19937_64& rng) {
  nn::Tape tape;
  const BoundParams bound(tape, params);
  return forward_graph(bound, inputs, mode, &rng).output.value().values();
}

void check_compatible(const MhacConfig& config, const data::SegmentSet& segments) {
  require(segments.m == config.m && segments.k == config.k, ErrorCode::kConfig,
          fmt::format("segments use m={}, k={} but the model expects m={}, k={}", segments.m, segments.k, config.m,
                      config.k));
  require(segments.variables.size() == config.heads.size(), ErrorCode::kConfig,
          fmt::format("segments carry {} variables but the model has {} heads", segments.variables.size(),
                      config.heads.size()));
  for (std::size_t i = 0; i < config.heads.size(); ++i) {
    const auto& spec = segments.variables[i];
    const auto& head = config.heads[i];
    require(spec.name == head.variable && spec.channel_count == head.in_channels, ErrorCode::kConfig,
            fmt::format("variable {} is '{}' ({} ch) but head {} reads '{}' ({} ch)", i, spec.name,
                        spec.channel_count, i, head.variable, head.in_channels));
  }
}

nn::Tensor predict_batch(const MhacParams& params, const data::SegmentSet& segments) {
  const MhacConfig& cfg = params.config();
  if (segments.empty()) return nn::Tensor({0, cfg.k});
  check_compatible(cfg, segments);
  nn::Tensor out({segments.size(), cfg.k});
  nn::Tape tape;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    tape.clear();
    const BoundParams bound(tape, params);
    const nn::Var y = forward_graph(bound, segments.segments[s].inputs, nn::Mode::kInfer, nullptr).output;
    for (std::size_t h = 0; h < cfg.k; ++h) out.at(s, h) = y.value()[h];
  }
  return out;
}

}  // namespace mhac::model
