#include "ser/net/spec.hpp"

#include <algorithm>

#include "ser/error.hpp"

namespace ser::net {

const char* to_string(ConvMode mode) { return mode == ConvMode::kTemporal ? "temporal" : "2d"; }

ConvMode parse_conv_mode(const std::string& text) {
  if (text == "temporal") return ConvMode::kTemporal;
  if (text == "2d") return ConvMode::k2D;
  throw ConfigError("kernel mode must be 'temporal' or '2d', got '" + text + "'");
}

namespace {

int out_extent(int in, int kernel, int stride, int padding) {
  const int span = in - kernel + 2 * padding;
  if (span < 0) return 0;
  return span / stride + 1;
}

}  // namespace

Shape2D mask_size(const Shape2D& input, const ConvSpec& spec) {
  if (input.height < 1 || input.width < 1) throw ShapeError("conv input extent must be positive");
  if (spec.kernel_h < 1 || spec.stride_h < 1 || spec.padding < 0 || spec.out_channels < 1) {
    throw ConfigError("conv kernel, stride and channels must be positive, padding nonnegative");
  }
  Shape2D out;
  out.height = out_extent(input.height, spec.kernel_h, spec.stride_h, spec.padding);
  if (spec.mode == ConvMode::kTemporal) {
    out.width = 1;
  } else {
    if (spec.kernel_w < 1 || spec.stride_w < 1) throw ConfigError("conv kernel and stride must be positive");
    out.width = out_extent(input.width, spec.kernel_w, spec.stride_w, spec.padding);
  }
  if (out.height < 1 || out.width < 1) {
    throw ShapeError("conv output extent is nonpositive for input " + std::to_string(input.height) + "x" +
                     std::to_string(input.width));
  }
  return out;
}

int mask_valid(int valid_in, int out_height, int kernel, int stride, int padding) {
  const int v = out_extent(valid_in, kernel, stride, padding);
  return std::clamp(v, 1, out_height);
}

Shape2D pool_size(const Shape2D& input, int pool_h, int pool_w) {
  if (pool_h < 1 || pool_w < 1) throw ConfigError("pool sizes must be positive");
  Shape2D out{input.height / pool_h, input.width / pool_w};
  if (out.height < 1 || out.width < 1) throw ShapeError("pool output extent is nonpositive");
  return out;
}

void ModelSpec::validate() const {
  if (n_emotions < 2) throw ConfigError("emotion head needs at least 2 classes");
  if (recurrent_layers < 0) throw ConfigError("recurrent_layers must be nonnegative");
  if (recurrent_layers > 0 && recurrent_hidden < 1) throw ConfigError("recurrent_hidden must be positive");
  if (recurrent_dropout < 0.0 || recurrent_dropout >= 1.0) throw ConfigError("dropout rate must lie in [0, 1)");
  for (int u : dense_units) {
    if (u < 1) throw ConfigError("dense units must be positive");
  }
  for (const auto& s : stages) {
    if (s.conv.mode == ConvMode::kTemporal && s.pool_w != 1) {
      throw ConfigError("temporal stages pool along time only (pool_w must be 1)");
    }
  }
}

std::vector<StageShape> trace_shapes(const ModelSpec& spec, const Shape2D& input) {
  spec.validate();
  std::vector<StageShape> out{{input, 1}};
  for (const auto& s : spec.stages) {
    Shape2D shape = mask_size(out.back().shape, s.conv);
    if (s.pool_h > 1 || s.pool_w > 1) shape = pool_size(shape, s.pool_h, s.pool_w);
    out.push_back({shape, s.conv.out_channels});
  }
  return out;
}

ModelSpec default_temporal_spec(int n_emotions, bool multitask, int channels) {
  ModelSpec spec;
  ConvSpec c1{5, 0, 2, 1, 0, channels, ConvMode::kTemporal};
  ConvSpec c2{3, 0, 1, 1, 0, channels, ConvMode::kTemporal};
  ConvSpec c3{3, 0, 1, 1, 0, channels, ConvMode::kTemporal};
  spec.stages = {{c1, 2, 1}, {c2, 2, 1}, {c3, 1, 1}};
  spec.n_emotions = n_emotions;
  spec.multitask = multitask;
  return spec;
}

ModelSpec default_2d_spec(int n_emotions, bool multitask) {
  ModelSpec spec;
  ConvSpec c1{5, 5, 2, 2, 0, 16, ConvMode::k2D};
  ConvSpec c2{3, 3, 1, 1, 0, 32, ConvMode::k2D};
  ConvSpec c3{3, 3, 1, 1, 0, 88, ConvMode::k2D};
  spec.stages = {{c1, 2, 1}, {c2, 2, 2}, {c3, 1, 1}};
  spec.n_emotions = n_emotions;
  spec.multitask = multitask;
  return spec;
}

nlohmann::ordered_json spec_to_json(const ModelSpec& spec) {
  nlohmann::ordered_json j;
  auto stages = nlohmann::ordered_json::array();
  for (const auto& s : spec.stages) {
    stages.push_back({{"kernel_h", s.conv.kernel_h},
                      {"kernel_w", s.conv.kernel_w},
                      {"stride_h", s.conv.stride_h},
                      {"stride_w", s.conv.stride_w},
                      {"padding", s.conv.padding},
                      {"out_channels", s.conv.out_channels},
                      {"mode", to_string(s.conv.mode)},
                      {"pool_h", s.pool_h},
                      {"pool_w", s.pool_w}});
  }
  j["stages"] = stages;
  j["recurrent_layers"] = spec.recurrent_layers;
  j["recurrent_hidden"] = spec.recurrent_hidden;
  j["recurrent_dropout"] = spec.recurrent_dropout;
  j["dense_units"] = spec.dense_units;
  j["n_emotions"] = spec.n_emotions;
  j["multitask"] = spec.multitask;
  return j;
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  try {
    ModelSpec spec;
    for (const auto& s : j.at("stages")) {
      StageSpec st;
      st.conv.kernel_h = s.at("kernel_h");
      st.conv.kernel_w = s.at("kernel_w");
      st.conv.stride_h = s.at("stride_h");
      st.conv.stride_w = s.at("stride_w");
      st.conv.padding = s.at("padding");
      st.conv.out_channels = s.at("out_channels");
      st.conv.mode = parse_conv_mode(s.at("mode").get<std::string>());
      st.pool_h = s.at("pool_h");
      st.pool_w = s.at("pool_w");
      spec.stages.push_back(st);
    }
    spec.recurrent_layers = j.at("recurrent_layers");
    spec.recurrent_hidden = j.at("recurrent_hidden");
    spec.recurrent_dropout = j.at("recurrent_dropout");
    spec.dense_units = j.at("dense_units").get<std::vector<int>>();
    spec.n_emotions = j.at("n_emotions");
    spec.multitask = j.at("multitask");
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid model spec: ") + e.what());
  }
}

}  // namespace ser::net
