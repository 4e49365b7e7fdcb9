#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace ser::net {

enum class ConvMode { kTemporal, k2D };

const char* to_string(ConvMode mode);
ConvMode parse_conv_mode(const std::string& text);

// Height is time (frames), width is the feature axis.
struct Shape2D {
  int height = 0;
  int width = 0;
  bool operator==(const Shape2D&) const = default;
};

// In temporal mode the kernel spans the whole input width (kernel_w is
// ignored and stride/padding act on the time axis only), so the output width
// is 1. In 2d mode padding is applied symmetrically on both axes.
struct ConvSpec {
  int kernel_h = 3;
  int kernel_w = 3;
  int stride_h = 1;
  int stride_w = 1;
  int padding = 0;
  int out_channels = 1;
  ConvMode mode = ConvMode::kTemporal;
};

// out = floor((in - kernel + 2 * padding) / stride) + 1 on each axis.
// Throws ShapeError on a nonpositive extent.
Shape2D mask_size(const Shape2D& input, const ConvSpec& spec);

// Number of valid time steps after a conv, by the same formula applied to
// the valid length and clamped to [1, output height].
int mask_valid(int valid_in, int out_height, int kernel, int stride, int padding);

// Non-overlapping max pool; out = floor(in / size) per axis.
Shape2D pool_size(const Shape2D& input, int pool_h, int pool_w);

// One convolutional stage: conv -> ReLU -> optional max pool.
struct StageSpec {
  ConvSpec conv;
  int pool_h = 1;
  int pool_w = 1;
};

struct ModelSpec {
  std::vector<StageSpec> stages;
  int recurrent_layers = 1;
  int recurrent_hidden = 60;
  double recurrent_dropout = 0.5;  // on the output of the last recurrent layer
  std::vector<int> dense_units{24};
  int n_emotions = 4;
  bool multitask = true;

  void validate() const;
};

// Shape (time x width) and channel count entering each stage and leaving the last one.
struct StageShape {
  Shape2D shape;
  int channels = 1;
};
std::vector<StageShape> trace_shapes(const ModelSpec& spec, const Shape2D& input);

// Three temporal conv layers (time kernels 5/3/3, first with stride 2),
// each followed by time pooling except the last.
ModelSpec default_temporal_spec(int n_emotions, bool multitask, int channels = 64);

// 2d-kernel counterpart of the default stack.
ModelSpec default_2d_spec(int n_emotions, bool multitask);

nlohmann::ordered_json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

}  // namespace ser::net
