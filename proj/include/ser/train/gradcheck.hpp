#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ser/net/spec.hpp"
#include "ser/net/tensor.hpp"

namespace ser::train {

// max|a - n| / max(max|a|, max|n|, 1e-12).
double relative_error(const net::Mat<double>& analytic, const net::Mat<double>& numeric);

struct GradcheckEntry {
  std::string layer;
  std::string tensor;
  double max_rel_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double worst() const;
  bool passed(double tolerance = 1e-4) const { return worst() <= tolerance; }
};

struct GradcheckOptions {
  double step = 1e-5;
  double kink_margin = 1e-3;  // resample inputs closer than this to a ReLU/max kink
  int max_resamples = 50;
  bool layers = true;          // also check each layer type in isolation
  double corrupt_factor = 1.0; // != 1 scales the model's first gradient (negative control)
};

// Small model used for whole-model checks on 12 x 9 inputs.
net::ModelSpec gradcheck_tiny_spec(net::ConvMode mode = net::ConvMode::kTemporal);
inline constexpr int kGradcheckHeight = 12;
inline constexpr int kGradcheckWidth = 9;

// Central differences in double precision against the analytic backward
// pass, per layer type and for the model assembled from `spec` on a batch
// of 2 inputs of kGradcheckHeight x kGradcheckWidth.
GradcheckReport gradcheck(const net::ModelSpec& spec, std::uint64_t seed, const GradcheckOptions& opts = {});

nlohmann::ordered_json gradcheck_to_json(const GradcheckReport& report, double tolerance);

}  // namespace ser::train
