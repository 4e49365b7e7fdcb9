#pragma once

#include "ser/dsp/features.hpp"

namespace ser::train {

// One fixed-length model input. `values` is window x dims with rows at or
// past `valid` zero; `segment` indexes the parent segment in its set.
struct Sample {
  const dsp::FeatureValues* values = nullptr;
  int valid = 0;
  int emotion = 0;
  int gender = 0;
  int segment = 0;
};

}  // namespace ser::train
