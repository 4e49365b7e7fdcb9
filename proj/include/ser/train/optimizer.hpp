#pragma once

#include <cstdint>
#include <vector>

#include "ser/net/tensor.hpp"

namespace ser::train {

struct OptimizerConfig {
  double lr0 = 1e-4;
  double decay_rate = 0.9;
  int decay_steps = 1000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_lo = -1.0;
  double clip_hi = 1.0;
  int batch_size = 32;
  int max_epochs = 100;
  std::uint64_t seed = 1;

  void validate() const;
};

// Staircase decay: lr0 * decay_rate^floor(step / decay_steps).
double lr_at_step(std::int64_t step, const OptimizerConfig& cfg);

// Elementwise clamp of every gradient into [clip_lo, clip_hi]. A NaN
// gradient throws NumericalError naming the tensor.
template <class T>
void clip_gradients(net::ParameterSet<T>& params, double lo, double hi);

template <class T>
struct AdamState {
  std::int64_t step = 0;
  std::vector<net::Mat<T>> m;
  std::vector<net::Mat<T>> v;
};

// Bias-corrected Adam with the scheduled learning rate; increments the step.
template <class T>
void adam_step(net::ParameterSet<T>& params, AdamState<T>& state, const OptimizerConfig& cfg);

}  // namespace ser::train
