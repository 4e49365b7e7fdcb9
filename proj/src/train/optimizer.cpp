#include "ser/train/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace ser::train {

void OptimizerConfig::validate() const {
  if (!(lr0 > 0.0)) throw ConfigError("lr0 must be positive");
  if (!(decay_rate > 0.0) || decay_steps < 1) throw ConfigError("decay rate and steps must be positive");
  if (!(clip_lo < clip_hi)) throw ConfigError("clip_lo must be below clip_hi");
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (max_epochs < 0) throw ConfigError("max_epochs must be nonnegative");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw ConfigError("invalid Adam hyperparameters");
  }
}

double lr_at_step(std::int64_t step, const OptimizerConfig& cfg) {
  if (step < 0) throw ConfigError("step must be nonnegative");
  return cfg.lr0 * std::pow(cfg.decay_rate, static_cast<double>(step / cfg.decay_steps));
}

template <class T>
void clip_gradients(net::ParameterSet<T>& params, double lo, double hi) {
  for (auto& t : params) {
    for (Eigen::Index i = 0; i < t.grad.size(); ++i) {
      T& g = t.grad.data()[i];
      if (std::isnan(g)) throw NumericalError("NaN gradient in tensor '" + t.name + "'");
      g = std::clamp(g, static_cast<T>(lo), static_cast<T>(hi));
    }
  }
}

template <class T>
void adam_step(net::ParameterSet<T>& params, AdamState<T>& state, const OptimizerConfig& cfg) {
  if (state.m.empty()) {
    for (const auto& t : params) {
      state.m.push_back(net::Mat<T>::Zero(t.value.rows(), t.value.cols()));
      state.v.push_back(net::Mat<T>::Zero(t.value.rows(), t.value.cols()));
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("optimizer state does not match the parameter set");
  const double lr = lr_at_step(state.step, cfg);
  state.step += 1;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const T step_size = static_cast<T>(lr / c1);
  const T inv_sqrt_c2 = static_cast<T>(1.0 / std::sqrt(c2));
  const T eps = static_cast<T>(cfg.adam_eps);
  std::size_t k = 0;
  for (auto& t : params) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    ++k;
    if (m.rows() != t.value.rows() || m.cols() != t.value.cols()) throw ShapeError("moment shape mismatch");
    m = static_cast<T>(b1) * m + static_cast<T>(1.0 - b1) * t.grad;
    v = static_cast<T>(b2) * v + static_cast<T>(1.0 - b2) * t.grad.cwiseAbs2();
    t.value.array() -= step_size * m.array() / (v.array().sqrt() * inv_sqrt_c2 + eps);
    if (!t.value.allFinite()) throw NumericalError("non-finite update in tensor '" + t.name + "'");
  }
}

template void clip_gradients<float>(net::ParameterSet<float>&, double, double);
template void clip_gradients<double>(net::ParameterSet<double>&, double, double);
template void adam_step<float>(net::ParameterSet<float>&, AdamState<float>&, const OptimizerConfig&);
template void adam_step<double>(net::ParameterSet<double>&, AdamState<double>&, const OptimizerConfig&);

}  // namespace ser::train
