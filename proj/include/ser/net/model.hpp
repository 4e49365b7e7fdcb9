#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ser/net/layers.hpp"
#include "ser/net/spec.hpp"
#include "ser/net/tensor.hpp"

namespace ser::net {

struct ForwardOptions {
  bool train = false;
  std::uint64_t dropout_seed = 0;
};

template <class T>
struct ModelOutput {
  Mat<T> emotion;  // batch x n_emotions logits
  Mat<T> gender;   // batch x 2 logits; empty without the gender head
};

// conv stages -> BiLSTM stack -> dropout -> flatten every time step -> dense
// trunk (ReLU) -> emotion head and, when multitask, a gender head on the same
// trunk output.
template <class T>
class Model {
 public:
  Model(const ModelSpec& spec, Shape2D input, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelSpec& spec() const { return spec_; }
  Shape2D input_shape() const { return input_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }
  std::size_t param_count() const { return params_.count(); }

  // x stacks `valid.size()` samples of input height rows each.
  ModelOutput<T> forward(const Mat<T>& x, std::span<const int> valid, const ForwardOptions& opts = {});
  // Accumulates into the gradient slots; `d_gender` is ignored without the head.
  void backward(const Mat<T>& d_emotion, const Mat<T>* d_gender);

  // Mean cross-entropy over the batch. With `with_grad` the gradient slots are
  // zeroed and then filled with the gradient of the total loss.
  LossBreakdown loss(const Mat<T>& x, std::span<const int> valid, std::span<const int> emotion,
                     std::span<const int> gender, const ForwardOptions& opts, bool with_grad);

  // Distance of the last forward pass from the nearest ReLU or max-pool kink.
  T kink_margin() const;

  // Test fixture: scales the first tensor's gradient after each backward pass.
  void corrupt_backward_for_testing(T factor) { corruption_ = factor; }

 private:
  ModelSpec spec_;
  Shape2D input_;
  ParameterSet<T> params_;
  std::vector<Conv2D<T>> convs_;
  std::vector<Relu<T>> conv_relus_;
  std::vector<std::unique_ptr<MaxPool<T>>> pools_;  // null where a stage has no pool
  std::vector<BiLstm<T>> lstms_;
  Dropout<T> dropout_;
  std::vector<Dense<T>> trunk_;
  std::vector<Relu<T>> trunk_relus_;
  std::unique_ptr<Dense<T>> emotion_head_;
  std::unique_ptr<Dense<T>> gender_head_;
  int flat_steps_ = 0;
  int flat_features_ = 0;
  int batch_ = 0;
  T corruption_ = T(1);
};

extern template class Model<float>;
extern template class Model<double>;

// Stacks sub-segment grids (each height x width) into one batch matrix.
template <class T, class Grid>
Mat<T> stack_batch(std::span<const Grid* const> grids, int height, int width) {
  Mat<T> x(static_cast<Eigen::Index>(grids.size()) * height, width);
  for (std::size_t i = 0; i < grids.size(); ++i) {
    x.middleRows(static_cast<Eigen::Index>(i) * height, height) = grids[i]->template cast<T>();
  }
  return x;
}

}  // namespace ser::net
