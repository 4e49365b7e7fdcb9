#include "ser/net/model.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <string>

namespace ser::net {

template <class T>
Model<T>::Model(const ModelSpec& spec, Shape2D input, std::uint64_t seed)
    : spec_(spec), input_(input), dropout_(spec.recurrent_dropout) {
  const auto shapes = trace_shapes(spec, input);
  params_.rng_seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t s = 0; s < spec.stages.size(); ++s) {
    const auto& st = spec.stages[s];
    convs_.emplace_back("conv" + std::to_string(s + 1), st.conv, shapes[s].shape, shapes[s].channels, params_, rng);
    conv_relus_.emplace_back();
    pools_.push_back(st.pool_h > 1 || st.pool_w > 1 ? std::make_unique<MaxPool<T>>(st.pool_h, st.pool_w) : nullptr);
  }
  const StageShape last = shapes.back();
  int steps = last.shape.height;
  int features = last.shape.width * last.channels;
  for (int l = 0; l < spec.recurrent_layers; ++l) {
    lstms_.emplace_back("lstm" + std::to_string(l + 1), features, spec.recurrent_hidden, params_, rng);
    features = 2 * spec.recurrent_hidden;
  }
  flat_steps_ = steps;
  flat_features_ = features;
  int width = steps * features;
  for (std::size_t d = 0; d < spec.dense_units.size(); ++d) {
    trunk_.emplace_back("dense" + std::to_string(d + 1), width, spec.dense_units[d], params_, rng);
    trunk_relus_.emplace_back();
    width = spec.dense_units[d];
  }
  emotion_head_ = std::make_unique<Dense<T>>("emotion", width, spec.n_emotions, params_, rng);
  if (spec.multitask) gender_head_ = std::make_unique<Dense<T>>("gender", width, 2, params_, rng);
}

template <class T>
ModelOutput<T> Model<T>::forward(const Mat<T>& x, std::span<const int> valid, const ForwardOptions& opts) {
  batch_ = static_cast<int>(valid.size());
  if (batch_ < 1) throw ShapeError("empty batch");
  if (x.rows() != static_cast<Eigen::Index>(batch_) * input_.height || x.cols() != input_.width) {
    throw ShapeError("model input must be " + std::to_string(batch_ * input_.height) + "x" +
                     std::to_string(input_.width) + ", got " + std::to_string(x.rows()) + "x" +
                     std::to_string(x.cols()));
  }
  Activation<T> a;
  a.data = x;
  a.batch = batch_;
  a.height = input_.height;
  a.width = input_.width;
  a.channels = 1;
  a.valid.assign(valid.begin(), valid.end());
  for (int v : a.valid) {
    if (v < 1 || v > input_.height) throw ShapeError("valid length " + std::to_string(v) + " out of range");
  }
  mask_rows(a);

  for (std::size_t s = 0; s < convs_.size(); ++s) {
    a = convs_[s].forward(a);
    a = conv_relus_[s].forward(a);
    if (pools_[s]) a = pools_[s]->forward(a);
  }
  if (!lstms_.empty()) {
    a.width = a.width * a.channels;
    a.channels = 1;
    for (auto& l : lstms_) a = l.forward(a);
    a.data = dropout_.forward(a.data, opts.train, opts.dropout_seed);
  }
  // Padded steps are zero here; flatten each sample's T x F block.
  Mat<T> h = Eigen::Map<const Mat<T>>(a.data.data(), batch_, static_cast<Eigen::Index>(flat_steps_) * flat_features_);
  for (std::size_t d = 0; d < trunk_.size(); ++d) h = trunk_relus_[d].forward(trunk_[d].forward(h));
  ModelOutput<T> out;
  out.emotion = emotion_head_->forward(h);
  if (gender_head_) out.gender = gender_head_->forward(h);
  return out;
}

template <class T>
void Model<T>::backward(const Mat<T>& d_emotion, const Mat<T>* d_gender) {
  Mat<T> dh = emotion_head_->backward(d_emotion);
  if (gender_head_ && d_gender) dh += gender_head_->backward(*d_gender);
  for (std::size_t d = trunk_.size(); d-- > 0;) dh = trunk_[d].backward(trunk_relus_[d].backward(dh));

  Activation<T> da;
  da.batch = batch_;
  da.height = flat_steps_;
  da.width = 1;
  da.channels = flat_features_;
  da.data = Eigen::Map<const Mat<T>>(dh.data(), static_cast<Eigen::Index>(batch_) * flat_steps_, flat_features_);
  if (!lstms_.empty()) {
    da.data = dropout_.backward(da.data);
    for (std::size_t l = lstms_.size(); l-- > 0;) da = lstms_[l].backward(da);
  }
  for (std::size_t s = convs_.size(); s-- > 0;) {
    const Activation<T>* up = &da;
    Activation<T> pooled;
    if (pools_[s]) {
      pooled = pools_[s]->backward(da);
      up = &pooled;
    }
    const Shape2D out = convs_[s].output_shape();
    Activation<T> dy = *up;
    dy.height = out.height;
    dy.width = out.width;
    dy.channels = spec_.stages[s].conv.out_channels;
    da = convs_[s].backward(conv_relus_[s].backward(dy));
  }
  if (corruption_ != T(1) && !params_.empty()) params_.begin()->grad *= corruption_;
}

template <class T>
LossBreakdown Model<T>::loss(const Mat<T>& x, std::span<const int> valid, std::span<const int> emotion,
                             std::span<const int> gender, const ForwardOptions& opts, bool with_grad) {
  if (emotion.size() != valid.size()) throw ShapeError("emotion label count != batch size");
  if (spec_.multitask && gender.size() != valid.size()) throw ShapeError("gender label count != batch size");
  const auto out = forward(x, valid, opts);
  Mat<T> de, dg;
  const T le = softmax_cross_entropy_batch<T>(out.emotion, emotion, with_grad ? &de : nullptr);
  T lg = 0;
  if (spec_.multitask) lg = softmax_cross_entropy_batch<T>(out.gender, gender, with_grad ? &dg : nullptr);
  if (with_grad) {
    params_.zero_grad();
    backward(de, spec_.multitask ? &dg : nullptr);
  }
  return multitask_total(static_cast<double>(le), static_cast<double>(lg), spec_.multitask);
}

template <class T>
T Model<T>::kink_margin() const {
  T m = std::numeric_limits<T>::infinity();
  for (const auto& r : conv_relus_) m = std::min(m, r.kink_margin());
  for (const auto& p : pools_) {
    if (p) m = std::min(m, p->kink_margin());
  }
  for (const auto& r : trunk_relus_) m = std::min(m, r.kink_margin());
  return m;
}

template class Model<float>;
template class Model<double>;

}  // namespace ser::net
