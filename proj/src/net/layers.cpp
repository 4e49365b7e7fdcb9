#include "ser/net/layers.hpp"

#include <cmath>
#include <limits>

namespace ser::net {

template <class T>
void mask_rows(Activation<T>& a) {
  for (int b = 0; b < a.batch; ++b) {
    const int v = a.valid[b];
    if (v < a.height) a.data.middleRows(static_cast<Eigen::Index>(b) * a.height + v, a.height - v).setZero();
  }
}

template <class T>
void he_normal(Mat<T>& w, int fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(dist(rng));
}

namespace {

void check_valid(const std::vector<int>& valid, int batch, int height) {
  if (static_cast<int>(valid.size()) != batch) throw ShapeError("valid-length count does not match batch size");
  for (int v : valid) {
    if (v < 1 || v > height) {
      throw ShapeError("valid length " + std::to_string(v) + " outside [1, " + std::to_string(height) + "]");
    }
  }
}

}  // namespace

// ---------------------------------------------------------------- Conv2D

template <class T>
Conv2D<T>::Conv2D(const std::string& name, const ConvSpec& spec, Shape2D input, int in_channels,
                  ParameterSet<T>& params, std::mt19937_64& rng)
    : spec_(spec), in_(input), out_(mask_size(input, spec)), cin_(in_channels) {
  kh_ = spec.kernel_h;
  sh_ = spec.stride_h;
  ph_ = spec.padding;
  if (spec.mode == ConvMode::kTemporal) {
    kw_ = input.width;
    sw_ = 1;
    pw_ = 0;
  } else {
    kw_ = spec.kernel_w;
    sw_ = spec.stride_w;
    pw_ = spec.padding;
  }
  w_ = &params.add(name + ".w", spec.out_channels, static_cast<Eigen::Index>(kh_) * kw_ * cin_);
  b_ = &params.add(name + ".b", 1, spec.out_channels);
  he_normal(w_->value, fan_in(), rng);
}

template <class T>
int Conv2D<T>::valid_out(int valid_in) const {
  return mask_valid(valid_in, out_.height, kh_, sh_, ph_);
}

template <class T>
Activation<T> Conv2D<T>::forward(const Activation<T>& x) {
  if (x.height != in_.height || x.width != in_.width || x.channels != cin_) {
    throw ShapeError("conv input shape mismatch");
  }
  check_valid(x.valid, x.batch, x.height);
  batch_ = x.batch;
  valid_in_ = x.valid;
  const int ho = out_.height, wo = out_.width, cout = spec_.out_channels;
  const Eigen::Index rows = static_cast<Eigen::Index>(batch_) * ho * wo;
  cols_.setZero(rows, static_cast<Eigen::Index>(kh_) * kw_ * cin_);
  for (int b = 0; b < batch_; ++b) {
    const int limit = std::min(in_.height, valid_in_[b]);
    for (int oh = 0; oh < ho; ++oh) {
      for (int ow = 0; ow < wo; ++ow) {
        const Eigen::Index r = (static_cast<Eigen::Index>(b) * ho + oh) * wo + ow;
        const int iw0 = ow * sw_ - pw_;
        const int dw_lo = std::max(0, -iw0);
        const int dw_hi = std::min(kw_, in_.width - iw0);
        if (dw_hi <= dw_lo) continue;
        for (int dt = 0; dt < kh_; ++dt) {
          const int ih = oh * sh_ - ph_ + dt;
          if (ih < 0 || ih >= limit) continue;
          cols_.row(r).segment((dt * kw_ + dw_lo) * cin_, (dw_hi - dw_lo) * cin_) =
              x.data.row(static_cast<Eigen::Index>(b) * in_.height + ih).segment((iw0 + dw_lo) * cin_,
                                                                                (dw_hi - dw_lo) * cin_);
        }
      }
    }
  }
  Mat<T> y = cols_ * w_->value.transpose();
  y.rowwise() += b_->value.row(0);

  Activation<T> out;
  out.batch = batch_;
  out.height = ho;
  out.width = wo;
  out.channels = cout;
  out.data = Eigen::Map<Mat<T>>(y.data(), static_cast<Eigen::Index>(batch_) * ho, static_cast<Eigen::Index>(wo) * cout);
  out.valid.resize(batch_);
  for (int b = 0; b < batch_; ++b) out.valid[b] = valid_out(valid_in_[b]);
  valid_out_ = out.valid;
  mask_rows(out);
  return out;
}

template <class T>
Activation<T> Conv2D<T>::backward(const Activation<T>& dy) {
  const int ho = out_.height, wo = out_.width, cout = spec_.out_channels;
  if (dy.batch != batch_ || dy.height != ho || dy.width != wo || dy.channels != cout) {
    throw ShapeError("conv upstream gradient does not match the last forward pass");
  }
  Activation<T> masked = dy;
  masked.valid = valid_out_;
  mask_rows(masked);
  Eigen::Map<const Mat<T>> g(masked.data.data(), static_cast<Eigen::Index>(batch_) * ho * wo, cout);

  w_->grad.noalias() += g.transpose() * cols_;
  b_->grad.row(0) += g.colwise().sum();
  const Mat<T> dcols = g * w_->value;

  Activation<T> dx;
  dx.reshape(batch_, in_.height, in_.width, cin_);
  dx.valid = valid_in_;
  for (int b = 0; b < batch_; ++b) {
    const int limit = std::min(in_.height, valid_in_[b]);
    for (int oh = 0; oh < ho; ++oh) {
      for (int ow = 0; ow < wo; ++ow) {
        const Eigen::Index r = (static_cast<Eigen::Index>(b) * ho + oh) * wo + ow;
        const int iw0 = ow * sw_ - pw_;
        const int dw_lo = std::max(0, -iw0);
        const int dw_hi = std::min(kw_, in_.width - iw0);
        if (dw_hi <= dw_lo) continue;
        for (int dt = 0; dt < kh_; ++dt) {
          const int ih = oh * sh_ - ph_ + dt;
          if (ih < 0 || ih >= limit) continue;
          dx.data.row(static_cast<Eigen::Index>(b) * in_.height + ih).segment((iw0 + dw_lo) * cin_,
                                                                             (dw_hi - dw_lo) * cin_) +=
              dcols.row(r).segment((dt * kw_ + dw_lo) * cin_, (dw_hi - dw_lo) * cin_);
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------- Relu

template <class T>
Mat<T> Relu<T>::forward(const Mat<T>& x) {
  active_ = (x.array() > T(0)).template cast<T>().matrix();
  margin_ = std::numeric_limits<T>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const T v = std::abs(x.data()[i]);
    if (v != T(0) && v < margin_) margin_ = v;
  }
  return x.cwiseMax(T(0));
}

template <class T>
Mat<T> Relu<T>::backward(const Mat<T>& dy) const {
  if (dy.rows() != active_.rows() || dy.cols() != active_.cols()) throw ShapeError("relu gradient shape mismatch");
  return dy.cwiseProduct(active_);
}

template <class T>
Activation<T> Relu<T>::forward(const Activation<T>& x) {
  Activation<T> y = x;
  y.data = forward(x.data);
  return y;
}

template <class T>
Activation<T> Relu<T>::backward(const Activation<T>& dy) const {
  Activation<T> dx = dy;
  dx.data = backward(dy.data);
  return dx;
}

// ---------------------------------------------------------------- MaxPool

template <class T>
Activation<T> MaxPool<T>::forward(const Activation<T>& x) {
  const Shape2D out_shape = pool_size({x.height, x.width}, ph_, pw_);
  const int ho = out_shape.height, wo = out_shape.width, c = x.channels;
  in_rows_ = static_cast<int>(x.data.rows());
  in_cols_ = static_cast<int>(x.data.cols());
  in_h_ = x.height;
  in_w_ = x.width;
  in_valid_ = x.valid;
  Activation<T> y;
  y.reshape(x.batch, ho, wo, c);
  y.valid.resize(x.batch);
  argmax_.assign(static_cast<std::size_t>(y.data.size()), -1);
  margin_ = std::numeric_limits<T>::infinity();
  for (int b = 0; b < x.batch; ++b) {
    y.valid[b] = mask_valid(x.valid[b], ho, ph_, ph_, 0);
    for (int oh = 0; oh < y.valid[b]; ++oh) {
      for (int ow = 0; ow < wo; ++ow) {
        for (int ch = 0; ch < c; ++ch) {
          T best = -std::numeric_limits<T>::infinity();
          T second = -std::numeric_limits<T>::infinity();
          Eigen::Index best_at = -1;
          for (int i = 0; i < ph_; ++i) {
            const Eigen::Index row = static_cast<Eigen::Index>(b) * x.height + oh * ph_ + i;
            for (int j = 0; j < pw_; ++j) {
              const Eigen::Index col = static_cast<Eigen::Index>(ow * pw_ + j) * c + ch;
              const T v = x.data(row, col);
              if (v > best || best_at < 0) {
                second = best;
                best = v;
                best_at = row * in_cols_ + col;
              } else if (v > second) {
                second = v;
              }
            }
          }
          const Eigen::Index out_row = static_cast<Eigen::Index>(b) * ho + oh;
          const Eigen::Index out_col = static_cast<Eigen::Index>(ow) * c + ch;
          y.data(out_row, out_col) = best;
          if (best > T(0) && ph_ * pw_ > 1) margin_ = std::min(margin_, best - second);
          argmax_[static_cast<std::size_t>(out_row * y.data.cols() + out_col)] = best_at;
        }
      }
    }
  }
  return y;
}

template <class T>
Activation<T> MaxPool<T>::backward(const Activation<T>& dy) const {
  if (static_cast<std::size_t>(dy.data.size()) != argmax_.size()) throw ShapeError("pool gradient shape mismatch");
  Activation<T> dx;
  dx.batch = dy.batch;
  dx.height = in_h_;
  dx.width = in_w_;
  dx.channels = dy.channels;
  dx.valid = in_valid_;
  dx.data.setZero(in_rows_, in_cols_);
  for (std::size_t k = 0; k < argmax_.size(); ++k) {
    if (argmax_[k] >= 0) dx.data.data()[argmax_[k]] += dy.data.data()[k];
  }
  return dx;
}

// ---------------------------------------------------------------- BiLstm

template <class T>
BiLstm<T>::BiLstm(const std::string& name, int input_features, int hidden, ParameterSet<T>& params,
                  std::mt19937_64& rng)
    : features_(input_features), hidden_(hidden) {
  for (auto [d, tag, rev] : {std::tuple{&fwd_, ".fwd", false}, std::tuple{&bwd_, ".bwd", true}}) {
    d->wx = &params.add(name + tag + ".wx", 4 * hidden, input_features);
    d->wh = &params.add(name + tag + ".wh", 4 * hidden, hidden);
    d->b = &params.add(name + tag + ".b", 1, 4 * hidden);
    d->reverse = rev;
    he_normal(d->wx->value, input_features, rng);
    he_normal(d->wh->value, hidden, rng);
  }
}

namespace {

template <class Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return S(1) / (S(1) + (-x).exp());
}

}  // namespace

template <class T>
void BiLstm<T>::run_forward(Direction& d, const Mat<T>& x_tm, Mat<T>& out_tm, int column_offset) {
  const int H = hidden_, B = batch_;
  Mat<T> xp = x_tm * d.wx->value.transpose();
  xp.rowwise() += d.b->value.row(0);
  const Eigen::Index n = static_cast<Eigen::Index>(steps_) * B;
  d.gates.resize(n, 4 * H);
  d.cell.resize(n, H);
  d.cell_tanh.resize(n, H);
  d.h_prev.resize(n, H);
  d.c_prev.resize(n, H);
  Mat<T> h = Mat<T>::Zero(B, H), c = Mat<T>::Zero(B, H);
  for (int s = 0; s < steps_; ++s) {
    const int t = d.reverse ? steps_ - 1 - s : s;
    const Eigen::Index r0 = static_cast<Eigen::Index>(t) * B;
    d.h_prev.middleRows(r0, B) = h;
    d.c_prev.middleRows(r0, B) = c;
    Mat<T> g = xp.middleRows(r0, B);
    g.noalias() += h * d.wh->value.transpose();
    auto gates = d.gates.middleRows(r0, B);
    gates.leftCols(2 * H) = sigmoid(g.leftCols(2 * H).array()).matrix();
    gates.middleCols(2 * H, H) = g.middleCols(2 * H, H).array().tanh().matrix();
    gates.rightCols(H) = sigmoid(g.rightCols(H).array()).matrix();
    c = (gates.middleCols(H, H).array() * c.array() + gates.leftCols(H).array() * gates.middleCols(2 * H, H).array())
            .matrix();
    Mat<T> th = c.array().tanh().matrix();
    h = (gates.rightCols(H).array() * th.array()).matrix();
    for (int b = 0; b < B; ++b) {
      if (!active(b, t)) {
        h.row(b).setZero();
        c.row(b).setZero();
        th.row(b).setZero();
      }
    }
    d.cell.middleRows(r0, B) = c;
    d.cell_tanh.middleRows(r0, B) = th;
    out_tm.block(r0, column_offset, B, H) = h;
  }
}

template <class T>
void BiLstm<T>::run_backward(Direction& d, const Mat<T>& x_tm, const Mat<T>& dout_tm, Mat<T>& dx_tm,
                             int column_offset) {
  const int H = hidden_, B = batch_;
  Mat<T> dxp = Mat<T>::Zero(x_tm.rows(), 4 * H);
  Mat<T> dh_carry = Mat<T>::Zero(B, H), dc_carry = Mat<T>::Zero(B, H);
  Mat<T> dg(B, 4 * H);
  for (int s = steps_ - 1; s >= 0; --s) {
    const int t = d.reverse ? steps_ - 1 - s : s;
    const Eigen::Index r0 = static_cast<Eigen::Index>(t) * B;
    const auto gates = d.gates.middleRows(r0, B).array();
    const auto i = gates.leftCols(H);
    const auto f = gates.middleCols(H, H);
    const auto g = gates.middleCols(2 * H, H);
    const auto o = gates.rightCols(H);
    const auto th = d.cell_tanh.middleRows(r0, B).array();
    const auto c_prev = d.c_prev.middleRows(r0, B).array();

    const Mat<T> dh = dout_tm.block(r0, column_offset, B, H) + dh_carry;
    const auto dha = dh.array();
    const Mat<T> dc = (dc_carry.array() + dha * o * (T(1) - th * th)).matrix();
    const auto dca = dc.array();
    dg.leftCols(H) = (dca * g * i * (T(1) - i)).matrix();
    dg.middleCols(H, H) = (dca * c_prev * f * (T(1) - f)).matrix();
    dg.middleCols(2 * H, H) = (dca * i * (T(1) - g * g)).matrix();
    dg.rightCols(H) = (dha * th * o * (T(1) - o)).matrix();
    dc_carry = (dca * f).matrix();
    for (int b = 0; b < B; ++b) {
      if (!active(b, t)) {
        dg.row(b).setZero();
        dc_carry.row(b).setZero();
      }
    }
    dh_carry.noalias() = dg * d.wh->value;
    d.wh->grad.noalias() += dg.transpose() * d.h_prev.middleRows(r0, B);
    dxp.middleRows(r0, B) = dg;
  }
  d.wx->grad.noalias() += dxp.transpose() * x_tm;
  d.b->grad.row(0) += dxp.colwise().sum();
  dx_tm.noalias() += dxp * d.wx->value;
}

template <class T>
Activation<T> BiLstm<T>::forward(const Activation<T>& x) {
  if (x.width * x.channels != features_) throw ShapeError("recurrent input width mismatch");
  check_valid(x.valid, x.batch, x.height);
  batch_ = x.batch;
  steps_ = x.height;
  valid_ = x.valid;
  x_tm_.resize(static_cast<Eigen::Index>(steps_) * batch_, features_);
  for (int b = 0; b < batch_; ++b) {
    for (int t = 0; t < steps_; ++t) {
      x_tm_.row(static_cast<Eigen::Index>(t) * batch_ + b) = x.data.row(static_cast<Eigen::Index>(b) * steps_ + t);
    }
  }
  Mat<T> out_tm = Mat<T>::Zero(x_tm_.rows(), 2 * hidden_);
  run_forward(fwd_, x_tm_, out_tm, 0);
  run_forward(bwd_, x_tm_, out_tm, hidden_);
  Activation<T> y;
  y.reshape(batch_, steps_, 1, 2 * hidden_);
  y.valid = valid_;
  for (int b = 0; b < batch_; ++b) {
    for (int t = 0; t < steps_; ++t) {
      y.data.row(static_cast<Eigen::Index>(b) * steps_ + t) = out_tm.row(static_cast<Eigen::Index>(t) * batch_ + b);
    }
  }
  return y;
}

template <class T>
Activation<T> BiLstm<T>::backward(const Activation<T>& dy) {
  if (dy.batch != batch_ || dy.height != steps_ || dy.width * dy.channels != 2 * hidden_) {
    throw ShapeError("recurrent upstream gradient does not match the last forward pass");
  }
  Mat<T> dout_tm(x_tm_.rows(), 2 * hidden_);
  for (int b = 0; b < batch_; ++b) {
    for (int t = 0; t < steps_; ++t) {
      dout_tm.row(static_cast<Eigen::Index>(t) * batch_ + b) = dy.data.row(static_cast<Eigen::Index>(b) * steps_ + t);
    }
  }
  Mat<T> dx_tm = Mat<T>::Zero(x_tm_.rows(), features_);
  run_backward(fwd_, x_tm_, dout_tm, dx_tm, 0);
  run_backward(bwd_, x_tm_, dout_tm, dx_tm, hidden_);
  Activation<T> dx;
  dx.batch = batch_;
  dx.height = steps_;
  dx.width = 1;
  dx.channels = features_;
  dx.valid = valid_;
  dx.data.resize(static_cast<Eigen::Index>(batch_) * steps_, features_);
  for (int b = 0; b < batch_; ++b) {
    for (int t = 0; t < steps_; ++t) {
      dx.data.row(static_cast<Eigen::Index>(b) * steps_ + t) = dx_tm.row(static_cast<Eigen::Index>(t) * batch_ + b);
    }
  }
  return dx;
}

// ---------------------------------------------------------------- Dropout

template <class T>
Mat<T> Dropout<T>::forward(const Mat<T>& x, bool train, std::uint64_t seed) {
  applied_ = train && rate_ > 0.0;
  if (!applied_) return x;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(1.0 - rate_);
  const T scale = static_cast<T>(1.0 / (1.0 - rate_));
  scale_.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < scale_.size(); ++i) scale_.data()[i] = keep(rng) ? scale : T(0);
  return x.cwiseProduct(scale_);
}

template <class T>
Mat<T> Dropout<T>::backward(const Mat<T>& dy) const {
  if (!applied_) return dy;
  return dy.cwiseProduct(scale_);
}

// ---------------------------------------------------------------- Dense

template <class T>
Dense<T>::Dense(const std::string& name, int in, int out, ParameterSet<T>& params, std::mt19937_64& rng) {
  w_ = &params.add(name + ".w", out, in);
  b_ = &params.add(name + ".b", 1, out);
  he_normal(w_->value, in, rng);
}

template <class T>
Mat<T> Dense<T>::forward(const Mat<T>& x) {
  if (x.cols() != w_->value.cols()) {
    throw ShapeError("dense input has " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(w_->value.cols()));
  }
  x_ = x;
  Mat<T> y = x * w_->value.transpose();
  y.rowwise() += b_->value.row(0);
  return y;
}

template <class T>
Mat<T> Dense<T>::backward(const Mat<T>& dy) {
  if (dy.rows() != x_.rows() || dy.cols() != w_->value.rows()) throw ShapeError("dense gradient shape mismatch");
  w_->grad.noalias() += dy.transpose() * x_;
  b_->grad.row(0) += dy.colwise().sum();
  return dy * w_->value;
}

// ---------------------------------------------------------------- losses

template <class T>
Mat<T> softmax(const Mat<T>& logits) {
  Mat<T> p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const T m = logits.row(r).maxCoeff();
    p.row(r) = (logits.row(r).array() - m).exp().matrix();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

template <class T>
T softmax_cross_entropy(const RowVec<T>& logits, int true_class, RowVec<T>* grad) {
  const Eigen::Index e = logits.size();
  if (e < 2) throw ConfigError("softmax cross-entropy needs at least 2 classes");
  if (true_class < 0 || true_class >= e) {
    throw ConfigError("class index " + std::to_string(true_class) + " outside [0, " + std::to_string(e) + ")");
  }
  const T m = logits.maxCoeff();
  const RowVec<T> ex = (logits.array() - m).exp().matrix();
  const T z = ex.sum();
  const T loss = std::log(z) - (logits(true_class) - m);
  if (grad) {
    *grad = ex / z;
    (*grad)(true_class) -= T(1);
  }
  return loss;
}

template <class T>
T softmax_cross_entropy_batch(const Mat<T>& logits, std::span<const int> labels, Mat<T>* grad) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) throw ShapeError("label count != logit rows");
  if (grad) grad->resize(logits.rows(), logits.cols());
  T total = 0;
  const T inv = T(1) / static_cast<T>(logits.rows());
  RowVec<T> g;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    total += softmax_cross_entropy<T>(logits.row(r), labels[r], grad ? &g : nullptr);
    if (grad) grad->row(r) = g * inv;
  }
  return total * inv;
}

LossBreakdown multitask_total(double loss_emotion, double loss_gender, bool multitask) {
  LossBreakdown out;
  out.loss_emotion = loss_emotion;
  if (multitask) {
    out.loss_gender = loss_gender;
    out.total = loss_emotion + loss_gender;
  } else {
    out.total = loss_emotion;
  }
  return out;
}

#define SER_INSTANTIATE(T)                                                                                 \
  template void mask_rows<T>(Activation<T>&);                                                              \
  template void he_normal<T>(Mat<T>&, int, std::mt19937_64&);                                              \
  template class Conv2D<T>;                                                                                \
  template class Relu<T>;                                                                                  \
  template class MaxPool<T>;                                                                               \
  template class BiLstm<T>;                                                                                \
  template class Dropout<T>;                                                                               \
  template class Dense<T>;                                                                                 \
  template Mat<T> softmax<T>(const Mat<T>&);                                                               \
  template T softmax_cross_entropy<T>(const RowVec<T>&, int, RowVec<T>*);                                  \
  template T softmax_cross_entropy_batch<T>(const Mat<T>&, std::span<const int>, Mat<T>*);

SER_INSTANTIATE(float)
SER_INSTANTIATE(double)

}  // namespace ser::net
