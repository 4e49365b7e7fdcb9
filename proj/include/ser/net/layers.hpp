#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ser/net/spec.hpp"
#include "ser/net/tensor.hpp"

namespace ser::net {

// Batch of per-sample height x (width * channels) grids stacked along rows.
// Element (b, h, w, c) lives at data(b * height + h, w * channels + c).
// Rows h >= valid[b] are padding.
template <class T>
struct Activation {
  Mat<T> data;
  int batch = 0;
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<int> valid;

  void reshape(int b, int h, int w, int c) {
    batch = b;
    height = h;
    width = w;
    channels = c;
    data.setZero(static_cast<Eigen::Index>(b) * h, static_cast<Eigen::Index>(w) * c);
  }
};

// Zeroes every padded row.
template <class T>
void mask_rows(Activation<T>& a);

// He-normal initialization: N(0, 2 / fan_in).
template <class T>
void he_normal(Mat<T>& w, int fan_in, std::mt19937_64& rng);

// Cross-correlation with bias. Input rows at or past the valid length are
// read as zeros, and output rows past the propagated valid length are zeroed,
// so padded content never reaches the output or the gradients.
template <class T>
class Conv2D {
 public:
  Conv2D(const std::string& name, const ConvSpec& spec, Shape2D input, int in_channels, ParameterSet<T>& params,
         std::mt19937_64& rng);

  Activation<T> forward(const Activation<T>& x);
  // Accumulates parameter gradients and returns the input gradient.
  Activation<T> backward(const Activation<T>& dy);

  Shape2D output_shape() const { return out_; }
  int fan_in() const { return kh_ * kw_ * cin_; }
  Tensor<T>& weight() { return *w_; }
  Tensor<T>& bias() { return *b_; }

 private:
  int valid_out(int valid_in) const;

  ConvSpec spec_;
  Shape2D in_;
  Shape2D out_;
  int cin_;
  int kh_, kw_, sh_, sw_, ph_, pw_;
  Tensor<T>* w_;  // out_channels x (kh * kw * cin), patch order (dt, dw, c)
  Tensor<T>* b_;  // 1 x out_channels
  Mat<T> cols_;
  std::vector<int> valid_in_;
  std::vector<int> valid_out_;
  int batch_ = 0;
};

template <class T>
class Relu {
 public:
  Activation<T> forward(const Activation<T>& x);
  Activation<T> backward(const Activation<T>& dy) const;
  Mat<T> forward(const Mat<T>& x);
  Mat<T> backward(const Mat<T>& dy) const;
  // Smallest |x| over nonzero inputs of the last forward pass.
  T kink_margin() const { return margin_; }

 private:
  Mat<T> active_;
  T margin_ = std::numeric_limits<T>::infinity();
};

// Non-overlapping max pool of pool_h x pool_w cells. First maximum wins ties.
template <class T>
class MaxPool {
 public:
  MaxPool(int pool_h, int pool_w) : ph_(pool_h), pw_(pool_w) {}
  Activation<T> forward(const Activation<T>& x);
  Activation<T> backward(const Activation<T>& dy) const;
  // Smallest gap between the two largest entries of any window whose
  // maximum is positive, over the last forward pass.
  T kink_margin() const { return margin_; }

 private:
  int ph_, pw_;
  T margin_ = std::numeric_limits<T>::infinity();
  int in_rows_ = 0, in_cols_ = 0;
  int in_h_ = 0, in_w_ = 0;
  std::vector<int> in_valid_;
  std::vector<Eigen::Index> argmax_;  // flat input index per output element
};

// Bidirectional LSTM over the height axis; each step's feature vector is the
// width * channels row. Gate order [i, f, g, o]. Output is batch x T x 2H
// (forward half first) with rows past the valid length set to zero. The
// backward direction starts at step valid - 1.
template <class T>
class BiLstm {
 public:
  BiLstm(const std::string& name, int input_features, int hidden, ParameterSet<T>& params, std::mt19937_64& rng);

  Activation<T> forward(const Activation<T>& x);
  Activation<T> backward(const Activation<T>& dy);

  int hidden() const { return hidden_; }

 private:
  struct Direction {
    Tensor<T>* wx;  // 4H x F
    Tensor<T>* wh;  // 4H x H
    Tensor<T>* b;   // 1 x 4H
    bool reverse;
    // Time-major caches: row t * B + b.
    Mat<T> gates;   // activated gates
    Mat<T> cell;
    Mat<T> cell_tanh;
    Mat<T> h_prev;
    Mat<T> c_prev;
  };

  void run_forward(Direction& d, const Mat<T>& x_tm, Mat<T>& out_tm, int column_offset);
  void run_backward(Direction& d, const Mat<T>& x_tm, const Mat<T>& dout_tm, Mat<T>& dx_tm, int column_offset);
  bool active(int b, int t) const { return t < valid_[b]; }

  int features_;
  int hidden_;
  Direction fwd_;
  Direction bwd_;
  Mat<T> x_tm_;
  std::vector<int> valid_;
  int batch_ = 0;
  int steps_ = 0;
};

// Inverted dropout: kept units are scaled by 1 / (1 - rate). Identity when
// not training or when rate is 0.
template <class T>
class Dropout {
 public:
  explicit Dropout(double rate) : rate_(rate) {}
  Mat<T> forward(const Mat<T>& x, bool train, std::uint64_t seed);
  Mat<T> backward(const Mat<T>& dy) const;
  double rate() const { return rate_; }

 private:
  double rate_;
  bool applied_ = false;
  Mat<T> scale_;
};

// y = x W^T + b with W of shape out x in.
template <class T>
class Dense {
 public:
  Dense(const std::string& name, int in, int out, ParameterSet<T>& params, std::mt19937_64& rng);
  Mat<T> forward(const Mat<T>& x);
  Mat<T> backward(const Mat<T>& dy);
  Tensor<T>& weight() { return *w_; }
  Tensor<T>& bias() { return *b_; }
  int in() const { return static_cast<int>(w_->value.cols()); }
  int out() const { return static_cast<int>(w_->value.rows()); }

 private:
  Tensor<T>* w_;
  Tensor<T>* b_;
  Mat<T> x_;
};

// Row-wise softmax with max subtraction.
template <class T>
Mat<T> softmax(const Mat<T>& logits);

// -log softmax(logits)[true_class] for one logit row; writes softmax - onehot
// into `grad` when given.
template <class T>
T softmax_cross_entropy(const RowVec<T>& logits, int true_class, RowVec<T>* grad = nullptr);

// Mean loss over the rows; `grad` receives (softmax - onehot) / rows.
template <class T>
T softmax_cross_entropy_batch(const Mat<T>& logits, std::span<const int> labels, Mat<T>* grad = nullptr);

struct LossBreakdown {
  double loss_emotion = 0.0;
  std::optional<double> loss_gender;
  double total = 0.0;
};

// Unweighted sum of the head losses when multitask, emotion loss otherwise.
LossBreakdown multitask_total(double loss_emotion, double loss_gender, bool multitask);

}  // namespace ser::net
