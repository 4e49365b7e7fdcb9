#pragma once

#include <cstdint>
#include <deque>
#include <string>

#include <Eigen/Core>

#include "ser/error.hpp"

namespace ser::net {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

// A trainable 2-D tensor with a gradient slot of the same shape.
template <class T>
struct Tensor {
  std::string name;
  Mat<T> value;
  Mat<T> grad;
  Eigen::Index size() const { return value.size(); }
};

// Named tensors in creation order. References stay valid as tensors are added.
template <class T>
class ParameterSet {
 public:
  Tensor<T>& add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    if (find(name)) throw ConfigError("duplicate parameter name '" + name + "'");
    tensors_.push_back({name, Mat<T>::Zero(rows, cols), Mat<T>::Zero(rows, cols)});
    return tensors_.back();
  }
  Tensor<T>* find(const std::string& name) {
    for (auto& t : tensors_) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }
  const Tensor<T>* find(const std::string& name) const {
    return const_cast<ParameterSet*>(this)->find(name);
  }
  Tensor<T>& at(const std::string& name) {
    if (auto* t = find(name)) return *t;
    throw ConfigError("no parameter named '" + name + "'");
  }
  void zero_grad() {
    for (auto& t : tensors_) t.grad.setZero();
  }
  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += static_cast<std::size_t>(t.value.size());
    return n;
  }
  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }
  std::size_t size() const { return tensors_.size(); }
  bool empty() const { return tensors_.empty(); }

  std::uint64_t rng_seed = 0;

 private:
  std::deque<Tensor<T>> tensors_;
};

// Exact sum of tensor element counts.
template <class T>
std::size_t param_count(const ParameterSet<T>& params) {
  return params.count();
}

}  // namespace ser::net
