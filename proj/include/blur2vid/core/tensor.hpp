#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "blur2vid/core/error.hpp"

namespace blur2vid {

using Shape = std::vector<Eigen::Index>;

template <typename S>
using MatrixRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense row-major tensor of rank 1..4 backed by a flat Eigen array.
// Conventions used throughout the project:
//   images / feature maps : (H, W, C)
//   conv weights          : (K, K, Cin, Cout)
//   deconv weights        : (Cin, K, K, Cout)
template <typename S>
class Tensor {
 public:
  using Storage = Eigen::Array<S, Eigen::Dynamic, 1>;

  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    data_ = Storage::Zero(count(shape_));
  }
  Tensor(std::initializer_list<Eigen::Index> shape) : Tensor(Shape(shape)) {}

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor constant(Shape shape, S value) {
    Tensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }

  static Tensor from_storage(Shape shape, Storage data) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    if (t.data_.size() != count(t.shape_))
      throw validation_error("tensor storage size does not match shape");
    return t;
  }

  bool empty() const { return data_.size() == 0; }
  int rank() const { return static_cast<int>(shape_.size()); }
  Eigen::Index dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  Eigen::Index size() const { return data_.size(); }
  const Shape& shape() const { return shape_; }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }
  Storage& array() { return data_; }
  const Storage& array() const { return data_; }

  S& at(Eigen::Index flat) { return data_[flat]; }
  S at(Eigen::Index flat) const { return data_[flat]; }

  S& operator()(Eigen::Index i) { return data_[i]; }
  const S& operator()(Eigen::Index i) const { return data_[i]; }
  S& operator()(Eigen::Index i, Eigen::Index j) { return data_[i * shape_[1] + j]; }
  const S& operator()(Eigen::Index i, Eigen::Index j) const { return data_[i * shape_[1] + j]; }
  S& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const S& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  S& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l) {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  const S& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l) const {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  void fill(S v) { data_.setConstant(v); }
  void set_zero() { data_.setZero(); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (Eigen::Index i = 0; i < data_.size(); ++i)
      if (!std::isfinite(data_[i])) return false;
    return true;
  }

  S max_abs() const { return data_.size() ? data_.abs().maxCoeff() : S(0); }
  S mean() const { return data_.size() ? data_.mean() : S(0); }

  // View of the flat storage as a (rows x cols) row-major matrix.
  Eigen::Map<MatrixRM<S>> as_matrix(Eigen::Index rows, Eigen::Index cols) {
    if (rows * cols != data_.size())
      throw validation_error("tensor matrix view size mismatch");
    return Eigen::Map<MatrixRM<S>>(data_.data(), rows, cols);
  }
  Eigen::Map<const MatrixRM<S>> as_matrix(Eigen::Index rows, Eigen::Index cols) const {
    if (rows * cols != data_.size())
      throw validation_error("tensor matrix view size mismatch");
    return Eigen::Map<const MatrixRM<S>>(data_.data(), rows, cols);
  }

  Tensor reshaped(Shape shape) const {
    if (count(shape) != data_.size()) throw validation_error("reshape size mismatch");
    Tensor t = *this;
    t.shape_ = std::move(shape);
    return t;
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << ")";
    return os.str();
  }

  static Eigen::Index count(const Shape& shape) {
    Eigen::Index n = 1;
    for (Eigen::Index d : shape) n *= d;
    return shape.empty() ? 0 : n;
  }

 private:
  Shape shape_;
  Storage data_;
};

template <typename S>
S max_abs_diff(const Tensor<S>& a, const Tensor<S>& b) {
  if (!a.same_shape(b)) throw validation_error("max_abs_diff: shape mismatch");
  return (a.array() - b.array()).abs().maxCoeff();
}

}  // namespace blur2vid
