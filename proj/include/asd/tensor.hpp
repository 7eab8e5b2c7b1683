/*
 * Copyright 2026 The asdfuse Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <asd/types.hpp>

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace asd {

/// Dense n-dimensional array with row-major storage. The shape is dynamic;
/// matrix views onto the flat buffer are taken with Eigen maps.
template <class Scalar_>
class TensorT {
 public:
  using Scalar = Scalar_;

  TensorT() = default;

  explicit TensorT(std::vector<Index> shape) : shape_(std::move(shape)) {
    data_.setZero(count(shape_));
  }

  TensorT(std::vector<Index> shape, Vec<Scalar> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != count(shape_)) {
      throw std::invalid_argument("tensor: data length " +
                                  std::to_string(data_.size()) +
                                  " does not match shape " + shape_string());
    }
  }

  static TensorT scalar(Scalar v) {
    TensorT t({1});
    t.data_[0] = v;
    return t;
  }

  static TensorT zeros(std::vector<Index> shape) { return TensorT(std::move(shape)); }

  static TensorT constant(std::vector<Index> shape, Scalar v) {
    TensorT t(std::move(shape));
    t.data_.setConstant(v);
    return t;
  }

  static TensorT from_values(std::vector<Index> shape, std::initializer_list<Scalar> vals) {
    TensorT t(std::move(shape));
    if (static_cast<Index>(vals.size()) != t.size()) {
      throw std::invalid_argument("tensor: initializer length mismatch");
    }
    Index i = 0;
    for (Scalar v : vals) t.data_[i++] = v;
    return t;
  }

  const std::vector<Index>& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index i) const { return shape_.at(static_cast<std::size_t>(i)); }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Vec<Scalar>& flat() { return data_; }
  const Vec<Scalar>& flat() const { return data_; }

  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  /// 2-D view (rows x cols must cover the whole buffer).
  MatMap<Scalar> mat(Index rows, Index cols) {
    check_view(rows * cols);
    return MatMap<Scalar>(data_.data(), rows, cols);
  }
  ConstMatMap<Scalar> mat(Index rows, Index cols) const {
    check_view(rows * cols);
    return ConstMatMap<Scalar>(data_.data(), rows, cols);
  }

  /// Matrix view of a rank-2 tensor.
  MatMap<Scalar> mat() { return mat(dim(0), dim(1)); }
  ConstMatMap<Scalar> mat() const { return mat(dim(0), dim(1)); }

  VecMap<Scalar> vec() { return VecMap<Scalar>(data_.data(), data_.size()); }
  ConstVecMap<Scalar> vec() const {
    return ConstVecMap<Scalar>(data_.data(), data_.size());
  }

  bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

  bool all_finite() const { return data_.allFinite(); }

  std::string shape_string() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) os << ",";
      os << shape_[i];
    }
    os << "]";
    return os.str();
  }

  static Index count(const std::vector<Index>& shape) {
    Index n = 1;
    for (Index d : shape) {
      if (d <= 0) throw std::invalid_argument("tensor: nonpositive dimension");
      n *= d;
    }
    return n;
  }

 private:
  void check_view(Index n) const {
    if (n != data_.size()) {
      throw std::invalid_argument("tensor: view size mismatch on " + shape_string());
    }
  }

  std::vector<Index> shape_;
  Vec<Scalar> data_;
};

using Tensor = TensorT<double>;

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                a.shape_string() + " vs " + b.shape_string());
  }
}

}  // namespace asd
