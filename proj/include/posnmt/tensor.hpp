#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "posnmt/errors.hpp"

namespace posnmt {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

inline Index shape_numel(const Shape& s) {
  Index n = 1;
  for (Index d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ')';
  return os.str();
}

// Dense row-major tensor over a flat Eigen array. Rank-0 (empty shape) is a
// scalar. Matrix algebra runs on Eigen maps of the last two dims; all leading
// dims are batch dims.
template <typename Scalar>
class Tensor {
 public:
  using Flat = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using MatrixRM =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatMap = Eigen::Map<MatrixRM>;
  using ConstMatMap = Eigen::Map<const MatrixRM>;

  Tensor() : shape_{0} {}
  explicit Tensor(Shape shape)
      : shape_(std::move(shape)), data_(Flat::Zero(shape_numel(shape_))) {}
  Tensor(Shape shape, Flat data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_numel(shape_))
      throw ShapeError("tensor: data size " + std::to_string(data_.size()) +
                       " does not match shape " + shape_str(shape_));
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor constant(Shape shape, Scalar v) {
    Tensor t(std::move(shape));
    t.data_.setConstant(v);
    return t;
  }
  static Tensor of(Shape shape, std::initializer_list<Scalar> v) {
    Tensor t(std::move(shape));
    if (static_cast<Index>(v.size()) != t.size())
      throw ShapeError("tensor: initializer size mismatch");
    Index i = 0;
    for (Scalar x : v) t.data_[i++] = x;
    return t;
  }
  static Tensor scalar(Scalar v) { return constant(Shape{}, v); }

  const Shape& shape() const { return shape_; }
  Index ndim() const { return static_cast<Index>(shape_.size()); }
  Index size() const { return data_.size(); }
  Index dim(Index i) const {
    if (i < 0) i += ndim();
    return shape_[static_cast<std::size_t>(i)];
  }

  Flat& flat() { return data_; }
  const Flat& flat() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  Scalar& at(std::initializer_list<Index> idx) {
    Index off = 0, k = 0;
    for (Index i : idx) off = off * shape_[static_cast<std::size_t>(k++)] + i;
    return data_[off];
  }
  Scalar at(std::initializer_list<Index> idx) const {
    Index off = 0, k = 0;
    for (Index i : idx) off = off * shape_[static_cast<std::size_t>(k++)] + i;
    return data_[off];
  }

  Index last_dim() const { return shape_.empty() ? 1 : shape_.back(); }
  // Rows of the 2-d view: product of all dims but the last.
  Index row_count() const {
    Index n = 1;
    for (std::size_t i = 0; i + 1 < shape_.size(); ++i) n *= shape_[i];
    return shape_.empty() ? 1 : n;
  }
  MatMap as2d() { return MatMap(data(), row_count(), last_dim()); }
  ConstMatMap as2d() const { return ConstMatMap(data(), row_count(), last_dim()); }

  Index mat_rows() const { return ndim() >= 2 ? dim(-2) : 1; }
  Index mat_cols() const { return last_dim(); }
  // Number of last-two-dim matrices stacked in the leading dims.
  Index batch_count() const {
    Index n = 1;
    for (std::size_t i = 0; i + 2 < shape_.size(); ++i) n *= shape_[i];
    return n;
  }
  MatMap mat(Index b) {
    return MatMap(data() + b * mat_rows() * mat_cols(), mat_rows(), mat_cols());
  }
  ConstMatMap mat(Index b) const {
    return ConstMatMap(data() + b * mat_rows() * mat_cols(), mat_rows(), mat_cols());
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    if constexpr (std::is_floating_point_v<Scalar>) {
      for (Index i = 0; i < data_.size(); ++i)
        if (!std::isfinite(data_[i])) return false;
    }
    return true;
  }

 private:
  Shape shape_;
  Flat data_;
};

// Integer id tensor (token / tag ids); separate from the scalar tensors so
// lookups stay typed.
struct IdTensor {
  Shape shape;
  std::vector<std::int32_t> ids;

  IdTensor() = default;
  IdTensor(Shape s, std::vector<std::int32_t> v) : shape(std::move(s)), ids(std::move(v)) {
    if (static_cast<Index>(ids.size()) != shape_numel(shape))
      throw ShapeError("id tensor: size does not match shape " + shape_str(shape));
  }

  Index size() const { return static_cast<Index>(ids.size()); }
  std::int32_t operator[](Index i) const { return ids[static_cast<std::size_t>(i)]; }
  Index dim(Index i) const {
    if (i < 0) i += static_cast<Index>(shape.size());
    return shape[static_cast<std::size_t>(i)];
  }
};

// Attention/fill mask; nonzero entries are blocked positions.
using Mask = Tensor<std::uint8_t>;

enum class Mode { train, eval };

}  // namespace posnmt
