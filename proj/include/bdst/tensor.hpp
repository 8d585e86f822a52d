#pragma once

#include <span>
#include <string>
#include <vector>

#include "bdst/common.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array with an optional gradient buffer.
///
/// Model parameters are Tensors with requires_grad set; the tape reads their
/// values and accumulates into grad() during backward.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<Real> values, bool requires_grad = false);

  static Tensor scalar(Real v) { return Tensor(Shape{1}, std::vector<Real>{v}); }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const { return shape_.size(); }

  std::span<Real> values() { return values_; }
  std::span<const Real> values() const { return values_; }
  Real& operator[](std::size_t i) { return values_[i]; }
  Real operator[](std::size_t i) const { return values_[i]; }
  /// 2-D element access.
  Real& at(std::size_t r, std::size_t c) { return values_[r * shape_.at(1) + c]; }
  Real at(std::size_t r, std::size_t c) const { return values_[r * shape_.at(1) + c]; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on);
  bool has_grad() const { return !grad_.empty(); }
  std::span<Real> grad() { return grad_; }
  std::span<const Real> grad() const { return grad_; }
  /// Gradient accumulation target. The grad buffer is accumulator state, so
  /// it is writable through a const tensor (the tape binds parameters const).
  std::span<Real> grad_accumulator() const { return grad_; }
  void zero_grad();

  void fill(Real v);

  /// Throws NumericError naming `what` if any value or grad is non-finite.
  void check_finite(const std::string& what) const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  Shape shape_;
  std::vector<Real> values_;
  bool requires_grad_ = false;
  mutable std::vector<Real> grad_;
};

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
