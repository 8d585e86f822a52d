#include "bdst/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, bool requires_grad)
    : shape_(std::move(shape)), values_(shape_size(shape_), Real{0}) {
  set_requires_grad(requires_grad);
}

Tensor::Tensor(Shape shape, std::vector<Real> values, bool requires_grad)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_size(shape_) != values_.size()) {
    throw DimensionError("tensor shape " + shape_str(shape_) + " does not match " +
                         std::to_string(values_.size()) + " values");
  }
  set_requires_grad(requires_grad);
}

void Tensor::set_requires_grad(bool on) {
  requires_grad_ = on;
  if (on) {
    grad_.assign(values_.size(), Real{0});
  } else {
    grad_.clear();
  }
}

void Tensor::zero_grad() { std::fill(grad_.begin(), grad_.end(), Real{0}); }

void Tensor::fill(Real v) { std::fill(values_.begin(), values_.end(), v); }

void Tensor::check_finite(const std::string& what) const {
  auto bad = [](Real x) { return !std::isfinite(x); };
  if (std::any_of(values_.begin(), values_.end(), bad)) {
    throw NumericError("non-finite value in " + what);
  }
  if (std::any_of(grad_.begin(), grad_.end(), bad)) {
    throw NumericError("non-finite gradient in " + what);
  }
}

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
