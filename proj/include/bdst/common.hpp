#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

// The 32- and 64-bit builds live in different inline namespaces so both
// libraries can be linked into one program.
#ifdef BDST_DOUBLE
#define BDST_ABI_NAMESPACE f64
#else
#define BDST_ABI_NAMESPACE f32
#endif

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

#ifdef BDST_DOUBLE
using Real = double;
#else
using Real = float;
#endif

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes do not agree with what an operation needs.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside its documented domain (rates, indices, configs).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf appeared in a forward pass.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
