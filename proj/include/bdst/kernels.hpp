#pragma once

// Dense inner-loop kernels. Each kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::omp. The OpenMP versions
// split work over output rows only, so every output element is accumulated in
// the same order as the serial reference and results are bit-identical.

#include <cstddef>
#include <cstdint>

#include "bdst/common.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {
namespace kernels {

enum class Trans { No, Yes };

namespace serial {

/// C[m x n] (+)= op(A) * op(B), where op(A) is m x k and op(B) is k x n.
/// A is stored m x k (or k x m when transposed), B is k x n (or n x k).
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const Real* a,
          const Real* b, Real* c, bool accumulate);

/// Row-wise softmax of a rows x cols block. Masked columns (mask[j] == false)
/// get probability exactly 0. mask may be null.
void softmax_rows(std::size_t rows, std::size_t cols, const Real* x, const std::uint8_t* mask, Real* y);

}  // namespace serial

namespace omp {

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const Real* a,
          const Real* b, Real* c, bool accumulate);

void softmax_rows(std::size_t rows, std::size_t cols, const Real* x, const std::uint8_t* mask, Real* y);

}  // namespace omp

/// Work (m*n*k multiply-adds) below which the dispatchers stay serial.
inline constexpr std::size_t kParallelThreshold = 1u << 15;

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const Real* a,
          const Real* b, Real* c, bool accumulate);

void softmax_rows(std::size_t rows, std::size_t cols, const Real* x, const std::uint8_t* mask, Real* y);

}  // namespace kernels
}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
