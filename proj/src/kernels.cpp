#include "bdst/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {
namespace kernels {

namespace {

// Computes rows [r0, r1) of C. Used by both the serial and parallel drivers.
void gemm_rows(Trans ta, Trans tb, std::size_t r0, std::size_t r1, std::size_t n, std::size_t k,
               std::size_t m, const Real* a, const Real* b, Real* c, bool accumulate) {
  for (std::size_t i = r0; i < r1; ++i) {
    Real* ci = c + i * n;
    if (!accumulate) std::fill(ci, ci + n, Real{0});
    if (ta == Trans::No && tb == Trans::No) {
      const Real* ai = a + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        const Real av = ai[p];
        const Real* bp = b + p * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    } else if (ta == Trans::No && tb == Trans::Yes) {
      const Real* ai = a + i * k;
      for (std::size_t j = 0; j < n; ++j) {
        const Real* bj = b + j * k;
        Real s = 0;
        for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
        ci[j] += s;
      }
    } else if (ta == Trans::Yes && tb == Trans::No) {
      for (std::size_t p = 0; p < k; ++p) {
        const Real av = a[p * m + i];
        const Real* bp = b + p * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        Real s = 0;
        for (std::size_t p = 0; p < k; ++p) s += a[p * m + i] * b[j * k + p];
        ci[j] += s;
      }
    }
  }
}

void softmax_row(std::size_t cols, const Real* x, const std::uint8_t* mask, Real* y) {
  Real mx = -std::numeric_limits<Real>::infinity();
  for (std::size_t j = 0; j < cols; ++j) {
    if (!mask || mask[j]) mx = std::max(mx, x[j]);
  }
  Real sum = 0;
  for (std::size_t j = 0; j < cols; ++j) {
    if (mask && !mask[j]) {
      y[j] = 0;
    } else {
      y[j] = std::exp(x[j] - mx);
      sum += y[j];
    }
  }
  // A fully masked row stays all-zero.
  if (sum > 0) {
    const Real inv = Real{1} / sum;
    for (std::size_t j = 0; j < cols; ++j) y[j] *= inv;
  }
}

}  // namespace

namespace serial {

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const Real* a,
          const Real* b, Real* c, bool accumulate) {
  gemm_rows(ta, tb, 0, m, n, k, m, a, b, c, accumulate);
}

void softmax_rows(std::size_t rows, std::size_t cols, const Real* x, const std::uint8_t* mask, Real* y) {
  for (std::size_t r = 0; r < rows; ++r) softmax_row(cols, x + r * cols, mask, y + r * cols);
}

}  // namespace serial

namespace omp {

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const Real* a,
          const Real* b, Real* c, bool accumulate) {
  const auto rows = static_cast<long long>(m);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    gemm_rows(ta, tb, r, r + 1, n, k, m, a, b, c, accumulate);
  }
}

void softmax_rows(std::size_t rows, std::size_t cols, const Real* x, const std::uint8_t* mask, Real* y) {
  const auto n = static_cast<long long>(rows);
#pragma omp parallel for schedule(static)
  for (long long r = 0; r < n; ++r) {
    const auto i = static_cast<std::size_t>(r);
    softmax_row(cols, x + i * cols, mask, y + i * cols);
  }
}

}  // namespace omp

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const Real* a,
          const Real* b, Real* c, bool accumulate) {
  if (m > 1 && m * n * k >= kParallelThreshold) {
    omp::gemm(ta, tb, m, n, k, a, b, c, accumulate);
  } else {
    serial::gemm(ta, tb, m, n, k, a, b, c, accumulate);
  }
}

void softmax_rows(std::size_t rows, std::size_t cols, const Real* x, const std::uint8_t* mask, Real* y) {
  if (rows > 1 && rows * cols >= kParallelThreshold) {
    omp::softmax_rows(rows, cols, x, mask, y);
  } else {
    serial::softmax_rows(rows, cols, x, mask, y);
  }
}

}  // namespace kernels
}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
