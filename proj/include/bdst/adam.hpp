#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bdst/tensor.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates for an ordered list of parameters.
struct AdamState {
  AdamHyper hyper;
  std::uint64_t step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  AdamState() = default;
  AdamState(AdamHyper h, std::span<Tensor* const> params);
};

/// One bias-corrected Adam update using each parameter's accumulated grad.
/// Throws DimensionError if the parameter list does not match the state.
void adam_step(std::span<Tensor* const> params, AdamState& state);

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
