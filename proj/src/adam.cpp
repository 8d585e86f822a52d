#include "bdst/adam.hpp"

#include <cmath>

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

AdamState::AdamState(AdamHyper h, std::span<Tensor* const> params) : hyper(h) {
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const Tensor* p : params) {
    first_moment.emplace_back(p->size(), 0.0);
    second_moment.emplace_back(p->size(), 0.0);
  }
}

void adam_step(std::span<Tensor* const> params, AdamState& state) {
  if (params.size() != state.first_moment.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) +
                         " parameters but state tracks " +
                         std::to_string(state.first_moment.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& p = *params[i];
    if (p.size() != state.first_moment[i].size() || p.grad().size() != p.size()) {
      throw DimensionError("adam_step: parameter " + std::to_string(i) + " shape " +
                           shape_str(p.shape()) + " does not match its moments or gradient");
    }
  }
  const auto& h = state.hyper;
  const auto t = static_cast<double>(++state.step_count);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i]->values();
    const auto grad = params[i]->grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grad[j];
      m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g;
      v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g * g;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      values[j] = static_cast<Real>(values[j] - h.learning_rate * mhat / (std::sqrt(vhat) + h.epsilon));
    }
  }
}

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
