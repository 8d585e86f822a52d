#include "bdst/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bdst/kernels.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

const Tensor& Var::value() const { return tape_->value(id_); }

std::span<const Real> Var::grad() const { return tape_->grad(id_); }

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::param(const Tensor& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return Var(this, it->second);
  Node node;
  node.external = &p;
  node.needs_grad = record_ && p.requires_grad();
  nodes_.push_back(std::move(node));
  bound_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::push(Tensor value, bool needs_grad, Backprop backprop) {
#ifndef NDEBUG
  value.check_finite("tape node " + std::to_string(nodes_.size()));
#endif
  Node node;
  node.value = std::move(value);
  node.needs_grad = record_ && needs_grad;
  if (node.needs_grad) node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

std::span<Real> Tape::grad_buffer(std::size_t id) {
  auto& node = nodes_[id];
  if (node.grad.empty()) node.grad.assign(value(id).size(), Real{0});
  return node.grad;
}

void Tape::backward(Var loss, bool flush_params) {
  if (&loss.tape() != this) throw ArgumentError("backward: loss belongs to another tape");
  if (loss.size() != 1) {
    throw DimensionError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
  }
  if (!record_) throw ArgumentError("backward: tape was created without recording");
  for (auto& node : nodes_) node.grad.clear();
  grad_buffer(loss.id())[0] = Real{1};
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (node.grad.empty() || !node.backprop) continue;
    node.backprop(*this, i);
  }
  if (flush_params) flush_param_grads();
}

void Tape::flush_param_grads() {
  for (auto& node : nodes_) {
    if (!node.external || !node.needs_grad || node.grad.empty()) continue;
    auto dst = node.external->grad_accumulator();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += node.grad[j];
    node.grad.clear();
  }
}

namespace ad {

namespace {

using kernels::Trans;

void require_same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape()) throw ArgumentError(std::string(op) + ": operands on different tapes");
}

void require_rank2(Var a, const char* op) {
  if (a.shape().size() != 2) {
    throw DimensionError(std::string(op) + ": expected 2-D tensor, got " + shape_str(a.shape()));
  }
}

bool any_grad(Tape& t, std::initializer_list<Var> vs) {
  return std::any_of(vs.begin(), vs.end(), [&](Var v) { return t.needs_grad(v.id()); });
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner dimensions differ: " + shape_str(a.shape()) + " * " +
                         shape_str(b.shape()));
  }
  Tape& t = a.tape();
  Tensor out({m, n});
  kernels::gemm(Trans::No, Trans::No, m, n, k, a.value().values().data(), b.value().values().data(),
                out.values().data(), false);
  const auto ia = a.id(), ib = b.id();
  return t.push(std::move(out), any_grad(t, {a, b}), [=](Tape& tp, std::size_t self) {
    const Real* g = tp.grad(self).data();
    if (tp.needs_grad(ia)) {
      kernels::gemm(Trans::No, Trans::Yes, m, k, n, g, tp.value(ib).values().data(),
                    tp.grad_buffer(ia).data(), true);
    }
    if (tp.needs_grad(ib)) {
      kernels::gemm(Trans::Yes, Trans::No, k, n, m, tp.value(ia).values().data(), g,
                    tp.grad_buffer(ib).data(), true);
    }
  });
}

Var matmul_nt(Var a, Var b) {
  require_same_tape(a, b, "matmul_nt");
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[0];
  if (b.shape()[1] != k) {
    throw DimensionError("matmul_nt: inner dimensions differ: " + shape_str(a.shape()) + " * " +
                         shape_str(b.shape()) + "^T");
  }
  Tape& t = a.tape();
  Tensor out({m, n});
  kernels::gemm(Trans::No, Trans::Yes, m, n, k, a.value().values().data(),
                b.value().values().data(), out.values().data(), false);
  const auto ia = a.id(), ib = b.id();
  return t.push(std::move(out), any_grad(t, {a, b}), [=](Tape& tp, std::size_t self) {
    const Real* g = tp.grad(self).data();
    if (tp.needs_grad(ia)) {
      kernels::gemm(Trans::No, Trans::No, m, k, n, g, tp.value(ib).values().data(),
                    tp.grad_buffer(ia).data(), true);
    }
    if (tp.needs_grad(ib)) {
      kernels::gemm(Trans::Yes, Trans::No, n, k, m, g, tp.value(ia).values().data(),
                    tp.grad_buffer(ib).data(), true);
    }
  });
}

Var linear(Var x, Var w, Var bias) {
  require_same_tape(x, w, "linear");
  require_same_tape(x, bias, "linear");
  require_rank2(x, "linear");
  require_rank2(w, "linear");
  const std::size_t n = x.shape()[0], in = x.shape()[1], out_dim = w.shape()[0];
  if (w.shape()[1] != in || bias.size() != out_dim) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + " incompatible with weight " +
                         shape_str(w.shape()) + " and bias " + shape_str(bias.shape()));
  }
  Tape& t = x.tape();
  Tensor out({n, out_dim});
  auto ov = out.values();
  const auto bv = bias.value().values();
  for (std::size_t i = 0; i < n; ++i) std::copy(bv.begin(), bv.end(), ov.begin() + i * out_dim);
  kernels::gemm(Trans::No, Trans::Yes, n, out_dim, in, x.value().values().data(),
                w.value().values().data(), ov.data(), true);
  const auto ix = x.id(), iw = w.id(), ib = bias.id();
  return t.push(std::move(out), any_grad(t, {x, w, bias}), [=](Tape& tp, std::size_t self) {
    const Real* g = tp.grad(self).data();
    if (tp.needs_grad(ix)) {
      kernels::gemm(Trans::No, Trans::No, n, in, out_dim, g, tp.value(iw).values().data(),
                    tp.grad_buffer(ix).data(), true);
    }
    if (tp.needs_grad(iw)) {
      kernels::gemm(Trans::Yes, Trans::No, out_dim, in, n, g, tp.value(ix).values().data(),
                    tp.grad_buffer(iw).data(), true);
    }
    if (tp.needs_grad(ib)) {
      auto gb = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < out_dim; ++j) gb[j] += g[i * out_dim + j];
      }
    }
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b, "add");
  if (a.shape() != b.shape()) {
    throw DimensionError("add: shapes differ: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  Tape& t = a.tape();
  Tensor out = a.value();
  out.set_requires_grad(false);
  auto ov = out.values();
  const auto bv = b.value().values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] += bv[i];
  const auto ia = a.id(), ib = b.id();
  return t.push(std::move(out), any_grad(t, {a, b}), [=](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    for (auto id : {ia, ib}) {
      if (!tp.needs_grad(id)) continue;
      auto d = tp.grad_buffer(id);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b, "mul");
  if (a.shape() != b.shape()) {
    throw DimensionError("mul: shapes differ: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  Tape& t = a.tape();
  Tensor out(a.shape());
  const auto av = a.value().values(), bv = b.value().values();
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  const auto ia = a.id(), ib = b.id();
  return t.push(std::move(out), any_grad(t, {a, b}), [=](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    const auto va = tp.value(ia).values(), vb = tp.value(ib).values();
    if (tp.needs_grad(ia)) {
      auto d = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * vb[i];
    }
    if (tp.needs_grad(ib)) {
      auto d = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * va[i];
    }
  });
}

Var scale(Var a, Real s) {
  Tape& t = a.tape();
  Tensor out(a.shape());
  const auto av = a.value().values();
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * s;
  const auto ia = a.id();
  return t.push(std::move(out), t.needs_grad(ia), [=](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    auto d = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * s;
  });
}

Var sum(Var a) {
  Tape& t = a.tape();
  Real s = 0;
  for (auto v : a.value().values()) s += v;
  const auto ia = a.id();
  return t.push(Tensor::scalar(s), t.needs_grad(ia), [=](Tape& tp, std::size_t self) {
    const Real g = tp.grad(self)[0];
    for (auto& d : tp.grad_buffer(ia)) d += g;
  });
}

Var weighted_sum(std::span<const Var> scalars, std::span<const Real> weights) {
  if (scalars.empty()) throw ArgumentError("weighted_sum: no terms");
  if (scalars.size() != weights.size()) {
    throw DimensionError("weighted_sum: " + std::to_string(scalars.size()) + " terms but " +
                         std::to_string(weights.size()) + " weights");
  }
  Tape& t = scalars[0].tape();
  Real s = 0;
  bool needs = false;
  std::vector<std::size_t> ids;
  ids.reserve(scalars.size());
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    if (scalars[i].size() != 1) {
      throw DimensionError("weighted_sum: term " + std::to_string(i) + " is not scalar");
    }
    s += weights[i] * scalars[i].value()[0];
    needs = needs || t.needs_grad(scalars[i].id());
    ids.push_back(scalars[i].id());
  }
  std::vector<Real> w(weights.begin(), weights.end());
  return t.push(Tensor::scalar(s), needs,
                [ids = std::move(ids), w = std::move(w)](Tape& tp, std::size_t self) {
                  const Real g = tp.grad(self)[0];
                  for (std::size_t i = 0; i < ids.size(); ++i) {
                    if (tp.needs_grad(ids[i])) tp.grad_buffer(ids[i])[0] += g * w[i];
                  }
                });
}

Var mean(std::span<const Var> scalars) {
  std::vector<Real> w(scalars.size(), Real{1} / static_cast<Real>(scalars.size()));
  return weighted_sum(scalars, w);
}

Var softmax(Var x, std::size_t axis) {
  const auto& shape = x.shape();
  if (axis >= shape.size()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for shape " +
                         shape_str(shape));
  }
  const std::size_t len = shape[axis];
  if (len == 0) throw DimensionError("softmax: empty axis");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];

  Tape& t = x.tape();
  Tensor out(shape);
  const auto xv = x.value().values();
  if (inner == 1) {
    kernels::softmax_rows(outer, len, xv.data(), nullptr, out.values().data());
  } else {
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * len * inner + in;
        Real mx = -std::numeric_limits<Real>::infinity();
        for (std::size_t j = 0; j < len; ++j) mx = std::max(mx, xv[base + j * inner]);
        Real s = 0;
        for (std::size_t j = 0; j < len; ++j) {
          out[base + j * inner] = std::exp(xv[base + j * inner] - mx);
          s += out[base + j * inner];
        }
        for (std::size_t j = 0; j < len; ++j) out[base + j * inner] /= s;
      }
    }
  }
  const auto ix = x.id();
  return t.push(std::move(out), t.needs_grad(ix), [=](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    const auto y = tp.value(self).values();
    auto d = tp.grad_buffer(ix);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * len * inner + in;
        Real dot = 0;
        for (std::size_t j = 0; j < len; ++j) dot += g[base + j * inner] * y[base + j * inner];
        for (std::size_t j = 0; j < len; ++j) {
          const auto k = base + j * inner;
          d[k] += y[k] * (g[k] - dot);
        }
      }
    }
  });
}

Var masked_softmax_rows(Var x, std::span<const std::uint8_t> key_mask) {
  require_rank2(x, "masked_softmax_rows");
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (cols == 0) throw DimensionError("masked_softmax_rows: empty axis");
  if (!key_mask.empty() && key_mask.size() != cols) {
    throw DimensionError("masked_softmax_rows: mask length " + std::to_string(key_mask.size()) +
                         " vs " + std::to_string(cols) + " columns");
  }
  Tape& t = x.tape();
  Tensor out(x.shape());
  kernels::softmax_rows(rows, cols, x.value().values().data(),
                        key_mask.empty() ? nullptr : key_mask.data(), out.values().data());
  const auto ix = x.id();
  return t.push(std::move(out), t.needs_grad(ix), [=](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    const auto y = tp.value(self).values();
    auto d = tp.grad_buffer(ix);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * cols;
      Real dot = 0;
      for (std::size_t j = 0; j < cols; ++j) dot += g[base + j] * y[base + j];
      for (std::size_t j = 0; j < cols; ++j) d[base + j] += y[base + j] * (g[base + j] - dot);
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, Real epsilon) {
  const auto& shape = x.shape();
  if (shape.empty() || shape.back() == 0) throw DimensionError("layer_norm: zero-length row");
  const std::size_t cols = shape.back();
  const std::size_t rows = x.size() / cols;
  if (gain.size() != cols || bias.size() != cols) {
    throw DimensionError("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" +
                         shape_str(bias.shape()) + " do not match row length " +
                         std::to_string(cols));
  }
  Tape& t = x.tape();
  Tensor out(shape);
  // Normalized values and inverse std are kept for the backward pass.
  std::vector<Real> xhat(x.size());
  std::vector<Real> inv_std(rows);
  const auto xv = x.value().values();
  const auto gv = gain.value().values(), bv = bias.value().values();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = xv.data() + r * cols;
    Real mu = 0;
    for (std::size_t j = 0; j < cols; ++j) mu += row[j];
    mu /= static_cast<Real>(cols);
    Real var = 0;
    for (std::size_t j = 0; j < cols; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<Real>(cols);
    const Real inv = Real{1} / std::sqrt(var + epsilon);
    inv_std[r] = inv;
    for (std::size_t j = 0; j < cols; ++j) {
      const Real h = (row[j] - mu) * inv;
      xhat[r * cols + j] = h;
      out[r * cols + j] = gv[j] * h + bv[j];
    }
  }
  const auto ix = x.id(), ig = gain.id(), ib = bias.id();
  return t.push(std::move(out), any_grad(t, {x, gain, bias}),
                [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& tp,
                                                                         std::size_t self) {
                  const auto g = tp.grad(self);
                  const auto gv2 = tp.value(ig).values();
                  const Real n = static_cast<Real>(cols);
                  if (tp.needs_grad(ix)) {
                    auto d = tp.grad_buffer(ix);
                    for (std::size_t r = 0; r < rows; ++r) {
                      Real s1 = 0, s2 = 0;
                      for (std::size_t j = 0; j < cols; ++j) {
                        const Real dh = g[r * cols + j] * gv2[j];
                        s1 += dh;
                        s2 += dh * xhat[r * cols + j];
                      }
                      for (std::size_t j = 0; j < cols; ++j) {
                        const Real dh = g[r * cols + j] * gv2[j];
                        d[r * cols + j] +=
                            inv_std[r] / n * (n * dh - s1 - xhat[r * cols + j] * s2);
                      }
                    }
                  }
                  if (tp.needs_grad(ig)) {
                    auto d = tp.grad_buffer(ig);
                    for (std::size_t i = 0; i < g.size(); ++i) d[i % cols] += g[i] * xhat[i];
                  }
                  if (tp.needs_grad(ib)) {
                    auto d = tp.grad_buffer(ib);
                    for (std::size_t i = 0; i < g.size(); ++i) d[i % cols] += g[i];
                  }
                });
}

Var gelu(Var x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  Tape& t = x.tape();
  Tensor out(x.shape());
  const auto xv = x.value().values();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double v = xv[i];
    out[i] = static_cast<Real>(0.5 * v * (1.0 + std::erf(v * kInvSqrt2)));
  }
  const auto ix = x.id();
  return t.push(std::move(out), t.needs_grad(ix), [=](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    const auto v = tp.value(ix).values();
    auto d = tp.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double xi = v[i];
      const double cdf = 0.5 * (1.0 + std::erf(xi * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * xi * xi);
      d[i] += g[i] * static_cast<Real>(cdf + xi * pdf);
    }
  });
}

Var dropout(Var x, Real rate, bool training, Rng& rng) {
  if (!(rate >= 0 && rate < 1)) {
    throw ArgumentError("dropout: rate " + std::to_string(rate) + " outside [0, 1)");
  }
  if (!training || rate == 0) return x;
  Tape& t = x.tape();
  const Real keep_scale = Real{1} / (Real{1} - rate);
  std::vector<Real> mask(x.size());
  for (auto& m : mask) m = rng.uniform() < static_cast<double>(rate) ? Real{0} : keep_scale;
  Tensor out(x.shape());
  const auto xv = x.value().values();
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * mask[i];
  const auto ix = x.id();
  return t.push(std::move(out), t.needs_grad(ix),
                [=, mask = std::move(mask)](Tape& tp, std::size_t self) {
                  const auto g = tp.grad(self);
                  auto d = tp.grad_buffer(ix);
                  for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * mask[i];
                });
}

Var cross_entropy(Var logits, std::size_t target) {
  const std::size_t k = logits.size();
  if (target >= k) {
    throw ArgumentError("cross_entropy: target " + std::to_string(target) + " out of range for " +
                        std::to_string(k) + " logits");
  }
  Tape& t = logits.tape();
  const auto lv = logits.value().values();
  Real mx = *std::max_element(lv.begin(), lv.end());
  Real s = 0;
  for (auto v : lv) s += std::exp(v - mx);
  const Real lse = mx + std::log(s);
  const auto il = logits.id();
  return t.push(Tensor::scalar(lse - lv[target]), t.needs_grad(il),
                [=](Tape& tp, std::size_t self) {
                  const Real g = tp.grad(self)[0];
                  const auto v = tp.value(il).values();
                  auto d = tp.grad_buffer(il);
                  for (std::size_t i = 0; i < k; ++i) {
                    const Real p = std::exp(v[i] - lse);
                    d[i] += g * (p - (i == target ? Real{1} : Real{0}));
                  }
                });
}

Var embedding(Var table, std::span<const std::size_t> ids) {
  require_rank2(table, "embedding");
  const std::size_t vocab = table.shape()[0], d = table.shape()[1];
  for (auto id : ids) {
    if (id >= vocab) {
      throw ArgumentError("embedding: id " + std::to_string(id) + " >= table size " +
                          std::to_string(vocab));
    }
  }
  Tape& t = table.tape();
  Tensor out({ids.size(), d});
  const auto tv = table.value().values();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::copy_n(tv.begin() + ids[i] * d, d, out.values().begin() + i * d);
  }
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  const auto it = table.id();
  return t.push(std::move(out), t.needs_grad(it),
                [=, idv = std::move(idv)](Tape& tp, std::size_t self) {
                  const auto g = tp.grad(self);
                  auto dst = tp.grad_buffer(it);
                  for (std::size_t i = 0; i < idv.size(); ++i) {
                    for (std::size_t j = 0; j < d; ++j) dst[idv[i] * d + j] += g[i * d + j];
                  }
                });
}

Var rows(Var x, std::size_t begin, std::size_t count) {
  require_rank2(x, "rows");
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  if (begin + count > n) {
    throw DimensionError("rows: range [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") exceeds " + std::to_string(n));
  }
  Tape& t = x.tape();
  Tensor out({count, d});
  const auto xv = x.value().values();
  std::copy_n(xv.begin() + begin * d, count * d, out.values().begin());
  const auto ix = x.id();
  return t.push(std::move(out), t.needs_grad(ix), [=](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    auto dst = tp.grad_buffer(ix);
    for (std::size_t i = 0; i < count * d; ++i) dst[begin * d + i] += g[i];
  });
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  require_rank2(x, "slice_cols");
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  if (begin + count > d) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") exceeds " + std::to_string(d));
  }
  Tape& t = x.tape();
  Tensor out({n, count});
  const auto xv = x.value().values();
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(xv.begin() + i * d + begin, count, out.values().begin() + i * count);
  }
  const auto ix = x.id();
  return t.push(std::move(out), t.needs_grad(ix), [=](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    auto dst = tp.grad_buffer(ix);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < count; ++j) dst[i * d + begin + j] += g[i * count + j];
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ArgumentError("concat_cols: no parts");
  Tape& t = parts[0].tape();
  const std::size_t n = parts[0].shape().at(0);
  std::size_t total = 0;
  bool needs = false;
  std::vector<std::size_t> ids, widths;
  for (auto p : parts) {
    require_rank2(p, "concat_cols");
    if (p.shape()[0] != n) throw DimensionError("concat_cols: row counts differ");
    ids.push_back(p.id());
    widths.push_back(p.shape()[1]);
    total += p.shape()[1];
    needs = needs || t.needs_grad(p.id());
  }
  Tensor out({n, total});
  std::size_t off = 0;
  for (auto p : parts) {
    const auto pv = p.value().values();
    const std::size_t w = p.shape()[1];
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(pv.begin() + i * w, w, out.values().begin() + i * total + off);
    }
    off += w;
  }
  return t.push(std::move(out), needs,
                [=, ids = std::move(ids), widths = std::move(widths)](Tape& tp, std::size_t self) {
                  const auto g = tp.grad(self);
                  std::size_t o = 0;
                  for (std::size_t p = 0; p < ids.size(); ++p) {
                    const std::size_t w = widths[p];
                    if (tp.needs_grad(ids[p])) {
                      auto dst = tp.grad_buffer(ids[p]);
                      for (std::size_t i = 0; i < n; ++i) {
                        for (std::size_t j = 0; j < w; ++j) dst[i * w + j] += g[i * total + o + j];
                      }
                    }
                    o += w;
                  }
                });
}

Var reshape(Var x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw DimensionError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape));
  }
  Tape& t = x.tape();
  const auto xv = x.value().values();
  Tensor out(std::move(shape), std::vector<Real>(xv.begin(), xv.end()));
  const auto ix = x.id();
  return t.push(std::move(out), t.needs_grad(ix), [=](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    auto dst = tp.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  });
}

Var column(Var x, std::size_t j) {
  require_rank2(x, "column");
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  if (j >= d) throw DimensionError("column: index " + std::to_string(j) + " >= " + std::to_string(d));
  Tape& t = x.tape();
  Tensor out({n});
  const auto xv = x.value().values();
  for (std::size_t i = 0; i < n; ++i) out[i] = xv[i * d + j];
  const auto ix = x.id();
  return t.push(std::move(out), t.needs_grad(ix), [=](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    auto dst = tp.grad_buffer(ix);
    for (std::size_t i = 0; i < n; ++i) dst[i * d + j] += g[i];
  });
}

}  // namespace ad

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
