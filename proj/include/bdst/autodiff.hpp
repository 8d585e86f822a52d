#pragma once

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "bdst/rng.hpp"
#include "bdst/tensor.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
/// lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  /// Gradient of the last backward() target w.r.t. this value (empty if no
  /// gradient reached it).
  std::span<const Real> grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode computation record for one forward pass.
///
/// Parameters enter through param(); backward() accumulates into their
/// Tensor::grad() unless flushing is deferred, in which case
/// flush_param_grads() does it later. Deferred flushing lets independent tapes
/// run on different threads and merge at one point in a fixed order.
class Tape {
 public:
  using Backprop = std::function<void(Tape&, std::size_t self)>;

  /// With recording off no backward closures are kept (inference).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Tensor value);
  /// Binds a parameter. Binding the same tensor twice returns the same Var.
  Var param(const Tensor& p);

  void backward(Var loss, bool flush_params = true);
  void flush_param_grads();

  // Op-implementation interface.
  Var push(Tensor value, bool needs_grad, Backprop backprop);
  const Tensor& value(std::size_t id) const { return nodes_[id].external ? *nodes_[id].external : nodes_[id].value; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  /// Gradient buffer for node id, allocated zero-filled on first use.
  std::span<Real> grad_buffer(std::size_t id);
  std::span<const Real> grad(std::size_t id) const { return nodes_[id].grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    bool needs_grad = false;
    std::vector<Real> grad;
    Backprop backprop;
  };
  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::size_t> bound_;
};

namespace ad {

Var matmul(Var a, Var b);
/// a * b^T.
Var matmul_nt(Var a, Var b);
/// x[n x in] * w[out x in]^T + bias[out].
Var linear(Var x, Var w, Var bias);
Var add(Var a, Var b);
/// Elementwise product of equal shapes.
Var mul(Var a, Var b);
Var scale(Var a, Real s);
Var sum(Var a);
/// Weighted sum of scalar Vars.
Var weighted_sum(std::span<const Var> scalars, std::span<const Real> weights);
Var mean(std::span<const Var> scalars);

Var softmax(Var x, std::size_t axis);
/// Row softmax of a 2-D tensor where key_mask[j] == false columns get zero
/// weight (additive -inf). Empty mask means no masking.
Var masked_softmax_rows(Var x, std::span<const std::uint8_t> key_mask);
/// Normalizes over the last dimension, then applies gain and bias.
Var layer_norm(Var x, Var gain, Var bias, Real epsilon);
/// Exact erf form: x * Phi(x).
Var gelu(Var x);
Var dropout(Var x, Real rate, bool training, Rng& rng);
/// -log softmax(logits)[target] over the flattened logits.
Var cross_entropy(Var logits, std::size_t target);

/// Gathers rows of a 2-D table.
Var embedding(Var table, std::span<const std::size_t> ids);
Var rows(Var x, std::size_t begin, std::size_t count);
Var slice_cols(Var x, std::size_t begin, std::size_t count);
Var concat_cols(std::span<const Var> parts);
/// Same values under a new shape of equal size.
Var reshape(Var x, Shape shape);
/// Column j of a 2-D tensor as a 1-D tensor.
Var column(Var x, std::size_t j);

}  // namespace ad

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
