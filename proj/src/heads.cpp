#include "bdst/heads.hpp"

#include <cmath>
#include <limits>

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

std::string_view slot_class_name(SlotClass c) {
  switch (c) {
    case SlotClass::None:
      return "none";
    case SlotClass::Dontcare:
      return "dontcare";
    case SlotClass::Span:
      return "span";
  }
  return "none";
}

SlotClass parse_slot_class(std::string_view s) {
  if (s == "none") return SlotClass::None;
  if (s == "dontcare") return SlotClass::Dontcare;
  if (s == "span" || s == "value") return SlotClass::Span;
  throw ArgumentError("unknown slot class '" + std::string(s) + "'");
}

std::string_view sharing_mode_name(SharingMode m) {
  return m == SharingMode::Shared ? "ps" : "ss";
}

SharingMode parse_sharing_mode(std::string_view s) {
  if (s == "ps" || s == "shared") return SharingMode::Shared;
  if (s == "ss" || s == "slot-specific") return SharingMode::SlotSpecific;
  throw ArgumentError("unknown sharing mode '" + std::string(s) + "' (expected ss or ps)");
}

std::string_view decode_mode_name(DecodeMode m) {
  return m == DecodeMode::Joint ? "joint" : "independent";
}

DecodeMode parse_decode_mode(std::string_view s) {
  if (s == "independent") return DecodeMode::Independent;
  if (s == "joint") return DecodeMode::Joint;
  throw ArgumentError("unknown decode mode '" + std::string(s) + "'");
}

SlotHeadWeights::SlotHeadWeights(std::size_t hidden_size)
    : class_w({kNumSlotClasses, hidden_size}, true),
      class_b({kNumSlotClasses}, true),
      span_w({2, hidden_size}, true),
      span_b({2}, true) {}

SlotHeadWeights SlotHeadWeights::initialize(std::size_t hidden_size, Rng& rng) {
  SlotHeadWeights w(hidden_size);
  for (auto* t : {&w.class_w, &w.span_w}) {
    for (auto& v : t->values()) v = static_cast<Real>(rng.truncated_normal(0.02));
  }
  return w;
}

NamedParams SlotHeadWeights::named_parameters(const std::string& prefix) {
  return {{prefix + "class.weight", &class_w},
          {prefix + "class.bias", &class_b},
          {prefix + "span.weight", &span_w},
          {prefix + "span.bias", &span_b}};
}

SlotClass SlotClassDistribution::argmax() const {
  SlotClass best = SlotClass::None;
  double p = p_none;
  if (p_dontcare > p) {
    best = SlotClass::Dontcare;
    p = p_dontcare;
  }
  if (p_span > p) best = SlotClass::Span;
  return best;
}

Var class_logits(Var t0, const SlotHeadWeights& w) {
  Tape& t = t0.tape();
  if (t0.size() != w.class_w.dim(1)) {
    throw DimensionError("classify: representation " + shape_str(t0.shape()) +
                         " does not match head width " + std::to_string(w.class_w.dim(1)));
  }
  Var row = t0.shape().size() == 2 ? t0 : ad::reshape(t0, {1, t0.size()});
  return ad::linear(row, t.param(w.class_w), t.param(w.class_b));
}

SlotClassDistribution classify(Var t0, const SlotHeadWeights& w) {
  auto probs = ad::softmax(class_logits(t0, w), 1).value();
  return {probs[0], probs[1], probs[2]};
}

SpanLogits span_logits(Var tokens, const SlotHeadWeights& w) {
  Tape& t = tokens.tape();
  if (tokens.shape().size() != 2 || tokens.shape()[1] != w.span_w.dim(1)) {
    throw DimensionError("span_logits: tokens " + shape_str(tokens.shape()) +
                         " do not match head width " + std::to_string(w.span_w.dim(1)));
  }
  auto both = ad::linear(tokens, t.param(w.span_w), t.param(w.span_b));
  return {ad::column(both, 0), ad::column(both, 1)};
}

TokenSpan decode_span(std::span<const Real> start_logits, std::span<const Real> end_logits,
                      std::span<const std::uint8_t> valid_mask, DecodeMode mode) {
  const std::size_t n = start_logits.size();
  if (end_logits.size() != n || valid_mask.size() != n) {
    throw DimensionError("decode_span: start/end/mask lengths differ");
  }
  auto log_softmax = [&](std::span<const Real> x) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (valid_mask[i]) mx = std::max(mx, static_cast<double>(x[i]));
    }
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (valid_mask[i]) s += std::exp(x[i] - mx);
    }
    std::vector<double> out(n, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
      if (valid_mask[i]) out[i] = x[i] - mx - std::log(s);
    }
    return out;
  };
  bool any = false;
  for (auto m : valid_mask) any = any || m;
  if (!any) throw ArgumentError("decode_span: no valid positions");

  const auto ls = log_softmax(start_logits);
  const auto le = log_softmax(end_logits);
  std::size_t best_s = 0, best_e = 0;
  if (mode == DecodeMode::Independent) {
    double bs = -std::numeric_limits<double>::infinity(), be = bs;
    for (std::size_t i = 0; i < n; ++i) {
      if (!valid_mask[i]) continue;
      if (ls[i] > bs) {
        bs = ls[i];
        best_s = i;
      }
      if (le[i] > be) {
        be = le[i];
        best_e = i;
      }
    }
    if (best_e < best_s) best_e = best_s;
  } else {
    // Best start seen so far, scanned left to right, paired with each end.
    double best = -std::numeric_limits<double>::infinity();
    double prefix = -std::numeric_limits<double>::infinity();
    std::size_t prefix_at = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!valid_mask[j]) continue;
      if (ls[j] > prefix) {
        prefix = ls[j];
        prefix_at = j;
      }
      const double score = prefix + le[j];
      if (score > best) {
        best = score;
        best_s = prefix_at;
        best_e = j;
      }
    }
  }
  return {best_s + 1, best_e + 1};
}

std::size_t slot_head_parameter_count(std::size_t hidden_size) {
  return kNumSlotClasses * hidden_size + kNumSlotClasses + 2 * hidden_size + 2;
}

std::size_t head_parameter_count(std::size_t num_slots, std::size_t hidden_size, SharingMode mode,
                                 const EncoderConfig& cfg) {
  if (num_slots == 0) throw ArgumentError("head_parameter_count: need at least one slot");
  const std::size_t enc = parameter_count(cfg);
  const std::size_t head = slot_head_parameter_count(hidden_size);
  return mode == SharingMode::Shared ? enc + num_slots * head : num_slots * (enc + head);
}

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
