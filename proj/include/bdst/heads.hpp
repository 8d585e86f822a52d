#pragma once

#include <array>
#include <string_view>

#include "bdst/encoder.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

/// Turn-level value type of a slot.
enum class SlotClass : std::uint8_t { None = 0, Dontcare = 1, Span = 2 };
inline constexpr std::size_t kNumSlotClasses = 3;
std::string_view slot_class_name(SlotClass c);
SlotClass parse_slot_class(std::string_view s);

enum class SharingMode : std::uint8_t { SlotSpecific, Shared };
std::string_view sharing_mode_name(SharingMode m);
SharingMode parse_sharing_mode(std::string_view s);

enum class DecodeMode : std::uint8_t { Independent, Joint };
std::string_view decode_mode_name(DecodeMode m);
DecodeMode parse_decode_mode(std::string_view s);

/// Classification and span projections for one slot.
struct SlotHeadWeights {
  Tensor class_w;  // 3 x d
  Tensor class_b;  // 3
  Tensor span_w;   // 2 x d
  Tensor span_b;   // 2

  explicit SlotHeadWeights(std::size_t hidden_size = 0);
  /// Truncated normal (stddev 0.02) weights, zero biases.
  static SlotHeadWeights initialize(std::size_t hidden_size, Rng& rng);
  NamedParams named_parameters(const std::string& prefix);
};

struct SlotClassDistribution {
  double p_none = 0;
  double p_dontcare = 0;
  double p_span = 0;

  SlotClass argmax() const;
  std::array<double, 3> as_array() const { return {p_none, p_dontcare, p_span}; }
};

/// Logits [none, dontcare, span] for a 1 x d sentence representation.
Var class_logits(Var t0, const SlotHeadWeights& w);
SlotClassDistribution classify(Var t0, const SlotHeadWeights& w);

struct SpanLogits {
  Var start;  // length n
  Var end;    // length n
};

/// The same 2 x d projection applied at each of the n token rows.
SpanLogits span_logits(Var tokens, const SlotHeadWeights& w);

/// Picks (start, end) over valid positions. Logit index i maps to context
/// position i + 1. Returned positions are context positions, start <= end.
TokenSpan decode_span(std::span<const Real> start_logits, std::span<const Real> end_logits,
                      std::span<const std::uint8_t> valid_mask, DecodeMode mode);

/// 3d + 3 + 2d + 2.
std::size_t slot_head_parameter_count(std::size_t hidden_size);

/// Total scalars of a model with num_slots heads under the sharing mode.
std::size_t head_parameter_count(std::size_t num_slots, std::size_t hidden_size, SharingMode mode,
                                 const EncoderConfig& cfg);

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
