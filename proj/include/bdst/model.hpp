#pragma once

#include <string>
#include <vector>

#include "bdst/heads.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

/// Everything needed to run the tracker: encoder(s), per-slot heads,
/// vocabulary and tokenizer options.
struct ModelBundle {
  static constexpr std::uint32_t kFormatVersion = 1;

  EncoderConfig encoder_config;
  SharingMode sharing = SharingMode::Shared;
  DecodeMode decode = DecodeMode::Independent;
  ContextOptions context;
  std::vector<std::string> slots;
  Vocab vocab;
  /// One encoder under Shared, one per slot under SlotSpecific.
  std::vector<EncoderWeights> encoders;
  std::vector<SlotHeadWeights> heads;

  /// Randomly initialized model. encoder_config.vocab_size is set from vocab.
  static ModelBundle create(EncoderConfig cfg, SharingMode sharing, std::vector<std::string> slots,
                            Vocab vocab, ContextOptions context, DecodeMode decode, Rng& rng);

  std::size_t slot_index(const std::string& slot) const;
  const EncoderWeights& encoder_for(std::size_t slot) const {
    return sharing == SharingMode::Shared ? encoders.front() : encoders.at(slot);
  }

  /// Encoders first, then heads in slot order.
  NamedParams named_parameters();
  std::vector<Tensor*> parameters();
  std::size_t parameter_count() const;
  void zero_grad();

  /// Throws ArgumentError if the pieces are inconsistent.
  void validate() const;
};

struct SlotOutputs {
  Var class_logits;  // 1 x 3
  SpanLogits span;   // over positions 1..n
};

struct TurnOutputs {
  std::vector<SlotOutputs> slots;
  /// Encoder forward passes run for this turn (1 under parameter sharing).
  std::size_t encoder_calls = 0;
};

/// Encodes the context and applies every slot's heads. In training mode the
/// encoder's internal dropout and output_dropout on t_0..t_n are active.
TurnOutputs forward_turn(Tape& tape, const ModelBundle& model, const EncodedContext& ctx,
                         bool training, double output_dropout, Rng& rng);

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
