#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bdst/autodiff.hpp"
#include "bdst/tokenizer.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

struct EncoderConfig {
  std::size_t num_layers = 2;
  std::size_t hidden_size = 32;
  std::size_t num_heads = 2;
  std::size_t feed_forward_size = 64;
  std::size_t max_positions = 64;
  std::size_t vocab_size = 0;
  double dropout_rate = 0.1;
  double layer_norm_epsilon = 1e-12;

  /// Throws ArgumentError when a size is zero or heads do not divide d.
  void validate() const;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

using NamedParams = std::vector<std::pair<std::string, Tensor*>>;

struct AttentionWeights {
  Tensor query_w, query_b, key_w, key_b, value_w, value_b, output_w, output_b;
};

struct EncoderLayerWeights {
  AttentionWeights attention;
  Tensor attention_norm_gain, attention_norm_bias;
  Tensor ff_in_w, ff_in_b, ff_out_w, ff_out_b;
  Tensor output_norm_gain, output_norm_bias;
};

/// Embedding tables plus the transformer stack. Linear weights are stored
/// [out x in].
struct EncoderWeights {
  Tensor token_embedding;     // vocab_size x d
  Tensor segment_embedding;   // 2 x d
  Tensor position_embedding;  // max_positions x d
  std::vector<EncoderLayerWeights> layers;

  /// Zero-filled weights with every tensor shaped for cfg.
  explicit EncoderWeights(const EncoderConfig& cfg = {});
  /// Truncated normal (stddev 0.02) matrices, zero biases, unit gains.
  static EncoderWeights initialize(const EncoderConfig& cfg, Rng& rng);

  /// Stable-order parameter list, names prefixed with `prefix`.
  NamedParams named_parameters(const std::string& prefix);
};

/// Scalars held by EncoderWeights for cfg.
std::size_t parameter_count(const EncoderConfig& cfg);

/// Row i = token + segment + position embedding of token i.
Var embed(Tape& tape, const EncodedContext& ctx, const EncoderWeights& w);

/// Runs the post-LN transformer stack. key_mask[j] == false excludes
/// position j from every attention distribution (padding); an empty mask
/// attends everywhere.
Var encode(Var embeddings, const EncoderWeights& w, const EncoderConfig& cfg,
           std::span<const std::uint8_t> key_mask, bool training, Rng& rng);

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
