#include "bdst/encoder.hpp"

#include <cmath>

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

void EncoderConfig::validate() const {
  if (hidden_size == 0 || num_heads == 0 || feed_forward_size == 0 || max_positions == 0 ||
      vocab_size == 0) {
    throw ArgumentError("encoder config: all sizes must be >= 1");
  }
  if (hidden_size % num_heads != 0) {
    throw ArgumentError("encoder config: hidden_size " + std::to_string(hidden_size) +
                        " not divisible by num_heads " + std::to_string(num_heads));
  }
  if (!(dropout_rate >= 0 && dropout_rate < 1)) {
    throw ArgumentError("encoder config: dropout_rate outside [0, 1)");
  }
}

EncoderWeights::EncoderWeights(const EncoderConfig& cfg)
    : token_embedding({cfg.vocab_size, cfg.hidden_size}, true),
      segment_embedding({2, cfg.hidden_size}, true),
      position_embedding({cfg.max_positions, cfg.hidden_size}, true) {
  const std::size_t d = cfg.hidden_size, ff = cfg.feed_forward_size;
  layers.reserve(cfg.num_layers);
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    EncoderLayerWeights lw{
        {Tensor({d, d}, true), Tensor({d}, true), Tensor({d, d}, true), Tensor({d}, true),
         Tensor({d, d}, true), Tensor({d}, true), Tensor({d, d}, true), Tensor({d}, true)},
        Tensor({d}, true),
        Tensor({d}, true),
        Tensor({ff, d}, true),
        Tensor({ff}, true),
        Tensor({d, ff}, true),
        Tensor({d}, true),
        Tensor({d}, true),
        Tensor({d}, true)};
    layers.push_back(std::move(lw));
  }
}

EncoderWeights EncoderWeights::initialize(const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  EncoderWeights w(cfg);
  auto normal = [&rng](Tensor& t) {
    for (auto& v : t.values()) v = static_cast<Real>(rng.truncated_normal(0.02));
  };
  normal(w.token_embedding);
  normal(w.segment_embedding);
  normal(w.position_embedding);
  for (auto& l : w.layers) {
    normal(l.attention.query_w);
    normal(l.attention.key_w);
    normal(l.attention.value_w);
    normal(l.attention.output_w);
    normal(l.ff_in_w);
    normal(l.ff_out_w);
    l.attention_norm_gain.fill(1);
    l.output_norm_gain.fill(1);
  }
  return w;
}

NamedParams EncoderWeights::named_parameters(const std::string& prefix) {
  NamedParams out{{prefix + "token_embedding", &token_embedding},
                  {prefix + "segment_embedding", &segment_embedding},
                  {prefix + "position_embedding", &position_embedding}};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string p = prefix + "layer" + std::to_string(l) + ".";
    auto& lw = layers[l];
    auto& a = lw.attention;
    for (auto [name, t] : std::initializer_list<std::pair<const char*, Tensor*>>{
             {"attention.query.weight", &a.query_w},
             {"attention.query.bias", &a.query_b},
             {"attention.key.weight", &a.key_w},
             {"attention.key.bias", &a.key_b},
             {"attention.value.weight", &a.value_w},
             {"attention.value.bias", &a.value_b},
             {"attention.output.weight", &a.output_w},
             {"attention.output.bias", &a.output_b},
             {"attention_norm.gain", &lw.attention_norm_gain},
             {"attention_norm.bias", &lw.attention_norm_bias},
             {"ff_in.weight", &lw.ff_in_w},
             {"ff_in.bias", &lw.ff_in_b},
             {"ff_out.weight", &lw.ff_out_w},
             {"ff_out.bias", &lw.ff_out_b},
             {"output_norm.gain", &lw.output_norm_gain},
             {"output_norm.bias", &lw.output_norm_bias}}) {
      out.emplace_back(p + name, t);
    }
  }
  return out;
}

std::size_t parameter_count(const EncoderConfig& cfg) {
  const std::size_t d = cfg.hidden_size, ff = cfg.feed_forward_size;
  const std::size_t embeddings = (cfg.vocab_size + 2 + cfg.max_positions) * d;
  // 4 projections with bias, 2 layer norms, 2 feed-forward matrices with bias.
  const std::size_t per_layer = 4 * (d * d + d) + 2 * (2 * d) + (ff * d + ff) + (d * ff + d);
  return embeddings + cfg.num_layers * per_layer;
}

Var embed(Tape& tape, const EncodedContext& ctx, const EncoderWeights& w) {
  const std::size_t n = ctx.length();
  if (n > w.position_embedding.dim(0)) {
    throw ArgumentError("embed: context length " + std::to_string(n) + " exceeds max_positions " +
                        std::to_string(w.position_embedding.dim(0)));
  }
  std::vector<std::size_t> tokens(ctx.token_ids.begin(), ctx.token_ids.end());
  std::vector<std::size_t> segments(ctx.segment_ids.begin(), ctx.segment_ids.end());
  std::vector<std::size_t> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = i;
  auto tok = ad::embedding(tape.param(w.token_embedding), tokens);
  auto seg = ad::embedding(tape.param(w.segment_embedding), segments);
  auto pos = ad::embedding(tape.param(w.position_embedding), positions);
  return ad::add(ad::add(tok, seg), pos);
}

namespace {

Var self_attention(Var x, const AttentionWeights& a, const EncoderConfig& cfg,
                   std::span<const std::uint8_t> key_mask, bool training, Rng& rng) {
  Tape& t = x.tape();
  auto q = ad::linear(x, t.param(a.query_w), t.param(a.query_b));
  auto k = ad::linear(x, t.param(a.key_w), t.param(a.key_b));
  auto v = ad::linear(x, t.param(a.value_w), t.param(a.value_b));
  const std::size_t head_dim = cfg.hidden_size / cfg.num_heads;
  const Real inv_sqrt = Real{1} / std::sqrt(static_cast<Real>(head_dim));
  std::vector<Var> heads;
  heads.reserve(cfg.num_heads);
  for (std::size_t h = 0; h < cfg.num_heads; ++h) {
    auto qh = ad::slice_cols(q, h * head_dim, head_dim);
    auto kh = ad::slice_cols(k, h * head_dim, head_dim);
    auto vh = ad::slice_cols(v, h * head_dim, head_dim);
    auto scores = ad::scale(ad::matmul_nt(qh, kh), inv_sqrt);
    auto probs = ad::masked_softmax_rows(scores, key_mask);
    probs = ad::dropout(probs, static_cast<Real>(cfg.dropout_rate), training, rng);
    heads.push_back(ad::matmul(probs, vh));
  }
  auto context = cfg.num_heads == 1 ? heads[0] : ad::concat_cols(heads);
  return ad::linear(context, t.param(a.output_w), t.param(a.output_b));
}

}  // namespace

Var encode(Var embeddings, const EncoderWeights& w, const EncoderConfig& cfg,
           std::span<const std::uint8_t> key_mask, bool training, Rng& rng) {
  Tape& t = embeddings.tape();
  const auto& shape = embeddings.shape();
  if (shape.size() != 2 || shape[1] != cfg.hidden_size) {
    throw DimensionError("encode: embeddings " + shape_str(shape) + " do not match hidden size " +
                         std::to_string(cfg.hidden_size));
  }
  const auto eps = static_cast<Real>(cfg.layer_norm_epsilon);
  const auto rate = static_cast<Real>(cfg.dropout_rate);
  Var x = embeddings;
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto& lw = w.layers[l];
    auto attn = self_attention(x, lw.attention, cfg, key_mask, training, rng);
    attn = ad::dropout(attn, rate, training, rng);
    x = ad::layer_norm(ad::add(x, attn), t.param(lw.attention_norm_gain),
                       t.param(lw.attention_norm_bias), eps);
    auto hidden = ad::gelu(ad::linear(x, t.param(lw.ff_in_w), t.param(lw.ff_in_b)));
    auto ff = ad::linear(hidden, t.param(lw.ff_out_w), t.param(lw.ff_out_b));
    ff = ad::dropout(ff, rate, training, rng);
    x = ad::layer_norm(ad::add(x, ff), t.param(lw.output_norm_gain), t.param(lw.output_norm_bias),
                       eps);
    try {
      x.value().check_finite("encoder layer " + std::to_string(l));
    } catch (const NumericError&) {
      throw NumericError("encode: non-finite activation in layer " + std::to_string(l));
    }
  }
  return x;
}

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
