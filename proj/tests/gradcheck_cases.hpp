#pragma once

// The full list of gradient checks: every tape op, the encoder stack, the slot
// heads and the turn loss under both sharing modes.

#include <functional>
#include <string>
#include <vector>

#include "bdst/encoder.hpp"
#include "bdst/heads.hpp"
#include "gradcheck.hpp"

namespace gradcheck {

struct Case {
  std::string name;
  std::function<Result()> run;
};

template <typename Build>
Result check_op(std::vector<bdst::Tensor> inputs, Build build, std::uint64_t seed = 99) {
  std::vector<std::pair<std::string, bdst::Tensor*>> named;
  for (std::size_t i = 0; i < inputs.size(); ++i) named.emplace_back("in" + std::to_string(i), &inputs[i]);
  return check(named, [&](bdst::Tape& t) {
    std::vector<bdst::Var> vs;
    for (auto& in : inputs) vs.push_back(t.param(in));
    return project(build(vs), seed);
  });
}

inline Result encoder_stack() {
  using namespace bdst;
  EncoderConfig cfg;
  cfg.num_layers = 2;
  cfg.hidden_size = 8;
  cfg.num_heads = 2;
  cfg.feed_forward_size = 16;
  cfg.max_positions = 8;
  cfg.vocab_size = 10;
  Rng rng(3);
  auto w = EncoderWeights::initialize(cfg, rng);
  for (auto& [_, p] : w.named_parameters("")) {
    for (auto& v : p->values()) v = rng.normal() * 0.5;
  }
  EncodedContext ctx;
  ctx.token_ids = {2, 5, 6, 3, 7, 8};
  ctx.segment_ids = {0, 0, 0, 0, 1, 1};
  ctx.token_char_spans.resize(6);
  ctx.sep_index = 3;
  const std::vector<std::uint8_t> mask{1, 1, 1, 1, 1, 0};
  return check(w.named_parameters("enc."), [&](Tape& t) {
    Rng drop(5);
    return project(encode(embed(t, ctx, w), w, cfg, mask, true, drop), 17);
  });
}

inline Result slot_heads() {
  using namespace bdst;
  Rng rng(8);
  auto h = SlotHeadWeights::initialize(8, rng);
  for (auto& [_, p] : h.named_parameters("")) {
    for (auto& v : p->values()) v = rng.normal();
  }
  auto tokens = random_tensor({5, 8}, 61);
  auto named = h.named_parameters("head.");
  named.emplace_back("tokens", &tokens);
  return check(named, [&](Tape& t) {
    const auto all = t.param(tokens);
    const auto cls = class_logits(ad::rows(all, 0, 1), h);
    const auto span = span_logits(ad::rows(all, 1, 4), h);
    return ad::add(ad::add(ad::cross_entropy(cls, 2), ad::cross_entropy(span.start, 1)),
                   ad::cross_entropy(span.end, 3));
  });
}

inline std::vector<Case> all_cases() {
  using namespace bdst;
  using V = std::vector<Var>;
  std::vector<Case> c;
  auto op = [&](std::string name, std::vector<Tensor> in, std::function<Var(V&)> f) {
    c.push_back({std::move(name), [in, f] { return check_op(in, f); }});
  };
  op("matmul", {random_tensor({3, 4}, 1), random_tensor({4, 5}, 2)}, [](V& v) { return ad::matmul(v[0], v[1]); });
  op("matmul_nt", {random_tensor({3, 4}, 3), random_tensor({5, 4}, 4)},
     [](V& v) { return ad::matmul_nt(v[0], v[1]); });
  op("linear", {random_tensor({3, 4}, 5), random_tensor({2, 4}, 6), random_tensor({2}, 7)},
     [](V& v) { return ad::linear(v[0], v[1], v[2]); });
  const std::vector<Tensor> two{random_tensor({2, 3}, 11), random_tensor({2, 3}, 12)};
  op("add", two, [](V& v) { return ad::add(v[0], v[1]); });
  op("mul", two, [](V& v) { return ad::mul(v[0], v[1]); });
  const std::vector<Tensor> one{random_tensor({2, 3}, 13)};
  op("scale", one, [](V& v) { return ad::scale(v[0], -1.7); });
  op("sum", one, [](V& v) { return ad::sum(v[0]); });
  op("gelu", one, [](V& v) { return ad::gelu(v[0]); });
  const std::vector<Tensor> scalars{random_tensor({1}, 14), random_tensor({1}, 15), random_tensor({1}, 16)};
  op("weighted_sum", scalars, [](V& v) {
    const std::vector<Real> w{0.8, 0.1, 0.1};
    return ad::weighted_sum(v, w);
  });
  op("mean", scalars, [](V& v) { return ad::mean(v); });
  const std::vector<Tensor> x{random_tensor({3, 4}, 21)};
  op("softmax axis 0", x, [](V& v) { return ad::softmax(v[0], 0); });
  op("softmax axis 1", x, [](V& v) { return ad::softmax(v[0], 1); });
  op("masked_softmax_rows", x, [](V& v) {
    const std::vector<std::uint8_t> mask{1, 0, 1, 1};
    return ad::masked_softmax_rows(v[0], mask);
  });
  op("cross_entropy", {random_tensor({5}, 22)}, [](V& v) { return ad::cross_entropy(v[0], 3); });
  op("layer_norm", {random_tensor({3, 6}, 31), random_tensor({6}, 32), random_tensor({6}, 33)},
     [](V& v) { return ad::layer_norm(v[0], v[1], v[2], 1e-12); });
  op("dropout", {random_tensor({4, 5}, 41)}, [](V& v) {
    Rng rng(7);
    return ad::dropout(v[0], 0.3, true, rng);
  });
  op("embedding", {random_tensor({6, 3}, 51)}, [](V& v) {
    const std::vector<std::size_t> ids{2, 0, 2, 5};
    return ad::embedding(v[0], ids);
  });
  const std::vector<Tensor> wide{random_tensor({4, 6}, 52)};
  op("rows", wide, [](V& v) { return ad::rows(v[0], 1, 2); });
  op("slice_cols", wide, [](V& v) { return ad::slice_cols(v[0], 2, 3); });
  op("column", wide, [](V& v) { return ad::column(v[0], 4); });
  op("reshape", wide, [](V& v) { return ad::reshape(v[0], Shape{6, 4}); });
  op("concat_cols", {random_tensor({3, 2}, 53), random_tensor({3, 4}, 54)},
     [](V& v) { return ad::concat_cols(v); });
  c.push_back({"encoder stack", encoder_stack});
  c.push_back({"slot heads", slot_heads});
  c.push_back({"turn loss, shared encoder", [] { return check_turn_loss(SharingMode::Shared, 11); }});
  c.push_back({"turn loss, slot-specific encoders", [] { return check_turn_loss(SharingMode::SlotSpecific, 12); }});
  return c;
}

}  // namespace gradcheck
