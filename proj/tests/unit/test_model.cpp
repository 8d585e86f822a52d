#include <doctest.h>

#include <cmath>

#include "bdst/model.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bdst;
using doctest::Approx;

namespace {

EncodedContext context_of(std::vector<TokenId> ids, std::size_t sep) {
  EncodedContext c;
  c.token_ids = std::move(ids);
  c.sep_index = sep;
  for (std::size_t i = 0; i < c.token_ids.size(); ++i) c.segment_ids.push_back(i <= sep ? 0 : 1);
  c.token_char_spans.resize(c.token_ids.size());
  return c;
}

std::vector<Real> values_of(Var v) { return {v.value().values().begin(), v.value().values().end()}; }

void fill_random(EncoderWeights& w, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& [_, p] : w.named_parameters("")) {
    for (auto& v : p->values()) v = static_cast<Real>(rng.normal() * 0.3);
  }
}

}  // namespace

TEST_SUITE("encoder") {
  TEST_CASE("parameter count") {
    EncoderConfig c;
    c.vocab_size = 10;
    c.hidden_size = 4;
    c.num_heads = 2;
    c.max_positions = 8;
    c.num_layers = 0;
    CHECK(parameter_count(c) == 80);

    c.num_layers = 1;
    const auto one = parameter_count(c) - 80;
    c.num_layers = 2;
    const auto two = parameter_count(c);
    c.num_layers = 4;
    CHECK(parameter_count(c) - two == 2 * one);

    EncoderWeights w(c);
    std::size_t counted = 0;
    for (auto& [_, p] : w.named_parameters("")) counted += p->size();
    CHECK(counted == parameter_count(c));
  }

  TEST_CASE("config validation") {
    EncoderConfig c = fixtures::tiny_encoder(10);
    c.num_heads = 3;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c.num_heads = 2;
    c.hidden_size = 0;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
  }

  TEST_CASE("embedding sum") {
    auto cfg = fixtures::tiny_encoder(6);
    EncoderWeights zero(cfg);
    Tape t(false);
    auto ctx = context_of({2, 4, 3, 5}, 2);
    for (auto v : values_of(embed(t, ctx, zero))) CHECK(v == 0);

    EncoderWeights w(cfg);
    fill_random(w, 1);
    auto single = context_of({2}, 0);
    auto row = values_of(embed(t, single, w));
    for (std::size_t j = 0; j < cfg.hidden_size; ++j) {
      CHECK(row[j] == Approx(w.token_embedding.at(2, j) + w.segment_embedding.at(0, j) + w.position_embedding.at(0, j)));
    }

    auto e = values_of(embed(t, ctx, w));
    auto swapped = ctx;
    std::swap(swapped.token_ids[1], swapped.token_ids[3]);
    auto s = values_of(embed(t, swapped, w));
    const auto d = cfg.hidden_size;
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const Real expect_e = w.token_embedding.at(ctx.token_ids[i], j) +
                              w.segment_embedding.at(ctx.segment_ids[i], j) + w.position_embedding.at(i, j);
        CHECK(e[i * d + j] == Approx(expect_e));
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      CHECK(s[3 * d + j] - e[1 * d + j] ==
            Approx(w.position_embedding.at(3, j) - w.position_embedding.at(1, j) + w.segment_embedding.at(1, j) -
                   w.segment_embedding.at(0, j)));
      CHECK(s[2 * d + j] == e[2 * d + j]);
    }

    auto bad = context_of({2, 9}, 0);
    CHECK_THROWS_AS(embed(t, bad, w), ArgumentError);
  }

  TEST_CASE("zero layers is the identity") {
    auto cfg = fixtures::tiny_encoder(6);
    cfg.num_layers = 0;
    EncoderWeights w(cfg);
    fill_random(w, 2);
    Tape t(false);
    Rng rng(1);
    auto x = embed(t, context_of({2, 4, 3, 5}, 2), w);
    CHECK(encode(x, w, cfg, {}, false, rng).value() == x.value());
  }

  TEST_CASE("deterministic without dropout and padding invariant") {
    auto cfg = fixtures::tiny_encoder(6);
    cfg.num_layers = 2;
    EncoderWeights w(cfg);
    fill_random(w, 3);
    Rng rng(1);
    Tape t(false);
    auto ctx = context_of({2, 4, 3, 5}, 2);
    auto a = values_of(encode(embed(t, ctx, w), w, cfg, {}, false, rng));
    auto b = values_of(encode(embed(t, ctx, w), w, cfg, {}, false, rng));
    CHECK(a == b);

    auto padded = context_of({2, 4, 3, 5, 0, 0}, 2);
    const std::vector<std::uint8_t> mask{1, 1, 1, 1, 0, 0};
    auto p = values_of(encode(embed(t, padded, w), w, cfg, mask, false, rng));
    REQUIRE(p.size() == 6 * cfg.hidden_size);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::fabs(a[i] - p[i]) < 1e-5);
  }

  TEST_CASE("output shape") {
    auto cfg = fixtures::tiny_encoder(6);
    EncoderWeights w(cfg);
    Rng rng(1);
    Tape t(false);
    auto out = encode(embed(t, context_of({2, 4, 3}, 2), w), w, cfg, {}, true, rng);
    CHECK(out.shape() == Shape{3, cfg.hidden_size});
  }
}

TEST_SUITE("heads") {
  TEST_CASE("classify examples") {
    SlotHeadWeights h(4);
    Tape t(false);
    auto t0 = t.constant(Tensor(Shape{1, 4}, std::vector<Real>{1, -2, 3, 0.5f}));
    auto u = classify(t0, h);
    CHECK(u.p_none == Approx(1.0 / 3));
    CHECK(u.p_span == Approx(1.0 / 3));

    h.class_b = Tensor(Shape{3}, std::vector<Real>{0, std::log(2.0f), std::log(7.0f)});
    auto d = classify(t0, h);
    CHECK(d.p_none == Approx(0.1));
    CHECK(d.p_dontcare == Approx(0.2));
    CHECK(d.p_span == Approx(0.7));
    CHECK(d.argmax() == SlotClass::Span);

    auto wrong = t.constant(Tensor(Shape{1, 5}));
    CHECK_THROWS_AS(classify(wrong, h), DimensionError);
  }

  TEST_CASE("classify sums to one and is shift invariant") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      auto h = SlotHeadWeights::initialize(6, rng);
      for (auto& v : h.class_w.values()) v = static_cast<Real>(rng.normal());
      Tensor x(Shape{1, 6});
      for (auto& v : x.values()) v = static_cast<Real>(rng.normal());
      Tape t(false);
      auto d = classify(t.constant(x), h);
      CHECK(d.p_none + d.p_dontcare + d.p_span == Approx(1.0).epsilon(1e-6));
      auto shifted = h;
      for (auto& b : shifted.class_b.values()) b += 5;
      CHECK(classify(t.constant(x), shifted).argmax() == d.argmax());
    }
  }

  TEST_CASE("span logits share one projection") {
    SlotHeadWeights h(4);
    h.span_b = Tensor(Shape{2}, std::vector<Real>{1.5f, -2});
    Tape t(false);
    Rng rng(5);
    Tensor x(Shape{3, 4});
    for (auto& v : x.values()) v = static_cast<Real>(rng.normal());
    auto s = span_logits(t.constant(x), h);
    for (auto v : values_of(s.start)) CHECK(v == 1.5f);
    for (auto v : values_of(s.end)) CHECK(v == -2);

    for (auto& v : h.span_w.values()) v = static_cast<Real>(rng.normal());
    auto base = span_logits(t.constant(x), h);
    Tensor perm(Shape{3, 4});
    const std::size_t order[3] = {2, 0, 1};
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 4; ++c) perm.at(r, c) = x.at(order[r], c);
    }
    auto p = span_logits(t.constant(perm), h);
    for (std::size_t r = 0; r < 3; ++r) {
      CHECK(p.start.value()[r] == base.start.value()[order[r]]);
      CHECK(p.end.value()[r] == base.end.value()[order[r]]);
    }
  }

  TEST_CASE("decode examples") {
    const std::vector<std::uint8_t> all{1, 1, 1};
    const std::vector<Real> a1{5, 1, 0}, b1{0, 1, 5};
    CHECK(decode_span(a1, b1, all, DecodeMode::Independent) == TokenSpan{1, 3});
    const std::vector<Real> a2{0, 0, 5}, b2{5, 0, 0};
    CHECK(decode_span(a2, b2, all, DecodeMode::Independent) == TokenSpan{3, 3});
    const auto [pos, best] =
        oracle::joint_decode({0, 0, 5}, {5, 0, 0}, {1, 1, 1});
    CHECK(decode_span(a2, b2, all, DecodeMode::Joint) == TokenSpan{pos.first, pos.second});
    const std::vector<std::uint8_t> none{0, 0, 0};
    CHECK_THROWS_AS(decode_span(a1, b1, none, DecodeMode::Joint), ArgumentError);
  }

  TEST_CASE("head parameter counts") {
    EncoderConfig c = fixtures::tiny_encoder(10);
    CHECK(slot_head_parameter_count(4) == 25);
    const auto enc = parameter_count(c);
    const auto d = c.hidden_size;
    CHECK(head_parameter_count(3, d, SharingMode::Shared, c) - head_parameter_count(2, d, SharingMode::Shared, c) ==
          5 * d + 5);
    CHECK(head_parameter_count(3, d, SharingMode::SlotSpecific, c) -
              head_parameter_count(3, d, SharingMode::Shared, c) ==
          2 * enc);
    SlotHeadWeights h(d);
    std::size_t counted = 0;
    for (auto& [_, p] : h.named_parameters("")) counted += p->size();
    CHECK(counted == slot_head_parameter_count(d));
  }
}

TEST_SUITE("model") {
  TEST_CASE("shared encoder runs once per turn") {
    auto ps = fixtures::tiny_model(SharingMode::Shared, {"a", "b", "c"});
    auto ss = fixtures::tiny_model(SharingMode::SlotSpecific, {"a", "b", "c"});
    CHECK(ps.encoders.size() == 1);
    CHECK(ss.encoders.size() == 3);
    auto ctx = build_context("how about cascal ?", "yes", ps.vocab, ps.context);
    Rng rng(1);
    Tape t(false);
    CHECK(forward_turn(t, ps, ctx, false, 0.3, rng).encoder_calls == 1);
    CHECK(forward_turn(t, ss, ctx, false, 0.3, rng).encoder_calls == 3);
    CHECK(ps.parameter_count() == head_parameter_count(3, 8, SharingMode::Shared, ps.encoder_config));
    CHECK(ss.parameter_count() == head_parameter_count(3, 8, SharingMode::SlotSpecific, ss.encoder_config));
  }

  TEST_CASE("slot-specific copies of a shared model agree at step zero") {
    auto ps = fixtures::tiny_model(SharingMode::Shared, {"a", "b"});
    fixtures::randomize(ps, 8);
    auto ss = fixtures::tiny_model(SharingMode::SlotSpecific, {"a", "b"});
    ss.encoders = {ps.encoders[0], ps.encoders[0]};
    ss.heads = ps.heads;
    auto ctx = build_context("how about cascal ?", "table for 7 pm", ps.vocab, ps.context);
    Rng r1(1), r2(1);
    Tape t(false);
    auto a = forward_turn(t, ps, ctx, false, 0.3, r1);
    auto b = forward_turn(t, ss, ctx, false, 0.3, r2);
    for (std::size_t s = 0; s < 2; ++s) {
      CHECK(a.slots[s].class_logits.value() == b.slots[s].class_logits.value());
      CHECK(a.slots[s].span.start.value() == b.slots[s].span.start.value());
      CHECK(a.slots[s].span.end.value() == b.slots[s].span.end.value());
    }
  }

  TEST_CASE("validate catches inconsistencies") {
    auto m = fixtures::tiny_model(SharingMode::Shared);
    CHECK_NOTHROW(m.validate());
    auto extra = m;
    extra.heads.pop_back();
    CHECK_THROWS_AS(extra.validate(), ArgumentError);
    auto dup = m;
    dup.slots[1] = dup.slots[0];
    CHECK_THROWS_AS(dup.validate(), ArgumentError);
  }
}
