#pragma once

#include <string>
#include <vector>

#include "bdst/model.hpp"
#include "bdst/training.hpp"

namespace fixtures {

using namespace bdst;

inline EncoderConfig tiny_encoder(std::size_t vocab_size = 0) {
  EncoderConfig c;
  c.num_layers = 1;
  c.hidden_size = 8;
  c.num_heads = 2;
  c.feed_forward_size = 16;
  c.max_positions = 32;
  c.vocab_size = vocab_size;
  return c;
}

inline Vocab small_vocab() {
  return Vocab({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "table", "for", "7", "pm", "how", "about", "cascal", "?",
                "yes", "book", "un", "##aff", "##able", "the", "at"});
}

inline ModelBundle tiny_model(SharingMode mode, std::vector<std::string> slots = {"time", "restaurant_name"},
                              std::uint64_t seed = 5) {
  Rng rng(seed);
  ContextOptions ctx;
  ctx.max_len = 32;
  return ModelBundle::create(tiny_encoder(), mode, std::move(slots), small_vocab(), ctx, DecodeMode::Independent,
                             rng);
}

/// Overwrites every parameter with N(0, stddev) draws.
inline void randomize(ModelBundle& m, std::uint64_t seed, double stddev = 0.5) {
  Rng rng(seed);
  for (auto* p : m.parameters()) {
    for (auto& v : p->values()) v = static_cast<Real>(rng.normal() * stddev);
  }
}

inline SlotLabel value_label(std::string v) {
  SlotLabel l;
  l.cls = SlotClass::Span;
  l.value = std::move(v);
  return l;
}

inline SlotLabel dontcare_label() {
  SlotLabel l;
  l.cls = SlotClass::Dontcare;
  return l;
}

}  // namespace fixtures
