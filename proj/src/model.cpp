#include "bdst/model.hpp"

#include <algorithm>
#include <set>

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

ModelBundle ModelBundle::create(EncoderConfig cfg, SharingMode sharing,
                                std::vector<std::string> slots, Vocab vocab,
                                ContextOptions context, DecodeMode decode, Rng& rng) {
  cfg.vocab_size = vocab.size();
  if (context.max_len > cfg.max_positions) {
    throw ArgumentError("model: max_len " + std::to_string(context.max_len) +
                        " exceeds max_positions " + std::to_string(cfg.max_positions));
  }
  cfg.validate();
  ModelBundle m;
  m.encoder_config = cfg;
  m.sharing = sharing;
  m.decode = decode;
  m.context = context;
  m.slots = std::move(slots);
  m.vocab = std::move(vocab);
  const std::size_t num_encoders = sharing == SharingMode::Shared ? 1 : m.slots.size();
  for (std::size_t i = 0; i < num_encoders; ++i) {
    m.encoders.push_back(EncoderWeights::initialize(cfg, rng));
  }
  for (std::size_t i = 0; i < m.slots.size(); ++i) {
    m.heads.push_back(SlotHeadWeights::initialize(cfg.hidden_size, rng));
  }
  m.validate();
  return m;
}

std::size_t ModelBundle::slot_index(const std::string& slot) const {
  auto it = std::find(slots.begin(), slots.end(), slot);
  if (it == slots.end()) throw ArgumentError("model has no slot '" + slot + "'");
  return static_cast<std::size_t>(it - slots.begin());
}

NamedParams ModelBundle::named_parameters() {
  NamedParams out;
  for (std::size_t e = 0; e < encoders.size(); ++e) {
    const std::string prefix =
        sharing == SharingMode::Shared ? "encoder." : "encoder." + slots.at(e) + ".";
    auto p = encoders[e].named_parameters(prefix);
    out.insert(out.end(), p.begin(), p.end());
  }
  for (std::size_t s = 0; s < heads.size(); ++s) {
    auto p = heads[s].named_parameters("head." + slots.at(s) + ".");
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<Tensor*> ModelBundle::parameters() {
  std::vector<Tensor*> out;
  for (auto& [_, t] : named_parameters()) out.push_back(t);
  return out;
}

std::size_t ModelBundle::parameter_count() const {
  std::size_t n = 0;
  for (auto& [_, t] : const_cast<ModelBundle*>(this)->named_parameters()) n += t->size();
  return n;
}

void ModelBundle::zero_grad() {
  for (auto* t : parameters()) t->zero_grad();
}

void ModelBundle::validate() const {
  if (slots.empty()) throw ArgumentError("model: no slots");
  std::set<std::string> unique(slots.begin(), slots.end());
  if (unique.size() != slots.size()) throw ArgumentError("model: duplicate slot names");
  const std::size_t expected = sharing == SharingMode::Shared ? 1 : slots.size();
  if (encoders.size() != expected) {
    throw ArgumentError("model: " + std::to_string(encoders.size()) + " encoders, expected " +
                        std::to_string(expected));
  }
  if (heads.size() != slots.size()) throw ArgumentError("model: head count differs from slots");
  if (encoder_config.vocab_size != vocab.size()) {
    throw ArgumentError("model: vocab size differs from encoder config");
  }
}

TurnOutputs forward_turn(Tape& tape, const ModelBundle& model, const EncodedContext& ctx,
                         bool training, double output_dropout, Rng& rng) {
  const std::size_t n = ctx.last_index();
  if (n == 0) throw ArgumentError("forward_turn: context has no tokens after [CLS]");
  TurnOutputs out;
  out.slots.reserve(model.slots.size());

  struct Encoded {
    Var sentence;
    Var tokens;
  };
  auto run_encoder = [&](const EncoderWeights& w) {
    ++out.encoder_calls;
    auto x = encode(embed(tape, ctx, w), w, model.encoder_config, {}, training, rng);
    x = ad::dropout(x, static_cast<Real>(output_dropout), training, rng);
    return Encoded{ad::rows(x, 0, 1), ad::rows(x, 1, n)};
  };

  std::optional<Encoded> shared;
  if (model.sharing == SharingMode::Shared) shared = run_encoder(model.encoders.front());
  for (std::size_t s = 0; s < model.slots.size(); ++s) {
    const Encoded enc = shared ? *shared : run_encoder(model.encoders.at(s));
    const auto& head = model.heads[s];
    out.slots.push_back({class_logits(enc.sentence, head), span_logits(enc.tokens, head)});
  }
  return out;
}

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
