#include "bdst/tracker.hpp"
#include <algorithm>

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

std::string extract_value(const EncodedContext& ctx, TokenSpan span, std::string_view system_utt,
                          std::string_view user_utt) {
  const auto& head = ctx.token_char_spans.at(span.start);
  if (!head) throw ArgumentError("extract_value: span starts on a special token");
  const auto& tail = ctx.token_char_spans.at(span.end);
  if (!tail || tail->source != head->source) {
    // Cut back to the last token of the start token's utterance.
    std::size_t e = span.start;
    for (std::size_t i = span.start; i <= span.end; ++i) {
      const auto& cs = ctx.token_char_spans[i];
      if (cs && cs->source == head->source) e = i;
    }
    span.end = e;
  }
  const auto chars = token_span_chars(span, ctx);
  const auto text = chars.source == Source::System ? system_utt : user_utt;
  return utf8_substr(text, chars.start, chars.end);
}

TurnPrediction predict_turn(const ModelBundle& model, std::string_view system_utt,
                            std::string_view user_utt) {
  const auto ctx = build_context(system_utt, user_utt, model.vocab, model.context);
  TurnPrediction out;
  const auto mask = ctx.valid_span_mask();
  const std::vector<std::uint8_t> span_mask(mask.begin() + 1, mask.end());
  const bool any_valid = std::any_of(span_mask.begin(), span_mask.end(), [](auto m) { return m; });

  Tape tape(false);
  Rng unused(0);
  const auto outputs = forward_turn(tape, model, ctx, false, 0.0, unused);
  for (std::size_t s = 0; s < model.slots.size(); ++s) {
    const auto& so = outputs.slots[s];
    SlotPrediction p;
    const auto probs = ad::softmax(so.class_logits, 1).value();
    p.probabilities = {probs[0], probs[1], probs[2]};
    p.cls = p.probabilities.argmax();
    // With no utterance tokens there is nothing to extract.
    if (p.cls == SlotClass::Span && !any_valid) p.cls = SlotClass::None;
    if (p.cls == SlotClass::Span) {
      p.span = decode_span(so.span.start.value().values(), so.span.end.value().values(), span_mask,
                           model.decode);
      p.value = extract_value(ctx, *p.span, system_utt, user_utt);
    }
    out.slots.emplace(model.slots[s], std::move(p));
  }
  return out;
}

DialogueState update_state(DialogueState prev, const TurnPrediction& turn) {
  for (const auto& [slot, p] : turn.slots) {
    switch (p.cls) {
      case SlotClass::Span:
        if (p.value && !p.value->empty()) prev[slot] = *p.value;
        break;
      case SlotClass::Dontcare:
        prev[slot] = std::string(kDontcare);
        break;
      case SlotClass::None:
        break;
    }
  }
  return prev;
}

std::vector<DialogueState> fold_states(const std::vector<TurnPrediction>& turns) {
  std::vector<DialogueState> out;
  out.reserve(turns.size());
  DialogueState state;
  for (const auto& t : turns) {
    state = update_state(std::move(state), t);
    out.push_back(state);
  }
  return out;
}

std::vector<DialogueState> track_dialogue(const ModelBundle& model,
                                          const std::vector<TurnText>& turns) {
  std::vector<TurnPrediction> preds;
  preds.reserve(turns.size());
  for (const auto& [sys, usr] : turns) preds.push_back(predict_turn(model, sys, usr));
  return fold_states(preds);
}

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
