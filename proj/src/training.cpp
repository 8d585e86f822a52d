#include "bdst/training.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bdst/adam.hpp"
#include "bdst/metrics.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

namespace {

using json = nlohmann::ordered_json;

enum Stream : std::uint64_t { kInitStream = 1, kShuffleStream = 2, kExampleStream = 3 };

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ArgumentError(where + " must be an object");
  for (const auto& [k, _] : j.items()) {
    if (!allowed.count(k)) throw ArgumentError("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be positive");
  if (!(encoder_output_dropout >= 0.0 && encoder_output_dropout < 1.0)) {
    throw ArgumentError("encoder_output_dropout must be in [0, 1)");
  }
  if (!(slot_value_dropout >= 0.0 && slot_value_dropout < 1.0)) {
    throw ArgumentError("slot_value_dropout must be in [0, 1)");
  }
  if (loss_weights.cls < 0 || loss_weights.start < 0 || loss_weights.end < 0) {
    throw ArgumentError("loss weights must be non-negative");
  }
  if (batch_size == 0) throw ArgumentError("batch_size must be positive");
  if (max_epochs == 0) throw ArgumentError("max_epochs must be positive");
  if (vocab_max_size < 5) throw ArgumentError("vocab_max_size is too small");
  if (context.max_len > encoder.max_positions) {
    throw ArgumentError("context max_len exceeds the encoder's max_positions");
  }
}

TrainConfig parse_train_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("config is not valid JSON: ") + e.what());
  }
  TrainConfig c;
  try {
    check_keys(j,
               {"learning_rate", "encoder_output_dropout", "slot_value_dropout", "loss_weights",
                "batch_size", "max_epochs", "patience", "seed", "sharing", "decode", "encoder",
                "context", "vocab_max_size"},
               "config");
    read(j, "learning_rate", c.learning_rate);
    read(j, "encoder_output_dropout", c.encoder_output_dropout);
    read(j, "slot_value_dropout", c.slot_value_dropout);
    if (j.contains("loss_weights")) {
      const auto& w = j.at("loss_weights");
      check_keys(w, {"cls", "start", "end"}, "loss_weights");
      read(w, "cls", c.loss_weights.cls);
      read(w, "start", c.loss_weights.start);
      read(w, "end", c.loss_weights.end);
    }
    read(j, "batch_size", c.batch_size);
    read(j, "max_epochs", c.max_epochs);
    read(j, "patience", c.patience);
    read(j, "seed", c.seed);
    if (j.contains("sharing")) c.sharing = parse_sharing_mode(j.at("sharing").get<std::string>());
    if (j.contains("decode")) c.decode = parse_decode_mode(j.at("decode").get<std::string>());
    if (j.contains("encoder")) {
      const auto& e = j.at("encoder");
      check_keys(e,
                 {"num_layers", "hidden_size", "num_heads", "feed_forward_size", "max_positions",
                  "dropout_rate", "layer_norm_epsilon"},
                 "encoder");
      read(e, "num_layers", c.encoder.num_layers);
      read(e, "hidden_size", c.encoder.hidden_size);
      read(e, "num_heads", c.encoder.num_heads);
      read(e, "feed_forward_size", c.encoder.feed_forward_size);
      read(e, "max_positions", c.encoder.max_positions);
      read(e, "dropout_rate", c.encoder.dropout_rate);
      read(e, "layer_norm_epsilon", c.encoder.layer_norm_epsilon);
    }
    if (j.contains("context")) {
      const auto& x = j.at("context");
      check_keys(x, {"max_len", "append_final_sep"}, "context");
      read(x, "max_len", c.context.max_len);
      read(x, "append_final_sep", c.context.append_final_sep);
    }
    read(j, "vocab_max_size", c.vocab_max_size);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str());
}

std::string train_config_to_json(const TrainConfig& c) {
  json j;
  j["learning_rate"] = c.learning_rate;
  j["encoder_output_dropout"] = c.encoder_output_dropout;
  j["slot_value_dropout"] = c.slot_value_dropout;
  j["loss_weights"] = {{"cls", c.loss_weights.cls}, {"start", c.loss_weights.start}, {"end", c.loss_weights.end}};
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["sharing"] = sharing_mode_name(c.sharing);
  j["decode"] = decode_mode_name(c.decode);
  j["encoder"] = {{"num_layers", c.encoder.num_layers},
                  {"hidden_size", c.encoder.hidden_size},
                  {"num_heads", c.encoder.num_heads},
                  {"feed_forward_size", c.encoder.feed_forward_size},
                  {"max_positions", c.encoder.max_positions},
                  {"dropout_rate", c.encoder.dropout_rate},
                  {"layer_norm_epsilon", c.encoder.layer_norm_epsilon}};
  j["context"] = {{"max_len", c.context.max_len}, {"append_final_sep", c.context.append_final_sep}};
  j["vocab_max_size"] = c.vocab_max_size;
  return j.dump(2) + "\n";
}

std::vector<TurnExample> build_examples(const DialogueCorpus& corpus, const Vocab& vocab,
                                        const ContextOptions& options, ExampleStats* stats) {
  ExampleStats local;
  auto& st = stats ? *stats : local;
  std::vector<TurnExample> out;
  for (std::size_t d = 0; d < corpus.dialogues.size(); ++d) {
    const auto& dlg = corpus.dialogues[d];
    for (std::size_t t = 0; t < dlg.turns.size(); ++t) {
      const auto& turn = dlg.turns[t];
      ++st.turns;
      TurnExample ex;
      ex.ctx = build_context(turn.system, turn.user, vocab, options);
      ex.dialogue = d;
      ex.turn = t;
      bool keep = true;
      for (const auto& slot : corpus.slots) {
        SlotTarget target;
        auto it = turn.labels.find(slot);
        if (it != turn.labels.end()) target.cls = it->second.cls;
        if (target.cls == SlotClass::Span) {
          const auto& label = it->second;
          std::optional<CharSpan> chars;
          if (label.has_offsets()) {
            chars = CharSpan{*label.source, *label.char_start, *label.char_end};
          } else {
            chars = derive_char_span(turn.system, turn.user, label.value);
          }
          if (!chars) {
            ++st.dropped_not_found;
            st.warnings.push_back("dialogue '" + dlg.id + "' turn " + std::to_string(t) + ": value '" +
                                  label.value + "' of slot '" + slot + "' not found; turn dropped");
            keep = false;
            break;
          }
          try {
            target.span = align_span(*chars, ex.ctx);
          } catch (const AlignmentError& e) {
            ++st.dropped_alignment;
            st.warnings.push_back("dialogue '" + dlg.id + "' turn " + std::to_string(t) + ": " +
                                  e.what() + "; turn dropped");
            keep = false;
            break;
          }
        }
        ex.targets.push_back(target);
      }
      if (!keep) continue;
      ++st.kept;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

Var turn_loss(const TurnOutputs& outputs, std::span<const SlotTarget> targets, const LossWeights& w) {
  if (outputs.slots.size() != targets.size() || targets.empty()) {
    throw ArgumentError("turn_loss: " + std::to_string(outputs.slots.size()) + " slot outputs for " +
                        std::to_string(targets.size()) + " targets");
  }
  std::vector<Var> per_slot;
  per_slot.reserve(targets.size());
  for (std::size_t s = 0; s < targets.size(); ++s) {
    const auto& o = outputs.slots[s];
    const auto& t = targets[s];
    std::vector<Var> terms{ad::cross_entropy(o.class_logits, static_cast<std::size_t>(t.cls))};
    std::vector<Real> weights{static_cast<Real>(w.cls)};
    if (t.cls == SlotClass::Span) {
      if (t.span.start < 1 || t.span.start > t.span.end || t.span.end > o.span.start.size()) {
        throw ArgumentError("turn_loss: span target outside positions 1..n");
      }
      terms.push_back(ad::cross_entropy(o.span.start, t.span.start - 1));
      terms.push_back(ad::cross_entropy(o.span.end, t.span.end - 1));
      weights.push_back(static_cast<Real>(w.start));
      weights.push_back(static_cast<Real>(w.end));
    }
    per_slot.push_back(ad::weighted_sum(terms, weights));
  }
  return ad::mean(per_slot);
}

EncodedContext apply_slot_value_dropout(const EncodedContext& ctx, std::span<const TokenSpan> spans,
                                        double p, Rng& rng, TokenId unk_id) {
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("slot value dropout probability outside [0, 1]");
  EncodedContext out = ctx;
  if (p == 0.0) return out;
  std::vector<std::uint8_t> target(ctx.length(), 0);
  for (const auto& s : spans) {
    if (s.start > s.end || s.end >= ctx.length()) throw ArgumentError("slot value dropout: span out of range");
    for (std::size_t i = s.start; i <= s.end; ++i) target[i] = 1;
  }
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] && (p >= 1.0 || rng.bernoulli(p))) out.token_ids[i] = unk_id;
  }
  return out;
}

bool EarlyStopper::update(double metric) {
  ++epoch_;
  if (metric > best_) {
    best_ = metric;
    best_epoch_ = epoch_;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

std::string EpochRecord::to_json_line() const {
  json j;
  j["epoch"] = epoch;
  j["train_loss"] = train_loss;
  j["val_joint_acc"] = val_joint_acc;
  j["timestamp"] = timestamp;
  return j.dump();
}

ModelBundle initial_model(const DialogueCorpus& train_corpus, const TrainConfig& cfg) {
  cfg.validate();
  std::vector<std::string> texts;
  for (const auto& d : train_corpus.dialogues) {
    for (const auto& t : d.turns) {
      texts.push_back(t.system);
      texts.push_back(t.user);
    }
  }
  auto vocab = Vocab::build(texts, cfg.vocab_max_size);
  Rng rng(derive_seed(cfg.seed, kInitStream));
  return ModelBundle::create(cfg.encoder, cfg.sharing, train_corpus.slots, std::move(vocab), cfg.context,
                             cfg.decode, rng);
}

TrainResult train(const DialogueCorpus& train_corpus, const DialogueCorpus& val_corpus,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  return train(initial_model(train_corpus, cfg), train_corpus, val_corpus, cfg, on_epoch);
}

TrainResult train(ModelBundle model, const DialogueCorpus& train_corpus,
                  const DialogueCorpus& val_corpus, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_corpus.dialogues.empty()) throw ArgumentError("training corpus is empty");
  if (val_corpus.dialogues.empty()) throw ArgumentError("validation corpus is empty");
  if (train_corpus.slots != model.slots || val_corpus.slots != model.slots) {
    throw ArgumentError("corpus schema does not match the model's slots");
  }

  TrainHistory history;
  const auto examples = build_examples(train_corpus, model.vocab, model.context, &history.train_examples);
  if (examples.empty()) throw ArgumentError("no usable training examples");

  auto params = model.parameters();
  AdamHyper hyper;
  hyper.learning_rate = cfg.learning_rate;
  AdamState adam(hyper, params);
  EarlyStopper stopper(cfg.patience);
  ModelBundle best = model;
  const TokenId unk = model.vocab.unk_id();

  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, kShuffleStream, epoch));
    shuffle_rng.shuffle(order.begin(), order.end());
    const std::uint64_t epoch_seed = derive_seed(cfg.seed, kExampleStream, epoch);

    double loss_sum = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - b0);
      std::vector<std::unique_ptr<Tape>> tapes(n);
      std::vector<double> losses(n);
      model.zero_grad();
#pragma omp parallel for schedule(static)
      for (std::size_t i = 0; i < n; ++i) {
        const auto& ex = examples[order[b0 + i]];
        Rng rng(derive_seed(epoch_seed, order[b0 + i]));
        const EncodedContext* ctx = &ex.ctx;
        EncodedContext dropped;
        if (cfg.slot_value_dropout > 0.0) {
          std::vector<TokenSpan> spans;
          for (const auto& t : ex.targets) {
            if (t.cls == SlotClass::Span) spans.push_back(t.span);
          }
          dropped = apply_slot_value_dropout(ex.ctx, spans, cfg.slot_value_dropout, rng, unk);
          ctx = &dropped;
        }
        tapes[i] = std::make_unique<Tape>(true);
        const auto out = forward_turn(*tapes[i], model, *ctx, true, cfg.encoder_output_dropout, rng);
        const auto loss = turn_loss(out, ex.targets, cfg.loss_weights);
        losses[i] = loss.value().values()[0];
        tapes[i]->backward(loss, false);
      }
      for (std::size_t i = 0; i < n; ++i) {
        tapes[i]->flush_param_grads();
        tapes[i].reset();
        loss_sum += losses[i];
      }
      const Real inv = Real(1) / static_cast<Real>(n);
      for (auto* p : params) {
        for (auto& g : p->grad()) g *= inv;
      }
      adam_step(params, adam);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(examples.size());
    if (!std::isfinite(rec.train_loss)) {
      throw NumericError("training loss became non-finite in epoch " + std::to_string(epoch));
    }
    rec.val_joint_acc = evaluate(model, val_corpus).joint_goal_accuracy;
    rec.timestamp = utc_now();
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (stopper.update(rec.val_joint_acc)) best = model;
    if (stopper.should_stop()) {
      history.early_stopped = epoch < cfg.max_epochs;
      break;
    }
  }
  history.best_epoch = stopper.best_epoch();
  history.best_val_joint_acc = stopper.best();
  best.zero_grad();
  return {std::move(best), std::move(history)};
}

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
