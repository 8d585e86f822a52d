#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "bdst/corpus.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

struct LossWeights {
  double cls = 0.8;
  double start = 0.1;
  double end = 0.1;
};

/// Learning rate defaults to 1e-3 for from-scratch desk-scale models; the
/// fine-tuning value 2e-5 is kFineTuneLearningRate.
struct TrainConfig {
  static constexpr double kFineTuneLearningRate = 2e-5;

  double learning_rate = 1e-3;
  double encoder_output_dropout = 0.3;
  double slot_value_dropout = 0.0;
  LossWeights loss_weights;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  SharingMode sharing = SharingMode::Shared;
  DecodeMode decode = DecodeMode::Independent;
  EncoderConfig encoder;  // vocab_size is taken from the built vocabulary
  ContextOptions context;
  std::size_t vocab_max_size = 4000;

  void validate() const;
};

/// JSON with exactly the TrainConfig keys (encoder and context nested).
/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig parse_train_config(std::string_view json_text);
TrainConfig load_train_config(const std::filesystem::path& path);
std::string train_config_to_json(const TrainConfig& cfg);

struct SlotTarget {
  SlotClass cls = SlotClass::None;
  TokenSpan span;  // context positions, meaningful when cls == Span
};

struct TurnExample {
  EncodedContext ctx;
  std::vector<SlotTarget> targets;  // schema order
  std::size_t dialogue = 0;
  std::size_t turn = 0;
};

struct ExampleStats {
  std::size_t turns = 0;
  std::size_t kept = 0;
  std::size_t dropped_not_found = 0;
  std::size_t dropped_alignment = 0;
  std::vector<std::string> warnings;
};

/// Value labels resolve through their char offsets, or the last occurrence
/// when offsets are absent. Turns with a value that cannot be located or
/// aligned are dropped and counted.
std::vector<TurnExample> build_examples(const DialogueCorpus& corpus, const Vocab& vocab,
                                        const ContextOptions& options, ExampleStats* stats = nullptr);

/// Mean over slots of w_cls*CE(class) + w_start*CE(start) + w_end*CE(end);
/// span terms are absent for none and dontcare targets.
Var turn_loss(const TurnOutputs& outputs, std::span<const SlotTarget> targets, const LossWeights& w);

/// Each token inside any of the spans becomes [UNK] with probability p.
/// p = 1 replaces every span token.
EncodedContext apply_slot_value_dropout(const EncodedContext& ctx, std::span<const TokenSpan> spans,
                                        double p, Rng& rng, TokenId unk_id);

/// Stops after `patience` consecutive epochs without strict improvement.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

  /// Returns true when the metric is a new best.
  bool update(double metric);
  bool should_stop() const { return stale_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }  // 1-based, 0 before any update
  double best() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t stale_ = 0;
  double best_ = -std::numeric_limits<double>::infinity();
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_joint_acc = 0.0;
  std::string timestamp;  // UTC, ISO 8601

  std::string to_json_line() const;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_joint_acc = 0.0;
  bool early_stopped = false;
  ExampleStats train_examples;
};

struct TrainResult {
  ModelBundle model;  // best-validation snapshot
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Vocabulary from the training utterances and a freshly initialized model.
ModelBundle initial_model(const DialogueCorpus& train_corpus, const TrainConfig& cfg);

TrainResult train(ModelBundle model, const DialogueCorpus& train_corpus,
                  const DialogueCorpus& val_corpus, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});
TrainResult train(const DialogueCorpus& train_corpus, const DialogueCorpus& val_corpus,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
