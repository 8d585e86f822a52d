#pragma once

#include <map>
#include <string>
#include <vector>

#include "bdst/metrics.hpp"
#include "bdst/training.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

/// Slots with at least one test value never seen as a training value.
std::vector<std::string> detect_oov_slots(const DialogueCorpus& train, const DialogueCorpus& test);

struct SvdRow {
  double p = 0.0;
  EvalReport report;
  /// Mean per-slot accuracy over the OOV slots.
  double oov_accuracy = 0.0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
};

struct SvdAblation {
  std::vector<std::string> oov_slots;
  std::vector<SvdRow> rows;

  /// p, joint accuracy, OOV accuracy, then one column per slot.
  std::string to_csv() const;
  /// Whitespace-separated columns with a '#' header, for gnuplot and friends.
  std::string to_dat() const;
};

/// One model per grid value, all with base_cfg's seed; evaluated on test.
SvdAblation run_svd_ablation(const DialogueCorpus& train, const DialogueCorpus& dev,
                             const DialogueCorpus& test, const TrainConfig& base_cfg,
                             const std::vector<double>& grid, std::vector<std::string> oov_slots = {});

struct SharingRow {
  SharingMode mode = SharingMode::Shared;
  EvalReport report;
  double wall_seconds = 0.0;
  std::size_t parameter_count = 0;
  std::size_t encoder_parameter_count = 0;  // one encoder
  std::size_t serialized_scalars = 0;
};

struct SharingComparison {
  std::vector<SharingRow> rows;  // SS then PS
  std::string to_csv() const;
  std::string to_json() const;
};

/// Trains slot-specific and shared models under identical seed and config.
SharingComparison run_sharing_comparison(const DialogueCorpus& train, const DialogueCorpus& dev,
                                         const DialogueCorpus& test, const TrainConfig& base_cfg);

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
