#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bdst/corpus.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

/// Case-insensitive exact comparison; no other normalization.
bool values_match(std::string_view a, std::string_view b);

/// Fraction of turns whose states agree on every slot. An absent slot only
/// matches an absent slot. Throws ArgumentError on length mismatch.
double joint_goal_accuracy(const std::vector<DialogueState>& predicted,
                           const std::vector<DialogueState>& gold);

std::map<std::string, double> per_slot_accuracy(const std::vector<DialogueState>& predicted,
                                                const std::vector<DialogueState>& gold,
                                                const std::vector<std::string>& schema);

struct EvalReport {
  double joint_goal_accuracy = 0.0;
  std::map<std::string, double> per_slot_accuracy;
  std::size_t turn_count = 0;
  std::size_t dialogue_count = 0;
  std::vector<std::pair<std::string, std::string>> config;
  std::uint64_t seed = 0;

  std::string to_json() const;
};

/// Tracked states for every turn, dialogues in corpus order, flattened.
/// Dialogues are tracked in parallel.
std::vector<DialogueState> track_corpus(const ModelBundle& model, const DialogueCorpus& corpus);
std::vector<DialogueState> gold_states(const DialogueCorpus& corpus);

/// Throws ArgumentError if the corpus schema differs from the model's slots.
EvalReport evaluate(const ModelBundle& model, const DialogueCorpus& corpus);

/// The model's configuration as report key/value pairs.
std::vector<std::pair<std::string, std::string>> describe_model(const ModelBundle& model);

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
