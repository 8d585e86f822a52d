#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bdst/corpus.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

class GenerationError : public Error {
 public:
  using Error::Error;
};

/// Values for one slot. `oov` is non-empty only for designated OOV slots and
/// must be disjoint from `train`.
struct SlotLexicon {
  std::vector<std::string> train;
  std::vector<std::string> oov;
};

/// Templates use "{v}" as the value placeholder.
struct SlotTemplates {
  std::vector<std::string> inform;    // user states a value
  std::vector<std::string> request;   // system asks, no value
  std::vector<std::string> offer;     // system proposes a value
  std::vector<std::string> dontcare;  // user waives the slot; empty = never
  std::vector<std::string> change;    // user revises an earlier value
};

struct GeneratorProfile {
  std::string name;
  std::vector<std::string> slots;
  std::vector<std::string> oov_slots;
  std::map<std::string, SlotLexicon> lexicons;
  std::map<std::string, SlotTemplates> templates;

  std::vector<std::string> greetings;        // user, no slot information
  std::vector<std::string> confirmations;    // user accepts a system offer
  std::vector<std::string> rejections;       // user declines an offer, "{v}" = wanted value
  std::vector<std::string> connectors;       // joins two informs in one user turn
  std::vector<std::string> system_closings;
  std::vector<std::string> user_closings;
  std::vector<std::string> anything_else;    // system prompt before a change of mind

  std::size_t min_goal_slots = 1;
  std::size_t max_goal_slots = 1;
  double dontcare_rate = 0.1;
  double greeting_rate = 0.3;
  double multi_inform_rate = 0.3;
  double offer_rate = 0.2;
  double wrong_offer_rate = 0.1;
  double change_rate = 0.15;
  double closing_rate = 0.5;

  std::uint64_t seed = 1;
  std::size_t train_dialogues = 0;
  std::size_t dev_dialogues = 0;
  std::size_t test_dialogues = 0;

  void validate() const;
};

/// "sim-m-like" (movie booking, OOV slot movie) or "sim-r-like" (restaurant
/// booking, OOV slot restaurant_name). Split sizes default to the original
/// Sim-M / Sim-R dialogue counts.
GeneratorProfile builtin_profile(std::string_view name, std::uint64_t seed = 1);
std::vector<std::string> builtin_profile_names();

struct GeneratedSplits {
  DialogueCorpus train;
  DialogueCorpus dev;
  DialogueCorpus test;
};

/// Dev and test draw OOV-slot values from the OOV lexicon only; train draws
/// every slot from its train lexicon.
GeneratedSplits generate_synthetic(const GeneratorProfile& profile);

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
