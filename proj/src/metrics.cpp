#include "bdst/metrics.hpp"

#include <omp.h>

#include <json.hpp>

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

bool values_match(std::string_view a, std::string_view b) { return lowercase(a) == lowercase(b); }

namespace {

bool slot_matches(const DialogueState& p, const DialogueState& g, const std::string& slot) {
  auto pi = p.find(slot);
  auto gi = g.find(slot);
  if (pi == p.end() || gi == g.end()) return pi == p.end() && gi == g.end();
  return values_match(pi->second, gi->second);
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ArgumentError("predicted and gold state sequences differ in length (" + std::to_string(a) +
                        " vs " + std::to_string(b) + ")");
  }
}

std::string format_double(double v) {
  nlohmann::json j = v;
  return j.dump();
}

}  // namespace

double joint_goal_accuracy(const std::vector<DialogueState>& predicted,
                           const std::vector<DialogueState>& gold) {
  check_lengths(predicted.size(), gold.size());
  if (gold.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    bool all = true;
    for (const auto* m : {&predicted[t], &gold[t]}) {
      for (const auto& [slot, _] : *m) all = all && slot_matches(predicted[t], gold[t], slot);
    }
    hits += all;
  }
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

std::map<std::string, double> per_slot_accuracy(const std::vector<DialogueState>& predicted,
                                                const std::vector<DialogueState>& gold,
                                                const std::vector<std::string>& schema) {
  check_lengths(predicted.size(), gold.size());
  std::map<std::string, double> out;
  for (const auto& slot : schema) {
    if (gold.empty()) {
      out[slot] = 0.0;
      continue;
    }
    std::size_t hits = 0;
    for (std::size_t t = 0; t < gold.size(); ++t) hits += slot_matches(predicted[t], gold[t], slot);
    out[slot] = static_cast<double>(hits) / static_cast<double>(gold.size());
  }
  return out;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["joint_goal_accuracy"] = joint_goal_accuracy;
  j["per_slot_accuracy"] = nlohmann::ordered_json::object();
  for (const auto& [slot, acc] : per_slot_accuracy) j["per_slot_accuracy"][slot] = acc;
  j["turn_count"] = turn_count;
  j["dialogue_count"] = dialogue_count;
  j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config) j["config"][k] = v;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

std::vector<DialogueState> track_corpus(const ModelBundle& model, const DialogueCorpus& corpus) {
  const auto n = corpus.dialogues.size();
  std::vector<std::vector<DialogueState>> per_dialogue(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t d = 0; d < n; ++d) {
    std::vector<TurnText> turns;
    for (const auto& t : corpus.dialogues[d].turns) turns.emplace_back(t.system, t.user);
    per_dialogue[d] = track_dialogue(model, turns);
  }
  std::vector<DialogueState> out;
  for (auto& states : per_dialogue) {
    for (auto& s : states) out.push_back(std::move(s));
  }
  return out;
}

std::vector<DialogueState> gold_states(const DialogueCorpus& corpus) {
  std::vector<DialogueState> out;
  for (const auto& d : corpus.dialogues) {
    for (const auto& t : d.turns) out.push_back(t.state);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> describe_model(const ModelBundle& model) {
  const auto& c = model.encoder_config;
  return {{"sharing", std::string(sharing_mode_name(model.sharing))},
          {"decode", std::string(decode_mode_name(model.decode))},
          {"num_layers", std::to_string(c.num_layers)},
          {"hidden_size", std::to_string(c.hidden_size)},
          {"num_heads", std::to_string(c.num_heads)},
          {"feed_forward_size", std::to_string(c.feed_forward_size)},
          {"vocab_size", std::to_string(c.vocab_size)},
          {"max_len", std::to_string(model.context.max_len)},
          {"dropout_rate", format_double(c.dropout_rate)},
          {"parameter_count", std::to_string(model.parameter_count())}};
}

EvalReport evaluate(const ModelBundle& model, const DialogueCorpus& corpus) {
  if (corpus.slots != model.slots) throw ArgumentError("corpus schema does not match the model's slots");
  const auto pred = track_corpus(model, corpus);
  const auto gold = gold_states(corpus);
  EvalReport r;
  r.joint_goal_accuracy = joint_goal_accuracy(pred, gold);
  r.per_slot_accuracy = per_slot_accuracy(pred, gold, corpus.slots);
  r.turn_count = gold.size();
  r.dialogue_count = corpus.dialogues.size();
  r.config = describe_model(model);
  return r;
}

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
