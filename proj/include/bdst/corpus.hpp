#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bdst/heads.hpp"
#include "bdst/tracker.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

/// Per-turn annotation of one slot. cls == Span means a specified value.
struct SlotLabel {
  SlotClass cls = SlotClass::None;
  std::string value;
  std::optional<Source> source;
  std::optional<std::size_t> char_start;
  std::optional<std::size_t> char_end;

  bool has_offsets() const { return source && char_start && char_end; }
  friend bool operator==(const SlotLabel&, const SlotLabel&) = default;
};

struct Turn {
  std::string system;  // empty on the first turn
  std::string user;
  std::map<std::string, SlotLabel> labels;  // absent slot = none
  DialogueState state;                      // gold accumulated state
  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Dialogue {
  std::string id;
  std::vector<Turn> turns;
  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

/// Slot names only; no value inventory.
struct DialogueCorpus {
  std::vector<std::string> slots;
  std::vector<Dialogue> dialogues;

  std::size_t turn_count() const;
  friend bool operator==(const DialogueCorpus&, const DialogueCorpus&) = default;
};

class CorpusError : public Error {
 public:
  enum class Kind { Parse, UnknownSlot, OffsetMismatch, StateInconsistent, Schema };
  CorpusError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Structural checks plus offset and gold-state consistency. Throws
/// CorpusError with dialogue/turn coordinates.
void validate_corpus(const DialogueCorpus& corpus);

/// Parses and validates. Value labels without offsets get them from
/// derive_char_span; values that cannot be found are left without offsets
/// and reported through `warnings` when given.
DialogueCorpus parse_corpus(std::string_view json_text, std::vector<std::string>* warnings = nullptr);
DialogueCorpus load_corpus(const std::filesystem::path& path,
                           std::vector<std::string>* warnings = nullptr);
std::string corpus_to_json(const DialogueCorpus& corpus);
void save_corpus(const DialogueCorpus& corpus, const std::filesystem::path& path);

/// Last case-insensitive, word-bounded occurrence of value in context order
/// (system utterance, then user utterance).
std::optional<CharSpan> derive_char_span(std::string_view system_utt, std::string_view user_utt,
                                         std::string_view value);

/// Gold states obtained by folding turn labels with the update rule.
std::vector<DialogueState> fold_labels(const Dialogue& dialogue);

struct SlotStats {
  std::size_t unique_values = 0;
  /// Unique values absent from the reference corpus (0 without a reference).
  std::size_t oov_values = 0;
  std::size_t none_labels = 0;
  std::size_t dontcare_labels = 0;
  std::size_t value_labels = 0;
};

struct CorpusStats {
  std::size_t dialogues = 0;
  std::size_t turns = 0;
  std::map<std::string, SlotStats> slots;
};

/// Unique values compare case-insensitively.
CorpusStats corpus_stats(const DialogueCorpus& corpus, const DialogueCorpus* reference = nullptr);
std::string stats_to_json(const CorpusStats& stats);

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
