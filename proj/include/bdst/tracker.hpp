#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bdst/model.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

inline constexpr std::string_view kDontcare = "dontcare";

struct SlotPrediction {
  SlotClass cls = SlotClass::None;
  std::optional<TokenSpan> span;
  /// Original-casing text covered by the span; present iff cls == Span.
  std::optional<std::string> value;
  SlotClassDistribution probabilities;
};

/// Turn-level output, keyed by slot name.
struct TurnPrediction {
  std::map<std::string, SlotPrediction> slots;
};

/// Slot -> "dontcare" or a value string. Absent slots are untracked (none).
using DialogueState = std::map<std::string, std::string>;

/// Text covered by a token span, taken from the original utterance. A span
/// whose ends fall in different utterances is cut at the end of the start
/// token's utterance.
std::string extract_value(const EncodedContext& ctx, TokenSpan span, std::string_view system_utt,
                          std::string_view user_utt);

TurnPrediction predict_turn(const ModelBundle& model, std::string_view system_utt,
                            std::string_view user_utt);

/// span -> set the value, dontcare -> set dontcare, none -> leave unchanged.
DialogueState update_state(DialogueState prev, const TurnPrediction& turn);

using TurnText = std::pair<std::string, std::string>;  // (system, user)

/// State after every turn, starting from the empty state.
std::vector<DialogueState> track_dialogue(const ModelBundle& model,
                                          const std::vector<TurnText>& turns);

/// Folds update_state over precomputed turn predictions.
std::vector<DialogueState> fold_states(const std::vector<TurnPrediction>& turns);

// Model file I/O. Layout (little-endian): "BDST", u32 version, u32 header
// length + JSON header, u32 block count, blocks of (u32 name length, name,
// u32 rank, u32 dims..., f32 values), u32 CRC-32 of all preceding bytes.

class ModelFormatError : public Error {
 public:
  using Error::Error;
};
class ModelVersionError : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};
class ModelTruncatedError : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};
class ModelChecksumError : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

std::vector<std::uint8_t> serialize_model(ModelBundle& model);
ModelBundle deserialize_model(std::span<const std::uint8_t> bytes);
void save_model(ModelBundle& model, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

struct ModelFileSummary {
  std::uint32_t version = 0;
  std::size_t block_count = 0;
  std::size_t stored_scalars = 0;
};

/// Counts stored parameter scalars without building a model.
ModelFileSummary inspect_model_file(const std::filesystem::path& path);
ModelFileSummary inspect_model_bytes(std::span<const std::uint8_t> bytes);

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
