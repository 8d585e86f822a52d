#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bdst/common.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

using TokenId = std::uint32_t;

/// Span character offsets do not map onto kept tokens.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// UTF-8 <-> code point helpers. Offsets everywhere count code points.
std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);
/// Code-point substring [start, end) of a UTF-8 string.
std::string utf8_substr(std::string_view s, std::size_t start, std::size_t end);
/// Simple case folding (ASCII and Latin-1 upper-case letters).
char32_t fold_case(char32_t c);
std::string lowercase(std::string_view s);
bool is_punctuation(char32_t c);
bool is_space(char32_t c);

class Vocab {
 public:
  static constexpr std::string_view kPad = "[PAD]";
  static constexpr std::string_view kUnk = "[UNK]";
  static constexpr std::string_view kCls = "[CLS]";
  static constexpr std::string_view kSep = "[SEP]";
  static constexpr std::string_view kContinuation = "##";

  Vocab() = default;
  /// Ids are positions in `tokens`. Throws ArgumentError on duplicates or a
  /// missing reserved token.
  explicit Vocab(std::vector<std::string> tokens);

  /// Reserved tokens, then corpus words by descending frequency, then "##"
  /// suffix pieces of those words by descending frequency, capped at
  /// max_size entries.
  static Vocab build(std::span<const std::string> texts, std::size_t max_size);

  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::optional<TokenId> find(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }

  TokenId pad_id() const { return pad_; }
  TokenId unk_id() const { return unk_; }
  TokenId cls_id() const { return cls_; }
  TokenId sep_id() const { return sep_; }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId pad_ = 0, unk_ = 0, cls_ = 0, sep_ = 0;
};

/// A pre-split word: lower-cased text plus its code-point range in the
/// original string.
struct Word {
  std::u32string text;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
};

/// Lower-cases, splits on whitespace and isolates punctuation characters.
std::vector<Word> pre_tokenize(std::string_view text);

struct WordPiece {
  std::string token;
  TokenId id = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
};

/// Greedy longest-match-first segmentation of every pre-split word. A word
/// with no full segmentation becomes one [UNK] over the whole word.
std::vector<WordPiece> wordpiece_tokenize(std::string_view text, const Vocab& vocab);

enum class Source : std::uint8_t { System = 0, User = 1 };
std::string_view source_name(Source s);
Source parse_source(std::string_view s);

struct CharSpan {
  Source source = Source::User;
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

/// Inclusive token positions inside an EncodedContext.
struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct ContextOptions {
  std::size_t max_len = 64;
  bool append_final_sep = false;
};

/// [CLS] system [SEP] user, with segment ids and per-token character spans.
struct EncodedContext {
  std::vector<TokenId> token_ids;
  std::vector<std::uint8_t> segment_ids;  // 0 = first, 1 = second
  std::vector<std::optional<CharSpan>> token_char_spans;
  std::size_t sep_index = 0;

  std::size_t length() const { return token_ids.size(); }
  /// Index of the last token.
  std::size_t last_index() const { return token_ids.size() - 1; }
  /// Positions holding an utterance token (not [CLS]/[SEP]/[PAD]).
  std::vector<std::uint8_t> valid_span_mask() const;
};

EncodedContext build_context(std::string_view system_utt, std::string_view user_utt,
                             const Vocab& vocab, const ContextOptions& options);

/// Smallest contiguous token range covering the character span.
TokenSpan align_span(const CharSpan& span, const EncodedContext& ctx);

/// Character coverage of a token range; both ends must be utterance tokens
/// of the same source.
CharSpan token_span_chars(const TokenSpan& span, const EncodedContext& ctx);

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
