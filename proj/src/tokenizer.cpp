#include "bdst/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

namespace {

constexpr std::size_t kMaxCharsPerWord = 100;

}  // namespace

std::u32string utf8_decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1f;
      extra = 1;
    } else if ((c >> 4) == 0xe) {
      cp = c & 0x0f;
      extra = 2;
    } else if ((c >> 3) == 0x1e) {
      cp = c & 0x07;
      extra = 3;
    } else {
      out.push_back(U'�');
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      if (i + k >= s.size()) {
        ok = false;
        break;
      }
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3f);
    }
    if (!ok) {
      out.push_back(U'�');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

std::string utf8_encode(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
      out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
  }
  return out;
}

std::string utf8_substr(std::string_view s, std::size_t start, std::size_t end) {
  const auto cps = utf8_decode(s);
  start = std::min(start, cps.size());
  end = std::clamp(end, start, cps.size());
  return utf8_encode(std::u32string_view(cps).substr(start, end - start));
}

char32_t fold_case(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  return c;
}

std::string lowercase(std::string_view s) {
  auto cps = utf8_decode(s);
  for (auto& c : cps) c = fold_case(c);
  return utf8_encode(cps);
}

bool is_punctuation(char32_t c) {
  if ((c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
      (c >= 123 && c <= 126)) {
    return true;
  }
  // Latin-1 punctuation, General Punctuation and CJK symbol blocks.
  return (c >= 0xA1 && c <= 0xBF && c != 0xAA && c != 0xB5 && c != 0xBA) ||
         (c >= 0x2010 && c <= 0x205E) || (c >= 0x3000 && c <= 0x303F);
}

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
         c == 0xA0 || c == 0x2028 || c == 0x2029 || (c >= 0x2000 && c <= 0x200A) || c == 0x3000;
}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw ArgumentError("vocab: duplicate token '" + tokens_[i] + "' at id " + std::to_string(i));
    }
  }
  auto reserved = [this](std::string_view t) {
    auto id = find(t);
    if (!id) throw ArgumentError("vocab: missing reserved token " + std::string(t));
    return *id;
  };
  pad_ = reserved(kPad);
  unk_ = reserved(kUnk);
  cls_ = reserved(kCls);
  sep_ = reserved(kSep);
}

Vocab Vocab::build(std::span<const std::string> texts, std::size_t max_size) {
  std::map<std::u32string, std::size_t> word_counts;
  for (const auto& text : texts) {
    for (const auto& w : pre_tokenize(text)) ++word_counts[w.text];
  }
  std::map<std::u32string, std::size_t> suffix_counts;
  for (const auto& [w, count] : word_counts) {
    for (std::size_t i = 1; i < w.size(); ++i) suffix_counts[w.substr(i)] += count;
  }
  auto by_frequency = [](const std::map<std::u32string, std::size_t>& counts) {
    std::vector<std::pair<std::u32string, std::size_t>> v(counts.begin(), counts.end());
    std::stable_sort(v.begin(), v.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return v;
  };

  std::vector<std::string> tokens{std::string(kPad), std::string(kUnk), std::string(kCls),
                                  std::string(kSep)};
  std::unordered_map<std::string, bool> seen;
  for (const auto& t : tokens) seen[t] = true;
  auto add = [&](std::string t) {
    if (tokens.size() >= max_size || seen.count(t)) return;
    seen[t] = true;
    tokens.push_back(std::move(t));
  };
  for (const auto& [w, _] : by_frequency(word_counts)) add(utf8_encode(w));
  for (const auto& [s, _] : by_frequency(suffix_counts)) add(std::string(kContinuation) + utf8_encode(s));
  return Vocab(std::move(tokens));
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return Vocab(std::move(tokens));
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write vocabulary file " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<Word> pre_tokenize(std::string_view text) {
  const auto cps = utf8_decode(text);
  std::vector<Word> words;
  Word cur;
  bool in_word = false;
  auto flush = [&](std::size_t end) {
    if (in_word) {
      cur.char_end = end;
      words.push_back(std::move(cur));
      cur = Word{};
      in_word = false;
    }
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t c = cps[i];
    if (is_space(c)) {
      flush(i);
    } else if (is_punctuation(c)) {
      flush(i);
      words.push_back(Word{std::u32string(1, c), i, i + 1});
    } else {
      if (!in_word) {
        cur.char_start = i;
        in_word = true;
      }
      cur.text.push_back(fold_case(c));
    }
  }
  flush(cps.size());
  return words;
}

std::vector<WordPiece> wordpiece_tokenize(std::string_view text, const Vocab& vocab) {
  std::vector<WordPiece> out;
  for (const auto& word : pre_tokenize(text)) {
    const auto& w = word.text;
    std::vector<WordPiece> pieces;
    bool bad = w.size() > kMaxCharsPerWord;
    std::size_t start = 0;
    while (!bad && start < w.size()) {
      std::size_t end = w.size();
      std::optional<TokenId> found;
      std::string piece;
      while (start < end) {
        piece = utf8_encode(std::u32string_view(w).substr(start, end - start));
        if (start > 0) piece.insert(0, Vocab::kContinuation);
        found = vocab.find(piece);
        if (found) break;
        --end;
      }
      if (!found) {
        bad = true;
        break;
      }
      pieces.push_back({piece, *found, word.char_start + start, word.char_start + end});
      start = end;
    }
    if (bad) {
      out.push_back({std::string(Vocab::kUnk), vocab.unk_id(), word.char_start, word.char_end});
    } else {
      out.insert(out.end(), pieces.begin(), pieces.end());
    }
  }
  return out;
}

std::string_view source_name(Source s) { return s == Source::System ? "system" : "user"; }

Source parse_source(std::string_view s) {
  if (s == "system") return Source::System;
  if (s == "user") return Source::User;
  throw ArgumentError("unknown utterance source '" + std::string(s) + "'");
}

std::vector<std::uint8_t> EncodedContext::valid_span_mask() const {
  std::vector<std::uint8_t> mask(token_ids.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = token_char_spans[i].has_value();
  return mask;
}

EncodedContext build_context(std::string_view system_utt, std::string_view user_utt,
                             const Vocab& vocab, const ContextOptions& options) {
  if (options.max_len < 4) {
    throw ArgumentError("build_context: max_len " + std::to_string(options.max_len) + " < 4");
  }
  auto sys = wordpiece_tokenize(system_utt, vocab);
  auto usr = wordpiece_tokenize(user_utt, vocab);
  const std::size_t specials = options.append_final_sep ? 3 : 2;
  while (sys.size() + usr.size() + specials > options.max_len) {
    if (sys.size() > usr.size()) {
      sys.pop_back();
    } else {
      usr.pop_back();
    }
  }

  EncodedContext ctx;
  const std::size_t total = sys.size() + usr.size() + specials;
  ctx.token_ids.reserve(total);
  ctx.segment_ids.reserve(total);
  ctx.token_char_spans.reserve(total);
  auto push = [&](TokenId id, std::uint8_t seg, std::optional<CharSpan> span) {
    ctx.token_ids.push_back(id);
    ctx.segment_ids.push_back(seg);
    ctx.token_char_spans.push_back(span);
  };
  push(vocab.cls_id(), 0, std::nullopt);
  for (const auto& p : sys) push(p.id, 0, CharSpan{Source::System, p.char_start, p.char_end});
  ctx.sep_index = ctx.token_ids.size();
  push(vocab.sep_id(), 0, std::nullopt);
  for (const auto& p : usr) push(p.id, 1, CharSpan{Source::User, p.char_start, p.char_end});
  if (options.append_final_sep) push(vocab.sep_id(), 1, std::nullopt);
  return ctx;
}

TokenSpan align_span(const CharSpan& span, const EncodedContext& ctx) {
  std::optional<std::size_t> first, last;
  for (std::size_t i = 0; i < ctx.length(); ++i) {
    const auto& cs = ctx.token_char_spans[i];
    if (!cs || cs->source != span.source) continue;
    if (cs->end > span.start && cs->start < span.end) {
      if (!first) first = i;
      last = i;
    }
  }
  if (!first) {
    throw AlignmentError("character span [" + std::to_string(span.start) + ", " +
                         std::to_string(span.end) + ") in " + std::string(source_name(span.source)) +
                         " utterance covers no kept token");
  }
  const auto& head = *ctx.token_char_spans[*first];
  const auto& tail = *ctx.token_char_spans[*last];
  if (head.start > span.start || tail.end < span.end) {
    throw AlignmentError("character span [" + std::to_string(span.start) + ", " +
                         std::to_string(span.end) + ") extends past the kept tokens");
  }
  return {*first, *last};
}

CharSpan token_span_chars(const TokenSpan& span, const EncodedContext& ctx) {
  if (span.start > span.end || span.end >= ctx.length()) {
    throw ArgumentError("token span [" + std::to_string(span.start) + ", " +
                        std::to_string(span.end) + "] outside context");
  }
  const auto& a = ctx.token_char_spans[span.start];
  const auto& b = ctx.token_char_spans[span.end];
  if (!a || !b || a->source != b->source) {
    throw ArgumentError("token span does not lie within one utterance");
  }
  return {a->source, a->start, b->end};
}

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
