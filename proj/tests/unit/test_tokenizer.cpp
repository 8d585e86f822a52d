#include <doctest.h>

#include <filesystem>

#include "bdst/rng.hpp"
#include "bdst/tokenizer.hpp"
#include "fixtures.hpp"

using namespace bdst;

namespace {

std::vector<std::string> tokens_of(const EncodedContext& ctx, const Vocab& v) {
  std::vector<std::string> out;
  for (auto id : ctx.token_ids) out.push_back(v.token(id));
  return out;
}

Vocab words_vocab(const std::vector<std::string>& words) {
  std::vector<std::string> t{"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  t.insert(t.end(), words.begin(), words.end());
  return Vocab(t);
}

}  // namespace

TEST_CASE("wordpiece examples") {
  const auto v = fixtures::small_vocab();
  auto un = wordpiece_tokenize("unaffable", v);
  REQUIRE(un.size() == 3);
  CHECK(un[0].token == "un");
  CHECK(un[1].token == "##aff");
  CHECK(un[2].token == "##able");
  CHECK(un[0].char_start == 0);
  CHECK(un[0].char_end == 2);
  CHECK(un[1].char_start == 2);
  CHECK(un[1].char_end == 5);
  CHECK(un[2].char_start == 5);
  CHECK(un[2].char_end == 9);

  auto unk = wordpiece_tokenize("qzxv", v);
  REQUIRE(unk.size() == 1);
  CHECK(unk[0].token == "[UNK]");
  CHECK(unk[0].char_start == 0);
  CHECK(unk[0].char_end == 4);

  auto pm = wordpiece_tokenize("7 pm", v);
  REQUIRE(pm.size() == 2);
  CHECK(pm[0].char_start == 0);
  CHECK(pm[0].char_end == 1);
  CHECK(pm[1].char_start == 2);
  CHECK(pm[1].char_end == 4);
}

TEST_CASE("offsets index the original string") {
  const auto v = fixtures::small_vocab();
  auto w = wordpiece_tokenize("  How  ABOUT Cascal?", v);
  REQUIRE(w.size() == 4);
  CHECK(w[0].token == "how");
  CHECK(w[0].char_start == 2);
  CHECK(w[2].token == "cascal");
  CHECK(w[2].char_start == 13);
  CHECK(w[3].token == "?");
  CHECK(w[3].char_start == 19);
}

TEST_CASE("code-point offsets and case folding") {
  CHECK(utf8_decode("café").size() == 4);
  CHECK(utf8_substr("café au lait", 5, 7) == "au");
  CHECK(lowercase("ÉCOLE Élan") == "école élan");
  auto words = pre_tokenize("Crème, brûlée!");
  REQUIRE(words.size() == 4);
  CHECK(utf8_encode(words[2].text) == "brûlée");
  CHECK(words[2].char_start == 7);
  CHECK(words[3].char_start == 13);
}

TEST_CASE("vocab build, save, load") {
  std::vector<std::string> texts{"table for two", "table for 7 pm", "tables"};
  auto v = Vocab::build(texts, 100);
  CHECK(v.token(0) == "[PAD]");
  CHECK(v.find("table"));
  CHECK(v.find("for"));
  // the most frequent word comes first after the reserved tokens
  CHECK((v.token(4) == "table" || v.token(4) == "for"));
  auto capped = Vocab::build(texts, 6);
  CHECK(capped.size() == 6);

  const auto path = std::filesystem::temp_directory_path() / "bdst_vocab_test.txt";
  v.save(path);
  CHECK(Vocab::load(path) == v);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(Vocab({"[PAD]", "[UNK]", "[CLS]"}), ArgumentError);
  CHECK_THROWS_AS(Vocab({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "a", "a"}), ArgumentError);
}

TEST_CASE("build_context layout") {
  const auto v = words_vocab({"hello", "world", "hi"});
  ContextOptions o;
  auto c = build_context("hello", "world", v, o);
  CHECK(tokens_of(c, v) == std::vector<std::string>{"[CLS]", "hello", "[SEP]", "world"});
  CHECK(c.segment_ids == std::vector<std::uint8_t>{0, 0, 0, 1});
  CHECK(c.sep_index == 2);
  CHECK(!c.token_char_spans[0]);
  CHECK(!c.token_char_spans[2]);
  CHECK(c.token_char_spans[3]->source == Source::User);

  auto e = build_context("", "hi", v, o);
  CHECK(tokens_of(e, v) == std::vector<std::string>{"[CLS]", "[SEP]", "hi"});
  CHECK(e.valid_span_mask() == std::vector<std::uint8_t>{0, 0, 1});

  o.append_final_sep = true;
  auto f = build_context("hello", "world", v, o);
  CHECK(tokens_of(f, v).back() == "[SEP]");
  CHECK(f.segment_ids.back() == 1);

  o.max_len = 3;
  CHECK_THROWS_AS(build_context("a", "b", v, o), ArgumentError);
}

TEST_CASE("truncation pops the longer segment") {
  const auto v = words_vocab({"a", "b"});
  std::string sys, usr;
  for (int i = 0; i < 100; ++i) sys += "a ";
  for (int i = 0; i < 100; ++i) usr += "b ";
  ContextOptions o;
  o.max_len = 64;
  auto c = build_context(sys, usr, v, o);
  CHECK(c.length() == 64);
  const std::size_t sys_tokens = c.sep_index - 1;
  const std::size_t usr_tokens = c.length() - c.sep_index - 1;
  CHECK(sys_tokens + usr_tokens == 62);
  CHECK((sys_tokens == usr_tokens));
  // heads are kept: first user token starts at character 0
  CHECK(c.token_char_spans[c.sep_index + 1]->start == 0);

  auto lopsided = build_context("a a", usr, v, o);
  CHECK(lopsided.length() == 64);
  CHECK(lopsided.sep_index == 3);
}

TEST_CASE("context invariants over random strings") {
  const auto v = words_vocab({"a", "b", "c", "ab", "##b", "##c"});
  Rng rng(11);
  const std::string alphabet = "abc ,.?";
  for (int trial = 0; trial < 300; ++trial) {
    auto draw = [&] {
      std::string s;
      const auto n = rng.below(60);
      for (std::uint64_t i = 0; i < n; ++i) s += alphabet[rng.below(alphabet.size())];
      return s;
    };
    const auto sys = draw(), usr = draw();
    ContextOptions o;
    o.max_len = 4 + rng.below(30);
    auto c = build_context(sys, usr, v, o);
    REQUIRE(c.length() <= o.max_len);
    CHECK(c.token_ids[0] == v.cls_id());
    CHECK(c.token_ids[c.sep_index] == v.sep_id());
    CHECK(c.segment_ids.size() == c.length());
    CHECK(c.token_char_spans.size() == c.length());
    for (std::size_t i = 0; i < c.length(); ++i) {
      CHECK(c.segment_ids[i] == (i <= c.sep_index ? 0 : 1));
      if (c.token_char_spans[i]) {
        CHECK(c.token_char_spans[i]->source == (i < c.sep_index ? Source::System : Source::User));
      }
    }
  }
}

TEST_CASE("token text round trip") {
  const auto v = words_vocab({"un", "##aff", "##able", "table", "for", "7", "pm", ".", "the"});
  const std::string text = "Unaffable  table for 7 PM.";
  std::string rebuilt;
  for (const auto& p : wordpiece_tokenize(text, v)) {
    if (p.token.rfind("##", 0) == 0) {
      rebuilt += p.token.substr(2);
    } else {
      if (!rebuilt.empty()) rebuilt += ' ';
      rebuilt += p.token;
    }
  }
  std::string expected;
  for (const auto& w : pre_tokenize(text)) {
    if (!expected.empty()) expected += ' ';
    expected += utf8_encode(w.text);
  }
  CHECK(rebuilt == expected);
}

TEST_CASE("align_span") {
  const auto v = words_vocab({"table", "for", "7", "pm", "7pm"});
  ContextOptions o;
  auto c = build_context("", "table for 7 pm", v, o);
  auto s = align_span(CharSpan{Source::User, 10, 14}, c);
  CHECK(s.start == 4);
  CHECK(s.end == 5);

  auto joined = build_context("", "at 7pm", words_vocab({"at", "7pm"}), o);
  auto w = align_span(CharSpan{Source::User, 4, 6}, joined);
  CHECK(w.start == 3);
  CHECK(w.end == 3);

  o.max_len = 5;
  auto cut = build_context("", "table for 7 pm", v, o);
  CHECK_THROWS_AS(align_span(CharSpan{Source::User, 10, 14}, cut), AlignmentError);
}

TEST_CASE("align_span inverts token_span_chars") {
  const auto v = fixtures::small_vocab();
  ContextOptions o;
  auto c = build_context("how about Cascal?", "unaffable table for 7 pm", v, o);
  for (std::size_t i = 1; i < c.length(); ++i) {
    for (std::size_t j = i; j < c.length(); ++j) {
      if (!c.token_char_spans[i] || !c.token_char_spans[j]) continue;
      if (c.token_char_spans[i]->source != c.token_char_spans[j]->source) continue;
      const TokenSpan t{i, j};
      CHECK(align_span(token_span_chars(t, c), c) == t);
    }
  }
}
