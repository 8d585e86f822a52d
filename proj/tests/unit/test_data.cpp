#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "bdst/experiments.hpp"
#include "bdst/generator.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bdst;

namespace {

const char* kMinimal = R"({
  "schema": {"slots": ["time"]},
  "dialogues": [{"id": "d0", "turns": [
    {"system": "", "user": "table for 7 pm",
     "labels": {"time": {"type": "value", "value": "7 pm", "source": "user", "char_start": 10, "char_end": 14}},
     "state": {"time": "7 pm"}}
  ]}]
})";

CorpusError::Kind kind_of(const std::string& text) {
  try {
    parse_corpus(text);
  } catch (const CorpusError& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return CorpusError::Kind::Parse;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

GeneratorProfile small_profile(std::uint64_t seed) {
  auto p = builtin_profile("sim-m-like", seed);
  p.train_dialogues = 40;
  p.dev_dialogues = 10;
  p.test_dialogues = 30;
  return p;
}

oracle::TurnPreds to_plain(const Turn& t) {
  oracle::TurnPreds out;
  for (const auto& [slot, l] : t.labels) out[slot] = {static_cast<int>(l.cls), l.value};
  return out;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("minimal corpus loads") {
    const auto c = parse_corpus(kMinimal);
    REQUIRE(c.dialogues.size() == 1);
    CHECK(c.turn_count() == 1);
    CHECK(c.dialogues[0].turns[0].labels.at("time").has_offsets());
  }

  TEST_CASE("error kinds") {
    CHECK(kind_of("{not json") == CorpusError::Kind::Parse);
    CHECK(kind_of(replace(kMinimal, "\"char_end\": 14", "\"char_end\": 13")) == CorpusError::Kind::OffsetMismatch);
    CHECK(kind_of(replace(kMinimal, "\"state\": {\"time\": \"7 pm\"}", "\"state\": {\"time\": \"8 pm\"}")) ==
          CorpusError::Kind::StateInconsistent);
    CHECK(kind_of(replace(kMinimal, "\"labels\": {\"time\"", "\"labels\": {\"date\"")) ==
          CorpusError::Kind::UnknownSlot);
    CHECK(kind_of(replace(kMinimal, "[\"time\"]", "[\"time\", \"time\"]")) == CorpusError::Kind::Schema);
    CHECK(kind_of(replace(kMinimal, ", \"char_end\": 14", "")) == CorpusError::Kind::OffsetMismatch);
  }

  TEST_CASE("missing offsets are derived") {
    const auto text = replace(kMinimal, ", \"source\": \"user\", \"char_start\": 10, \"char_end\": 14", "");
    const auto c = parse_corpus(text);
    const auto& l = c.dialogues[0].turns[0].labels.at("time");
    CHECK(*l.source == Source::User);
    CHECK(*l.char_start == 10);
    CHECK(*l.char_end == 14);

    std::vector<std::string> warnings;
    const auto missing = replace(replace(text, "\"value\": \"7 pm\"", "\"value\": \"9 pm\""),
                                 "\"state\": {\"time\": \"7 pm\"}", "\"state\": {\"time\": \"9 pm\"}");
    const auto w = parse_corpus(missing, &warnings);
    CHECK(warnings.size() == 1);
    CHECK(!w.dialogues[0].turns[0].labels.at("time").has_offsets());
  }

  TEST_CASE("derive_char_span examples") {
    auto last = derive_char_span("7 pm or 8 pm?", "8 pm works", "8 pm");
    REQUIRE(last);
    CHECK(last->source == Source::User);
    CHECK(last->start == 0);
    CHECK(last->end == 4);

    auto sys = derive_char_span("how about Cascal?", "yes", "cascal");
    REQUIRE(sys);
    CHECK(sys->source == Source::System);
    CHECK(sys->start == 10);

    CHECK(!derive_char_span("", "book at 8pm", "pm"));
    auto bounded = derive_char_span("", "8pm or 9 pm", "pm");
    REQUIRE(bounded);
    CHECK(bounded->start == 9);
    CHECK_THROWS_AS(derive_char_span("a", "b", ""), ArgumentError);
  }

  TEST_CASE("stats") {
    DialogueCorpus empty;
    empty.slots = {"time"};
    const auto z = corpus_stats(empty);
    CHECK(z.dialogues == 0);
    CHECK(z.turns == 0);
    CHECK(z.slots.at("time").unique_values == 0);

    DialogueCorpus c;
    c.slots = {"time", "movie"};
    Dialogue d;
    for (const auto& [u, slot, v] : std::vector<std::tuple<std::string, std::string, std::string>>{
             {"at 7 pm", "time", "7 pm"}, {"7 PM", "time", "7 PM"}, {"see Coco", "movie", "Coco"},
             {"no, Up", "movie", "Up"}}) {
      Turn t;
      t.user = u;
      t.labels[slot] = fixtures::value_label(v);
      d.turns.push_back(t);
    }
    Turn dc;
    dc.user = "any time";
    dc.labels["time"] = fixtures::dontcare_label();
    d.turns.push_back(dc);
    c.dialogues.push_back(d);

    DialogueCorpus ref;
    ref.slots = c.slots;
    Dialogue rd;
    Turn rt;
    rt.user = "coco";
    rt.labels["movie"] = fixtures::value_label("coco");
    rd.turns.push_back(rt);
    ref.dialogues.push_back(rd);

    const auto s = corpus_stats(c, &ref);
    CHECK(s.turns == 5);
    CHECK(s.slots.at("time").unique_values == 1);
    CHECK(s.slots.at("time").value_labels == 2);
    CHECK(s.slots.at("time").dontcare_labels == 1);
    CHECK(s.slots.at("time").none_labels == 2);
    CHECK(s.slots.at("time").oov_values == 1);
    CHECK(s.slots.at("movie").unique_values == 2);
    CHECK(s.slots.at("movie").oov_values == 1);
  }

  TEST_CASE("save and load round trip") {
    const auto splits = generate_synthetic(small_profile(3));
    const auto path = std::filesystem::temp_directory_path() / "bdst_corpus_test.json";
    save_corpus(splits.test, path);
    CHECK(load_corpus(path) == splits.test);
    CHECK(parse_corpus(corpus_to_json(splits.train)) == splits.train);
    std::filesystem::remove(path);
  }
}

TEST_SUITE("generator") {
  TEST_CASE("same seed, same bytes") {
    const auto a = generate_synthetic(small_profile(7));
    const auto b = generate_synthetic(small_profile(7));
    CHECK(corpus_to_json(a.train) == corpus_to_json(b.train));
    CHECK(corpus_to_json(a.test) == corpus_to_json(b.test));
    const auto c = generate_synthetic(small_profile(8));
    CHECK(corpus_to_json(a.train) != corpus_to_json(c.train));
  }

  TEST_CASE("held-out values are disjoint from training") {
    for (const auto& name : builtin_profile_names()) {
      auto p = builtin_profile(name, 2);
      p.train_dialogues = 100;
      p.dev_dialogues = 20;
      p.test_dialogues = 60;
      const auto s = generate_synthetic(p);
      for (const auto& slot : p.oov_slots) {
        std::set<std::string> train_values;
        for (const auto& d : s.train.dialogues) {
          for (const auto& t : d.turns) {
            auto it = t.labels.find(slot);
            if (it != t.labels.end() && it->second.cls == SlotClass::Span) train_values.insert(lowercase(it->second.value));
          }
        }
        CHECK(!train_values.empty());
        std::size_t test_values = 0;
        for (const auto& d : s.test.dialogues) {
          for (const auto& t : d.turns) {
            auto it = t.labels.find(slot);
            if (it == t.labels.end() || it->second.cls != SlotClass::Span) continue;
            ++test_values;
            CHECK(train_values.count(lowercase(it->second.value)) == 0);
          }
        }
        CHECK(test_values > 0);
        CHECK(corpus_stats(s.test, &s.train).slots.at(slot).oov_values ==
              corpus_stats(s.test).slots.at(slot).unique_values);
      }
      const auto detected = detect_oov_slots(s.train, s.test);
      for (const auto& slot : p.oov_slots) {
        CHECK(std::find(detected.begin(), detected.end(), slot) != detected.end());
      }
    }
  }

  TEST_CASE("labels slice to their values and states fold") {
    const auto s = generate_synthetic(small_profile(4));
    for (const auto* c : {&s.train, &s.dev, &s.test}) {
      for (const auto& d : c->dialogues) {
        std::vector<oracle::TurnPreds> plain;
        for (const auto& t : d.turns) {
          plain.push_back(to_plain(t));
          for (const auto& [slot, l] : t.labels) {
            if (l.cls != SlotClass::Span) continue;
            REQUIRE(l.has_offsets());
            const auto& text = *l.source == Source::System ? t.system : t.user;
            CHECK(utf8_substr(text, *l.char_start, *l.char_end) == l.value);
          }
        }
        const auto folded = oracle::fold_backward(plain);
        for (std::size_t k = 0; k < d.turns.size(); ++k) CHECK(d.turns[k].state == folded[k]);
      }
    }
  }

  TEST_CASE("profile validation") {
    auto p = builtin_profile("sim-r-like", 1);
    CHECK(p.slots.size() == 9);
    CHECK_NOTHROW(p.validate());
    auto overlap = p;
    overlap.lexicons.at(p.oov_slots[0]).oov.push_back(p.lexicons.at(p.oov_slots[0]).train[0]);
    CHECK_THROWS_AS(overlap.validate(), GenerationError);
    auto no_placeholder = p;
    no_placeholder.templates.at("time").inform.push_back("sometime");
    CHECK_THROWS_AS(no_placeholder.validate(), GenerationError);
    CHECK_THROWS_AS(builtin_profile("nope"), ArgumentError);
  }
}
