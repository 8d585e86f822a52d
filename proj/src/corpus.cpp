#include "bdst/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

namespace {

using json = nlohmann::ordered_json;

std::string where(std::size_t d, const std::string& id, std::optional<std::size_t> t = std::nullopt) {
  std::string s = "dialogue " + std::to_string(d) + " ('" + id + "')";
  if (t) s += " turn " + std::to_string(*t);
  return s;
}

std::string label_type_name(SlotClass c) { return c == SlotClass::Span ? "value" : std::string(slot_class_name(c)); }

bool is_word_char(char32_t c) { return !is_space(c) && !is_punctuation(c); }

}  // namespace

std::size_t DialogueCorpus::turn_count() const {
  std::size_t n = 0;
  for (const auto& d : dialogues) n += d.turns.size();
  return n;
}

std::vector<DialogueState> fold_labels(const Dialogue& dialogue) {
  std::vector<DialogueState> out;
  DialogueState state;
  for (const auto& turn : dialogue.turns) {
    for (const auto& [slot, label] : turn.labels) {
      if (label.cls == SlotClass::Span) {
        state[slot] = label.value;
      } else if (label.cls == SlotClass::Dontcare) {
        state[slot] = std::string(kDontcare);
      }
    }
    out.push_back(state);
  }
  return out;
}

void validate_corpus(const DialogueCorpus& corpus) {
  using K = CorpusError::Kind;
  std::set<std::string> schema;
  for (const auto& s : corpus.slots) {
    if (s.empty()) throw CorpusError(K::Schema, "schema contains an empty slot name");
    if (!schema.insert(s).second) throw CorpusError(K::Schema, "duplicate slot '" + s + "' in schema");
  }
  for (std::size_t d = 0; d < corpus.dialogues.size(); ++d) {
    const auto& dlg = corpus.dialogues[d];
    for (std::size_t t = 0; t < dlg.turns.size(); ++t) {
      const auto& turn = dlg.turns[t];
      for (const auto& [slot, label] : turn.labels) {
        if (!schema.count(slot)) {
          throw CorpusError(K::UnknownSlot, where(d, dlg.id, t) + ": label for unknown slot '" + slot + "'");
        }
        if (label.cls != SlotClass::Span) continue;
        if (label.value.empty()) {
          throw CorpusError(K::OffsetMismatch, where(d, dlg.id, t) + ": empty value for slot '" + slot + "'");
        }
        if (label.has_offsets()) {
          const auto& utt = *label.source == Source::System ? turn.system : turn.user;
          const auto len = utf8_decode(utt).size();
          if (*label.char_start > *label.char_end || *label.char_end > len ||
              utf8_substr(utt, *label.char_start, *label.char_end) != label.value) {
            throw CorpusError(K::OffsetMismatch,
                              where(d, dlg.id, t) + ": offsets [" + std::to_string(*label.char_start) +
                                  ", " + std::to_string(*label.char_end) + ") of slot '" + slot +
                                  "' do not delimit '" + label.value + "'");
          }
        }
      }
      for (const auto& [slot, _] : turn.state) {
        if (!schema.count(slot)) {
          throw CorpusError(K::UnknownSlot, where(d, dlg.id, t) + ": state for unknown slot '" + slot + "'");
        }
      }
    }
    const auto folded = fold_labels(dlg);
    for (std::size_t t = 0; t < dlg.turns.size(); ++t) {
      if (folded[t] != dlg.turns[t].state) {
        throw CorpusError(K::StateInconsistent,
                          where(d, dlg.id, t) + ": gold state disagrees with folded turn labels");
      }
    }
  }
}

std::optional<CharSpan> derive_char_span(std::string_view system_utt, std::string_view user_utt,
                                         std::string_view value) {
  if (value.empty()) throw ArgumentError("derive_char_span: empty value");
  auto needle = utf8_decode(value);
  for (auto& c : needle) c = fold_case(c);
  std::optional<CharSpan> last;
  for (Source src : {Source::System, Source::User}) {
    auto hay = utf8_decode(src == Source::System ? system_utt : user_utt);
    for (auto& c : hay) c = fold_case(c);
    if (hay.size() < needle.size()) continue;
    for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
      if (hay.compare(i, needle.size(), needle) != 0) continue;
      const std::size_t e = i + needle.size();
      // A match must not start or end in the middle of a word.
      const bool left_ok = i == 0 || !is_word_char(hay[i - 1]) || !is_word_char(needle.front());
      const bool right_ok = e == hay.size() || !is_word_char(hay[e]) || !is_word_char(needle.back());
      if (left_ok && right_ok) last = CharSpan{src, i, e};
    }
  }
  return last;
}

DialogueCorpus parse_corpus(std::string_view json_text, std::vector<std::string>* warnings) {
  using K = CorpusError::Kind;
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw CorpusError(K::Parse, std::string("corpus is not valid JSON: ") + e.what());
  }
  DialogueCorpus corpus;
  std::size_t d = 0, t = 0;
  std::string id;
  try {
    corpus.slots = root.at("schema").at("slots").get<std::vector<std::string>>();
    for (const auto& jd : root.at("dialogues")) {
      Dialogue dlg;
      dlg.id = jd.contains("id") ? jd.at("id").get<std::string>() : std::to_string(d);
      id = dlg.id;
      t = 0;
      for (const auto& jt : jd.at("turns")) {
        Turn turn;
        turn.system = jt.value("system", "");
        turn.user = jt.at("user").get<std::string>();
        if (jt.contains("labels")) {
          for (const auto& [slot, jl] : jt.at("labels").items()) {
            SlotLabel label;
            label.cls = parse_slot_class(jl.at("type").get<std::string>());
            if (jl.contains("value")) label.value = jl.at("value").get<std::string>();
            if (jl.contains("source")) label.source = parse_source(jl.at("source").get<std::string>());
            if (jl.contains("char_start")) label.char_start = jl.at("char_start").get<std::size_t>();
            if (jl.contains("char_end")) label.char_end = jl.at("char_end").get<std::size_t>();
            turn.labels.emplace(slot, std::move(label));
          }
        }
        if (jt.contains("state")) turn.state = jt.at("state").get<DialogueState>();
        dlg.turns.push_back(std::move(turn));
        ++t;
      }
      corpus.dialogues.push_back(std::move(dlg));
      ++d;
    }
  } catch (const json::exception& e) {
    throw CorpusError(K::Parse, where(d, id, t) + ": " + e.what());
  } catch (const ArgumentError& e) {
    throw CorpusError(K::Parse, where(d, id, t) + ": " + e.what());
  }

  // Partially specified offsets are an error; fully absent ones are derived.
  for (std::size_t di = 0; di < corpus.dialogues.size(); ++di) {
    auto& dlg = corpus.dialogues[di];
    for (std::size_t ti = 0; ti < dlg.turns.size(); ++ti) {
      auto& turn = dlg.turns[ti];
      for (auto& [slot, label] : turn.labels) {
        if (label.cls != SlotClass::Span || label.has_offsets()) continue;
        if (label.char_start || label.char_end) {
          throw CorpusError(K::OffsetMismatch,
                            where(di, dlg.id, ti) + ": slot '" + slot + "' has partial offsets");
        }
        if (label.value.empty()) continue;  // reported by validate_corpus
        if (auto span = derive_char_span(turn.system, turn.user, label.value)) {
          label.source = span->source;
          label.char_start = span->start;
          label.char_end = span->end;
        } else {
          label.source.reset();
          if (warnings) {
            warnings->push_back(where(di, dlg.id, ti) + ": value '" + label.value + "' of slot '" +
                                slot + "' not found in context");
          }
        }
      }
    }
  }
  validate_corpus(corpus);
  return corpus;
}

DialogueCorpus load_corpus(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(CorpusError::Kind::Parse, "cannot open corpus file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_corpus(ss.str(), warnings);
}

std::string corpus_to_json(const DialogueCorpus& corpus) {
  json root;
  root["schema"]["slots"] = corpus.slots;
  root["dialogues"] = json::array();
  for (const auto& dlg : corpus.dialogues) {
    json jd;
    jd["id"] = dlg.id;
    jd["turns"] = json::array();
    for (const auto& turn : dlg.turns) {
      json jt;
      jt["system"] = turn.system;
      jt["user"] = turn.user;
      jt["labels"] = json::object();
      for (const auto& [slot, label] : turn.labels) {
        json jl;
        jl["type"] = label_type_name(label.cls);
        if (label.cls == SlotClass::Span || !label.value.empty()) jl["value"] = label.value;
        if (label.source) jl["source"] = source_name(*label.source);
        if (label.char_start) jl["char_start"] = *label.char_start;
        if (label.char_end) jl["char_end"] = *label.char_end;
        jt["labels"][slot] = std::move(jl);
      }
      jt["state"] = json::object();
      for (const auto& [slot, v] : turn.state) jt["state"][slot] = v;
      jd["turns"].push_back(std::move(jt));
    }
    root["dialogues"].push_back(std::move(jd));
  }
  return root.dump(1) + "\n";
}

void save_corpus(const DialogueCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write corpus file " + path.string());
  out << corpus_to_json(corpus);
  if (!out) throw Error("failed writing corpus file " + path.string());
}

CorpusStats corpus_stats(const DialogueCorpus& corpus, const DialogueCorpus* reference) {
  auto values_by_slot = [](const DialogueCorpus& c) {
    std::map<std::string, std::set<std::string>> out;
    for (const auto& d : c.dialogues) {
      for (const auto& t : d.turns) {
        for (const auto& [slot, l] : t.labels) {
          if (l.cls == SlotClass::Span) out[slot].insert(lowercase(l.value));
        }
      }
    }
    return out;
  };
  CorpusStats stats;
  stats.dialogues = corpus.dialogues.size();
  stats.turns = corpus.turn_count();
  for (const auto& s : corpus.slots) stats.slots[s];
  for (const auto& d : corpus.dialogues) {
    for (const auto& t : d.turns) {
      for (const auto& s : corpus.slots) {
        auto it = t.labels.find(s);
        const SlotClass c = it == t.labels.end() ? SlotClass::None : it->second.cls;
        auto& st = stats.slots[s];
        if (c == SlotClass::None) ++st.none_labels;
        if (c == SlotClass::Dontcare) ++st.dontcare_labels;
        if (c == SlotClass::Span) ++st.value_labels;
      }
    }
  }
  const auto values = values_by_slot(corpus);
  const auto ref_values = reference ? values_by_slot(*reference) : decltype(values){};
  for (const auto& [slot, vals] : values) {
    auto& st = stats.slots[slot];
    st.unique_values = vals.size();
    if (!reference) continue;
    auto rit = ref_values.find(slot);
    for (const auto& v : vals) {
      if (rit == ref_values.end() || !rit->second.count(v)) ++st.oov_values;
    }
  }
  return stats;
}

std::string stats_to_json(const CorpusStats& stats) {
  json j;
  j["dialogues"] = stats.dialogues;
  j["turns"] = stats.turns;
  j["slots"] = json::object();
  for (const auto& [slot, s] : stats.slots) {
    j["slots"][slot] = {{"unique_values", s.unique_values},
                        {"oov_values", s.oov_values},
                        {"labels", {{"none", s.none_labels}, {"dontcare", s.dontcare_labels}, {"value", s.value_labels}}}};
  }
  return j.dump(2) + "\n";
}

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
