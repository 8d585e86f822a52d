#include "bdst/generator.hpp"

#include <algorithm>
#include <set>

#include "bdst/rng.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

namespace {

constexpr std::string_view kPlaceholder = "{v}";

/// Builds an utterance piecewise while tracking code-point offsets.
class Utterance {
 public:
  void append(std::string_view s) {
    text_ += s;
    length_ += utf8_decode(s).size();
  }

  /// Renders a template; returns the value's code-point range.
  std::pair<std::size_t, std::size_t> append_template(std::string_view tpl, std::string_view value) {
    const auto at = tpl.find(kPlaceholder);
    if (at == std::string_view::npos) {
      throw GenerationError("template '" + std::string(tpl) + "' has no {v} placeholder");
    }
    append(tpl.substr(0, at));
    const std::size_t start = length_;
    append(value);
    const std::size_t end = length_;
    append(tpl.substr(at + kPlaceholder.size()));
    if (utf8_substr(text_, start, end) != value) {
      throw GenerationError("template '" + std::string(tpl) + "' cannot embed value '" +
                            std::string(value) + "'");
    }
    return {start, end};
  }

  const std::string& text() const { return text_; }
  bool empty() const { return text_.empty(); }

 private:
  std::string text_;
  std::size_t length_ = 0;
};

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[rng.below(v.size())];
}

void set_label(Turn& turn, const std::string& slot, const std::string& value, Source src,
               std::pair<std::size_t, std::size_t> span) {
  SlotLabel l;
  l.cls = SlotClass::Span;
  l.value = value;
  l.source = src;
  l.char_start = span.first;
  l.char_end = span.second;
  turn.labels[slot] = std::move(l);
}

void set_dontcare(Turn& turn, const std::string& slot) {
  SlotLabel l;
  l.cls = SlotClass::Dontcare;
  turn.labels[slot] = std::move(l);
}

struct GoalItem {
  std::string slot;
  std::optional<std::string> value;  // nullopt = dontcare
};

class DialogueWriter {
 public:
  DialogueWriter(const GeneratorProfile& p, bool eval_split, Rng& rng)
      : p_(p), eval_split_(eval_split), rng_(rng) {}

  Dialogue write(std::string id) {
    Dialogue dlg;
    dlg.id = std::move(id);
    auto goal = draw_goal();
    std::size_t next = 0;

    // Opening turn: the system says nothing.
    {
      Turn t;
      Utterance user;
      if (rng_.bernoulli(p_.greeting_rate)) {
        user.append(pick(p_.greetings, rng_));
      } else {
        inform(t, user, goal[next++]);
        if (next < goal.size() && rng_.bernoulli(p_.multi_inform_rate)) {
          user.append(pick(p_.connectors, rng_));
          inform(t, user, goal[next++]);
        }
      }
      t.user = user.text();
      dlg.turns.push_back(std::move(t));
    }

    while (next < goal.size()) {
      const auto& item = goal[next++];
      const auto& tpl = p_.templates.at(item.slot);
      Turn t;
      Utterance sys, user;
      if (item.value && !tpl.offer.empty() && rng_.bernoulli(p_.offer_rate)) {
        const auto span = sys.append_template(pick(tpl.offer, rng_), *item.value);
        user.append(pick(p_.confirmations, rng_));
        t.system = sys.text();
        t.user = user.text();
        set_label(t, item.slot, *item.value, Source::System, span);
      } else if (item.value && !tpl.offer.empty() && rng_.bernoulli(p_.wrong_offer_rate)) {
        sys.append_template(pick(tpl.offer, rng_), other_value(item));
        const auto span = user.append_template(pick(p_.rejections, rng_), *item.value);
        t.system = sys.text();
        t.user = user.text();
        set_label(t, item.slot, *item.value, Source::User, span);
      } else {
        sys.append(pick(tpl.request, rng_));
        inform(t, user, item);
        if (next < goal.size() && rng_.bernoulli(p_.multi_inform_rate)) {
          user.append(pick(p_.connectors, rng_));
          inform(t, user, goal[next++]);
        }
        t.system = sys.text();
        t.user = user.text();
      }
      dlg.turns.push_back(std::move(t));
    }

    if (rng_.bernoulli(p_.change_rate)) change_of_mind(dlg, goal);

    if (rng_.bernoulli(p_.closing_rate)) {
      Turn t;
      t.system = pick(p_.system_closings, rng_);
      t.user = pick(p_.user_closings, rng_);
      dlg.turns.push_back(std::move(t));
    }

    const auto states = fold_labels(dlg);
    for (std::size_t i = 0; i < dlg.turns.size(); ++i) dlg.turns[i].state = states[i];
    return dlg;
  }

 private:
  const std::vector<std::string>& pool(const std::string& slot) const {
    const auto& lex = p_.lexicons.at(slot);
    const bool oov = std::find(p_.oov_slots.begin(), p_.oov_slots.end(), slot) != p_.oov_slots.end();
    return eval_split_ && oov ? lex.oov : lex.train;
  }

  std::vector<GoalItem> draw_goal() {
    std::vector<std::string> slots = p_.slots;
    rng_.shuffle(slots.begin(), slots.end());
    const auto span = p_.max_goal_slots - p_.min_goal_slots + 1;
    const std::size_t k = p_.min_goal_slots + rng_.below(span);
    std::vector<GoalItem> goal;
    for (std::size_t i = 0; i < k; ++i) {
      GoalItem g{slots[i], std::nullopt};
      const auto& tpl = p_.templates.at(g.slot);
      if (tpl.dontcare.empty() || !rng_.bernoulli(p_.dontcare_rate)) g.value = pick(pool(g.slot), rng_);
      goal.push_back(std::move(g));
    }
    return goal;
  }

  std::string other_value(const GoalItem& item) {
    const auto& values = pool(item.slot);
    if (values.size() < 2) return *item.value;
    std::string v;
    do {
      v = pick(values, rng_);
    } while (lowercase(v) == lowercase(*item.value));
    return v;
  }

  void inform(Turn& t, Utterance& user, const GoalItem& item) {
    const auto& tpl = p_.templates.at(item.slot);
    if (!item.value) {
      user.append(pick(tpl.dontcare, rng_));
      set_dontcare(t, item.slot);
      return;
    }
    const auto span = user.append_template(pick(tpl.inform, rng_), *item.value);
    set_label(t, item.slot, *item.value, Source::User, span);
  }

  void change_of_mind(Dialogue& dlg, std::vector<GoalItem>& goal) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < goal.size(); ++i) {
      if (goal[i].value && !p_.templates.at(goal[i].slot).change.empty()) candidates.push_back(i);
    }
    if (candidates.empty()) return;
    auto& item = goal[pick(candidates, rng_)];
    item.value = other_value(item);
    Turn t;
    Utterance user;
    t.system = pick(p_.anything_else, rng_);
    const auto span = user.append_template(pick(p_.templates.at(item.slot).change, rng_), *item.value);
    t.user = user.text();
    set_label(t, item.slot, *item.value, Source::User, span);
    dlg.turns.push_back(std::move(t));
  }

  const GeneratorProfile& p_;
  bool eval_split_;
  Rng& rng_;
};

DialogueCorpus generate_split(const GeneratorProfile& p, std::string_view split, std::size_t count,
                              bool eval_split, std::uint64_t stream) {
  Rng rng(derive_seed(p.seed, stream));
  DialogueCorpus c;
  c.slots = p.slots;
  DialogueWriter writer(p, eval_split, rng);
  const auto width = std::to_string(count).size();
  for (std::size_t i = 0; i < count; ++i) {
    auto num = std::to_string(i);
    num.insert(0, width - num.size(), '0');
    c.dialogues.push_back(writer.write(std::string(split) + "-" + num));
  }
  validate_corpus(c);
  return c;
}

void require_placeholder(const std::vector<std::string>& tpls, const std::string& what) {
  for (const auto& t : tpls) {
    if (t.find(kPlaceholder) == std::string::npos) {
      throw GenerationError(what + " template '" + t + "' lacks {v}");
    }
  }
}

}  // namespace

void GeneratorProfile::validate() const {
  if (slots.empty()) throw GenerationError("profile '" + name + "' has no slots");
  if (min_goal_slots == 0 || min_goal_slots > max_goal_slots || max_goal_slots > slots.size()) {
    throw GenerationError("profile '" + name + "' has an invalid goal size range");
  }
  for (double r : {dontcare_rate, greeting_rate, multi_inform_rate, offer_rate, wrong_offer_rate,
                   change_rate, closing_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) throw GenerationError("profile '" + name + "' has a rate outside [0, 1]");
  }
  for (const auto* list : {&greetings, &confirmations, &rejections, &connectors, &system_closings,
                           &user_closings, &anything_else}) {
    if (list->empty()) throw GenerationError("profile '" + name + "' lacks a phrase list");
  }
  require_placeholder(rejections, "rejection");
  for (const auto& s : slots) {
    auto lit = lexicons.find(s);
    auto tit = templates.find(s);
    if (lit == lexicons.end() || tit == templates.end()) {
      throw GenerationError("profile '" + name + "' lacks lexicon or templates for slot '" + s + "'");
    }
    const auto& lex = lit->second;
    const auto& tpl = tit->second;
    if (lex.train.empty()) throw GenerationError("slot '" + s + "' has an empty train lexicon");
    const bool oov = std::find(oov_slots.begin(), oov_slots.end(), s) != oov_slots.end();
    if (oov && lex.oov.empty()) throw GenerationError("OOV slot '" + s + "' has an empty OOV lexicon");
    std::set<std::string> seen;
    for (const auto& v : lex.train) seen.insert(lowercase(v));
    for (const auto& v : lex.oov) {
      if (seen.count(lowercase(v))) {
        throw GenerationError("value '" + v + "' of slot '" + s + "' is in both lexicons");
      }
    }
    for (const auto* list : {&lex.train, &lex.oov}) {
      for (const auto& v : *list) {
        if (v.empty() || v.find(kPlaceholder) != std::string::npos) {
          throw GenerationError("slot '" + s + "' has an unusable value '" + v + "'");
        }
      }
    }
    if (tpl.inform.empty() || tpl.request.empty()) {
      throw GenerationError("slot '" + s + "' needs inform and request templates");
    }
    require_placeholder(tpl.inform, "inform");
    require_placeholder(tpl.offer, "offer");
    require_placeholder(tpl.change, "change");
  }
  for (const auto& s : oov_slots) {
    if (std::find(slots.begin(), slots.end(), s) == slots.end()) {
      throw GenerationError("OOV slot '" + s + "' is not in the schema");
    }
  }
}

GeneratedSplits generate_synthetic(const GeneratorProfile& profile) {
  profile.validate();
  GeneratedSplits out;
  out.train = generate_split(profile, "train", profile.train_dialogues, false, 0);
  out.dev = generate_split(profile, "dev", profile.dev_dialogues, true, 1);
  out.test = generate_split(profile, "test", profile.test_dialogues, true, 2);
  return out;
}

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
