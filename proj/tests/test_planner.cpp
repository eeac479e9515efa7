#include <doctest.h>

#include <set>

#include "bdspell/composer.hpp"
#include "bdspell/planner.hpp"
#include "bdspell/simulator.hpp"
#include "bdspell/unicode.hpp"

using namespace bdspell;
using namespace bdspell::unicode;
using Labels = std::vector<std::string>;

namespace {

// Forward execution through a fresh composer, independent of render_labels.
std::pair<std::string, Mode> run(const Labels& labels, const RuleSetPtr& rules) {
  Composer c(rules);
  for (const std::string& l : labels) c.apply(l);
  return {c.render(), c.mode()};
}

}  // namespace

TEST_CASE("examples") {
  const RuleSetPtr rules = load_default_ruleset();
  const std::string t1 = rules->trigger_label(Trigger::T1);
  const std::string t2 = rules->trigger_label(Trigger::T2);
  const std::string t5 = rules->trigger_label(Trigger::T5);
  CHECK(plan("ক", rules).labels == Labels{"ka"});
  CHECK(plan("ক্ত", rules).labels == Labels{"ka", "tta", t2});
  CHECK(plan("আম", rules).labels == Labels{"aa", t1, "ma"});
  CHECK(plan("১২", rules).labels == Labels{t5, "one", "two", rules->numeral_mode_exit_label()});
  CHECK(plan("", rules).labels.empty());
}

TEST_CASE("coverage provenance") {
  const RuleSetPtr rules = load_default_ruleset();
  const SpellingPlan p = plan("আম স্ত্রী ২৪", rules);
  std::vector<Coverage> kinds;
  for (const PlanSegment& s : p.segments) kinds.push_back(s.coverage);
  CHECK(kinds == std::vector<Coverage>{Coverage::vowel_transform, Coverage::literal,
                                       Coverage::space, Coverage::compound3, Coverage::hidden,
                                       Coverage::space, Coverage::digit_mode});
  CHECK(p.segments[3].text == "স্ত্র");
  CHECK(p.segments[3].offset == 3);
  CHECK(p.segments.back().text == "২৪");
}

TEST_CASE("three-part rule wins and plain consonants get no triggers") {
  const RuleSetPtr rules = load_default_ruleset();
  CHECK(plan("স্ত্র", rules).labels == Labels{"sa", "tta", "ra", rules->trigger_label(Trigger::T3)});
  CHECK(plan("কমল", rules).labels == Labels{"ka", "ma", "la"});
}

TEST_CASE("input is normalized to NFC") {
  const RuleSetPtr rules = load_default_ruleset();
  // ো written as its two-part decomposition.
  const SpellingPlan o = plan(encode({0x0995, 0x09C7, 0x09BE}), rules);
  CHECK(o.target == encode({0x0995, 0x09CB}));
  CHECK(o.labels == Labels{"ka", "o"});
  // U+09DC is composition-excluded: NFC is U+09A1 U+09BC.
  const SpellingPlan rr = plan(encode({0x09AC, 0x09BE, 0x09DC, 0x09BF}), rules);
  CHECK(rr.target == encode({0x09AC, 0x09BE, 0x09A1, 0x09BC, 0x09BF}));
  CHECK(run(rr.labels, rules).first == rr.target);
}

TEST_CASE("uncoverable characters name the offset and character") {
  const RuleSetPtr rules = load_default_ruleset();
  try {
    plan("কঐ", rules);
    FAIL("expected PlanError");
  } catch (const PlanError& e) {
    CHECK(e.offset() == 1);
    CHECK(e.character() == U'ঐ');
    CHECK(std::string(e.what()).find("U+0990") != std::string::npos);
  }
  CHECK_THROWS_AS(plan("abc", rules), PlanError);
  CHECK_THROWS_AS(plan("\xff", rules), InputError);
  // A virama with nothing to join.
  CHECK_THROWS_AS(plan(encode({0x0995, kVirama}), rules), PlanError);
}

TEST_CASE("round trip over the corpus") {
  const RuleSetPtr rules = load_default_ruleset();
  const auto words = standard_corpus(rules, 300);
  std::set<Coverage> seen;
  std::set<std::string> known;
  for (const SignClass& c : rules->classes()) known.insert(c.label);
  for (const std::string& w : words) {
    CAPTURE(w);
    const SpellingPlan p = plan(w, rules);
    const auto [text, mode] = run(p.labels, rules);
    CHECK(text == w);
    CHECK(mode == Mode::textual);
    CHECK(render_labels(p.labels, rules) == w);
    for (const std::string& l : p.labels) CHECK(known.count(l) == 1);
    for (const PlanSegment& s : p.segments) seen.insert(s.coverage);
    CHECK(plan(w, rules).labels == p.labels);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("builtin words are all plannable") {
  const RuleSetPtr rules = load_default_ruleset();
  for (const std::string& w : builtin_words()) {
    CAPTURE(w);
    CHECK_NOTHROW(plan(w, rules));
  }
}
