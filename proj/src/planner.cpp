#include "bdspell/planner.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "bdspell/composer.hpp"
#include "bdspell/unicode.hpp"

namespace bdspell {

namespace {

struct Unit {
  std::vector<char32_t> cps;
  Coverage coverage;
  std::vector<std::string> labels;
};

std::vector<Unit> build_units(const RuleSet& rules) {
  std::vector<Unit> units;
  auto add = [&](const std::string& text, Coverage cov, std::vector<std::string> labels) {
    units.push_back(Unit{unicode::decode(text), cov, std::move(labels)});
  };
  for (const SignClass& cls : rules.classes()) {
    if (cls.role != Role::numeral) add(cls.codepoints, Coverage::literal, {cls.label});
  }
  const std::string& t1 = rules.trigger_label(Trigger::T1);
  for (const VowelPair& v : rules.vowels()) {
    add(v.independent_codepoints, Coverage::vowel_transform, {v.dependent_label, t1});
  }
  const std::string& t4 = rules.trigger_label(Trigger::T4);
  for (const HiddenRule& h : rules.hidden()) {
    auto labels = h.pattern;
    labels.push_back(t4);
    add(h.result_codepoints, Coverage::hidden, std::move(labels));
  }
  const std::string& t2 = rules.trigger_label(Trigger::T2);
  for (const CompoundRule& c : rules.compounds2()) {
    auto labels = c.parts;
    labels.push_back(t2);
    add(c.result_codepoints, Coverage::compound2, std::move(labels));
  }
  const std::string& t3 = rules.trigger_label(Trigger::T3);
  for (const CompoundRule& c : rules.compounds3()) {
    auto labels = c.parts;
    labels.push_back(t3);
    add(c.result_codepoints, Coverage::compound3, std::move(labels));
  }
  add(" ", Coverage::space, {rules.trigger_label(Trigger::T0)});

  // Longest first; among equal lengths, the larger rule (compound3 > compound2 > ...).
  std::stable_sort(units.begin(), units.end(), [](const Unit& a, const Unit& b) {
    if (a.cps.size() != b.cps.size()) return a.cps.size() > b.cps.size();
    return static_cast<int>(a.coverage) > static_cast<int>(b.coverage);
  });
  return units;
}

}  // namespace

std::string_view to_string(Coverage coverage) {
  switch (coverage) {
    case Coverage::literal: return "literal";
    case Coverage::vowel_transform: return "vowel_transform";
    case Coverage::hidden: return "hidden";
    case Coverage::compound2: return "compound2";
    case Coverage::compound3: return "compound3";
    case Coverage::digit_mode: return "digit_mode";
    case Coverage::space: return "space";
  }
  return "?";
}

std::string render_labels(const std::vector<std::string>& labels, const RuleSetPtr& rules) {
  Composer composer(rules);
  for (const auto& l : labels) composer.apply(l);
  return composer.render();
}

SpellingPlan plan(std::string_view text, const RuleSetPtr& rules) {
  const std::string target = unicode::nfc(text);
  const std::vector<char32_t> cps = unicode::decode(target);
  const std::vector<Unit> units = build_units(*rules);

  std::map<char32_t, std::string> digit_labels;
  for (const SignClass& cls : rules->classes()) {
    if (cls.role == Role::numeral) digit_labels.emplace(unicode::decode(cls.codepoints)[0], cls.label);
  }

  const std::size_t n = cps.size();
  // choice[i]: segment chosen at offset i on a path that reaches the end.
  std::vector<std::optional<PlanSegment>> choice(n + 1);
  std::vector<bool> solvable(n + 1, false);
  solvable[n] = true;

  for (std::size_t i = n; i-- > 0;) {
    if (digit_labels.count(cps[i])) {
      // A digit run is taken whole, so only its first digit starts a segment.
      if (i > 0 && digit_labels.count(cps[i - 1])) continue;
      std::size_t end = i;
      PlanSegment seg{i, {}, Coverage::digit_mode, {rules->trigger_label(Trigger::T5)}};
      while (end < n && digit_labels.count(cps[end])) {
        seg.labels.push_back(digit_labels[cps[end]]);
        ++end;
      }
      seg.labels.push_back(rules->numeral_mode_exit_label());
      seg.text = unicode::encode(std::vector<char32_t>(cps.begin() + i, cps.begin() + end));
      if (solvable[end]) {
        choice[i] = std::move(seg);
        solvable[i] = true;
      }
      continue;
    }
    for (const Unit& u : units) {
      const std::size_t len = u.cps.size();
      if (i + len > n || !solvable[i + len]) continue;
      if (!std::equal(u.cps.begin(), u.cps.end(), cps.begin() + static_cast<std::ptrdiff_t>(i))) {
        continue;
      }
      choice[i] = PlanSegment{i, unicode::encode(u.cps), u.coverage, u.labels};
      solvable[i] = true;
      break;
    }
  }

  if (!solvable[0]) {
    // Report the furthest offset still reachable from the start.
    std::vector<bool> reachable(n + 1, false);
    reachable[0] = true;
    std::size_t frontier = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!reachable[i]) continue;
      frontier = i;
      if (digit_labels.count(cps[i])) {
        std::size_t end = i;
        while (end < n && digit_labels.count(cps[end])) ++end;
        reachable[end] = true;
        continue;
      }
      for (const Unit& u : units) {
        const std::size_t len = u.cps.size();
        if (i + len <= n &&
            std::equal(u.cps.begin(), u.cps.end(), cps.begin() + static_cast<std::ptrdiff_t>(i))) {
          reachable[i + len] = true;
        }
      }
    }
    throw PlanError("no rule path covers " + unicode::describe(cps[frontier]) +
                        " at offset " + std::to_string(frontier),
                    frontier, cps[frontier]);
  }

  SpellingPlan result;
  result.target = target;
  for (std::size_t i = 0; i < n;) {
    PlanSegment seg = *choice[i];
    i += unicode::decode(seg.text).size();
    result.labels.insert(result.labels.end(), seg.labels.begin(), seg.labels.end());
    result.segments.push_back(std::move(seg));
  }

  Composer check(rules);
  for (const auto& l : result.labels) check.apply(l);
  if (check.render() != target || check.mode() != Mode::textual) {
    throw PlanError("plan failed forward verification for '" + target + "'", 0,
                    cps.empty() ? U'\0' : cps[0]);
  }
  return result;
}

}  // namespace bdspell
