#include "bdspell/composer.hpp"

#include <utility>

namespace bdspell {

std::string_view to_string(GraphemeKind kind) {
  switch (kind) {
    case GraphemeKind::consonant: return "consonant";
    case GraphemeKind::dep_vowel: return "dep_vowel";
    case GraphemeKind::indep_vowel: return "indep_vowel";
    case GraphemeKind::hidden: return "hidden";
    case GraphemeKind::compound: return "compound";
    case GraphemeKind::digit: return "digit";
    case GraphemeKind::space: return "space";
  }
  return "?";
}

std::string_view to_string(Mode mode) { return mode == Mode::textual ? "textual" : "numeral"; }

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::appended: return "appended";
    case EventKind::transformed: return "transformed";
    case EventKind::deleted: return "deleted";
    case EventKind::space: return "space";
    case EventKind::mode_changed: return "mode_changed";
    case EventKind::warning: return "warning";
  }
  return "?";
}

Composer::Composer(RuleSetPtr rules) : rules_(std::move(rules)) {
  if (!rules_) throw InvariantError("composer needs a ruleset");
}

std::string Composer::render() const {
  std::string out;
  for (const Grapheme& g : buffer_) out += g.codepoints;
  return out;
}

void Composer::reset() {
  buffer_.clear();
  mode_ = Mode::textual;
}

ComposeEvent Composer::event(EventKind kind, std::string detail) const {
  return ComposeEvent{kind, std::move(detail), render(), mode_};
}

Grapheme Composer::literal(const SignClass& cls) const {
  GraphemeKind kind = GraphemeKind::consonant;
  if (cls.role == Role::dependent_vowel) kind = GraphemeKind::dep_vowel;
  if (cls.role == Role::numeral) kind = GraphemeKind::digit;
  return Grapheme{kind, cls.label, {cls.label}, cls.codepoints};
}

std::vector<ComposeEvent> Composer::apply(std::string_view label) {
  const SignClass& cls = rules_->class_of(label);

  if (mode_ == Mode::numeral) {
    if (cls.label == rules_->numeral_mode_exit_label()) {
      mode_ = Mode::textual;
      return {event(EventKind::mode_changed, "'" + cls.label + "' left numeral mode")};
    }
    buffer_.push_back(literal(cls));
    return {event(EventKind::appended, "appended '" + cls.label + "'")};
  }

  if (cls.trigger) return {dispatch(*cls.trigger)};

  buffer_.push_back(literal(cls));
  return {event(EventKind::appended, "appended '" + cls.label + "'")};
}

ComposeEvent Composer::dispatch(Trigger trigger) {
  switch (trigger) {
    case Trigger::T0:
      buffer_.push_back(Grapheme{GraphemeKind::space, "space", {}, " "});
      return event(EventKind::space, "T0 space");
    case Trigger::T1:
      return make_independent();
    case Trigger::T2:
      return make_compound(2, trigger);
    case Trigger::T3:
      return make_compound(3, trigger);
    case Trigger::T4:
      return make_hidden();
    case Trigger::T5:
      mode_ = Mode::numeral;
      return event(EventKind::mode_changed, "T5 entered numeral mode");
    case Trigger::T6:
      if (buffer_.empty()) return event(EventKind::warning, "T6 backspace on empty buffer");
      {
        const std::string removed = buffer_.back().label;
        buffer_.pop_back();
        return event(EventKind::deleted, "T6 deleted '" + removed + "'");
      }
    case Trigger::T7:
      return event(EventKind::warning, "T7 is reserved and has no action");
  }
  return event(EventKind::warning, "unhandled trigger");
}

ComposeEvent Composer::make_independent() {
  if (buffer_.empty() || buffer_.back().kind != GraphemeKind::dep_vowel) {
    return event(EventKind::warning, "T1 needs a trailing dependent vowel");
  }
  Grapheme& last = buffer_.back();
  const VowelPair* pair = rules_->vowel_for(last.label);
  if (pair == nullptr) {
    return event(EventKind::warning, "T1: no independent form for '" + last.label + "'");
  }
  const std::string from = last.label;
  last = Grapheme{GraphemeKind::indep_vowel, pair->independent_label, {from},
                  pair->independent_codepoints};
  return event(EventKind::transformed, "T1 '" + from + "' -> '" + pair->independent_label + "'");
}

ComposeEvent Composer::make_compound(std::size_t arity, Trigger trigger) {
  const std::string name(to_string(trigger));
  if (buffer_.size() < arity) {
    return event(EventKind::warning, name + " needs " + std::to_string(arity) + " graphemes");
  }
  std::vector<std::string> parts;
  for (auto it = buffer_.end() - static_cast<std::ptrdiff_t>(arity); it != buffer_.end(); ++it) {
    if (!it->plain()) {
      return event(EventKind::warning, name + ": '" + it->label + "' cannot be a compound part");
    }
    parts.push_back(it->label);
  }
  const CompoundRule* rule = rules_->lookup_compound(parts);
  if (rule == nullptr) {
    std::string joined;
    for (const auto& p : parts) joined += (joined.empty() ? "" : "+") + p;
    return event(EventKind::warning, name + ": no compound for " + joined);
  }
  buffer_.resize(buffer_.size() - arity);
  buffer_.push_back(Grapheme{GraphemeKind::compound, rule->result_label, rule->parts,
                             rule->result_codepoints});
  return event(EventKind::transformed, name + " compound '" + rule->result_label + "'");
}

ComposeEvent Composer::make_hidden() {
  // Trailing run of plain graphemes, at most as long as the longest pattern.
  std::vector<std::string> tail;
  for (auto it = buffer_.rbegin();
       it != buffer_.rend() && tail.size() < RuleSet::kMaxHiddenPattern && it->plain(); ++it) {
    tail.insert(tail.begin(), it->label);
  }
  const HiddenRule* rule = rules_->match_hidden(tail);
  if (rule == nullptr) return event(EventKind::warning, "T4: no hidden-character pattern matches");
  buffer_.resize(buffer_.size() - rule->pattern.size());
  buffer_.push_back(Grapheme{GraphemeKind::hidden, rule->result_label, rule->pattern,
                             rule->result_codepoints});
  return event(EventKind::transformed, "T4 hidden '" + rule->result_label + "'");
}

}  // namespace bdspell
