#pragma once

// Trigger-driven text composer.
//
// Consumes confirmed sign labels and maintains a grapheme buffer plus the
// textual/numeral mode. In textual mode numeral signs bound to a trigger
// edit the buffer instead of appending a digit:
//
//   T0 space            T4 hidden character (longest suffix pattern)
//   T1 independent vowel T5 enter numeral mode
//   T2 2-part compound  T6 backspace
//   T3 3-part compound  T7 reserved, no-op
//
// In numeral mode every sign appends literally except the ruleset's
// numeral_mode_exit_label, which returns to textual mode.

#include <string>
#include <string_view>
#include <vector>

#include "bdspell/alphabet.hpp"
#include "bdspell/confirmer.hpp"

namespace bdspell {

enum class GraphemeKind { consonant, dep_vowel, indep_vowel, hidden, compound, digit, space };
enum class Mode { textual, numeral };
enum class EventKind { appended, transformed, deleted, space, mode_changed, warning };

std::string_view to_string(GraphemeKind kind);
std::string_view to_string(Mode mode);
std::string_view to_string(EventKind kind);

struct Grapheme {
  GraphemeKind kind = GraphemeKind::consonant;
  std::string label;
  std::vector<std::string> source_labels;
  std::string codepoints;

  // Literal sign with no derivation; only these take part in rule matching.
  bool plain() const {
    return (kind == GraphemeKind::consonant || kind == GraphemeKind::dep_vowel) &&
           source_labels.size() == 1;
  }

  friend bool operator==(const Grapheme&, const Grapheme&) = default;
};

struct ComposeEvent {
  EventKind kind = EventKind::appended;
  std::string detail;
  std::string buffer_text;
  Mode mode = Mode::textual;
};

class Composer {
 public:
  explicit Composer(RuleSetPtr rules);

  // Throws UnknownLabel (state untouched). Always returns at least one event.
  std::vector<ComposeEvent> apply(std::string_view label);
  std::vector<ComposeEvent> apply(const ConfirmedSymbol& sym) { return apply(sym.label); }

  std::string render() const;
  void reset();

  Mode mode() const noexcept { return mode_; }
  const std::vector<Grapheme>& buffer() const noexcept { return buffer_; }
  const RuleSet& rules() const noexcept { return *rules_; }

 private:
  ComposeEvent event(EventKind kind, std::string detail) const;
  Grapheme literal(const SignClass& cls) const;
  ComposeEvent dispatch(Trigger trigger);
  ComposeEvent make_independent();
  ComposeEvent make_compound(std::size_t arity, Trigger trigger);
  ComposeEvent make_hidden();

  RuleSetPtr rules_;
  Mode mode_ = Mode::textual;
  std::vector<Grapheme> buffer_;
};

}  // namespace bdspell
