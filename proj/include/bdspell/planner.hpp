#pragma once

// Inverse of the composer: the sign sequence that spells a given text.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "bdspell/alphabet.hpp"

namespace bdspell {

enum class Coverage { literal, vowel_transform, hidden, compound2, compound3, digit_mode, space };

std::string_view to_string(Coverage coverage);

struct PlanSegment {
  std::size_t offset = 0;  // codepoint offset into the normalized target
  std::string text;
  Coverage coverage = Coverage::literal;
  std::vector<std::string> labels;
};

struct SpellingPlan {
  std::string target;  // NFC
  std::vector<std::string> labels;
  std::vector<PlanSegment> segments;
};

class PlanError : public InputError {
 public:
  PlanError(const std::string& message, std::size_t offset, char32_t character)
      : InputError(message), offset_(offset), character_(character) {}
  std::size_t offset() const noexcept { return offset_; }
  char32_t character() const noexcept { return character_; }

 private:
  std::size_t offset_;
  char32_t character_;
};

// Normalizes to NFC, then picks the longest rule at each step (3-part
// compounds before 2-part, and so on) and backtracks when the remainder
// cannot be covered. The plan is replayed through a fresh Composer before
// it is returned. Throws PlanError naming the first uncoverable character.
SpellingPlan plan(std::string_view text, const RuleSetPtr& rules);

// Text a label sequence renders to, starting from a fresh textual composer.
std::string render_labels(const std::vector<std::string>& labels, const RuleSetPtr& rules);

}  // namespace bdspell
