#pragma once

// Sign alphabet and transformation rule tables.
//
// A RuleSet is loaded once from JSON, validated, and then shared read-only
// between any number of sessions.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bdspell/error.hpp"

namespace bdspell {

enum class Role { consonant, dependent_vowel, numeral };

enum class Trigger : std::uint8_t { T0, T1, T2, T3, T4, T5, T6, T7 };

inline constexpr int kTriggerCount = 8;

std::string_view to_string(Role role);
std::string_view to_string(Trigger trigger);
std::optional<Role> parse_role(std::string_view text);
std::optional<Trigger> parse_trigger(std::string_view text);

struct SignClass {
  std::string label;
  Role role = Role::consonant;
  std::string codepoints;
  std::optional<Trigger> trigger;  // numerals only; active in textual mode
};

struct VowelPair {
  std::string dependent_label;
  std::string dependent_codepoints;
  std::string independent_label;
  std::string independent_codepoints;
};

struct HiddenRule {
  std::vector<std::string> pattern;  // 1-2 labels matched against the buffer suffix
  std::string result_label;
  std::string result_codepoints;
};

struct CompoundRule {
  std::vector<std::string> parts;  // 2 or 3 labels
  std::string result_label;
  std::string result_codepoints;
};

// Raised for structural violations, with the offending table and index in the message.
class DuplicateLabel : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

class DanglingReference : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

class RuleSet {
 public:
  static constexpr int kVersion = 1;
  static constexpr std::size_t kMaxHiddenPattern = 2;

  // Validates every invariant; throws InputError (schema) or InvariantError.
  static RuleSet from_json(const nlohmann::json& doc);
  static RuleSet parse(std::string_view text);
  static RuleSet load(const std::filesystem::path& path);

  // Canonical form: sorted keys, absent trigger omitted.
  nlohmann::json to_json() const;
  std::string serialize() const;  // to_json().dump(2) + '\n'

  const std::vector<SignClass>& classes() const noexcept { return classes_; }
  const std::vector<VowelPair>& vowels() const noexcept { return vowels_; }
  const std::vector<HiddenRule>& hidden() const noexcept { return hidden_; }
  const std::vector<CompoundRule>& compounds2() const noexcept { return compounds2_; }
  const std::vector<CompoundRule>& compounds3() const noexcept { return compounds3_; }
  const std::string& numeral_mode_exit_label() const noexcept { return exit_label_; }

  const SignClass* find(std::string_view label) const;
  // Throws UnknownLabel.
  const SignClass& class_of(std::string_view label) const;
  bool contains(std::string_view label) const { return find(label) != nullptr; }

  // Class bound to the trigger, or nullptr when the trigger is unbound.
  const SignClass* trigger_class(Trigger trigger) const;
  // Label of the class bound to the trigger; throws InvariantError if unbound.
  const std::string& trigger_label(Trigger trigger) const;

  const VowelPair* vowel_for(std::string_view dependent_label) const;

  // Exact-tuple match; throws InputError when parts is not 2 or 3 long.
  const CompoundRule* lookup_compound(std::span<const std::string> parts) const;

  // Longest pattern matching the tail of `labels`.
  const HiddenRule* match_hidden(std::span<const std::string> labels) const;

 private:
  RuleSet() = default;
  void validate_and_index();

  std::vector<SignClass> classes_;
  std::vector<VowelPair> vowels_;
  std::vector<HiddenRule> hidden_;
  std::vector<CompoundRule> compounds2_;
  std::vector<CompoundRule> compounds3_;
  std::string exit_label_;

  std::map<std::string, std::size_t, std::less<>> class_index_;
  std::map<std::string, std::size_t, std::less<>> vowel_index_;
  std::map<std::vector<std::string>, std::size_t> hidden_index_;
  std::map<std::vector<std::string>, std::size_t> compound2_index_;
  std::map<std::vector<std::string>, std::size_t> compound3_index_;
  std::array<std::optional<std::size_t>, kTriggerCount> trigger_index_{};
};

using RuleSetPtr = std::shared_ptr<const RuleSet>;

// Path of the ruleset shipped with the repository (data/ruleset.json).
std::filesystem::path default_ruleset_path();

// BDSPELL_RULESET when set, otherwise the shipped ruleset.
RuleSetPtr load_default_ruleset();

}  // namespace bdspell
