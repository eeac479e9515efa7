#include "bdspell/alphabet.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "bdspell/unicode.hpp"

#ifndef BDSPELL_DEFAULT_RULESET
#define BDSPELL_DEFAULT_RULESET "data/ruleset.json"
#endif

namespace bdspell {

using nlohmann::json;

namespace {

constexpr std::string_view kRoleNames[] = {"consonant", "dependent_vowel", "numeral"};
constexpr std::string_view kTriggerNames[] = {"T0", "T1", "T2", "T3", "T4", "T5", "T6", "T7"};

std::string where(std::string_view table, std::size_t index) {
  return std::string(table) + "[" + std::to_string(index) + "]";
}

const json& require(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.is_object()) throw InputError(ctx + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw InputError(ctx + ": missing key '" + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_string()) throw InputError(ctx + "." + key + ": expected a string");
  return v.get<std::string>();
}

std::vector<std::string> require_labels(const json& obj, const char* key, const std::string& ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_array()) throw InputError(ctx + "." + key + ": expected an array of labels");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) throw InputError(ctx + "." + key + ": labels must be strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

const json& require_array(const json& doc, const char* key) {
  const json& v = require(doc, key, "ruleset");
  if (!v.is_array()) throw InputError(std::string("ruleset.") + key + ": expected an array");
  return v;
}

void check_codepoints(const std::string& cps, const std::string& ctx) {
  if (cps.empty()) throw InvariantError(ctx + ": codepoints must not be empty");
  if (!unicode::is_nfc(cps)) throw InvariantError(ctx + ": codepoints must be NFC-normalized UTF-8");
}

bool is_bengali_digit(const std::string& cps) {
  const auto decoded = unicode::decode(cps);
  return decoded.size() == 1 && decoded[0] >= 0x09E6 && decoded[0] <= 0x09EF;
}

std::string join(const std::vector<std::string>& labels) {
  std::string out;
  for (const auto& l : labels) {
    if (!out.empty()) out += ',';
    out += l;
  }
  return out;
}

CompoundRule parse_compound(const json& item, const std::string& ctx) {
  CompoundRule rule;
  rule.parts = require_labels(item, "parts", ctx);
  rule.result_label = require_string(item, "result_label", ctx);
  rule.result_codepoints = require_string(item, "result_codepoints", ctx);
  return rule;
}

json compound_json(const CompoundRule& r) {
  return json{{"parts", r.parts}, {"result_label", r.result_label},
              {"result_codepoints", r.result_codepoints}};
}

}  // namespace

std::string_view to_string(Role role) { return kRoleNames[static_cast<int>(role)]; }
std::string_view to_string(Trigger trigger) { return kTriggerNames[static_cast<int>(trigger)]; }

std::optional<Role> parse_role(std::string_view text) {
  for (int i = 0; i < 3; ++i) {
    if (kRoleNames[i] == text) return static_cast<Role>(i);
  }
  return std::nullopt;
}

std::optional<Trigger> parse_trigger(std::string_view text) {
  for (int i = 0; i < kTriggerCount; ++i) {
    if (kTriggerNames[i] == text) return static_cast<Trigger>(i);
  }
  return std::nullopt;
}

RuleSet RuleSet::from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("ruleset: top level must be an object");
  const json& version = require(doc, "ruleset_version", "ruleset");
  if (!version.is_number_integer() || version.get<int>() != kVersion) {
    throw InputError("ruleset: unsupported ruleset_version (expected 1)");
  }

  RuleSet rs;
  const json& classes = require_array(doc, "classes");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto ctx = where("classes", i);
    const json& item = classes[i];
    SignClass cls;
    cls.label = require_string(item, "label", ctx);
    const auto role_text = require_string(item, "role", ctx);
    const auto role = parse_role(role_text);
    if (!role) throw InputError(ctx + ": unknown role '" + role_text + "'");
    cls.role = *role;
    cls.codepoints = require_string(item, "codepoints", ctx);
    if (auto it = item.find("trigger"); it != item.end() && !it->is_null()) {
      if (!it->is_string()) throw InputError(ctx + ".trigger: expected a string");
      const auto trig = parse_trigger(it->get<std::string>());
      if (!trig) throw InputError(ctx + ": unknown trigger '" + it->get<std::string>() + "'");
      cls.trigger = *trig;
    }
    rs.classes_.push_back(std::move(cls));
  }

  const json& vowels = require_array(doc, "vowels");
  for (std::size_t i = 0; i < vowels.size(); ++i) {
    const auto ctx = where("vowels", i);
    VowelPair pair;
    pair.dependent_label = require_string(vowels[i], "dependent_label", ctx);
    pair.dependent_codepoints = require_string(vowels[i], "dependent_codepoints", ctx);
    pair.independent_label = require_string(vowels[i], "independent_label", ctx);
    pair.independent_codepoints = require_string(vowels[i], "independent_codepoints", ctx);
    rs.vowels_.push_back(std::move(pair));
  }

  const json& hidden = require_array(doc, "hidden");
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    const auto ctx = where("hidden", i);
    HiddenRule rule;
    rule.pattern = require_labels(hidden[i], "pattern", ctx);
    rule.result_label = require_string(hidden[i], "result_label", ctx);
    rule.result_codepoints = require_string(hidden[i], "result_codepoints", ctx);
    rs.hidden_.push_back(std::move(rule));
  }

  const json& c2 = require_array(doc, "compounds2");
  for (std::size_t i = 0; i < c2.size(); ++i) {
    rs.compounds2_.push_back(parse_compound(c2[i], where("compounds2", i)));
  }
  const json& c3 = require_array(doc, "compounds3");
  for (std::size_t i = 0; i < c3.size(); ++i) {
    rs.compounds3_.push_back(parse_compound(c3[i], where("compounds3", i)));
  }

  rs.exit_label_ = require_string(doc, "numeral_mode_exit_label", "ruleset");
  rs.validate_and_index();
  return rs;
}

void RuleSet::validate_and_index() {
  // Every label that can end up on a grapheme must be unique across tables.
  std::set<std::string, std::less<>> produced;
  auto claim = [&](const std::string& label, const std::string& ctx) {
    if (label.empty()) throw InvariantError(ctx + ": empty label");
    if (!produced.insert(label).second) {
      throw DuplicateLabel("duplicate label '" + label + "' (" + ctx + ")");
    }
  };
  auto require_class = [&](const std::string& label, const std::string& ctx) -> const SignClass& {
    auto it = class_index_.find(label);
    if (it == class_index_.end()) {
      throw DanglingReference(ctx + ": references unknown label '" + label + "'");
    }
    return classes_[it->second];
  };

  for (std::size_t i = 0; i < classes_.size(); ++i) {
    const auto ctx = where("classes", i);
    const SignClass& cls = classes_[i];
    claim(cls.label, ctx);
    for (unsigned char ch : cls.label) {
      if (ch < 0x21 || ch > 0x7E) throw InvariantError(ctx + ": label must be printable ASCII");
    }
    check_codepoints(cls.codepoints, ctx);
    class_index_.emplace(cls.label, i);
    if (cls.role == Role::numeral) {
      if (!is_bengali_digit(cls.codepoints)) {
        throw InvariantError(ctx + ": numeral class must carry a single Bengali digit");
      }
    } else if (cls.trigger) {
      throw InvariantError(ctx + ": only numeral classes may carry a trigger binding");
    }
    if (cls.trigger) {
      auto& slot = trigger_index_[static_cast<int>(*cls.trigger)];
      if (slot) {
        throw InvariantError(ctx + ": trigger " + std::string(to_string(*cls.trigger)) +
                             " already bound to '" + classes_[*slot].label + "'");
      }
      slot = i;
    }
  }
  for (int t = 0; t < kTriggerCount - 1; ++t) {
    if (!trigger_index_[t]) {
      throw InvariantError("classes: trigger " + std::string(kTriggerNames[t]) + " is not bound");
    }
  }

  std::set<std::string> independents;
  for (std::size_t i = 0; i < vowels_.size(); ++i) {
    const auto ctx = where("vowels", i);
    const VowelPair& pair = vowels_[i];
    const SignClass& dep = require_class(pair.dependent_label, ctx);
    if (dep.role != Role::dependent_vowel) {
      throw InvariantError(ctx + ": '" + pair.dependent_label + "' is not a dependent vowel");
    }
    check_codepoints(pair.dependent_codepoints, ctx);
    check_codepoints(pair.independent_codepoints, ctx);
    if (pair.dependent_codepoints != dep.codepoints) {
      throw InvariantError(ctx + ": dependent_codepoints differ from class '" + dep.label + "'");
    }
    if (pair.dependent_codepoints == pair.independent_codepoints) {
      throw InvariantError(ctx + ": dependent and independent codepoints must differ");
    }
    if (!vowel_index_.emplace(pair.dependent_label, i).second) {
      throw InvariantError(ctx + ": vowel map not injective, '" + pair.dependent_label +
                           "' mapped twice");
    }
    if (!independents.insert(pair.independent_codepoints).second) {
      throw InvariantError(ctx + ": vowel map not injective, independent form repeated");
    }
    claim(pair.independent_label, ctx);
  }

  for (std::size_t i = 0; i < hidden_.size(); ++i) {
    const auto ctx = where("hidden", i);
    const HiddenRule& rule = hidden_[i];
    if (rule.pattern.empty() || rule.pattern.size() > kMaxHiddenPattern) {
      throw InvariantError(ctx + ": pattern must hold 1 or 2 labels");
    }
    for (const auto& l : rule.pattern) require_class(l, ctx);
    check_codepoints(rule.result_codepoints, ctx);
    claim(rule.result_label, ctx);
    if (!hidden_index_.emplace(rule.pattern, i).second) {
      throw InvariantError(ctx + ": duplicate pattern [" + join(rule.pattern) + "]");
    }
  }
  for (std::size_t i = 0; i < hidden_.size(); ++i) {
    const auto& longer = hidden_[i].pattern;
    for (std::size_t len = 1; len < longer.size(); ++len) {
      std::vector<std::string> suffix(longer.end() - static_cast<std::ptrdiff_t>(len), longer.end());
      if (auto it = hidden_index_.find(suffix); it != hidden_index_.end()) {
        throw InvariantError(where("hidden", it->second) + ": pattern [" + join(suffix) +
                             "] is a proper suffix of " + where("hidden", i));
      }
    }
  }

  auto index_compounds = [&](const std::vector<CompoundRule>& rules, std::size_t arity,
                             std::string_view table, auto& index) {
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const auto ctx = where(table, i);
      const CompoundRule& rule = rules[i];
      if (rule.parts.size() != arity) {
        throw InvariantError(ctx + ": expected " + std::to_string(arity) + " parts");
      }
      for (const auto& l : rule.parts) require_class(l, ctx);
      check_codepoints(rule.result_codepoints, ctx);
      const auto cps = unicode::decode(rule.result_codepoints);
      if (std::find(cps.begin(), cps.end(), unicode::kVirama) == cps.end()) {
        throw InvariantError(ctx + ": compound result must contain a virama (U+09CD)");
      }
      claim(rule.result_label, ctx);
      if (!index.emplace(rule.parts, i).second) {
        throw InvariantError(ctx + ": duplicate parts [" + join(rule.parts) + "]");
      }
    }
  };
  index_compounds(compounds2_, 2, "compounds2", compound2_index_);
  index_compounds(compounds3_, 3, "compounds3", compound3_index_);

  const SignClass& exit = require_class(exit_label_, "numeral_mode_exit_label");
  if (exit.role != Role::dependent_vowel) {
    throw InvariantError("numeral_mode_exit_label: '" + exit_label_ +
                         "' must be a dependent vowel class");
  }
}

RuleSet RuleSet::parse(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("ruleset parse error: ") + e.what());
  }
  return from_json(doc);
}

RuleSet RuleSet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read ruleset file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

json RuleSet::to_json() const {
  json doc = json::object();
  json classes = json::array();
  for (const auto& cls : classes_) {
    json item{{"label", cls.label}, {"role", to_string(cls.role)}, {"codepoints", cls.codepoints}};
    if (cls.trigger) item["trigger"] = to_string(*cls.trigger);
    classes.push_back(std::move(item));
  }
  json vowels = json::array();
  for (const auto& v : vowels_) {
    vowels.push_back({{"dependent_label", v.dependent_label},
                      {"dependent_codepoints", v.dependent_codepoints},
                      {"independent_label", v.independent_label},
                      {"independent_codepoints", v.independent_codepoints}});
  }
  json hidden = json::array();
  for (const auto& h : hidden_) {
    hidden.push_back({{"pattern", h.pattern},
                      {"result_label", h.result_label},
                      {"result_codepoints", h.result_codepoints}});
  }
  json c2 = json::array();
  for (const auto& r : compounds2_) c2.push_back(compound_json(r));
  json c3 = json::array();
  for (const auto& r : compounds3_) c3.push_back(compound_json(r));

  doc["ruleset_version"] = kVersion;
  doc["classes"] = std::move(classes);
  doc["vowels"] = std::move(vowels);
  doc["hidden"] = std::move(hidden);
  doc["compounds2"] = std::move(c2);
  doc["compounds3"] = std::move(c3);
  doc["numeral_mode_exit_label"] = exit_label_;
  return doc;
}

std::string RuleSet::serialize() const { return to_json().dump(2) + "\n"; }

const SignClass* RuleSet::find(std::string_view label) const {
  auto it = class_index_.find(label);
  return it == class_index_.end() ? nullptr : &classes_[it->second];
}

const SignClass& RuleSet::class_of(std::string_view label) const {
  if (const SignClass* cls = find(label)) return *cls;
  throw UnknownLabel(std::string(label));
}

const SignClass* RuleSet::trigger_class(Trigger trigger) const {
  const auto& slot = trigger_index_[static_cast<int>(trigger)];
  return slot ? &classes_[*slot] : nullptr;
}

const std::string& RuleSet::trigger_label(Trigger trigger) const {
  if (const SignClass* cls = trigger_class(trigger)) return cls->label;
  throw InvariantError("trigger " + std::string(to_string(trigger)) + " is not bound");
}

const VowelPair* RuleSet::vowel_for(std::string_view dependent_label) const {
  auto it = vowel_index_.find(dependent_label);
  return it == vowel_index_.end() ? nullptr : &vowels_[it->second];
}

const CompoundRule* RuleSet::lookup_compound(std::span<const std::string> parts) const {
  const std::vector<std::string> key(parts.begin(), parts.end());
  if (parts.size() == 2) {
    auto it = compound2_index_.find(key);
    return it == compound2_index_.end() ? nullptr : &compounds2_[it->second];
  }
  if (parts.size() == 3) {
    auto it = compound3_index_.find(key);
    return it == compound3_index_.end() ? nullptr : &compounds3_[it->second];
  }
  throw InputError("compound lookup needs 2 or 3 parts, got " + std::to_string(parts.size()));
}

const HiddenRule* RuleSet::match_hidden(std::span<const std::string> labels) const {
  for (std::size_t len = std::min(kMaxHiddenPattern, labels.size()); len > 0; --len) {
    const std::vector<std::string> key(labels.end() - static_cast<std::ptrdiff_t>(len),
                                       labels.end());
    if (auto it = hidden_index_.find(key); it != hidden_index_.end()) {
      return &hidden_[it->second];
    }
  }
  return nullptr;
}

std::filesystem::path default_ruleset_path() { return BDSPELL_DEFAULT_RULESET; }

RuleSetPtr load_default_ruleset() {
  const char* env = std::getenv("BDSPELL_RULESET");
  const std::filesystem::path path = (env && *env) ? std::filesystem::path(env)
                                                   : default_ruleset_path();
  return std::make_shared<const RuleSet>(RuleSet::load(path));
}

}  // namespace bdspell
