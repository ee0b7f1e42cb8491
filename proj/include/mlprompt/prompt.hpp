// Copyright 2025 The MLPrompt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MLPROMPT_PROMPT_HPP
#define MLPROMPT_PROMPT_HPP

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mlprompt/errors.hpp"
#include "mlprompt/model.hpp"
#include "mlprompt/rules.hpp"

namespace mlprompt {

/// Prompting strategies. The first six are baselines; the last two are
/// the multilingual rewrite variants (swap a violated rule's text into a
/// non-dominant language, or append the translation next to the original).
enum class Strategy {
  zero_shot,
  few_shot,
  cot,
  tot,
  sc,
  repeat_rule,
  ml_replace,
  ml_append,
};

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view name);

/// Language code of the canonical rule texts.
inline constexpr char kDominantLanguage[] = "en";

/// An append-mode rewrite had no untried language left for a violated
/// rule. The loop treats this as the end of its rewrite budget.
class PolicyExhausted : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Rule texts keyed "<rule>.<language>", e.g. "R8.zh". Lookups for
/// missing entries throw ConfigError; a rewrite must never silently fall
/// back to a language it was not asked for.
class TranslationTable {
 public:
  /// The table compiled into the library (a copy of data/translations.json).
  static const TranslationTable& builtin();

  /// Parses a JSON object of key -> text. Keys starting with '_' are
  /// comments and are skipped. Throws ConfigError on malformed input.
  static TranslationTable from_json(const std::string& json_text);
  static TranslationTable from_file(const std::string& path);

  const std::string& lookup(const std::string& key) const;
  const std::string& text(RuleId rule, const std::string& language) const;
  bool has(RuleId rule, const std::string& language) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::string> entries_;
};

/// One rule line in a prompt. rendered_text is the translation-table
/// entry for (rule, language); it travels with the plan so that a stored
/// plan reproduces its prompt byte-for-byte without the table.
struct RuleSlot {
  RuleId rule = RuleId::r1;
  std::string language = kDominantLanguage;
  std::string rendered_text;
  int repeat_count = 1;
  /// True for the extra slot ml_append inserts after the original.
  bool appended = false;
};

bool operator==(const RuleSlot& a, const RuleSlot& b);

/// A reproducible description of one prompt. Plans are value types: the
/// rewrite step returns a new plan and leaves its input untouched.
struct PromptPlan {
  Strategy strategy = Strategy::zero_shot;
  /// Rule order is preserved. Under ml_append a rule may own two slots,
  /// the original and its translated shadow; never more.
  std::vector<RuleSlot> slots;
  std::string template_id = "bounds-v1";
  std::vector<std::string> few_shot_examples;
  /// Set after an extraction failure; renders a format reminder.
  bool reassert_format = false;
};

/// Which non-dominant languages a rewrite may use, in order.
struct LanguagePolicy {
  std::vector<std::string> languages{"zh"};
  /// When false (default) every rewrite uses languages[0]. When true a
  /// repeatedly violated rule advances through the list.
  bool rotate = false;
  /// Rewrite only the first violated rule per iteration instead of all.
  bool first_violation_only = false;
  std::string dominant = kDominantLanguage;
};

/// The shipped rotation order: Mandarin, Thai, Korean.
LanguagePolicy rotation_policy();

/// All nine rules in the dominant language, one slot each. few_shot
/// plans carry the shipped worked example.
PromptPlan default_plan(Strategy strategy, const TranslationTable& table);

/// Renders the full request: task preamble, required output format, the
/// numbered rule list in slot order (each line repeated repeat_count
/// times), optional worked examples, then the model serialized as JSON.
/// Pure function of (model, plan); identical inputs give identical bytes.
/// Throws ConfigError on an unknown template_id, an empty rendered_text,
/// or a repeat_count < 1.
std::string build_prompt(const ModelSpec& model, const PromptPlan& plan);

/// The rewrite step run after a failed validation. For ml_replace each
/// violated rule's slot moves to the policy's next language (a slot
/// already at the end of the rotation stays put, so the loop can spend
/// its remaining budget resubmitting). For ml_append a violated rule
/// gains a translated shadow slot, or its existing shadow advances;
/// once every policy language has been tried this throws ConfigError.
/// For repeat_rule each violated slot's repeat_count grows by one. For
/// the remaining strategies the plan is returned unchanged (they have no
/// rewrite mechanism). Slots of rules not listed in violated are copied
/// untouched.
PromptPlan apply_mlprompt(const PromptPlan& plan, const std::vector<RuleId>& violated,
                          const LanguagePolicy& policy, const TranslationTable& table);

/// Rules whose slot lists differ between two plans, ascending.
std::vector<RuleId> changed_rules(const PromptPlan& a, const PromptPlan& b);

/// Appends the chain-of-thought trigger phrase.
std::string cot_wrap(const std::string& prompt);

/// The four output keys, in the order the format string lists them.
const std::vector<std::string>& bounds_part_names();

/// Step-by-step builders, one per output key. Each builder takes the
/// fragments produced by the previous steps (embedded verbatim) and
/// returns the prompt asking for its own key's fragment only.
using TotStepBuilder = std::function<std::string(const std::vector<std::string>& previous_parts)>;
std::vector<std::pair<std::string, TotStepBuilder>> tot_step_prompts(const ModelSpec& model,
                                                                     const PromptPlan& plan);

/// The aggregation request: the base prompt plus every sampled answer
/// labeled correct or incorrect, asking for one consolidated object.
std::string sc_aggregate_prompt(const ModelSpec& model, const PromptPlan& plan,
                                const std::vector<std::pair<std::string, bool>>& labeled_samples);

}  // namespace mlprompt

#endif  // MLPROMPT_PROMPT_HPP
