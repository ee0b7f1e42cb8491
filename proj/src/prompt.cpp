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

#include "mlprompt/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mlprompt/errors.hpp"
#include "translations_data.hpp"

namespace mlprompt {

namespace {

constexpr char kPreambleFeasible[] =
    "You are required to return a feasible solution distribution under the given "
    "constraints.";

constexpr char kPreambleTask[] =
    "Please read the following mixed integer programming (MIP) model and return a JSON "
    "object containing the lower and upper bounds for each set, hyper-parameter, and "
    "parameter.";

constexpr char kPreambleNoData[] =
    "Since the model does not include any data, your task is to provide the lower and "
    "upper bounds for every set, parameter, and hyper-parameter to construct instances "
    "for this model.";

constexpr char kFormatLine[] =
    "{'set': [[lb1, ub1], [lb2,ub2]...], 'hyper-parameter': [[lb1, ub1], [lb2,ub2]...], "
    "'parameter': [[lb1, ub1],[lb2, ub2]...], 'parameter_types':[integer, integer, "
    "float, ...]}";

constexpr char kCotTrigger[] = "Let's think it step by step.";

constexpr char kReassertText[] =
    "Reminder: your previous reply was not a single JSON object in the required format. "
    "Return only the JSON object, with no surrounding text.";

constexpr char kDefaultTemplate[] = "bounds-v1";

// A complete tiny task with a compliant answer, shipped as the one
// few-shot demonstration.
constexpr char kWorkedExample[] =
    "Modeling Information:\n"
    "\n"
    "{\"id\": 900, \"title\": \"Item picking\", \"description\": \"Pick items "
    "at minimum total cost.\", \"category\": [\"Worked Example\"], \"model\": {\"set\": "
    "[{\"name\": \"F\", \"description\": \"candidate items\"}], \"parameter\": "
    "[{\"name\": \"cost\", \"description\": \"cost of item i\", \"domain\": \"{i <in> "
    "F}\"}, {\"name\": \"frac\", \"description\": \"fractional weight of item i\", "
    "\"domain\": \"{i <in> F}\"}], \"variable\": [{\"name\": \"x\", \"description\": "
    "\"1 if item i is picked\", \"domain\": \"{i <in> F}\", \"type\": \"binary\"}], "
    "\"objective\": [{\"name\": \"TotalCost\", \"description\": \"total cost of picked "
    "items\", \"sense\": \"min\", \"function\": \"<sum>_{i <in> F} cost_{i} * x_{i}\"}], "
    "\"constraint\": [{\"name\": \"PickSome\", \"description\": \"at least one item is "
    "picked\", \"function\": \"<sum>_{i <in> F} x_{i} >= 1\"}]}}\n"
    "\n"
    "A compliant answer:\n"
    "\n"
    "{\"set\": [[1, 4]], \"hyper-parameter\": [[null, null]], \"parameter\": [[1, 10], "
    "[2.5, 12.5]], \"parameter_types\": [\"integer\", \"float\"]}";

int rule_number(RuleId id) { return static_cast<int>(id); }

std::string slot_key(RuleId rule, const std::string& language) {
  std::string key(to_string(rule));
  key += '.';
  key += language;
  return key;
}

// Next language for a replace-mode slot. Never retreats to the dominant
// language, so the set of translated slots only grows across a run.
std::string next_replace_language(const std::string& current, const LanguagePolicy& policy) {
  if (policy.languages.empty()) {
    throw ConfigError("language policy has no languages");
  }
  if (current == policy.dominant) return policy.languages.front();
  auto it = std::find(policy.languages.begin(), policy.languages.end(), current);
  if (it == policy.languages.end()) return policy.languages.front();
  if (!policy.rotate) return current;
  auto next = std::next(it);
  return next == policy.languages.end() ? current : *next;
}

std::set<RuleId> violated_set(const std::vector<RuleId>& violated, const LanguagePolicy& policy) {
  std::set<RuleId> out(violated.begin(), violated.end());
  if (policy.first_violation_only && out.size() > 1) {
    out.erase(std::next(out.begin()), out.end());
  }
  return out;
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::zero_shot: return "zero_shot";
    case Strategy::few_shot: return "few_shot";
    case Strategy::cot: return "cot";
    case Strategy::tot: return "tot";
    case Strategy::sc: return "sc";
    case Strategy::repeat_rule: return "repeat_rule";
    case Strategy::ml_replace: return "ml_replace";
    case Strategy::ml_append: return "ml_append";
  }
  throw ConfigError("unknown strategy value");
}

Strategy strategy_from_string(std::string_view name) {
  std::string n(name);
  std::replace(n.begin(), n.end(), '-', '_');
  for (Strategy s : {Strategy::zero_shot, Strategy::few_shot, Strategy::cot, Strategy::tot,
                     Strategy::sc, Strategy::repeat_rule, Strategy::ml_replace,
                     Strategy::ml_append}) {
    if (n == to_string(s)) return s;
  }
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

const TranslationTable& TranslationTable::builtin() {
  static const TranslationTable table = from_json(detail::kTranslationsJson);
  return table;
}

TranslationTable TranslationTable::from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("translation table is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError("translation table must be a JSON object of key -> text");
  }
  TranslationTable table;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!it.key().empty() && it.key().front() == '_') continue;
    if (!it.value().is_string()) {
      throw ConfigError("translation entry '" + it.key() + "' is not a string");
    }
    table.entries_[it.key()] = it.value().get<std::string>();
  }
  return table;
}

TranslationTable TranslationTable::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open translation table '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

const std::string& TranslationTable::lookup(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw ConfigError("no translation for key '" + key + "'");
  }
  return it->second;
}

const std::string& TranslationTable::text(RuleId rule, const std::string& language) const {
  return lookup(slot_key(rule, language));
}

bool TranslationTable::has(RuleId rule, const std::string& language) const {
  return entries_.count(slot_key(rule, language)) != 0;
}

bool operator==(const RuleSlot& a, const RuleSlot& b) {
  return a.rule == b.rule && a.language == b.language && a.rendered_text == b.rendered_text &&
         a.repeat_count == b.repeat_count && a.appended == b.appended;
}

LanguagePolicy rotation_policy() {
  LanguagePolicy policy;
  policy.languages = {"zh", "th", "ko"};
  policy.rotate = true;
  return policy;
}

PromptPlan default_plan(Strategy strategy, const TranslationTable& table) {
  PromptPlan plan;
  plan.strategy = strategy;
  plan.template_id = kDefaultTemplate;
  for (int n = 1; n <= 9; ++n) {
    RuleSlot slot;
    slot.rule = rule_from_int(n);
    slot.language = kDominantLanguage;
    slot.rendered_text = table.text(slot.rule, kDominantLanguage);
    plan.slots.push_back(std::move(slot));
  }
  if (strategy == Strategy::few_shot) {
    plan.few_shot_examples.push_back(kWorkedExample);
  }
  return plan;
}

std::string build_prompt(const ModelSpec& model, const PromptPlan& plan) {
  if (plan.template_id != kDefaultTemplate) {
    throw ConfigError("unknown prompt template '" + plan.template_id + "'");
  }
  std::ostringstream out;
  out << kPreambleFeasible << "\n\n" << kPreambleTask << "\n\n" << kPreambleNoData << "\n\n";
  out << "The required JSON format is as follows:\n\n" << kFormatLine << "\n\n";
  out << "You must follow the following rules:\n\n";
  for (const RuleSlot& slot : plan.slots) {
    if (slot.repeat_count < 1) {
      throw ConfigError("slot for rule " + std::string(to_string(slot.rule)) +
                        " has repeat_count < 1");
    }
    if (slot.rendered_text.empty()) {
      throw ConfigError("slot for rule " + std::string(to_string(slot.rule)) +
                        " has no rendered text");
    }
    for (int i = 0; i < slot.repeat_count; ++i) {
      out << rule_number(slot.rule) << ": " << slot.rendered_text << "\n";
    }
  }
  out << "\n";
  for (const std::string& example : plan.few_shot_examples) {
    out << "Here is a worked example.\n\n" << example << "\n\n";
  }
  out << "Modeling Information:\n\n" << serialize_model(model);
  if (plan.reassert_format) {
    out << "\n" << kReassertText << "\n";
  }
  std::string prompt = out.str();
  if (plan.strategy == Strategy::cot) {
    prompt = cot_wrap(prompt);
  }
  return prompt;
}

PromptPlan apply_mlprompt(const PromptPlan& plan, const std::vector<RuleId>& violated,
                          const LanguagePolicy& policy, const TranslationTable& table) {
  const std::set<RuleId> vio = violated_set(violated, policy);
  PromptPlan out = plan;
  if (vio.empty()) return out;

  switch (plan.strategy) {
    case Strategy::ml_replace: {
      for (RuleSlot& slot : out.slots) {
        if (slot.appended || vio.count(slot.rule) == 0) continue;
        const std::string next = next_replace_language(slot.language, policy);
        if (next == slot.language) continue;
        slot.language = next;
        slot.rendered_text = table.text(slot.rule, next);
      }
      return out;
    }
    case Strategy::ml_append: {
      if (policy.languages.empty()) {
        throw ConfigError("language policy has no languages");
      }
      std::vector<RuleSlot> rebuilt;
      rebuilt.reserve(out.slots.size() + vio.size());
      std::set<RuleId> shadowed;
      for (const RuleSlot& slot : out.slots) {
        if (slot.appended) shadowed.insert(slot.rule);
      }
      for (RuleSlot& slot : out.slots) {
        if (slot.appended && vio.count(slot.rule) != 0) {
          // Advance the existing shadow; the original keeps its place.
          auto it = std::find(policy.languages.begin(), policy.languages.end(), slot.language);
          const bool exhausted = !policy.rotate || it == policy.languages.end() ||
                                 std::next(it) == policy.languages.end();
          if (exhausted) {
            throw PolicyExhausted("language policy exhausted for rule " +
                                  std::string(to_string(slot.rule)));
          }
          slot.language = *std::next(it);
          slot.rendered_text = table.text(slot.rule, slot.language);
        }
        const bool needs_shadow =
            !slot.appended && vio.count(slot.rule) != 0 && shadowed.count(slot.rule) == 0;
        rebuilt.push_back(std::move(slot));
        if (needs_shadow) {
          RuleSlot shadow;
          shadow.rule = rebuilt.back().rule;
          shadow.language = policy.languages.front();
          shadow.rendered_text = table.text(shadow.rule, shadow.language);
          shadow.appended = true;
          rebuilt.push_back(std::move(shadow));
        }
      }
      out.slots = std::move(rebuilt);
      return out;
    }
    case Strategy::repeat_rule: {
      for (RuleSlot& slot : out.slots) {
        if (vio.count(slot.rule) != 0) slot.repeat_count += 1;
      }
      return out;
    }
    default:
      // The remaining strategies carry no rewrite mechanism; the loop
      // resubmits the same plan until its budget runs out.
      return out;
  }
}

std::vector<RuleId> changed_rules(const PromptPlan& a, const PromptPlan& b) {
  std::vector<RuleId> changed;
  for (int n = 1; n <= 9; ++n) {
    const RuleId rule = rule_from_int(n);
    std::vector<RuleSlot> in_a;
    std::vector<RuleSlot> in_b;
    for (const RuleSlot& s : a.slots) {
      if (s.rule == rule) in_a.push_back(s);
    }
    for (const RuleSlot& s : b.slots) {
      if (s.rule == rule) in_b.push_back(s);
    }
    if (in_a != in_b) changed.push_back(rule);
  }
  return changed;
}

std::string cot_wrap(const std::string& prompt) {
  return prompt + "\n" + kCotTrigger + "\n";
}

const std::vector<std::string>& bounds_part_names() {
  static const std::vector<std::string> names = {"set", "hyper-parameter", "parameter",
                                                 "parameter_types"};
  return names;
}

std::vector<std::pair<std::string, TotStepBuilder>> tot_step_prompts(const ModelSpec& model,
                                                                     const PromptPlan& plan) {
  // The base request is shared by every step; build it once so identical
  // calls stay byte-identical.
  auto base = std::make_shared<const std::string>(build_prompt(model, plan));
  const auto& parts = bounds_part_names();
  std::vector<std::pair<std::string, TotStepBuilder>> steps;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::string part = parts[k];
    steps.emplace_back(part, [base, part, k](const std::vector<std::string>& previous_parts) {
      if (previous_parts.size() != k) {
        throw ConfigError("step for key '" + part + "' expects " + std::to_string(k) +
                          " previous part(s), got " + std::to_string(previous_parts.size()));
      }
      std::ostringstream out;
      out << *base << "\n";
      out << "We will build the answer one part at a time.\n\n";
      if (!previous_parts.empty()) {
        out << "Parts produced so far:\n\n";
        for (std::size_t i = 0; i < previous_parts.size(); ++i) {
          out << "'" << bounds_part_names()[i] << "': " << previous_parts[i] << "\n";
        }
        out << "\n";
      }
      out << "Return only the JSON fragment for the key '" << part
          << "', exactly as it should appear inside the final object, and nothing else.\n";
      return out.str();
    });
  }
  return steps;
}

std::string sc_aggregate_prompt(const ModelSpec& model, const PromptPlan& plan,
                                const std::vector<std::pair<std::string, bool>>& labeled_samples) {
  std::ostringstream out;
  out << build_prompt(model, plan) << "\n";
  out << "Here are sampled answers for this task, each labeled correct or incorrect.\n\n";
  for (std::size_t i = 0; i < labeled_samples.size(); ++i) {
    out << "Answer " << (i + 1) << " (" << (labeled_samples[i].second ? "correct" : "incorrect")
        << "):\n"
        << labeled_samples[i].first << "\n\n";
  }
  out << "Weighing the labeled answers, return one JSON object in the required format.\n";
  return out.str();
}

}  // namespace mlprompt
