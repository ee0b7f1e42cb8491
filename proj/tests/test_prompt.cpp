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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <string>
#include <vector>

#include "doctest.h"
#include "mlprompt/errors.hpp"
#include "mlprompt/model.hpp"
#include "mlprompt/prompt.hpp"
#include "mlprompt/rules.hpp"

using namespace mlprompt;

namespace {

const std::string kRepoDir = MLPROMPT_REPO_DIR;

ModelSpec binpacking() { return load_model_file(kRepoDir + "/data/complexor/binpacking.json"); }

std::size_t count_lines_starting(const std::string& text, const std::string& prefix) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    if (text.compare(pos, prefix.size(), prefix) == 0) ++count;
    pos = eol + 1;
  }
  return count;
}

std::size_t count_non_dominant(const PromptPlan& plan) {
  std::size_t n = 0;
  for (const auto& slot : plan.slots) {
    if (slot.language != kDominantLanguage) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("builtin table covers all nine rules in four languages") {
  const TranslationTable& table = TranslationTable::builtin();
  for (int n = 1; n <= 9; ++n) {
    RuleId rule = rule_from_int(n);
    for (const char* lang : {"en", "zh", "ko", "th"}) {
      CAPTURE(n);
      CAPTURE(lang);
      CHECK(table.has(rule, lang));
      CHECK(!table.text(rule, lang).empty());
    }
  }
  for (const char* key : {"S1.en", "S2.en", "S3.en", "S4.en", "S5.en", "S4.zh", "S4.ja",
                          "S4.ko"}) {
    CHECK(!table.lookup(key).empty());
  }
}

TEST_CASE("missing translations fail loudly") {
  const TranslationTable& table = TranslationTable::builtin();
  CHECK_THROWS_AS(table.text(RuleId::r4, "de"), ConfigError);
  CHECK_THROWS_AS(table.lookup("R99.en"), ConfigError);
  // Underscore keys are comments, not entries.
  CHECK_THROWS_AS(table.lookup("_note"), ConfigError);
}

TEST_CASE("table parsing rejects malformed documents") {
  CHECK_THROWS_AS(TranslationTable::from_json("not json"), ConfigError);
  CHECK_THROWS_AS(TranslationTable::from_json("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(TranslationTable::from_json("{\"R4.zh\": 7}"), ConfigError);
  TranslationTable t = TranslationTable::from_json("{\"R4.zh\": \"text\", \"_x\": \"skip\"}");
  CHECK(t.size() == 1);
}

TEST_CASE("default plan lists the nine rules once, in order, in English") {
  PromptPlan plan = default_plan(Strategy::zero_shot, TranslationTable::builtin());
  REQUIRE(plan.slots.size() == 9);
  for (int n = 1; n <= 9; ++n) {
    const RuleSlot& slot = plan.slots[static_cast<std::size_t>(n - 1)];
    CHECK(slot.rule == rule_from_int(n));
    CHECK(slot.language == "en");
    CHECK(slot.repeat_count == 1);
    CHECK(slot.rendered_text == TranslationTable::builtin().text(slot.rule, "en"));
  }
  CHECK(plan.few_shot_examples.empty());
}

TEST_CASE("the shipped worked example is itself well-formed and compliant") {
  PromptPlan plan = default_plan(Strategy::few_shot, TranslationTable::builtin());
  REQUIRE(plan.few_shot_examples.size() == 1);
  const std::string& example = plan.few_shot_examples[0];

  const std::string model_marker = "Modeling Information:\n\n";
  const std::string answer_marker = "\n\nA compliant answer:\n\n";
  auto model_at = example.find(model_marker);
  auto answer_at = example.find(answer_marker);
  REQUIRE(model_at != std::string::npos);
  REQUIRE(answer_at != std::string::npos);

  std::string model_json = example.substr(model_at + model_marker.size(),
                                          answer_at - model_at - model_marker.size());
  std::string answer_json = example.substr(answer_at + answer_marker.size());
  ModelSpec model = load_model(model_json);
  BoundsSpec bounds = load_bounds(answer_json);
  CHECK(check(model, bounds).compliant());
}

TEST_CASE("build_prompt is byte-stable and renders every section") {
  ModelSpec model = binpacking();
  PromptPlan plan = default_plan(Strategy::zero_shot, TranslationTable::builtin());
  std::string a = build_prompt(model, plan);
  std::string b = build_prompt(model, plan);
  CHECK(a == b);

  CHECK(a.find("feasible solution distribution") != std::string::npos);
  CHECK(a.find("The required JSON format is as follows:") != std::string::npos);
  CHECK(a.find("'parameter_types':[integer, integer, float, ...]") != std::string::npos);
  CHECK(a.find("You must follow the following rules:") != std::string::npos);
  CHECK(a.find("Modeling Information:") != std::string::npos);
  CHECK(a.find(serialize_model(model)) != std::string::npos);
  for (int n = 1; n <= 9; ++n) {
    std::string line = std::to_string(n) + ": ";
    CAPTURE(n);
    CHECK(count_lines_starting(a, line) == 1);
  }
  // Rule lines appear in slot order.
  CHECK(a.find("1: ") < a.find("2: "));
  CHECK(a.find("8: ") < a.find("9: "));
}

TEST_CASE("repeat counts repeat the line, nothing else") {
  ModelSpec model = binpacking();
  PromptPlan plan = default_plan(Strategy::zero_shot, TranslationTable::builtin());
  plan.slots[3].repeat_count = 3;  // R4
  std::string text = build_prompt(model, plan);
  CHECK(count_lines_starting(text, "4: ") == 3);
  CHECK(count_lines_starting(text, "5: ") == 1);
}

TEST_CASE("strategy decorations") {
  ModelSpec model = binpacking();
  const TranslationTable& table = TranslationTable::builtin();

  std::string zero = build_prompt(model, default_plan(Strategy::zero_shot, table));
  CHECK(zero.find("Let's think it step by step") == std::string::npos);
  CHECK(zero.find("worked example") == std::string::npos);

  std::string cot = build_prompt(model, default_plan(Strategy::cot, table));
  CHECK(cot.find("Let's think it step by step") != std::string::npos);
  CHECK(cot.substr(0, zero.size()) == zero);

  std::string few = build_prompt(model, default_plan(Strategy::few_shot, table));
  CHECK(few.find("Here is a worked example.") != std::string::npos);
  CHECK(few.find("A compliant answer:") != std::string::npos);

  PromptPlan reassert = default_plan(Strategy::zero_shot, table);
  reassert.reassert_format = true;
  std::string reasserted = build_prompt(model, reassert);
  CHECK(reasserted.find("Return only the JSON object") != std::string::npos);
}

TEST_CASE("build_prompt rejects broken plans") {
  ModelSpec model = binpacking();
  PromptPlan plan = default_plan(Strategy::zero_shot, TranslationTable::builtin());

  PromptPlan bad_template = plan;
  bad_template.template_id = "nope";
  CHECK_THROWS_AS(build_prompt(model, bad_template), ConfigError);

  PromptPlan bad_text = plan;
  bad_text.slots[2].rendered_text.clear();
  CHECK_THROWS_AS(build_prompt(model, bad_text), ConfigError);

  PromptPlan bad_repeat = plan;
  bad_repeat.slots[0].repeat_count = 0;
  CHECK_THROWS_AS(build_prompt(model, bad_repeat), ConfigError);
}

TEST_CASE("ml_replace swaps only the violated rule") {
  const TranslationTable& table = TranslationTable::builtin();
  PromptPlan plan = default_plan(Strategy::ml_replace, table);
  LanguagePolicy policy;  // fixed single language: zh

  PromptPlan next = apply_mlprompt(plan, {RuleId::r8}, policy, table);
  REQUIRE(next.slots.size() == 9);
  CHECK(next.slots[7].language == "zh");
  CHECK(next.slots[7].rendered_text == table.text(RuleId::r8, "zh"));
  CHECK(changed_rules(plan, next) == std::vector<RuleId>{RuleId::r8});
  // Input plan untouched.
  CHECK(plan.slots[7].language == "en");

  ModelSpec model = binpacking();
  std::string prompt = build_prompt(model, next);
  CHECK(prompt.find(table.text(RuleId::r8, "zh")) != std::string::npos);
  CHECK(prompt.find(table.text(RuleId::r8, "en")) == std::string::npos);

  // Same violation again under a fixed-language policy: nothing to change.
  PromptPlan again = apply_mlprompt(next, {RuleId::r8}, policy, table);
  CHECK(changed_rules(next, again).empty());
  CHECK(build_prompt(model, again) == prompt);
}

TEST_CASE("ml_replace rotation walks zh, th, ko and then stays") {
  const TranslationTable& table = TranslationTable::builtin();
  LanguagePolicy policy = rotation_policy();
  PromptPlan plan = default_plan(Strategy::ml_replace, table);

  const char* expected[] = {"zh", "th", "ko", "ko"};
  for (const char* lang : expected) {
    plan = apply_mlprompt(plan, {RuleId::r4}, policy, table);
    CHECK(plan.slots[3].language == lang);
    CHECK(plan.slots[3].rendered_text == table.text(RuleId::r4, lang));
  }
}

TEST_CASE("ml_replace batch rewrite with single-rule mode") {
  const TranslationTable& table = TranslationTable::builtin();
  PromptPlan plan = default_plan(Strategy::ml_replace, table);

  LanguagePolicy batch;
  PromptPlan both = apply_mlprompt(plan, {RuleId::r7, RuleId::r4}, batch, table);
  CHECK(changed_rules(plan, both) == std::vector<RuleId>{RuleId::r4, RuleId::r7});

  LanguagePolicy one;
  one.first_violation_only = true;
  PromptPlan first = apply_mlprompt(plan, {RuleId::r7, RuleId::r4}, one, table);
  CHECK(changed_rules(plan, first) == std::vector<RuleId>{RuleId::r4});
}

TEST_CASE("ml_replace never loses translated slots") {
  const TranslationTable& table = TranslationTable::builtin();
  LanguagePolicy policy = rotation_policy();
  PromptPlan plan = default_plan(Strategy::ml_replace, table);
  std::size_t translated = count_non_dominant(plan);
  const std::vector<std::vector<RuleId>> waves = {
      {RuleId::r8}, {RuleId::r4, RuleId::r8}, {RuleId::r7}, {RuleId::r4}, {}};
  for (const auto& wave : waves) {
    plan = apply_mlprompt(plan, wave, policy, table);
    std::size_t now = count_non_dominant(plan);
    CHECK(now >= translated);
    translated = now;
  }
}

TEST_CASE("ml_append adds one shadow slot next to the original") {
  const TranslationTable& table = TranslationTable::builtin();
  PromptPlan plan = default_plan(Strategy::ml_append, table);
  LanguagePolicy policy;

  PromptPlan next = apply_mlprompt(plan, {RuleId::r7}, policy, table);
  REQUIRE(next.slots.size() == 10);
  CHECK(next.slots[6].rule == RuleId::r7);
  CHECK(next.slots[6].appended == false);
  CHECK(next.slots[6].language == "en");
  CHECK(next.slots[7].rule == RuleId::r7);
  CHECK(next.slots[7].appended == true);
  CHECK(next.slots[7].language == "zh");
  CHECK(next.slots[8].rule == RuleId::r8);
  CHECK(changed_rules(plan, next) == std::vector<RuleId>{RuleId::r7});

  // Both texts appear, the translation right after the original.
  ModelSpec model = binpacking();
  std::string prompt = build_prompt(model, next);
  auto en_at = prompt.find(table.text(RuleId::r7, "en"));
  auto zh_at = prompt.find(table.text(RuleId::r7, "zh"));
  REQUIRE(en_at != std::string::npos);
  REQUIRE(zh_at != std::string::npos);
  CHECK(en_at < zh_at);
  CHECK(count_lines_starting(prompt, "7: ") == 2);

  // A second violation under a fixed single language has nowhere to go.
  CHECK_THROWS_AS(apply_mlprompt(next, {RuleId::r7}, policy, table), ConfigError);
}

TEST_CASE("ml_append rotation advances the shadow, then exhausts") {
  const TranslationTable& table = TranslationTable::builtin();
  LanguagePolicy policy = rotation_policy();
  PromptPlan plan = default_plan(Strategy::ml_append, table);

  plan = apply_mlprompt(plan, {RuleId::r8}, policy, table);
  REQUIRE(plan.slots.size() == 10);
  CHECK(plan.slots[8].language == "zh");
  plan = apply_mlprompt(plan, {RuleId::r8}, policy, table);
  CHECK(plan.slots.size() == 10);
  CHECK(plan.slots[8].language == "th");
  plan = apply_mlprompt(plan, {RuleId::r8}, policy, table);
  CHECK(plan.slots[8].language == "ko");
  CHECK(plan.slots[8].appended == true);
  CHECK_THROWS_AS(apply_mlprompt(plan, {RuleId::r8}, policy, table), ConfigError);
}

TEST_CASE("repeat_rule rewrites grow the violated rule's count") {
  const TranslationTable& table = TranslationTable::builtin();
  PromptPlan plan = default_plan(Strategy::repeat_rule, table);
  LanguagePolicy policy;
  PromptPlan next = apply_mlprompt(plan, {RuleId::r4}, policy, table);
  CHECK(next.slots[3].repeat_count == 2);
  CHECK(next.slots[3].language == "en");
  next = apply_mlprompt(next, {RuleId::r4}, policy, table);
  CHECK(next.slots[3].repeat_count == 3);
  CHECK(changed_rules(plan, next) == std::vector<RuleId>{RuleId::r4});

  std::string prompt = build_prompt(binpacking(), next);
  CHECK(count_lines_starting(prompt, "4: ") == 3);
}

TEST_CASE("strategies without a rewrite mechanism return the plan unchanged") {
  const TranslationTable& table = TranslationTable::builtin();
  LanguagePolicy policy;
  for (Strategy s : {Strategy::zero_shot, Strategy::few_shot, Strategy::cot, Strategy::tot,
                     Strategy::sc}) {
    PromptPlan plan = default_plan(s, table);
    PromptPlan next = apply_mlprompt(plan, {RuleId::r8}, policy, table);
    CHECK(changed_rules(plan, next).empty());
  }
}

TEST_CASE("step-by-step builders cover the four keys in format order") {
  ModelSpec model = binpacking();
  PromptPlan plan = default_plan(Strategy::tot, TranslationTable::builtin());
  auto steps = tot_step_prompts(model, plan);
  REQUIRE(steps.size() == 4);
  CHECK(steps[0].first == "set");
  CHECK(steps[1].first == "hyper-parameter");
  CHECK(steps[2].first == "parameter");
  CHECK(steps[3].first == "parameter_types");

  std::string first = steps[0].second({});
  CHECK(first.find("'set'") != std::string::npos);
  CHECK(first.find("Parts produced so far") == std::string::npos);
  CHECK(first == steps[0].second({}));

  std::vector<std::string> parts = {"[[1, 13]]", "[[null, null]]"};
  std::string third = steps[2].second(parts);
  CHECK(third.find("[[1, 13]]") != std::string::npos);
  CHECK(third.find("[[null, null]]") != std::string::npos);
  CHECK(third.find("'parameter'") != std::string::npos);

  CHECK_THROWS_AS(steps[3].second(parts), ConfigError);
}

TEST_CASE("the aggregation prompt embeds every labeled sample") {
  ModelSpec model = binpacking();
  PromptPlan plan = default_plan(Strategy::sc, TranslationTable::builtin());
  std::vector<std::pair<std::string, bool>> samples = {
      {"{\"set\": [[1, 5]]}", true},
      {"{\"set\": [[null, 5]]}", false},
  };
  std::string text = sc_aggregate_prompt(model, plan, samples);
  CHECK(text.find("Answer 1 (correct):") != std::string::npos);
  CHECK(text.find("Answer 2 (incorrect):") != std::string::npos);
  CHECK(text.find(samples[0].first) != std::string::npos);
  CHECK(text.find(samples[1].first) != std::string::npos);
}

TEST_CASE("strategy names round-trip") {
  for (Strategy s : {Strategy::zero_shot, Strategy::few_shot, Strategy::cot, Strategy::tot,
                     Strategy::sc, Strategy::repeat_rule, Strategy::ml_replace,
                     Strategy::ml_append}) {
    CHECK(strategy_from_string(to_string(s)) == s);
  }
  CHECK(strategy_from_string("ml-replace") == Strategy::ml_replace);
  CHECK_THROWS_AS(strategy_from_string("mystery"), ConfigError);
}
