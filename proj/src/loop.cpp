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

#include "mlprompt/loop.hpp"

#include <filesystem>
#include <fstream>
#include <utility>

#include "json.hpp"
#include "mlprompt/errors.hpp"

namespace mlprompt {

namespace {

GenerationRequest make_request(const std::string& prompt, const LoopOptions& options) {
  GenerationRequest request = user_request(prompt, options.model_name);
  request.temperature = options.temperature;
  return request;
}

// Runs one backend call. On a hard backend failure the outcome is
// finalized with the records gathered so far and false is returned.
// Scripted-expectation mismatches propagate: they are test bugs.
bool call_backend(Backend& backend, const std::string& prompt, const LoopOptions& options,
                  GenerationOutcome& outcome, GenerationResult& result) {
  try {
    result = complete(backend, make_request(prompt, options));
  } catch (const BackendError& e) {
    outcome.status = LoopStatus::backend_error;
    outcome.error = e.what();
    return false;
  }
  ++outcome.backend_calls;
  return true;
}

struct Judged {
  std::optional<BoundsSpec> bounds;
  ValidationReport report;
  bool extract_failed = false;
  bool load_failed = false;
  std::string extracted;
};

// Extract, load, validate. Either failure yields the all-fail report;
// the flags say which stage broke so the rewrite can respond.
Judged judge(const ModelSpec& model, const std::string& raw, const RuleOptions& rule_options) {
  Judged judged;
  try {
    judged.extracted = extract_json(raw);
  } catch (const ExtractError& e) {
    judged.extract_failed = true;
    judged.report = json_invalid_report(e.what());
    return judged;
  }
  BoundsSpec bounds;
  try {
    bounds = load_bounds(judged.extracted);
  } catch (const Error& e) {
    judged.load_failed = true;
    judged.report = json_invalid_report(e.what());
    return judged;
  }
  judged.report = check(model, bounds, rule_options);
  judged.bounds = std::move(bounds);
  return judged;
}

IterationRecord make_record(std::string stage, std::string prompt, std::string raw,
                            ValidationReport report, PromptPlan plan,
                            std::chrono::milliseconds latency) {
  IterationRecord record;
  record.stage = std::move(stage);
  record.prompt = std::move(prompt);
  record.raw_output = std::move(raw);
  record.report = std::move(report);
  record.plan = std::move(plan);
  record.latency = latency;
  return record;
}

nlohmann::json plan_json(const PromptPlan& plan) {
  nlohmann::json j;
  j["strategy"] = std::string(to_string(plan.strategy));
  j["template_id"] = plan.template_id;
  j["reassert_format"] = plan.reassert_format;
  j["few_shot_examples"] = plan.few_shot_examples;
  nlohmann::json slots = nlohmann::json::array();
  for (const RuleSlot& slot : plan.slots) {
    slots.push_back({{"rule", std::string(to_string(slot.rule))},
                     {"language", slot.language},
                     {"repeat_count", slot.repeat_count},
                     {"appended", slot.appended},
                     {"rendered_text", slot.rendered_text}});
  }
  j["slots"] = std::move(slots);
  return j;
}

}  // namespace

std::string_view to_string(LoopStatus status) {
  switch (status) {
    case LoopStatus::compliant: return "compliant";
    case LoopStatus::budget_exhausted: return "budget_exhausted";
    case LoopStatus::extraction_failed: return "extraction_failed";
    case LoopStatus::backend_error: return "backend_error";
  }
  throw ConfigError("unknown loop status");
}

GenerationOutcome run_generation(const ModelSpec& model, const PromptPlan& plan0,
                                 Backend& backend, const LoopOptions& options) {
  if (options.max_iterations < 1) {
    throw ConfigError("max_iterations must be >= 1");
  }
  GenerationOutcome outcome;
  PromptPlan plan = plan0;
  bool last_extract_failed = false;

  for (int i = 0; i < options.max_iterations; ++i) {
    const std::string prompt = build_prompt(model, plan);
    GenerationResult result;
    if (!call_backend(backend, prompt, options, outcome, result)) return outcome;

    Judged judged = judge(model, result.text, options.rule_options);
    outcome.iterations.push_back(
        make_record("loop", prompt, result.text, judged.report, plan, result.latency));
    last_extract_failed = judged.extract_failed;

    if (judged.bounds.has_value() && judged.report.compliant()) {
      outcome.final_bounds = std::move(judged.bounds);
      outcome.status = LoopStatus::compliant;
      return outcome;
    }
    if (i + 1 == options.max_iterations) break;

    if (judged.extract_failed) {
      // No rule was located in the failure; ask for the format again.
      if (options.reassert_format_on_extraction_failure) plan.reassert_format = true;
      continue;
    }
    const std::vector<RuleId> violated =
        judged.load_failed ? std::vector<RuleId>{RuleId::r9} : violated_rules(judged.report);
    try {
      plan = apply_mlprompt(plan, violated, options.policy, options.table);
    } catch (const PolicyExhausted&) {
      outcome.status = LoopStatus::budget_exhausted;
      return outcome;
    }
  }

  outcome.status =
      last_extract_failed ? LoopStatus::extraction_failed : LoopStatus::budget_exhausted;
  return outcome;
}

GenerationOutcome run_self_consistency(const ModelSpec& model, const PromptPlan& plan,
                                       Backend& backend, const LoopOptions& options) {
  if (options.sc_samples < 1) {
    throw ConfigError("sc_samples must be >= 1");
  }
  GenerationOutcome outcome;
  const std::string base_prompt = build_prompt(model, plan);

  std::vector<std::pair<std::string, bool>> labeled;
  for (int s = 0; s < options.sc_samples; ++s) {
    GenerationResult result;
    if (!call_backend(backend, base_prompt, options, outcome, result)) return outcome;
    Judged judged = judge(model, result.text, options.rule_options);
    labeled.emplace_back(judged.extracted.empty() ? result.text : judged.extracted,
                         judged.report.compliant());
    outcome.iterations.push_back(
        make_record("sample", base_prompt, result.text, judged.report, plan, result.latency));
  }

  const std::string aggregate_prompt = sc_aggregate_prompt(model, plan, labeled);
  GenerationResult result;
  if (!call_backend(backend, aggregate_prompt, options, outcome, result)) return outcome;
  Judged judged = judge(model, result.text, options.rule_options);
  outcome.iterations.push_back(
      make_record("aggregate", aggregate_prompt, result.text, judged.report, plan,
                  result.latency));

  if (judged.bounds.has_value() && judged.report.compliant()) {
    outcome.final_bounds = std::move(judged.bounds);
    outcome.status = LoopStatus::compliant;
  } else {
    outcome.status = judged.extract_failed ? LoopStatus::extraction_failed
                                           : LoopStatus::budget_exhausted;
  }
  return outcome;
}

GenerationOutcome run_stepwise(const ModelSpec& model, const PromptPlan& plan, Backend& backend,
                               const LoopOptions& options) {
  GenerationOutcome outcome;
  auto steps = tot_step_prompts(model, plan);
  std::vector<std::string> parts;

  for (const auto& [part_name, builder] : steps) {
    const std::string prompt = builder(parts);
    GenerationResult result;
    if (!call_backend(backend, prompt, options, outcome, result)) return outcome;

    std::string fragment;
    try {
      fragment = extract_json_array(result.text);
    } catch (const ExtractError& e) {
      outcome.iterations.push_back(make_record("part:" + part_name, prompt, result.text,
                                               json_invalid_report(e.what()), plan,
                                               result.latency));
      outcome.status = LoopStatus::extraction_failed;
      return outcome;
    }
    // Intermediate fragments are recorded but deliberately unvalidated:
    // the empty report marks that.
    outcome.iterations.push_back(
        make_record("part:" + part_name, prompt, result.text, ValidationReport{}, plan,
                    result.latency));
    parts.push_back(std::move(fragment));
  }

  const auto& names = bounds_part_names();
  std::string merged = "{";
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) merged += ", ";
    merged += "\"" + names[i] + "\": " + parts[i];
  }
  merged += "}";

  Judged judged = judge(model, merged, options.rule_options);
  outcome.iterations.push_back(make_record("merge", "", merged, judged.report, plan,
                                           std::chrono::milliseconds{0}));
  if (judged.bounds.has_value() && judged.report.compliant()) {
    outcome.final_bounds = std::move(judged.bounds);
    outcome.status = LoopStatus::compliant;
  } else {
    outcome.status = LoopStatus::budget_exhausted;
  }
  return outcome;
}

GenerationOutcome run_strategy(const ModelSpec& model, Strategy strategy, Backend& backend,
                               const LoopOptions& options) {
  const PromptPlan plan = default_plan(strategy, options.table);
  switch (strategy) {
    case Strategy::sc: return run_self_consistency(model, plan, backend, options);
    case Strategy::tot: return run_stepwise(model, plan, backend, options);
    default: return run_generation(model, plan, backend, options);
  }
}

void write_run_artifacts(const GenerationOutcome& outcome, const std::string& dir,
                         const std::string& run_id) {
  std::filesystem::create_directories(dir);
  const std::string transcript_path = dir + "/" + run_id + ".jsonl";
  std::ofstream transcript(transcript_path, std::ios::trunc | std::ios::binary);
  if (!transcript) throw ConfigError("cannot write transcript '" + transcript_path + "'");
  for (const IterationRecord& record : outcome.iterations) {
    nlohmann::json line;
    line["stage"] = record.stage;
    line["prompt"] = record.prompt;
    line["raw_output"] = record.raw_output;
    line["report"] = nlohmann::json::parse(to_json(record.report));
    line["plan"] = plan_json(record.plan);
    line["latency_ms"] = record.latency.count();
    transcript << line.dump() << "\n";
  }

  nlohmann::json summary;
  summary["status"] = std::string(to_string(outcome.status));
  summary["iterations"] = outcome.iterations.size();
  summary["backend_calls"] = outcome.backend_calls;
  if (!outcome.error.empty()) summary["error"] = outcome.error;
  summary["final_bounds"] = outcome.final_bounds.has_value()
                                ? nlohmann::json::parse(serialize_bounds(*outcome.final_bounds))
                                : nlohmann::json(nullptr);
  const std::string summary_path = dir + "/" + run_id + ".summary.json";
  std::ofstream summary_out(summary_path, std::ios::trunc | std::ios::binary);
  if (!summary_out) throw ConfigError("cannot write summary '" + summary_path + "'");
  summary_out << summary.dump(2) << "\n";
}

LoopStatus loop_status_from_string(std::string_view name) {
  for (LoopStatus status :
       {LoopStatus::compliant, LoopStatus::budget_exhausted,
        LoopStatus::extraction_failed, LoopStatus::backend_error}) {
    if (to_string(status) == name) return status;
  }
  throw ConfigError("unknown loop status '" + std::string(name) + "'");
}

std::string outcome_json(const GenerationOutcome& outcome) {
  nlohmann::json j;
  j["status"] = std::string(to_string(outcome.status));
  j["backend_calls"] = outcome.backend_calls;
  j["error"] = outcome.error;
  j["final_bounds"] = outcome.final_bounds.has_value()
                          ? nlohmann::json(serialize_bounds(*outcome.final_bounds))
                          : nlohmann::json(nullptr);
  nlohmann::json iterations = nlohmann::json::array();
  for (const IterationRecord& record : outcome.iterations) {
    nlohmann::json line;
    line["stage"] = record.stage;
    line["prompt"] = record.prompt;
    line["raw_output"] = record.raw_output;
    line["report"] = nlohmann::json::parse(to_json(record.report));
    line["plan"] = plan_json(record.plan);
    line["latency_ms"] = record.latency.count();
    iterations.push_back(std::move(line));
  }
  j["iterations"] = std::move(iterations);
  return j.dump();
}

GenerationOutcome outcome_from_json(const std::string& text) {
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    GenerationOutcome outcome;
    outcome.status = loop_status_from_string(j.at("status").get<std::string>());
    outcome.backend_calls = j.at("backend_calls").get<std::size_t>();
    outcome.error = j.at("error").get<std::string>();
    if (!j.at("final_bounds").is_null())
      outcome.final_bounds = load_bounds(j.at("final_bounds").get<std::string>());
    for (const nlohmann::json& line : j.at("iterations")) {
      IterationRecord record;
      record.stage = line.at("stage").get<std::string>();
      record.prompt = line.at("prompt").get<std::string>();
      record.raw_output = line.at("raw_output").get<std::string>();
      record.report = report_from_json(line.at("report").dump());
      record.latency = std::chrono::milliseconds(line.at("latency_ms").get<long long>());
      const nlohmann::json& plan = line.at("plan");
      record.plan.strategy = strategy_from_string(plan.at("strategy").get<std::string>());
      record.plan.template_id = plan.at("template_id").get<std::string>();
      record.plan.reassert_format = plan.at("reassert_format").get<bool>();
      record.plan.few_shot_examples =
          plan.at("few_shot_examples").get<std::vector<std::string>>();
      record.plan.slots.clear();
      for (const nlohmann::json& slot : plan.at("slots")) {
        RuleSlot s;
        s.rule = rule_from_string(slot.at("rule").get<std::string>());
        s.language = slot.at("language").get<std::string>();
        s.repeat_count = slot.at("repeat_count").get<int>();
        s.appended = slot.at("appended").get<bool>();
        s.rendered_text = slot.at("rendered_text").get<std::string>();
        record.plan.slots.push_back(std::move(s));
      }
      outcome.iterations.push_back(std::move(record));
    }
    return outcome;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("not a serialized outcome: ") + e.what());
  }
}

}  // namespace mlprompt
