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

#ifndef MLPROMPT_LOOP_HPP
#define MLPROMPT_LOOP_HPP

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlprompt/llm.hpp"
#include "mlprompt/model.hpp"
#include "mlprompt/prompt.hpp"
#include "mlprompt/rules.hpp"

namespace mlprompt {

/// One backend exchange (or local merge step) inside a run. For records
/// from the refinement loop (stage "loop"), prompt byte-matches
/// build_prompt(model, plan): the snapshot alone replays the request.
/// Sample, aggregate, and part records use their builders' prompts. A
/// report with no per-rule entries means the output was not validated
/// (stepwise intermediates, by design).
struct IterationRecord {
  std::string stage = "loop";  // "loop", "sample", "aggregate", "part:<key>", "merge"
  std::string prompt;
  std::string raw_output;
  ValidationReport report;
  PromptPlan plan;
  std::chrono::milliseconds latency{0};
};

enum class LoopStatus { compliant, budget_exhausted, extraction_failed, backend_error };

std::string_view to_string(LoopStatus status);

struct GenerationOutcome {
  std::optional<BoundsSpec> final_bounds;
  std::vector<IterationRecord> iterations;
  LoopStatus status = LoopStatus::budget_exhausted;
  std::size_t backend_calls = 0;
  /// Set when status is backend_error.
  std::string error;
};

struct LoopOptions {
  int max_iterations = 3;
  LanguagePolicy policy;
  TranslationTable table = TranslationTable::builtin();
  /// After output with no extractable JSON, resend with a format
  /// reminder instead of rewriting rule languages (no rule was located).
  bool reassert_format_on_extraction_failure = true;
  std::string model_name = "gpt-4";
  double temperature = 0.7;
  RuleOptions rule_options;
  /// Samples drawn before the aggregation call in self-consistency runs.
  int sc_samples = 5;
};

/// The refinement loop: build prompt, generate, validate, rewrite the
/// violated rules, repeat until compliant or the budget is spent.
/// Output whose JSON parses but fails structural loading counts as a
/// format (rule 9) violation and rewrites that rule. A backend hard
/// failure stops the run with the records gathered so far. Throws
/// ConfigError when options.max_iterations < 1.
GenerationOutcome run_generation(const ModelSpec& model, const PromptPlan& plan0,
                                 Backend& backend, const LoopOptions& options = {});

/// Draws options.sc_samples answers, labels each by validating it, then
/// asks one aggregation call to reconcile them: exactly sc_samples + 1
/// backend calls. Intermediate samples are recorded but their labels do
/// not gate the outcome; only the aggregate answer is judged.
GenerationOutcome run_self_consistency(const ModelSpec& model, const PromptPlan& plan,
                                       Backend& backend, const LoopOptions& options = {});

/// Builds the answer one output key at a time: exactly four backend
/// calls, one per key, each seeing the previous fragments verbatim.
/// Fragments are not validated; the locally merged object is.
GenerationOutcome run_stepwise(const ModelSpec& model, const PromptPlan& plan,
                               Backend& backend, const LoopOptions& options = {});

/// Runs the named strategy from its default plan: sc and tot dispatch to
/// their drivers, everything else runs the refinement loop.
GenerationOutcome run_strategy(const ModelSpec& model, Strategy strategy, Backend& backend,
                               const LoopOptions& options = {});

/// Writes <dir>/<run_id>.jsonl (one line per iteration record) and
/// <dir>/<run_id>.summary.json (status, call count, final bounds).
/// Creates dir if missing.
void write_run_artifacts(const GenerationOutcome& outcome, const std::string& dir,
                         const std::string& run_id);

/// Inverse of to_string(LoopStatus). Throws ConfigError on unknown names.
LoopStatus loop_status_from_string(std::string_view name);

/// Lossless JSON form of an outcome, transcript and plans included, so a
/// finished run can be persisted and reloaded byte-for-byte. Final
/// bounds travel as their canonical single-line text to keep the exact
/// digits and key order. outcome_from_json throws FormatError when the
/// text is not a serialized outcome.
std::string outcome_json(const GenerationOutcome& outcome);
GenerationOutcome outcome_from_json(const std::string& text);

}  // namespace mlprompt

#endif  // MLPROMPT_LOOP_HPP
