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

#ifndef MLPROMPT_EVAL_HPP
#define MLPROMPT_EVAL_HPP

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mlprompt/llm.hpp"
#include "mlprompt/loop.hpp"
#include "mlprompt/prompt.hpp"
#include "mlprompt/rules.hpp"

namespace mlprompt {

/// One experiment grid: every named backend runs every strategy in every
/// language over every model file in dataset_dir, runs_per_problem times.
struct ExperimentPlan {
  std::string dataset_dir;
  std::vector<std::string> backends;
  std::vector<Strategy> strategies;
  std::vector<std::string> languages{"zh"};
  int runs_per_problem = 3;
  /// Per-run seeds, recorded into each record for downstream instance
  /// materialization; run r takes seeds[r mod size], or r when empty.
  std::vector<std::uint64_t> seeds;
  /// Refinement budget per cell (LoopOptions::max_iterations).
  int budget = 3;
  std::string model_name = "gpt-4";
  double temperature = 0.7;
  int sc_samples = 5;
  /// Worker count across cells. Anything above 1 only takes effect when
  /// every named backend tolerates concurrent callers; a single-flight
  /// backend (scripted replay) forces sequential execution so its script
  /// is consumed in grid order.
  int parallelism = 1;
};

/// One finished grid cell.
struct RunRecord {
  long long problem_id = 0;
  std::string problem;  // model file stem
  std::string backend;
  Strategy strategy = Strategy::zero_shot;
  std::string language;
  int run_index = 0;
  std::uint64_t seed = 0;
  GenerationOutcome outcome;
  double wall_ms = 0.0;
};

/// Lossless JSON round-trip for one record; the on-disk per-cell format.
/// run_record_from_json throws FormatError when the text is not one.
std::string run_record_json(const RunRecord& record);
RunRecord run_record_from_json(const std::string& text);

/// Executes the grid, cell order: backend, strategy, language, problem
/// (sorted by filename), run. One JSON record file per cell lands in
/// results_dir; a cell whose file already parses is loaded instead of
/// re-run, which makes an interrupted grid resumable. A backend hard
/// failure is captured in that cell's outcome, not thrown. Returns the
/// records in cell order.
///
/// Throws ConfigError when the plan is malformed, a named backend is
/// missing, or the dataset directory has no model files.
std::vector<RunRecord> run_experiment(
    const ExperimentPlan& plan,
    const std::map<std::string, Backend*>& backends,
    const std::string& results_dir);

struct GroupKey {
  std::string backend;
  Strategy strategy = Strategy::zero_shot;
  std::string language;

  auto operator<=>(const GroupKey&) const = default;
};

struct GroupStats {
  std::size_t runs = 0;
  /// Fraction of runs whose final output extracted and parsed as JSON.
  double json_validity_rate = 0.0;
  /// Rule accuracies and final score over the runs' final reports; a
  /// run with no usable output counts as failing every scored rule, so
  /// final_score never exceeds json_validity_rate.
  RuleScore score;
  double mean_iterations = 0.0;
  double mean_backend_calls = 0.0;
  double mean_latency_ms = 0.0;
};

struct EvalReport {
  std::map<GroupKey, GroupStats> groups;
};

/// Aggregates records per (backend, strategy, language). Records are
/// canonically ordered before any accumulation, so the result is exactly
/// permutation-invariant.
EvalReport summarize(const std::vector<RunRecord>& records);

enum class ReportFormat { markdown, csv };

/// Comparison table: one row per (strategy, language) sorted by name,
/// one column per backend sorted by name, each cell the group's final
/// score to three decimals ("-" or empty when that cell never ran).
std::string render_report(const EvalReport& report, ReportFormat format);

}  // namespace mlprompt

#endif  // MLPROMPT_EVAL_HPP
