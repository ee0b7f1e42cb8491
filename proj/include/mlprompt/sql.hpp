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
//
// Text-to-SQL demonstration: rule-conditioned SQL prompts over a SQLite
// database, execution against a read-only connection, and error rates
// over repeated runs.
//
// Unlike the bounds pipeline, rule-violation localization for SQL is
// manual: there is no checker that maps a wrong result set back to the
// rule that caused it. The operator chooses which rule to translate
// (the study translated rule 4) and this module takes that choice as
// configuration.

#ifndef MLPROMPT_SQL_HPP
#define MLPROMPT_SQL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mlprompt/llm.hpp"
#include "mlprompt/prompt.hpp"

namespace mlprompt {

/// One text-to-SQL task: a question over a SQLite database with a gold
/// query whose result set defines correctness.
struct SqlTask {
  std::string question;
  /// CREATE TABLE + INSERT script that materializes the database.
  std::string schema_ddl;
  /// Where the SQLite file lives (or will be created by
  /// ensure_database). Must be openable before evaluation.
  std::string database_path;
  std::string gold_sql;
};

/// Reads a task manifest: a JSON object with "question", "schema" (path
/// to the DDL script), "database" (path to the SQLite file), "gold".
/// Relative paths resolve against the manifest's directory. Throws
/// ConfigError on missing files or malformed JSON.
SqlTask load_sql_task(const std::string& manifest_path);

/// Creates task.database_path from task.schema_ddl when the file does
/// not exist yet; an existing file is left untouched. Throws
/// ConfigError when the script fails or the path is unwritable.
void ensure_database(const SqlTask& task);

/// One rule line in a SQL prompt, same mechanics as the bounds prompts:
/// the rendered text travels with the slot, so a stored rule set
/// reproduces its prompt byte-for-byte.
struct SqlRuleSlot {
  int rule = 1;  // 1..5
  std::string language = kDominantLanguage;
  std::string rendered_text;
  int repeat_count = 1;
};

bool operator==(const SqlRuleSlot& a, const SqlRuleSlot& b);

/// The ordered rule list for a SQL prompt. Defaults to the five
/// built-in query-writing rules in English; single rules can be swapped
/// into another language or repeated for emphasis.
struct SqlRuleSet {
  std::vector<SqlRuleSlot> slots;

  /// All five rules, dominant language, from the built-in table.
  static SqlRuleSet defaults();

  /// Copy with rule swapped to the table's text for language.
  /// Throws ConfigError when rule is not in the set or the table has
  /// no entry for that language.
  SqlRuleSet with_language(int rule, const std::string& language) const;

  /// Copy with rule's repeat_count set (the repetition baseline).
  /// Throws ConfigError when rule is not in the set or count < 1.
  SqlRuleSet with_repeat(int rule, int count) const;
};

/// Renders schema, rules, and question into one deterministic prompt.
/// An empty rule set renders schema and question only.
std::string build_sql_prompt(const SqlTask& task, const SqlRuleSet& rules);

/// Pulls the SQL statement out of raw model output: a fenced code block
/// when present, otherwise from the first SELECT / WITH keyword. Throws
/// ExtractError when no statement is found.
std::string extract_sql(const std::string& raw);

enum class SqlOutcome { match, mismatch, execution_error };

std::string to_string(SqlOutcome outcome);

/// Runs generated_sql against the task database on a read-only
/// connection and compares its result to the gold query's result.
///
/// Rows compare as a multiset, unless the gold query says ORDER BY, in
/// which case row order is significant. Column order is always
/// significant. Values compare type-leniently: INTEGER and REAL cells
/// holding the same number are equal (driver type affinity varies);
/// text and blob cells compare byte-exact. Only the first statement of
/// generated_sql is executed.
///
/// Any error from the generated statement (syntax, missing table,
/// write attempt on the read-only connection) classifies the run as
/// execution_error. A database that cannot be opened, or a gold query
/// that itself fails, is a broken task, not an evaluation outcome:
/// ConfigError.
SqlOutcome execute_and_compare(const std::string& generated_sql, const SqlTask& task);

/// One generation judged against the database.
struct SqlRunRecord {
  std::string raw_output;
  /// Empty when extraction failed.
  std::string extracted_sql;
  SqlOutcome outcome = SqlOutcome::execution_error;
};

struct SqlEvalResult {
  /// Fraction of runs not classified match.
  double rate = 1.0;
  std::vector<SqlRunRecord> runs;
};

/// Runs the same prompt n_runs times against the backend and scores
/// each output. A run whose output yields no extractable SQL counts as
/// execution_error. Backend failures propagate: a dead backend is not
/// a property of the prompt under test. Throws ConfigError when
/// n_runs < 1.
SqlEvalResult error_rate(const SqlTask& task, Backend& backend,
                         const SqlRuleSet& rules, int n_runs);

/// FNV-1a 64-bit hash of a file's bytes. Used to verify evaluation
/// batches leave the database untouched. Throws ConfigError when the
/// file cannot be read.
std::uint64_t fnv1a_file(const std::string& path);

}  // namespace mlprompt

#endif  // MLPROMPT_SQL_HPP
