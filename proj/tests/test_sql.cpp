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
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "mlprompt/errors.hpp"
#include "mlprompt/llm.hpp"
#include "mlprompt/prompt.hpp"
#include "mlprompt/sql.hpp"

using namespace mlprompt;
namespace fs = std::filesystem;

namespace {

const fs::path kManifest =
    fs::path(MLPROMPT_REPO_DIR) / "data" / "sql" / "pets_1.json";

// The repository task with its database materialized under /tmp so the
// checked-in data directory stays untouched.
SqlTask pets_task() {
  static const SqlTask cached = [] {
    SqlTask task = load_sql_task(kManifest.string());
    fs::path db = fs::temp_directory_path() / "mlprompt_sql_pets_1.sqlite";
    fs::remove(db);
    task.database_path = db.string();
    ensure_database(task);
    return task;
  }();
  return cached;
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("task manifest loads and the database materializes once") {
  SqlTask task = pets_task();
  CHECK(task.question == "Find the first name and age of students who have a pet.");
  CHECK(task.schema_ddl.find("CREATE TABLE Student") != std::string::npos);
  CHECK(task.gold_sql.find("DISTINCT") != std::string::npos);
  REQUIRE(fs::exists(task.database_path));

  // Re-ensuring is a no-op on an existing file.
  std::uint64_t before = fnv1a_file(task.database_path);
  ensure_database(task);
  CHECK(fnv1a_file(task.database_path) == before);

  SUBCASE("checksums distinguish different file contents") {
    fs::path a = fs::temp_directory_path() / "mlprompt_fnv_a";
    fs::path b = fs::temp_directory_path() / "mlprompt_fnv_b";
    std::ofstream(a) << "same";
    std::ofstream(b) << "diff";
    CHECK(fnv1a_file(a.string()) != fnv1a_file(b.string()));
    std::ofstream(b, std::ios::trunc) << "same";
    CHECK(fnv1a_file(a.string()) == fnv1a_file(b.string()));
    CHECK_THROWS_AS(fnv1a_file("/nonexistent/file"), ConfigError);
  }

  SUBCASE("a bad schema script never leaves a database behind") {
    SqlTask broken = task;
    fs::path db = fs::temp_directory_path() / "mlprompt_sql_broken.sqlite";
    fs::remove(db);
    broken.database_path = db.string();
    broken.schema_ddl = "CREATE TABLE (oops";
    CHECK_THROWS_AS(ensure_database(broken), ConfigError);
    CHECK_FALSE(fs::exists(db));
  }

  SUBCASE("malformed manifests are rejected") {
    fs::path bad = fs::temp_directory_path() / "mlprompt_sql_bad.json";
    std::ofstream(bad) << R"({"question": "q", "gold": "g"})";
    CHECK_THROWS_AS(load_sql_task(bad.string()), ConfigError);
    CHECK_THROWS_AS(load_sql_task("/nonexistent/manifest.json"), ConfigError);
  }
}

TEST_CASE("prompts embed schema, rules, and question deterministically") {
  SqlTask task = pets_task();
  SqlRuleSet rules = SqlRuleSet::defaults();
  REQUIRE(rules.slots.size() == 5);

  std::string prompt = build_sql_prompt(task, rules);
  CHECK(prompt.find("CREATE TABLE Student") != std::string::npos);
  CHECK(prompt.find(task.question) != std::string::npos);
  for (const SqlRuleSlot& slot : rules.slots) {
    CAPTURE(slot.rule);
    CHECK_FALSE(slot.rendered_text.empty());
    CHECK(prompt.find(slot.rendered_text) != std::string::npos);
  }
  // Spot-check two rule texts by their distinctive content.
  CHECK(rules.slots[0].rendered_text.find("INNER JOIN") != std::string::npos);
  CHECK(rules.slots[4].rendered_text.find("SELECT *") != std::string::npos);
  CHECK(count_occurrences(prompt, "Rule ") == 5);
  CHECK(prompt == build_sql_prompt(task, rules));

  SUBCASE("a language swap replaces exactly one rule's text") {
    const TranslationTable& table = TranslationTable::builtin();
    for (const std::string lang : {"zh", "ja", "ko"}) {
      CAPTURE(lang);
      SqlRuleSet swapped = rules.with_language(4, lang);
      std::string p = build_sql_prompt(task, swapped);
      CHECK(p.find(table.lookup("S4." + lang)) != std::string::npos);
      CHECK(p.find(table.lookup("S4.en")) == std::string::npos);
      CHECK(p.find(table.lookup("S1.en")) != std::string::npos);
      CHECK(p.find(table.lookup("S5.en")) != std::string::npos);
    }
    // The original set is untouched: rule sets are value types.
    CHECK(rules.slots[3].language == "en");

    CHECK_THROWS_AS(rules.with_language(9, "ko"), ConfigError);
    CHECK_THROWS_AS(rules.with_language(4, "fr"), ConfigError);
  }

  SUBCASE("repetition duplicates the rule line") {
    SqlRuleSet repeated = rules.with_repeat(4, 3);
    std::string p = build_sql_prompt(task, repeated);
    CHECK(count_occurrences(p, "Rule 4: ") == 3);
    CHECK(count_occurrences(p, "Rule 1: ") == 1);
    CHECK_THROWS_AS(rules.with_repeat(4, 0), ConfigError);
    CHECK_THROWS_AS(rules.with_repeat(7, 2), ConfigError);
  }

  SUBCASE("an empty rule set renders schema and question only") {
    std::string p = build_sql_prompt(task, SqlRuleSet{});
    CHECK(p.find("You must follow") == std::string::npos);
    CHECK(p.find("Rule 1") == std::string::npos);
    CHECK(p.find("CREATE TABLE Student") != std::string::npos);
    CHECK(p.find(task.question) != std::string::npos);
  }
}

TEST_CASE("execution compares result multisets against gold") {
  SqlTask task = pets_task();

  // Reflexivity: the gold query matches itself.
  CHECK(execute_and_compare(task.gold_sql, task) == SqlOutcome::match);

  // A different but equivalent query also matches.
  CHECK(execute_and_compare(
            "SELECT DISTINCT fname, age FROM student "
            "WHERE stuid IN (SELECT stuid FROM has_pet)",
            task) == SqlOutcome::match);

  // Column order is significant.
  CHECK(execute_and_compare(
            "SELECT DISTINCT T1.age, T1.fname FROM student AS T1 "
            "JOIN has_pet AS T2 ON T1.stuid = T2.stuid",
            task) == SqlOutcome::mismatch);

  // Forgetting DISTINCT duplicates the two-pet student.
  CHECK(execute_and_compare(
            "SELECT T1.fname, T1.age FROM student AS T1 "
            "JOIN has_pet AS T2 ON T1.stuid = T2.stuid",
            task) == SqlOutcome::mismatch);

  CHECK(execute_and_compare("SELEC fname FROM student", task) ==
        SqlOutcome::execution_error);
  CHECK(execute_and_compare("SELECT x FROM no_such_table", task) ==
        SqlOutcome::execution_error);

  SUBCASE("integer and real cells holding the same number are equal") {
    SqlTask t = task;
    t.gold_sql = "SELECT age FROM student WHERE stuid = 1001";
    CHECK(execute_and_compare(
              "SELECT age + 0.0 FROM student WHERE stuid = 1001", t) ==
          SqlOutcome::match);
    // Text is not a number: '18' does not equal 18.
    CHECK(execute_and_compare("SELECT '18'", t) == SqlOutcome::mismatch);
  }

  SUBCASE("gold ORDER BY makes row order significant") {
    SqlTask t = task;
    t.gold_sql =
        "SELECT fname FROM student WHERE stuid <= 1002 ORDER BY age DESC";
    CHECK(execute_and_compare(
              "SELECT fname FROM student WHERE stuid <= 1002 "
              "ORDER BY age DESC",
              t) == SqlOutcome::match);
    CHECK(execute_and_compare(
              "SELECT fname FROM student WHERE stuid <= 1002 "
              "ORDER BY age ASC",
              t) == SqlOutcome::mismatch);

    // Without ORDER BY in gold the same rows match in any order.
    t.gold_sql = "SELECT fname FROM student WHERE stuid <= 1002";
    CHECK(execute_and_compare(
              "SELECT fname FROM student WHERE stuid <= 1002 "
              "ORDER BY age DESC",
              t) == SqlOutcome::match);
  }

  SUBCASE("a broken task is a ConfigError, not an outcome") {
    SqlTask missing = task;
    missing.database_path = "/nonexistent/pets.sqlite";
    CHECK_THROWS_WITH_AS(execute_and_compare(task.gold_sql, missing),
                         doctest::Contains("unavailable"), ConfigError);

    SqlTask bad_gold = task;
    bad_gold.gold_sql = "SELECT nope FROM student";
    CHECK_THROWS_WITH_AS(execute_and_compare("SELECT 1", bad_gold),
                         doctest::Contains("gold query failed"), ConfigError);
  }
}

TEST_CASE("the read-only connection blocks every write") {
  SqlTask task = pets_task();
  std::uint64_t before = fnv1a_file(task.database_path);

  CHECK(execute_and_compare("DROP TABLE student", task) ==
        SqlOutcome::execution_error);
  CHECK(execute_and_compare(
            "INSERT INTO student VALUES "
            "(1099, 'X', 'Y', 1, 'F', 1, 1, 'AAA')",
            task) == SqlOutcome::execution_error);
  CHECK(execute_and_compare("UPDATE student SET age = 99", task) ==
        SqlOutcome::execution_error);
  CHECK(execute_and_compare("DELETE FROM has_pet", task) ==
        SqlOutcome::execution_error);

  CHECK(fnv1a_file(task.database_path) == before);
  // The data really is still there.
  CHECK(execute_and_compare(task.gold_sql, task) == SqlOutcome::match);
}

TEST_CASE("sql extraction handles fences, prose, and CTEs") {
  CHECK(extract_sql("```sql\nSELECT 1;\n```") == "SELECT 1;");
  CHECK(extract_sql("```\nSELECT a FROM t\n```") == "SELECT a FROM t");
  CHECK(extract_sql("Here you go:\n```sql\nSELECT x\nFROM t\n```\nEnjoy!") ==
        "SELECT x\nFROM t");

  // Bare statement: a semicolon ends it, trailing prose is dropped.
  CHECK(extract_sql("Sure! SELECT fname FROM student; this query scans...") ==
        "SELECT fname FROM student");
  CHECK(extract_sql("select lower from t") == "select lower from t");

  // Prose "with" before the statement does not fool the extractor.
  CHECK(extract_sql("I will comply with the rules. SELECT 1;") == "SELECT 1");
  CHECK(extract_sql("The withdrawal SELECT amount FROM tx;") ==
        "SELECT amount FROM tx");

  // A real CTE keeps its WITH prefix.
  CHECK(extract_sql("Answer: WITH t AS (SELECT 1 AS x) SELECT x FROM t;") ==
        "WITH t AS (SELECT 1 AS x) SELECT x FROM t");

  CHECK_THROWS_AS(extract_sql("I cannot answer that."), ExtractError);
  CHECK_THROWS_AS(extract_sql(""), ExtractError);
  // "selection" is not the keyword SELECT.
  CHECK_THROWS_AS(extract_sql("make a selection from the menu"), ExtractError);
}

TEST_CASE("error rates over scripted backends are exact") {
  SqlTask task = pets_task();
  SqlRuleSet rules = SqlRuleSet::defaults();
  std::uint64_t checksum = fnv1a_file(task.database_path);

  SUBCASE("always-gold emits 0.0 over 20 runs") {
    ScriptedBackend backend;
    for (int i = 0; i < 20; ++i) {
      backend.expect_contains("INNER JOIN", "```sql\n" + task.gold_sql + "\n```");
    }
    SqlEvalResult result = error_rate(task, backend, rules, 20);
    CHECK(result.rate == 0.0);
    REQUIRE(result.runs.size() == 20);
    for (const SqlRunRecord& run : result.runs) {
      CHECK(run.outcome == SqlOutcome::match);
      CHECK(run.extracted_sql == task.gold_sql);
      CHECK_FALSE(run.raw_output.empty());
    }
  }

  SUBCASE("always-unusable emits 1.0") {
    ScriptedBackend garbage;
    for (int i = 0; i < 20; ++i) garbage.expect_any("I cannot help with that.");
    SqlEvalResult result = error_rate(task, garbage, rules, 20);
    CHECK(result.rate == 1.0);
    CHECK(result.runs[0].outcome == SqlOutcome::execution_error);
    CHECK(result.runs[0].extracted_sql.empty());

    ScriptedBackend invalid;
    for (int i = 0; i < 20; ++i) invalid.expect_any("SELECT x FROM no_such_table");
    CHECK(error_rate(task, invalid, rules, 20).rate == 1.0);
  }

  SUBCASE("mixed outcomes average exactly") {
    ScriptedBackend backend;
    backend.expect_any(task.gold_sql);
    backend.expect_any("SELECT fname FROM student");  // wrong rows
    backend.expect_any("not sql at all");
    backend.expect_any("SELEC broken");
    SqlEvalResult result = error_rate(task, backend, rules, 4);
    CHECK(result.rate == 0.75);
    CHECK(result.runs[0].outcome == SqlOutcome::match);
    CHECK(result.runs[1].outcome == SqlOutcome::mismatch);
    CHECK(result.runs[2].outcome == SqlOutcome::execution_error);
    CHECK(result.runs[3].outcome == SqlOutcome::execution_error);
  }

  ScriptedBackend unused;
  CHECK_THROWS_AS(error_rate(task, unused, rules, 0), ConfigError);

  // Twenty-plus generated queries later the database is untouched.
  CHECK(fnv1a_file(task.database_path) == checksum);
}
