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

#include "mlprompt/sql.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mlprompt/errors.hpp"

namespace mlprompt {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string sql_rule_key(int rule, const std::string& language) {
  return "S" + std::to_string(rule) + "." + language;
}

// RAII connection handle. Owns the sqlite3* and closes it on scope exit.
struct Connection {
  sqlite3* db = nullptr;
  ~Connection() {
    if (db != nullptr) sqlite3_close(db);
  }
};

void open_read_only(Connection& conn, const std::string& path) {
  // SQLite creates a file for missing paths in some modes; demand an
  // existing file so a typo'd path reads as unavailable, not empty.
  if (!fs::exists(path)) {
    throw ConfigError("database unavailable: no file at '" + path + "'");
  }
  int rc = sqlite3_open_v2(path.c_str(), &conn.db, SQLITE_OPEN_READONLY, nullptr);
  if (rc != SQLITE_OK) {
    std::string why = conn.db != nullptr ? sqlite3_errmsg(conn.db) : sqlite3_errstr(rc);
    throw ConfigError("database unavailable: cannot open '" + path + "': " + why);
  }
}

// Canonical per-cell encoding. A one-byte type tag keeps text "18"
// distinct from integer 18, while REAL cells holding whole numbers
// collapse onto the INTEGER encoding: driver type affinity decides
// whether a column arrives as 20 or 20.0 and that must not decide
// correctness.
std::string canonical_cell(sqlite3_stmt* stmt, int col) {
  switch (sqlite3_column_type(stmt, col)) {
    case SQLITE_NULL:
      return "\x01";
    case SQLITE_INTEGER:
      return "\x02" + std::to_string(sqlite3_column_int64(stmt, col));
    case SQLITE_FLOAT: {
      double v = sqlite3_column_double(stmt, col);
      if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e18) {
        return "\x02" + std::to_string(static_cast<long long>(v));
      }
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      return std::string("\x03") + buf;
    }
    case SQLITE_BLOB: {
      const char* bytes = static_cast<const char*>(sqlite3_column_blob(stmt, col));
      int n = sqlite3_column_bytes(stmt, col);
      return "\x05" + std::string(bytes, bytes + n);
    }
    default: {  // SQLITE_TEXT
      const unsigned char* text = sqlite3_column_text(stmt, col);
      int n = sqlite3_column_bytes(stmt, col);
      return "\x04" + std::string(reinterpret_cast<const char*>(text), n);
    }
  }
}

struct QueryResult {
  bool ok = false;
  std::string error;
  /// One canonical string per row; cells joined with a separator that
  /// cannot appear in a canonical cell prefix.
  std::vector<std::string> rows;
};

// Runs the first statement of sql and collects every row. Never writes:
// the connection is read-only, so any mutating statement fails here.
QueryResult run_query(sqlite3* db, const std::string& sql) {
  QueryResult result;
  sqlite3_stmt* stmt = nullptr;
  int rc = sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt, nullptr);
  if (rc != SQLITE_OK) {
    result.error = sqlite3_errmsg(db);
    return result;
  }
  if (stmt == nullptr) {
    result.error = "empty statement";
    return result;
  }
  std::unique_ptr<sqlite3_stmt, decltype(&sqlite3_finalize)> guard(stmt, sqlite3_finalize);
  while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
    std::string row;
    int cols = sqlite3_column_count(stmt);
    for (int c = 0; c < cols; ++c) {
      if (c > 0) row += '\x1f';
      row += canonical_cell(stmt, c);
    }
    result.rows.push_back(std::move(row));
  }
  if (rc != SQLITE_DONE) {
    result.error = sqlite3_errmsg(db);
    return result;
  }
  result.ok = true;
  return result;
}

// True when the statement pins row order. Whitespace runs are collapsed
// first, so "ORDER\n  BY" still counts.
bool has_order_by(const std::string& sql) {
  std::string flat;
  flat.reserve(sql.size());
  bool in_space = false;
  for (char ch : sql) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      in_space = true;
      continue;
    }
    if (in_space && !flat.empty()) flat += ' ';
    in_space = false;
    flat += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return flat.find("order by") != std::string::npos;
}

// Case-insensitive search for word starting at a non-identifier
// boundary. Returns npos when absent.
std::size_t find_keyword(const std::string& text, const std::string& word) {
  auto is_ident = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };
  for (std::size_t i = 0; i + word.size() <= text.size(); ++i) {
    if (i > 0 && is_ident(text[i - 1])) continue;
    std::size_t j = 0;
    while (j < word.size() &&
           std::tolower(static_cast<unsigned char>(text[i + j])) == word[j]) {
      ++j;
    }
    if (j == word.size() &&
        (i + j == text.size() || !is_ident(text[i + j]))) {
      return i;
    }
  }
  return std::string::npos;
}

std::string trim(const std::string& text) {
  std::size_t b = text.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = text.find_last_not_of(" \t\r\n");
  return text.substr(b, e - b + 1);
}

}  // namespace

SqlTask load_sql_task(const std::string& manifest_path) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(slurp(manifest_path));
    SqlTask task;
    task.question = manifest.at("question").get<std::string>();
    fs::path base = fs::path(manifest_path).parent_path();
    fs::path schema = base / manifest.at("schema").get<std::string>();
    task.schema_ddl = slurp(schema);
    task.database_path = (base / manifest.at("database").get<std::string>()).string();
    task.gold_sql = manifest.at("gold").get<std::string>();
    if (task.question.empty() || task.gold_sql.empty()) {
      throw ConfigError("task manifest '" + manifest_path +
                        "' needs a question and a gold query");
    }
    return task;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("task manifest '" + manifest_path + "' is malformed: " + e.what());
  }
}

void ensure_database(const SqlTask& task) {
  if (fs::exists(task.database_path)) return;
  // Build under a temporary name so an interrupted run never leaves a
  // half-initialized file at the real path.
  std::string tmp = task.database_path + ".tmp";
  fs::remove(tmp);
  Connection conn;
  int rc = sqlite3_open_v2(tmp.c_str(), &conn.db,
                           SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr);
  if (rc != SQLITE_OK) {
    throw ConfigError("cannot create database at '" + tmp + "': " +
                      (conn.db != nullptr ? sqlite3_errmsg(conn.db) : sqlite3_errstr(rc)));
  }
  char* err = nullptr;
  rc = sqlite3_exec(conn.db, task.schema_ddl.c_str(), nullptr, nullptr, &err);
  if (rc != SQLITE_OK) {
    std::string why = err != nullptr ? err : "unknown error";
    sqlite3_free(err);
    fs::remove(tmp);
    throw ConfigError("schema script failed: " + why);
  }
  fs::rename(tmp, task.database_path);
}

bool operator==(const SqlRuleSlot& a, const SqlRuleSlot& b) {
  return a.rule == b.rule && a.language == b.language &&
         a.rendered_text == b.rendered_text && a.repeat_count == b.repeat_count;
}

SqlRuleSet SqlRuleSet::defaults() {
  const TranslationTable& table = TranslationTable::builtin();
  SqlRuleSet set;
  for (int n = 1; n <= 5; ++n) {
    SqlRuleSlot slot;
    slot.rule = n;
    slot.language = kDominantLanguage;
    slot.rendered_text = table.lookup(sql_rule_key(n, kDominantLanguage));
    set.slots.push_back(std::move(slot));
  }
  return set;
}

SqlRuleSet SqlRuleSet::with_language(int rule, const std::string& language) const {
  SqlRuleSet out = *this;
  for (SqlRuleSlot& slot : out.slots) {
    if (slot.rule != rule) continue;
    slot.language = language;
    slot.rendered_text = TranslationTable::builtin().lookup(sql_rule_key(rule, language));
    return out;
  }
  throw ConfigError("rule " + std::to_string(rule) + " is not in the rule set");
}

SqlRuleSet SqlRuleSet::with_repeat(int rule, int count) const {
  if (count < 1) {
    throw ConfigError("repeat count must be >= 1");
  }
  SqlRuleSet out = *this;
  for (SqlRuleSlot& slot : out.slots) {
    if (slot.rule != rule) continue;
    slot.repeat_count = count;
    return out;
  }
  throw ConfigError("rule " + std::to_string(rule) + " is not in the rule set");
}

std::string build_sql_prompt(const SqlTask& task, const SqlRuleSet& rules) {
  std::ostringstream out;
  out << "You write SQLite queries.\n\n";
  out << "The database schema is:\n\n" << task.schema_ddl << "\n";
  if (!rules.slots.empty()) {
    out << "You must follow the following rules:\n\n";
    for (const SqlRuleSlot& slot : rules.slots) {
      if (slot.repeat_count < 1) {
        throw ConfigError("rule " + std::to_string(slot.rule) + " has repeat_count < 1");
      }
      if (slot.rendered_text.empty()) {
        throw ConfigError("rule " + std::to_string(slot.rule) + " has no rendered text");
      }
      for (int i = 0; i < slot.repeat_count; ++i) {
        out << "Rule " << slot.rule << ": " << slot.rendered_text << "\n";
      }
    }
    out << "\n";
  }
  out << "Question: " << task.question << "\n\n";
  out << "Answer with a single SQL query and nothing else.\n";
  return out.str();
}

std::string extract_sql(const std::string& raw) {
  std::string candidate = raw;
  std::size_t fence = raw.find("```");
  if (fence != std::string::npos) {
    std::size_t body = raw.find('\n', fence);
    std::size_t close = body == std::string::npos
                            ? std::string::npos
                            : raw.find("```", body);
    if (body != std::string::npos && close != std::string::npos) {
      candidate = raw.substr(body + 1, close - body - 1);
    }
  }
  std::size_t select = find_keyword(candidate, "select");
  if (select == std::string::npos) {
    throw ExtractError("no SQL statement found in output");
  }
  // A CTE starts before its first SELECT. Prose also says "with", so an
  // earlier "with" only wins when a CTE's opening paren sits between it
  // and the SELECT.
  std::size_t start = select;
  std::size_t with = find_keyword(candidate, "with");
  if (with != std::string::npos && with < select) {
    std::size_t paren = candidate.find('(', with);
    if (paren != std::string::npos && paren < select) start = with;
  }
  std::string sql = candidate.substr(start);
  // Unfenced output often continues in prose after the statement; a
  // semicolon is the only reliable terminator we can trust.
  if (fence == std::string::npos) {
    std::size_t semi = sql.find(';');
    if (semi != std::string::npos) sql = sql.substr(0, semi);
  }
  return trim(sql);
}

std::string to_string(SqlOutcome outcome) {
  switch (outcome) {
    case SqlOutcome::match: return "match";
    case SqlOutcome::mismatch: return "mismatch";
    case SqlOutcome::execution_error: return "execution_error";
  }
  return "unknown";
}

SqlOutcome execute_and_compare(const std::string& generated_sql, const SqlTask& task) {
  Connection conn;
  open_read_only(conn, task.database_path);

  QueryResult gold = run_query(conn.db, task.gold_sql);
  if (!gold.ok) {
    throw ConfigError("gold query failed: " + gold.error);
  }
  QueryResult got = run_query(conn.db, generated_sql);
  if (!got.ok) {
    return SqlOutcome::execution_error;
  }
  if (!has_order_by(task.gold_sql)) {
    std::sort(gold.rows.begin(), gold.rows.end());
    std::sort(got.rows.begin(), got.rows.end());
  }
  return gold.rows == got.rows ? SqlOutcome::match : SqlOutcome::mismatch;
}

SqlEvalResult error_rate(const SqlTask& task, Backend& backend,
                         const SqlRuleSet& rules, int n_runs) {
  if (n_runs < 1) {
    throw ConfigError("n_runs must be >= 1");
  }
  const std::string prompt = build_sql_prompt(task, rules);
  SqlEvalResult result;
  std::size_t errors = 0;
  for (int i = 0; i < n_runs; ++i) {
    GenerationResult generation = complete(backend, user_request(prompt));
    SqlRunRecord record;
    record.raw_output = generation.text;
    try {
      record.extracted_sql = extract_sql(generation.text);
      record.outcome = execute_and_compare(record.extracted_sql, task);
    } catch (const ExtractError&) {
      record.outcome = SqlOutcome::execution_error;
    }
    if (record.outcome != SqlOutcome::match) ++errors;
    result.runs.push_back(std::move(record));
  }
  result.rate = static_cast<double>(errors) / static_cast<double>(n_runs);
  return result;
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read '" + path + "'");
  }
  std::uint64_t hash = 14695981039346656037ULL;
  char buffer[4096];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 1099511628211ULL;
    }
  }
  return hash;
}

}  // namespace mlprompt
