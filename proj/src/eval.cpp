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

#include "mlprompt/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "mlprompt/errors.hpp"
#include "mlprompt/model.hpp"

namespace mlprompt {

namespace {

namespace fs = std::filesystem;

std::string safe_component(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (char ch : raw) {
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' ||
        ch == '-') {
      out += ch;
    } else {
      out += '_';
    }
  }
  return out.empty() ? "_" : out;
}

struct ProblemFile {
  std::string stem;
  ModelSpec model;
};

std::vector<ProblemFile> load_dataset(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw ConfigError("dataset directory '" + dir + "' does not exist");
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  if (paths.empty())
    throw ConfigError("dataset directory '" + dir + "' has no model files");
  std::vector<ProblemFile> problems;
  problems.reserve(paths.size());
  for (const fs::path& p : paths)
    problems.push_back({p.stem().string(), load_model_file(p.string())});
  return problems;
}

struct Cell {
  std::string backend;
  Strategy strategy;
  std::string language;
  std::size_t problem;
  int run;
};

std::string cell_file(const fs::path& dir, const Cell& cell,
                      const std::string& problem_stem) {
  std::string name = safe_component(problem_stem) + "__" +
                     safe_component(cell.backend) + "__" +
                     safe_component(std::string(to_string(cell.strategy))) +
                     "__" + safe_component(cell.language) + "__r" +
                     std::to_string(cell.run) + ".json";
  return (dir / name).string();
}

void write_atomic(const std::string& path, const std::string& text) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) throw ConfigError("cannot write record '" + tmp + "'");
    out << text;
  }
  fs::rename(tmp, path);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string run_record_json(const RunRecord& record) {
  nlohmann::json j;
  j["problem_id"] = record.problem_id;
  j["problem"] = record.problem;
  j["backend"] = record.backend;
  j["strategy"] = std::string(to_string(record.strategy));
  j["language"] = record.language;
  j["run_index"] = record.run_index;
  j["seed"] = record.seed;
  j["wall_ms"] = record.wall_ms;
  j["outcome"] = nlohmann::json::parse(outcome_json(record.outcome));
  return j.dump();
}

RunRecord run_record_from_json(const std::string& text) {
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    RunRecord record;
    record.problem_id = j.at("problem_id").get<long long>();
    record.problem = j.at("problem").get<std::string>();
    record.backend = j.at("backend").get<std::string>();
    record.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    record.language = j.at("language").get<std::string>();
    record.run_index = j.at("run_index").get<int>();
    record.seed = j.at("seed").get<std::uint64_t>();
    record.wall_ms = j.at("wall_ms").get<double>();
    record.outcome = outcome_from_json(j.at("outcome").dump());
    return record;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("not a serialized run record: ") + e.what());
  }
}

std::vector<RunRecord> run_experiment(
    const ExperimentPlan& plan,
    const std::map<std::string, Backend*>& backends,
    const std::string& results_dir) {
  if (plan.runs_per_problem < 1)
    throw ConfigError("runs_per_problem must be >= 1");
  if (plan.budget < 1) throw ConfigError("budget must be >= 1");
  if (plan.backends.empty()) throw ConfigError("plan names no backends");
  if (plan.strategies.empty()) throw ConfigError("plan names no strategies");
  if (plan.languages.empty()) throw ConfigError("plan names no languages");
  for (const std::string& name : plan.backends) {
    auto it = backends.find(name);
    if (it == backends.end() || it->second == nullptr)
      throw ConfigError("backend '" + name + "' is not provided");
  }

  std::vector<ProblemFile> problems = load_dataset(plan.dataset_dir);
  fs::create_directories(results_dir);

  std::vector<Cell> cells;
  for (const std::string& backend : plan.backends)
    for (Strategy strategy : plan.strategies)
      for (const std::string& language : plan.languages)
        for (std::size_t p = 0; p < problems.size(); ++p)
          for (int r = 0; r < plan.runs_per_problem; ++r)
            cells.push_back({backend, strategy, language, p, r});

  auto run_cell = [&](const Cell& cell) -> RunRecord {
    const ProblemFile& problem = problems[cell.problem];
    std::string path = cell_file(results_dir, cell, problem.stem);
    if (fs::exists(path)) {
      try {
        return run_record_from_json(slurp(path));
      } catch (const Error&) {
        // A torn or stale file is treated as never run.
      }
    }

    RunRecord record;
    record.problem_id = problem.model.id;
    record.problem = problem.stem;
    record.backend = cell.backend;
    record.strategy = cell.strategy;
    record.language = cell.language;
    record.run_index = cell.run;
    record.seed = plan.seeds.empty()
                      ? static_cast<std::uint64_t>(cell.run)
                      : plan.seeds[static_cast<std::size_t>(cell.run) %
                                   plan.seeds.size()];

    LoopOptions options;
    options.max_iterations = plan.budget;
    options.policy.languages = {cell.language};
    options.policy.rotate = false;
    options.model_name = plan.model_name;
    options.temperature = plan.temperature;
    options.sc_samples = plan.sc_samples;

    auto t0 = std::chrono::steady_clock::now();
    record.outcome = run_strategy(problem.model, cell.strategy,
                                  *backends.at(cell.backend), options);
    record.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    write_atomic(path, run_record_json(record));
    return record;
  };

  std::vector<RunRecord> records(cells.size());

  bool concurrent_safe = true;
  for (const std::string& name : plan.backends)
    if (backends.at(name)->single_flight()) concurrent_safe = false;
  int workers = concurrent_safe ? plan.parallelism : 1;
  workers = std::min<int>(workers, static_cast<int>(cells.size()));

  if (workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      records[i] = run_cell(cells[i]);
  } else {
    std::atomic<std::size_t> cursor{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (std::size_t i = cursor.fetch_add(1); i < cells.size();
             i = cursor.fetch_add(1))
          records[i] = run_cell(cells[i]);
      });
    }
    for (std::thread& t : pool) t.join();
  }
  return records;
}

namespace {

// Final verdict of one run: the last recorded report, or the all-fail
// invalid report when the run never produced a judged output.
ValidationReport final_report(const RunRecord& record) {
  if (record.outcome.iterations.empty())
    return json_invalid_report("no output was produced");
  return record.outcome.iterations.back().report;
}

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string csv_field(const std::string& raw) {
  if (raw.find_first_of(",\"\n") == std::string::npos) return raw;
  std::string out = "\"";
  for (char ch : raw) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

EvalReport summarize(const std::vector<RunRecord>& records) {
  // Canonical order first: accumulation then happens in the same order
  // no matter how the caller shuffled the records, so equal multisets
  // produce bit-equal reports.
  std::vector<const RunRecord*> sorted;
  sorted.reserve(records.size());
  for (const RunRecord& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const RunRecord* a, const RunRecord* b) {
              return std::tie(a->backend, a->strategy, a->language,
                              a->problem, a->problem_id, a->run_index,
                              a->seed, a->wall_ms) <
                     std::tie(b->backend, b->strategy, b->language,
                              b->problem, b->problem_id, b->run_index,
                              b->seed, b->wall_ms);
            });

  std::map<GroupKey, std::vector<const RunRecord*>> grouped;
  for (const RunRecord* r : sorted)
    grouped[{r->backend, r->strategy, r->language}].push_back(r);

  EvalReport report;
  for (const auto& [key, members] : grouped) {
    GroupStats stats;
    stats.runs = members.size();
    std::vector<ValidationReport> finals;
    finals.reserve(members.size());
    std::size_t valid = 0;
    double iterations = 0.0, calls = 0.0, latency = 0.0;
    for (const RunRecord* r : members) {
      ValidationReport f = final_report(*r);
      if (f.json_valid) ++valid;
      finals.push_back(std::move(f));
      iterations += static_cast<double>(r->outcome.iterations.size());
      calls += static_cast<double>(r->outcome.backend_calls);
      latency += r->wall_ms;
    }
    auto n = static_cast<double>(members.size());
    stats.json_validity_rate = static_cast<double>(valid) / n;
    stats.score = score_rules(finals);
    stats.mean_iterations = iterations / n;
    stats.mean_backend_calls = calls / n;
    stats.mean_latency_ms = latency / n;
    report.groups.emplace(key, std::move(stats));
  }
  return report;
}

std::string render_report(const EvalReport& report, ReportFormat format) {
  std::set<std::string> backends;
  std::set<std::pair<std::string, std::string>> rows;
  std::map<std::tuple<std::string, std::string, std::string>, double> cells;
  for (const auto& [key, stats] : report.groups) {
    std::string strategy(to_string(key.strategy));
    backends.insert(key.backend);
    rows.insert({strategy, key.language});
    cells[{strategy, key.language, key.backend}] = stats.score.final_score;
  }

  std::string out;
  if (format == ReportFormat::markdown) {
    out += "| strategy | language |";
    for (const std::string& b : backends) out += " " + b + " |";
    out += "\n| --- | --- |";
    for (std::size_t i = 0; i < backends.size(); ++i) out += " --- |";
    out += "\n";
    for (const auto& [strategy, language] : rows) {
      out += "| " + strategy + " | " + language + " |";
      for (const std::string& b : backends) {
        auto it = cells.find({strategy, language, b});
        out += it == cells.end() ? " -" : " " + format_score(it->second);
        out += " |";
      }
      out += "\n";
    }
    return out;
  }

  out += "strategy,language";
  for (const std::string& b : backends) out += "," + csv_field(b);
  out += "\n";
  for (const auto& [strategy, language] : rows) {
    out += csv_field(strategy) + "," + csv_field(language);
    for (const std::string& b : backends) {
      auto it = cells.find({strategy, language, b});
      out += ",";
      if (it != cells.end()) out += format_score(it->second);
    }
    out += "\n";
  }
  return out;
}

}  // namespace mlprompt
