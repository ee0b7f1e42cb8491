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
// The mlprompt command line: parse and validate model/bounds files,
// inspect prompts, run generations and experiment grids, materialize
// solver-ready instances, evaluate text-to-SQL, and render reports.
//
// Exit codes: 0 success, 1 validation failure (violations found, run
// not compliant, bad input data), 2 configuration or usage errors.
//
// Configuration precedence: flags > environment > config file. The
// credential itself only ever travels through the environment
// (MLPROMPT_API_KEY by default); it is never echoed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mlprompt/errors.hpp"
#include "mlprompt/eval.hpp"
#include "mlprompt/instance.hpp"
#include "mlprompt/llm.hpp"
#include "mlprompt/loop.hpp"
#include "mlprompt/model.hpp"
#include "mlprompt/prompt.hpp"
#include "mlprompt/rules.hpp"
#include "mlprompt/sql.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mlprompt;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& text) {
  fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot write '" + path + "'");
  }
  out << text;
}

/// Everything a run needs beyond its positional arguments, merged from
/// config file, environment, and flags, in ascending precedence.
struct RunConfig {
  std::string base_url;
  std::string model = "gpt-4";
  std::string api_key_env = "MLPROMPT_API_KEY";
  std::string strategy = "ml_replace";
  std::vector<std::string> languages{"zh"};
  std::vector<std::uint64_t> seeds;
  int budget = 3;
  int runs = 3;
  int sc_samples = 5;
  double temperature = 0.7;
  int parallelism = 1;
};

/// The flag layer: only values the user actually passed override.
struct Flags {
  std::string config_file;
  std::string base_url;
  std::string model;
  std::string strategy;
  std::vector<std::string> languages;
  std::vector<std::uint64_t> seeds;
  std::optional<int> budget;
  std::optional<int> runs;
  std::optional<int> sc_samples;
  std::optional<double> temperature;
  std::optional<int> parallelism;
};

void apply_config_file(RunConfig& config, const std::string& path) {
  json file;
  try {
    file = json::parse(slurp(path));
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  try {
    if (file.contains("base_url")) config.base_url = file["base_url"].get<std::string>();
    if (file.contains("model")) config.model = file["model"].get<std::string>();
    if (file.contains("strategy")) config.strategy = file["strategy"].get<std::string>();
    if (file.contains("languages"))
      config.languages = file["languages"].get<std::vector<std::string>>();
    if (file.contains("seeds"))
      config.seeds = file["seeds"].get<std::vector<std::uint64_t>>();
    if (file.contains("budget")) config.budget = file["budget"].get<int>();
    if (file.contains("runs")) config.runs = file["runs"].get<int>();
    if (file.contains("sc_samples")) config.sc_samples = file["sc_samples"].get<int>();
    if (file.contains("temperature"))
      config.temperature = file["temperature"].get<double>();
    if (file.contains("parallelism"))
      config.parallelism = file["parallelism"].get<int>();
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' has a bad value: " + e.what());
  }
}

RunConfig merge_config(const Flags& flags) {
  RunConfig config;
  if (!flags.config_file.empty()) apply_config_file(config, flags.config_file);
  if (const char* url = std::getenv("MLPROMPT_BASE_URL")) config.base_url = url;
  if (const char* model = std::getenv("MLPROMPT_MODEL")) config.model = model;
  if (!flags.base_url.empty()) config.base_url = flags.base_url;
  if (!flags.model.empty()) config.model = flags.model;
  if (!flags.strategy.empty()) config.strategy = flags.strategy;
  if (!flags.languages.empty()) config.languages = flags.languages;
  if (!flags.seeds.empty()) config.seeds = flags.seeds;
  if (flags.budget) config.budget = *flags.budget;
  if (flags.runs) config.runs = *flags.runs;
  if (flags.sc_samples) config.sc_samples = *flags.sc_samples;
  if (flags.temperature) config.temperature = *flags.temperature;
  if (flags.parallelism) config.parallelism = *flags.parallelism;
  return config;
}

/// The effective configuration as echoed into transcripts. Reveals
/// whether a credential is set, never its value.
json config_json(const RunConfig& config) {
  json j;
  j["base_url"] = config.base_url;
  j["model"] = config.model;
  j["strategy"] = config.strategy;
  j["languages"] = config.languages;
  j["seeds"] = config.seeds;
  j["budget"] = config.budget;
  j["runs"] = config.runs;
  j["sc_samples"] = config.sc_samples;
  j["temperature"] = config.temperature;
  j["parallelism"] = config.parallelism;
  j["api_key_env"] = config.api_key_env;
  j["api_key_set"] = std::getenv(config.api_key_env.c_str()) != nullptr;
  return j;
}

HttpBackend make_backend(const RunConfig& config) {
  if (config.base_url.empty()) {
    throw ConfigError(
        "no backend configured: pass --base-url, set MLPROMPT_BASE_URL, "
        "or put base_url in the config file");
  }
  HttpBackendConfig http;
  http.base_url = config.base_url;
  http.api_key_env = config.api_key_env;
  return HttpBackend(http);
}

LoopOptions loop_options(const RunConfig& config) {
  LoopOptions options;
  options.max_iterations = config.budget;
  options.policy.languages = config.languages;
  options.model_name = config.model;
  options.temperature = config.temperature;
  options.sc_samples = config.sc_samples;
  return options;
}

json plan_slots_json(const PromptPlan& plan) {
  json slots = json::array();
  for (const RuleSlot& slot : plan.slots) {
    slots.push_back({{"rule", std::string(to_string(slot.rule))},
                     {"language", slot.language},
                     {"repeat_count", slot.repeat_count},
                     {"appended", slot.appended}});
  }
  return slots;
}

// ---------------------------------------------------------------------
// Subcommands. Each returns the process exit code.

int cmd_parse(const std::string& model_path, bool as_json) {
  ModelSpec model = load_model_file(model_path);
  if (as_json) {
    json j;
    j["id"] = model.id;
    j["title"] = model.title;
    j["sets"] = model.sets.size();
    j["parameters"] = model.parameters.size();
    j["variables"] = model.variables.size();
    j["objectives"] = model.objectives.size();
    j["constraints"] = model.constraints.size();
    j["warnings"] = model.warnings;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "model " << model.id << " '" << model.title << "': "
              << "sets " << model.sets.size()
              << ", parameters " << model.parameters.size()
              << ", variables " << model.variables.size()
              << ", objectives " << model.objectives.size()
              << ", constraints " << model.constraints.size() << "\n";
    for (const std::string& warning : model.warnings) {
      std::cout << "warning: " << warning << "\n";
    }
  }
  return 0;
}

int cmd_validate(const std::string& model_path, const std::string& bounds_path,
                 bool as_json) {
  ModelSpec model = load_model_file(model_path);
  ValidationReport report;
  try {
    report = check(model, load_bounds(slurp(bounds_path)));
  } catch (const ConfigError&) {
    throw;  // unreadable file: configuration, not data
  } catch (const Error& e) {
    report = json_invalid_report(e.what());
  }
  if (as_json) {
    std::cout << to_json(report) << "\n";
  } else {
    std::cout << "json_valid: " << (report.json_valid ? "yes" : "no") << "\n";
    for (RuleId rule : checkable_rules()) {
      std::cout << to_string(rule) << ": "
                << (report.passed(rule) ? "pass" : "FAIL") << "\n";
    }
    for (const Violation& violation : report.violations) {
      std::cout << "  " << to_string(violation.rule) << " at "
                << violation.location << ": " << violation.message << "\n";
    }
    std::cout << (report.compliant() ? "compliant" : "violations found") << "\n";
  }
  return report.compliant() ? 0 : 1;
}

int cmd_prompt(const std::string& model_path, const RunConfig& config,
               const std::vector<std::string>& translate, bool as_json) {
  ModelSpec model = load_model_file(model_path);
  Strategy strategy = strategy_from_string(config.strategy);
  PromptPlan plan = default_plan(strategy, TranslationTable::builtin());
  if (!translate.empty()) {
    std::vector<RuleId> rules;
    for (const std::string& name : translate) rules.push_back(rule_from_string(name));
    LanguagePolicy policy;
    policy.languages = config.languages;
    policy.rotate = false;
    plan = apply_mlprompt(plan, rules, policy, TranslationTable::builtin());
  }
  std::string prompt = build_prompt(model, plan);
  if (as_json) {
    json j;
    j["strategy"] = std::string(to_string(plan.strategy));
    j["slots"] = plan_slots_json(plan);
    j["prompt"] = prompt;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << prompt;
  }
  return 0;
}

int cmd_generate(const std::string& model_path, const RunConfig& config,
                 const std::string& results_dir, bool as_json) {
  ModelSpec model = load_model_file(model_path);
  Strategy strategy = strategy_from_string(config.strategy);
  HttpBackend backend = make_backend(config);
  GenerationOutcome outcome = run_strategy(model, strategy, backend, loop_options(config));

  std::string run_id = fs::path(model_path).stem().string() + "__" + config.strategy;
  if (!results_dir.empty()) {
    write_run_artifacts(outcome, results_dir, run_id);
    json transcript;
    transcript["config"] = config_json(config);
    transcript["outcome"] = json::parse(outcome_json(outcome));
    write_file((fs::path(results_dir) / (run_id + ".outcome.json")).string(),
               transcript.dump(2) + "\n");
  }
  if (as_json) {
    json j;
    j["config"] = config_json(config);
    j["outcome"] = json::parse(outcome_json(outcome));
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "status: " << to_string(outcome.status) << "\n"
              << "iterations: " << outcome.iterations.size() << "\n"
              << "backend calls: " << outcome.backend_calls << "\n";
    if (outcome.final_bounds) {
      std::cout << "final bounds: " << serialize_bounds(*outcome.final_bounds) << "\n";
    }
    if (!outcome.error.empty()) {
      std::cout << "error: " << outcome.error << "\n";
    }
  }
  return outcome.status == LoopStatus::compliant ? 0 : 1;
}

int cmd_instantiate(const std::string& model_path, const std::string& bounds_path,
                    std::uint64_t seed, const std::string& lp_out,
                    const std::string& data_out, bool as_json) {
  ModelSpec model = load_model_file(model_path);
  BoundsSpec bounds = load_bounds(slurp(bounds_path));
  RealizedData data = sample_data(model, bounds, seed);
  MIPInstance instance = build_instance(model, data);
  std::string lp = emit_lp(instance);

  if (!lp_out.empty()) write_file(lp_out, lp);
  if (!data_out.empty()) write_file(data_out, realized_data_json(data) + "\n");
  if (as_json) {
    json j;
    j["seed"] = seed;
    j["variables"] = instance.n;
    j["rows"] = instance.m;
    j["data"] = json::parse(realized_data_json(data));
    j["lp"] = lp;
    std::cout << j.dump(2) << "\n";
  } else if (lp_out.empty()) {
    std::cout << lp;
  } else {
    std::cout << "wrote " << lp_out << " (" << instance.n << " variables, "
              << instance.m << " rows)\n";
  }
  return 0;
}

json group_stats_json(const GroupKey& key, const GroupStats& stats) {
  json j;
  j["backend"] = key.backend;
  j["strategy"] = std::string(to_string(key.strategy));
  j["language"] = key.language;
  j["runs"] = stats.runs;
  j["json_validity_rate"] = stats.json_validity_rate;
  j["r4"] = stats.score.r4;
  j["r7"] = stats.score.r7;
  j["r8"] = stats.score.r8;
  j["final_score"] = stats.score.final_score;
  j["mean_iterations"] = stats.mean_iterations;
  j["mean_backend_calls"] = stats.mean_backend_calls;
  j["mean_latency_ms"] = stats.mean_latency_ms;
  return j;
}

json report_json(const EvalReport& report) {
  json groups = json::array();
  for (const auto& [key, stats] : report.groups) {
    groups.push_back(group_stats_json(key, stats));
  }
  return json{{"groups", groups}};
}

int cmd_eval(const RunConfig& config, const std::string& dataset_dir,
             const std::string& results_dir, const std::vector<std::string>& strategies,
             const std::string& format, bool as_json) {
  ExperimentPlan plan;
  plan.dataset_dir = dataset_dir;
  plan.backends = {config.model};
  for (const std::string& name :
       strategies.empty() ? std::vector<std::string>{config.strategy} : strategies) {
    plan.strategies.push_back(strategy_from_string(name));
  }
  plan.languages = config.languages;
  plan.runs_per_problem = config.runs;
  plan.seeds = config.seeds;
  plan.budget = config.budget;
  plan.model_name = config.model;
  plan.temperature = config.temperature;
  plan.sc_samples = config.sc_samples;
  plan.parallelism = config.parallelism;

  HttpBackend backend = make_backend(config);
  std::map<std::string, Backend*> backends{{config.model, &backend}};
  write_file((fs::path(results_dir) / "plan.json").string(),
             config_json(config).dump(2) + "\n");
  std::vector<RunRecord> records = run_experiment(plan, backends, results_dir);
  EvalReport report = summarize(records);

  if (as_json) {
    json j;
    j["config"] = config_json(config);
    j["records"] = records.size();
    j["report"] = report_json(report);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << records.size() << " records in " << results_dir << "\n\n"
              << render_report(report, format == "csv" ? ReportFormat::csv
                                                       : ReportFormat::markdown);
  }
  return 0;
}

int cmd_report(const std::string& results_dir, const std::string& format, bool as_json) {
  if (!fs::is_directory(results_dir)) {
    throw ConfigError("results directory '" + results_dir + "' does not exist");
  }
  std::vector<RunRecord> records;
  std::size_t skipped = 0;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(results_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& file : files) {
    try {
      records.push_back(run_record_from_json(slurp(file.string())));
    } catch (const Error&) {
      ++skipped;  // plan echoes, torn cells, unrelated JSON
    }
  }
  if (records.empty()) {
    throw ConfigError("no run records found in '" + results_dir + "'");
  }
  EvalReport report = summarize(records);
  if (as_json) {
    json j;
    j["records"] = records.size();
    j["skipped"] = skipped;
    j["report"] = report_json(report);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << render_report(report, format == "csv" ? ReportFormat::csv
                                                       : ReportFormat::markdown);
  }
  return 0;
}

int cmd_sql_eval(const RunConfig& config, const std::string& manifest, int rule,
                 const std::string& language, int repeat, bool as_json) {
  SqlTask task = load_sql_task(manifest);
  ensure_database(task);
  SqlRuleSet rules = SqlRuleSet::defaults();
  if (!language.empty() && language != kDominantLanguage) {
    rules = rules.with_language(rule, language);
  }
  if (repeat > 1) {
    rules = rules.with_repeat(rule, repeat);
  }
  HttpBackend backend = make_backend(config);
  SqlEvalResult result = error_rate(task, backend, rules, config.runs);

  if (as_json) {
    json runs = json::array();
    for (const SqlRunRecord& run : result.runs) {
      runs.push_back({{"outcome", to_string(run.outcome)},
                      {"extracted_sql", run.extracted_sql},
                      {"raw_output", run.raw_output}});
    }
    json j;
    j["config"] = config_json(config);
    j["question"] = task.question;
    j["error_rate"] = result.rate;
    j["runs"] = runs;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "question: " << task.question << "\n";
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
      std::cout << "run " << (i + 1) << ": " << to_string(result.runs[i].outcome)
                << "\n";
    }
    std::ostringstream rate;
    rate.setf(std::ios::fixed);
    rate.precision(2);
    rate << result.rate;
    std::cout << "error rate over " << result.runs.size() << " runs: " << rate.str()
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rule-conditioned structured generation toolkit"};
  app.require_subcommand(1);

  bool as_json = false;
  app.add_flag("--json", as_json, "machine-readable output");
  Flags flags;
  app.add_option("--config", flags.config_file, "JSON config file");

  // Let global flags (--json, --config) appear after the subcommand too.
  app.fallthrough();
  auto global_flags = [](CLI::App* cmd) {
    cmd->fallthrough();
    return cmd;
  };

  // Shared backend/run flags, attached per subcommand that uses them.
  auto add_run_flags = [&flags](CLI::App* cmd) {
    cmd->add_option("--base-url", flags.base_url, "chat-completions server base URL");
    cmd->add_option("--model", flags.model, "model name sent to the backend");
    cmd->add_option("--language", flags.languages, "rewrite language (repeatable)");
    cmd->add_option("--budget", flags.budget, "refinement iterations per run");
    cmd->add_option("--temperature", flags.temperature, "sampling temperature");
    cmd->add_option("--sc-samples", flags.sc_samples, "self-consistency sample count");
  };

  std::string model_path;
  std::string bounds_path;
  std::string dataset_dir;
  std::string results_dir;
  std::string format = "markdown";
  std::string lp_out;
  std::string data_out;
  std::vector<std::string> translate;
  std::vector<std::string> strategies;
  std::uint64_t seed = 0;
  std::string manifest;
  std::string sql_language;
  int sql_rule = 4;
  int sql_repeat = 1;

  CLI::App* parse_cmd = global_flags(app.add_subcommand("parse", "parse a model file and report its shape"));
  parse_cmd->add_option("model-file", model_path, "model JSON file")->required();

  CLI::App* validate_cmd =
      global_flags(app.add_subcommand("validate", "check a bounds file against a model"));
  validate_cmd->add_option("model-file", model_path, "model JSON file")->required();
  validate_cmd->add_option("bounds-file", bounds_path, "bounds JSON file")->required();

  CLI::App* prompt_cmd = global_flags(app.add_subcommand("prompt", "render the prompt a run would send"));
  prompt_cmd->add_option("model-file", model_path, "model JSON file")->required();
  prompt_cmd->add_option("--strategy", flags.strategy, "prompting strategy");
  prompt_cmd->add_option("--translate", translate,
                         "rules to rewrite, e.g. R8 (repeatable)");
  add_run_flags(prompt_cmd);

  CLI::App* generate_cmd = global_flags(app.add_subcommand("generate", "run one generation loop"));
  generate_cmd->add_option("model-file", model_path, "model JSON file")->required();
  generate_cmd->add_option("--strategy", flags.strategy, "prompting strategy");
  generate_cmd->add_option("--results", results_dir, "artifact directory");
  add_run_flags(generate_cmd);

  CLI::App* instantiate_cmd =
      global_flags(app.add_subcommand("instantiate", "sample data and emit a solver-ready LP"));
  instantiate_cmd->add_option("model-file", model_path, "model JSON file")->required();
  instantiate_cmd->add_option("bounds-file", bounds_path, "bounds JSON file")->required();
  instantiate_cmd->add_option("--seed", seed, "sampling seed");
  instantiate_cmd->add_option("--lp-out", lp_out, "write the LP here");
  instantiate_cmd->add_option("--data-out", data_out, "write the sampled data here");

  CLI::App* eval_cmd = global_flags(app.add_subcommand("eval", "run an experiment grid"));
  eval_cmd->add_option("--dataset", dataset_dir, "directory of model files")->required();
  eval_cmd->add_option("--results", results_dir, "record directory")->required();
  eval_cmd->add_option("--strategy", strategies, "strategy (repeatable)");
  eval_cmd->add_option("--runs", flags.runs, "runs per problem");
  eval_cmd->add_option("--seed", flags.seeds, "per-run seed (repeatable)");
  eval_cmd->add_option("--parallelism", flags.parallelism, "concurrent grid cells");
  eval_cmd->add_option("--format", format, "markdown or csv");
  add_run_flags(eval_cmd);

  CLI::App* report_cmd = global_flags(app.add_subcommand("report", "summarize recorded runs"));
  report_cmd->add_option("--results", results_dir, "record directory")->required();
  report_cmd->add_option("--format", format, "markdown or csv");

  CLI::App* sql_cmd = global_flags(app.add_subcommand("sql-eval", "error rate on the SQL task"));
  sql_cmd->add_option("--manifest", manifest, "task manifest JSON")->required();
  sql_cmd->add_option("--rule", sql_rule, "rule to emphasize or translate (1-5)");
  sql_cmd->add_option("--sql-language", sql_language, "translate that rule, e.g. ko");
  sql_cmd->add_option("--repeat", sql_repeat, "repeat that rule this many times");
  sql_cmd->add_option("--runs", flags.runs, "number of generations");
  add_run_flags(sql_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the usage error
    return 2;
  }

  try {
    RunConfig config = merge_config(flags);
    if (parse_cmd->parsed()) return cmd_parse(model_path, as_json);
    if (validate_cmd->parsed()) return cmd_validate(model_path, bounds_path, as_json);
    if (prompt_cmd->parsed()) return cmd_prompt(model_path, config, translate, as_json);
    if (generate_cmd->parsed())
      return cmd_generate(model_path, config, results_dir, as_json);
    if (instantiate_cmd->parsed())
      return cmd_instantiate(model_path, bounds_path, seed, lp_out, data_out, as_json);
    if (eval_cmd->parsed())
      return cmd_eval(config, dataset_dir, results_dir, strategies, format, as_json);
    if (report_cmd->parsed()) return cmd_report(results_dir, format, as_json);
    if (sql_cmd->parsed())
      return cmd_sql_eval(config, manifest, sql_rule, sql_language, sql_repeat, as_json);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 2;
  }
}
