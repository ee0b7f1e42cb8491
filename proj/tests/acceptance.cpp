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

// The acceptance gate. Each criterion prints exactly one PASS or FAIL
// line; the process exits non-zero when any criterion fails. The live
// smoke criterion is optional and reports a pass with a skip note when
// no live backend is configured.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "json.hpp"
#include "mlprompt/errors.hpp"
#include "mlprompt/eval.hpp"
#include "mlprompt/instance.hpp"
#include "mlprompt/llm.hpp"
#include "mlprompt/loop.hpp"
#include "mlprompt/model.hpp"
#include "mlprompt/prompt.hpp"
#include "mlprompt/rng.hpp"
#include "mlprompt/rules.hpp"
#include "mlprompt/sql.hpp"
#include "extract_fixtures.hpp"
#include "rule_fixtures.hpp"

namespace {

using namespace mlprompt;
using nlohmann::ordered_json;

const std::string kRepoDir = MLPROMPT_REPO_DIR;

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message) {
  if (!condition) throw CheckFailure(message);
}

int g_failures = 0;

// Runs one criterion body; the body returns the detail text for the
// PASS line and throws to fail. One output line either way.
void criterion(int number, const std::string& name,
               const std::function<std::string()>& body) {
  std::string detail;
  bool ok = true;
  try {
    detail = body();
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  std::printf("%s %2d %s: %s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string corpus_path(const std::string& stem) {
  return kRepoDir + "/data/complexor/" + stem + ".json";
}

std::filesystem::path fresh_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("mlprompt_accept_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Compliant and rule-8-violating bounds for the binpacking model.
const char kCompliant[] =
    R"({"set": [[1, 5]], "hyper-parameter": [[null, null]], "parameter": [[1, 10], [12, 20]], "parameter_types": ["integer", "integer"]})";
const char kGap17[] =
    R"({"set": [[1, 5]], "hyper-parameter": [[null, null]], "parameter": [[1, 18], [2, 9]], "parameter_types": ["integer", "integer"]})";

// ---- independent oracles, written from the definitions ----

// A variable or constraint contributes the product of its domain sets'
// cardinalities.
std::pair<long long, long long> oracle_counts(const ModelSpec& model,
                                              const RealizedData& data) {
  auto product = [&](const std::vector<DomainBinding>& domain) {
    long long p = 1;
    for (const DomainBinding& b : domain)
      p *= static_cast<long long>(data.set_elements.at(b.set_name).size());
    return p;
  };
  long long n = 0;
  long long m = 0;
  for (const auto& v : model.variables) n += product(v.domain);
  for (const auto& c : model.constraints) m += product(c.domain);
  return {n, m};
}

std::vector<SymbolKey> expected_columns(const ModelSpec& model,
                                        const RealizedData& data) {
  std::vector<SymbolKey> keys;
  for (const auto& var : model.variables)
    for (const IndexAssignment& a : expand_domain(var.domain, data.set_elements))
      keys.push_back(SymbolKey{var.name, a});
  return keys;
}

// Evaluates one side of a constraint under a pinned domain assignment
// by wrapping it in a synthetic sum whose per-binding sets hold exactly
// the pinned element. Uses only the public expression API.
double eval_pinned(const ExprPtr& side, const ConstraintDef& con,
                   const IndexAssignment& assignment, EvalEnv env) {
  Sum wrapper;
  for (std::size_t d = 0; d < con.domain.size(); ++d) {
    std::string pin_set = "__pin" + std::to_string(d);
    wrapper.bindings.push_back({con.domain[d].index_var, pin_set});
    env.set_elements[pin_set] = {assignment[d]};
  }
  wrapper.body = side;
  return evaluate(Expr::make(std::move(wrapper)), env);
}

// Checks n, m, the objective vector, and every row against direct
// expression evaluation on `trials` random assignments.
void check_against_oracle(const ModelSpec& model, const RealizedData& data,
                          const MIPInstance& inst, std::uint64_t rng_seed,
                          int trials, const std::string& tag) {
  auto [oracle_n, oracle_m] = oracle_counts(model, data);
  require(inst.n == oracle_n, tag + ": n " + std::to_string(inst.n) +
                                  " != oracle " + std::to_string(oracle_n));
  require(inst.m == oracle_m, tag + ": m " + std::to_string(inst.m) +
                                  " != oracle " + std::to_string(oracle_m));
  require(static_cast<long long>(inst.rows.size()) == oracle_m,
          tag + ": row count disagrees with m");

  std::vector<SymbolKey> columns = expected_columns(model, data);
  require(static_cast<int>(columns.size()) == inst.n,
          tag + ": column expansion disagrees with n");

  EvalEnv base = realized_env(model, data);
  SplitMix64 rng(rng_seed);
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<double> x(static_cast<std::size_t>(inst.n));
    EvalEnv env = base;
    for (int i = 0; i < inst.n; ++i) {
      x[static_cast<std::size_t>(i)] = -2.0 + 4.0 * rng.uniform_double();
      env.values[columns[static_cast<std::size_t>(i)]] =
          x[static_cast<std::size_t>(i)];
    }

    double c_dot = inst.objective_constant;
    for (int i = 0; i < inst.n; ++i)
      c_dot += inst.c[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    double c_direct = evaluate(model.objectives.at(0).function, env);
    require(std::fabs(c_dot - c_direct) <= 1e-9,
            tag + ": objective dot product deviates by " +
                std::to_string(std::fabs(c_dot - c_direct)));

    std::size_t r = 0;
    for (const ConstraintDef& con : model.constraints) {
      const auto* rel = con.function->get_if<Relation>();
      require(rel != nullptr, tag + ": constraint without relation");
      for (const IndexAssignment& a : expand_domain(con.domain, data.set_elements)) {
        const MIPRow& row = inst.rows.at(r++);
        double row_value = -row.rhs;
        for (const auto& [idx, coef] : row.coeffs)
          row_value += coef * x.at(static_cast<std::size_t>(idx));
        double direct =
            eval_pinned(rel->lhs, con, a, env) - eval_pinned(rel->rhs, con, a, env);
        require(std::fabs(row_value - direct) <= 1e-9,
                tag + ": row " + row.name + " deviates by " +
                    std::to_string(std::fabs(row_value - direct)));
      }
    }
    require(r == inst.rows.size(), tag + ": row walk out of step");
  }
}

// ---- randomized small-model generator for the instance oracle ----

// Emits a model document plus a compliant bounds document. Structure is
// drawn from the rng: set count and sizes, an optional two-dimensional
// variable, an optional scalar parameter, constraint templates, senses
// and relations. Set sizes stay at most 5.
struct GeneratedCase {
  std::string model_json;
  std::string bounds_json;
};

GeneratedCase random_small_model(SplitMix64& rng, int index) {
  const char* set_names[] = {"I", "J", "K"};
  const char* index_vars[] = {"i", "j", "k"};
  int num_sets = static_cast<int>(rng.uniform_int(1, 3));
  std::vector<long long> set_hi;
  for (int s = 0; s < num_sets; ++s) set_hi.push_back(rng.uniform_int(2, 5));

  bool with_z = rng.uniform_int(0, 1) == 1;
  int z_second = with_z ? static_cast<int>(rng.uniform_int(0, num_sets - 1)) : 0;
  bool with_q = rng.uniform_int(0, 1) == 1;
  bool r_float = rng.uniform_int(0, 1) == 1;

  ordered_json model;
  model["id"] = 1000 + index;
  model["title"] = "Generated case " + std::to_string(index);
  model["description"] = "randomized small model for the instance oracle";
  model["category"] = ordered_json::array({"Generated"});

  ordered_json sets = ordered_json::array();
  for (int s = 0; s < num_sets; ++s)
    sets.push_back({{"name", set_names[s]}, {"description", "generated set"}});

  std::string i0 = index_vars[0];
  std::string s0 = set_names[0];
  std::string sz = set_names[z_second];
  std::string iz = with_z && z_second == 0 ? "j" : index_vars[z_second];
  std::string dom_x = "{" + i0 + " <in> " + s0 + "}";
  std::string dom_z = "{" + i0 + " <in> " + s0 + ", " + iz + " <in> " + sz + "}";

  ordered_json params = ordered_json::array();
  params.push_back({{"name", "w"},
                    {"description", "weight of element `i`"},
                    {"domain", dom_x}});
  if (with_q) params.push_back({{"name", "q"}, {"description", "capacity"}});
  if (with_z)
    params.push_back({{"name", "r"},
                      {"description", "pair cost"},
                      {"domain", dom_z}});

  ordered_json vars = ordered_json::array();
  const char* x_type = rng.uniform_int(0, 1) == 1 ? "integer" : "continuous";
  vars.push_back({{"name", "x"},
                  {"description", "level of element `i`"},
                  {"domain", dom_x},
                  {"type", x_type}});
  if (with_z)
    vars.push_back({{"name", "z"},
                    {"description", "pair choice"},
                    {"domain", dom_z},
                    {"type", "binary"}});

  std::string obj_fn;
  if (with_z && rng.uniform_int(0, 1) == 1) {
    obj_fn = "<sum>_{" + i0 + " <in> " + s0 + "} <sum>_{" + iz + " <in> " + sz +
             "} r_{" + i0 + "," + iz + "} * z_{" + i0 + "," + iz + "}";
  } else {
    obj_fn = "<sum>_{" + i0 + " <in> " + s0 + "} w_{" + i0 + "} * x_{" + i0 + "}";
  }
  ordered_json objectives = ordered_json::array();
  objectives.push_back({{"name", "Obj"},
                        {"description", "generated objective"},
                        {"sense", rng.uniform_int(0, 1) == 1 ? "min" : "max"},
                        {"function", obj_fn}});

  // Constraint templates over the generated symbols. All linear.
  struct Template {
    bool has_domain;
    std::string domain;
    std::string function;
  };
  std::vector<Template> pool;
  pool.push_back({true, dom_x, "x_{" + i0 + "} <= w_{" + i0 + "}"});
  pool.push_back({false, "", "<sum>_{" + i0 + " <in> " + s0 + "} x_{" + i0 + "} >= 1"});
  if (with_q)
    pool.push_back({false, "",
                    "<sum>_{" + i0 + " <in> " + s0 + "} w_{" + i0 + "} * x_{" +
                        i0 + "} <= q"});
  if (with_z) {
    pool.push_back({true, dom_x,
                    "<sum>_{" + iz + " <in> " + sz + "} z_{" + i0 + "," + iz +
                        "} = x_{" + i0 + "}"});
    pool.push_back({true, "{" + iz + " <in> " + sz + "}",
                    "<sum>_{" + i0 + " <in> " + s0 + "} z_{" + i0 + "," + iz +
                        "} <= 3"});
  }

  int num_cons = static_cast<int>(rng.uniform_int(1, 4));
  ordered_json constraints = ordered_json::array();
  for (int c = 0; c < num_cons; ++c) {
    const Template& t = pool[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
    ordered_json con = {{"name", "C" + std::to_string(c + 1)},
                        {"description", "generated constraint"}};
    if (t.has_domain) con["domain"] = t.domain;
    con["function"] = t.function;
    constraints.push_back(con);
  }

  model["model"] = {{"set", sets},
                    {"parameter", params},
                    {"variable", vars},
                    {"objective", objectives},
                    {"constraint", constraints}};

  // Matching bounds: one entry per set and parameter, all-null hyper
  // entries (no ranged sets), distinct parameter pairs with small gaps.
  std::ostringstream bounds;
  bounds << R"({"set": [)";
  for (int s = 0; s < num_sets; ++s)
    bounds << (s ? ", " : "") << "[1, " << set_hi[static_cast<std::size_t>(s)] << "]";
  bounds << R"(], "hyper-parameter": [)";
  for (int s = 0; s < num_sets; ++s) bounds << (s ? ", " : "") << "[null, null]";
  bounds << R"(], "parameter": [[1, 6])";
  std::vector<std::string> types{"integer"};
  if (with_q) {
    bounds << ", [2, 9]";
    types.push_back("integer");
  }
  if (with_z) {
    bounds << (r_float ? ", [0.5, 8.5]" : ", [3, 12]");
    types.push_back(r_float ? "float" : "integer");
  }
  bounds << R"(], "parameter_types": [)";
  for (std::size_t t = 0; t < types.size(); ++t)
    bounds << (t ? ", " : "") << '"' << types[t] << '"';
  bounds << "]}";

  return {model.dump(), bounds.str()};
}

// Zeroes the wall-clock latencies so two runs of the same script can be
// compared as serialized bytes.
std::string scrubbed_outcome_json(GenerationOutcome outcome) {
  for (auto& it : outcome.iterations) it.latency = std::chrono::milliseconds{0};
  return outcome_json(outcome);
}

std::string format3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// ---- criteria ----

std::string run_corpus_parse() {
  auto t0 = std::chrono::steady_clock::now();
  ModelSpec bp = load_model_file(corpus_path("binpacking"));
  require(bp.sets.size() == 1, "binpacking set count");
  require(bp.parameters.size() == 2, "binpacking parameter count");
  require(bp.variables.size() == 2, "binpacking variable count");
  require(bp.variables[0].type == VarType::binary &&
              bp.variables[1].type == VarType::binary,
          "binpacking variables must both be binary");
  require(bp.objectives.size() == 1, "binpacking objective count");
  require(bp.objectives[0].sense == Sense::min, "binpacking objective sense");
  require(bp.constraints.size() == 2, "binpacking constraint count");

  int files = 0;
  for (const auto& entry :
       std::filesystem::directory_iterator(kRepoDir + "/data/complexor")) {
    if (entry.path().extension() != ".json") continue;
    ++files;
    std::string once = serialize_model(load_model_file(entry.path().string()));
    std::string twice = serialize_model(load_model(once));
    require(once == twice,
            "render/reparse fixpoint broken for " + entry.path().filename().string());
  }
  require(files >= 5, "corpus has fewer than 5 model files");

  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0)
                .count();
  require(ms < 1000, "corpus pass took " + std::to_string(ms) + " ms");
  std::ostringstream out;
  out << "binpacking counts exact; " << files
      << " corpus files reach the render/reparse fixpoint in " << ms << " ms";
  return out.str();
}

std::string run_rule_fixtures() {
  const auto& fixtures = mlprompt::testing::rule_fixtures();
  require(fixtures.size() >= 30,
          "only " + std::to_string(fixtures.size()) + " fixtures");

  std::map<std::string, ModelSpec> models;
  std::set<std::string> names;
  for (const auto& f : fixtures) {
    names.insert(f.name);
    auto [it, fresh] = models.try_emplace(f.model);
    if (fresh) it->second = mlprompt::testing::fixture_model(f.model, kRepoDir);
    ValidationReport report = check(it->second, load_bounds(f.bounds));
    std::vector<RuleId> got = violated_rules(report);
    if (got != f.expect) {
      std::ostringstream msg;
      msg << "fixture " << f.name << " expected {";
      for (RuleId r : f.expect) msg << " " << to_string(r);
      msg << " } got {";
      for (RuleId r : got) msg << " " << to_string(r);
      msg << " }";
      throw CheckFailure(msg.str());
    }
    require(report.compliant() == f.expect.empty(),
            std::string("compliance flag disagrees for ") + f.name);
  }

  // The boundary cases the suite must contain, by name.
  for (const char* needed : {"bp_gap_exactly_15", "bp_gap_15_000001",
                             "bp_hyper_half_null", "bp_mixed_endpoints"})
    require(names.count(needed) == 1, std::string("missing boundary fixture ") + needed);
  auto expect_of = [&](const std::string& name) {
    for (const auto& f : fixtures)
      if (name == f.name) return f.expect;
    return std::vector<RuleId>{};
  };
  require(expect_of("bp_gap_exactly_15").empty(), "gap of exactly 15 must pass");
  require(expect_of("bp_gap_15_000001") == std::vector<RuleId>{RuleId::r8},
          "gap of 15.000001 must fail rule 8 alone");
  require(expect_of("bp_hyper_half_null") == std::vector<RuleId>{RuleId::r4},
          "[null, 7] hyper bound must fail rule 4 alone");
  auto mixed = expect_of("bp_mixed_endpoints");
  require(std::count(mixed.begin(), mixed.end(), RuleId::r7) == 1,
          "mixed int/float endpoint must fail rule 7");

  return std::to_string(fixtures.size()) +
         " labeled fixtures reproduced exactly, boundary cases included";
}

std::string run_scoring() {
  // Ten reports with per-rule accuracies 0.9 (rule 4), 0.8 (rule 7),
  // 0.7 (rule 8).
  std::vector<ValidationReport> reports;
  for (int i = 0; i < 10; ++i) {
    ValidationReport r;
    for (RuleId rule : checkable_rules()) r.per_rule[rule] = true;
    if (i < 1) r.per_rule[RuleId::r4] = false;
    if (i < 2) r.per_rule[RuleId::r7] = false;
    if (i < 3) r.per_rule[RuleId::r8] = false;
    reports.push_back(r);
  }

  RuleScore score = score_rules(reports);
  require(score.n == 10, "batch size miscounted");
  require(score.r4 == 0.9 && score.r7 == 0.8 && score.r8 == 0.7,
          "per-rule accuracies off");
  require(std::fabs(score.final_score - 0.8) <= 1e-12,
          "final score " + std::to_string(score.final_score));
  require(format3(score.final_score) == "0.800",
          "final score does not print as 0.800");

  double first = score.final_score;
  std::mt19937 gen(20250819);
  for (int trial = 0; trial < 100; ++trial) {
    std::shuffle(reports.begin(), reports.end(), gen);
    RuleScore again = score_rules(reports);
    require(again.final_score == first, "score changed under permutation");
  }
  return "accuracies (0.9, 0.8, 0.7) score 0.800; invariant over 100 shuffles";
}

std::string run_loop_convergence() {
  ModelSpec model = load_model_file(corpus_path("binpacking"));
  const TranslationTable& table = TranslationTable::builtin();
  const std::string zh = table.text(RuleId::r8, "zh");
  const std::string en = table.text(RuleId::r8, "en");

  auto run_once = [&] {
    ScriptedBackend backend;
    backend.expect_any(kGap17);
    backend.expect(
        [&](const std::string& prompt) {
          return prompt.find(zh) != std::string::npos &&
                 prompt.find(en) == std::string::npos;
        },
        kCompliant, "rule 8 swapped to Mandarin");
    PromptPlan plan = default_plan(Strategy::ml_replace, table);
    GenerationOutcome outcome = run_generation(model, plan, backend, LoopOptions{});
    require(backend.remaining() == 0, "script not fully consumed");
    require(outcome.status == LoopStatus::compliant, "run did not converge");
    require(outcome.backend_calls == 2, "expected exactly 2 backend calls");
    require(outcome.iterations.size() == 2, "expected exactly 2 iterations");
    std::vector<RuleId> diff =
        changed_rules(outcome.iterations[0].plan, outcome.iterations[1].plan);
    require(diff == std::vector<RuleId>{RuleId::r8},
            "plan diff must touch rule 8 alone");
    return scrubbed_outcome_json(outcome);
  };

  std::string first = run_once();
  for (int rep = 1; rep < 10; ++rep)
    require(run_once() == first, "outcome differs on repetition " + std::to_string(rep));
  return "violating run converges in 2 calls with a rule-8-only rewrite, 10/10 identical";
}

std::string run_call_counts() {
  ModelSpec model = load_model_file(corpus_path("binpacking"));
  LoopOptions options;

  ScriptedBackend sc;
  for (int i = 0; i < 6; ++i) sc.expect_any(kCompliant);
  GenerationOutcome sc_out = run_strategy(model, Strategy::sc, sc, options);
  require(sc_out.backend_calls == 6 && sc.remaining() == 0,
          "self-consistency with 5 samples must make exactly 6 calls, made " +
              std::to_string(sc_out.backend_calls));

  ScriptedBackend tot;
  tot.expect_any("[[1, 5]]")
      .expect_any("[[null, null]]")
      .expect_any("[[1, 10], [12, 20]]")
      .expect_any("['integer', 'integer']");
  GenerationOutcome tot_out = run_strategy(model, Strategy::tot, tot, options);
  require(tot_out.backend_calls == 4 && tot.remaining() == 0,
          "stepwise build must make exactly 4 calls, one per output key, made " +
              std::to_string(tot_out.backend_calls));
  require(tot_out.status == LoopStatus::compliant, "merged stepwise answer not compliant");

  ScriptedBackend ml;
  ml.expect_any(kGap17).expect_any(kGap17).expect_any(kCompliant);
  GenerationOutcome ml_out = run_strategy(model, Strategy::ml_replace, ml, options);
  require(ml_out.backend_calls <= 3,
          "rewrite loop exceeded its budget of 3 calls");
  require(ml_out.status == LoopStatus::compliant, "rewrite loop did not converge");

  return "self-consistency 6 calls, stepwise 4, rewrite loop " +
         std::to_string(ml_out.backend_calls) + " <= budget 3";
}

std::string run_instance_oracle() {
  auto t0 = std::chrono::steady_clock::now();

  // Binpacking with the item set pinned to 3 elements: 3 + 9 columns,
  // 3 + 3 rows.
  ModelSpec bp = load_model_file(corpus_path("binpacking"));
  BoundsSpec pinned = load_bounds(
      R"({"set": [[3, 3]], "hyper-parameter": [[null, null]], "parameter": [[1, 10], [12, 20]], "parameter_types": ["integer", "integer"]})");
  RealizedData bp_data = sample_data(bp, pinned, 7);
  require(bp_data.set_elements.at("I").size() == 3, "item set not pinned to 3");
  MIPInstance bp_inst = build_instance(bp, bp_data);
  require(bp_inst.n == 12, "binpacking with 3 items must have n = 12");
  require(bp_inst.m == 6, "binpacking with 3 items must have m = 6");
  check_against_oracle(bp, bp_data, bp_inst, 99, 100, "binpacking_3");

  SplitMix64 gen_rng(20250819);
  for (int g = 0; g < 50; ++g) {
    GeneratedCase gc = random_small_model(gen_rng, g);
    std::string tag = "generated_" + std::to_string(g);
    ModelSpec model = load_model(gc.model_json);
    BoundsSpec bounds = load_bounds(gc.bounds_json);
    require(check(model, bounds).compliant(), tag + ": generated bounds not compliant");
    RealizedData data = sample_data(model, bounds, 1000 + static_cast<std::uint64_t>(g));
    MIPInstance inst = build_instance(model, data);
    check_against_oracle(model, data, inst, 31 + static_cast<std::uint64_t>(g), 100, tag);
  }

  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0)
                .count();
  require(ms < 30000, "oracle pass took " + std::to_string(ms) + " ms");
  std::ostringstream out;
  out << "50 generated models + pinned binpacking match the enumeration oracle"
      << " and 100-assignment row products in " << ms << " ms";
  return out.str();
}

std::string run_sampling_bounds() {
  struct Fixture {
    const char* stem;
    const char* bounds;
  };
  const Fixture fixtures[] = {
      {"binpacking", kCompliant},
      {"knapsack",
       R"({"set": [[1, 9]], "hyper-parameter": [[3, 6]], "parameter": [[0.5, 3.5], [2, 6], [10, 14]], "parameter_types": ["float", "integer", "integer"]})"},
  };

  long long checked_cells = 0;
  for (const Fixture& fx : fixtures) {
    ModelSpec model = load_model_file(corpus_path(fx.stem));
    BoundsSpec bounds = load_bounds(fx.bounds);
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
      RealizedData data = sample_data(model, bounds, seed);
      for (std::size_t k = 0; k < model.parameters.size(); ++k) {
        const Bound& b = bounds.parameter.at(k);
        double lb = b.lo->to_double();
        double ub = b.hi->to_double();
        bool integer = bounds.parameter_types.at(k) == "integer";
        for (const auto& [cell, value] :
             data.param_values.at(model.parameters[k].name)) {
          ++checked_cells;
          require(value >= lb, std::string(fx.stem) + ": sample below lower bound");
          require(value < ub, std::string(fx.stem) + ": sample reached upper bound " +
                                  std::to_string(value));
          if (integer)
            require(value == std::floor(value),
                    std::string(fx.stem) + ": integer cell drew " + std::to_string(value));
        }
      }
    }

    RealizedData a = sample_data(model, bounds, 424242);
    RealizedData b = sample_data(model, bounds, 424242);
    require(realized_data_json(a) == realized_data_json(b),
            std::string(fx.stem) + ": same-seed data not byte-identical");
    require(emit_lp(build_instance(model, a)) == emit_lp(build_instance(model, b)),
            std::string(fx.stem) + ": same-seed instances emit different bytes");
  }

  return std::to_string(checked_cells) +
         " sampled cells respect half-open bounds; same-seed data and emitted"
         " files byte-identical";
}

std::string run_output_extraction() {
  const auto& fixtures = mlprompt::testing::extract_fixtures();
  require(fixtures.size() >= 20,
          "only " + std::to_string(fixtures.size()) + " extraction fixtures");
  for (const auto& f : fixtures) {
    if (f.expected == nullptr) {
      try {
        extract_json(f.input);
        throw CheckFailure(std::string("fixture ") + f.name +
                           " should not extract");
      } catch (const ExtractError&) {
      }
    } else {
      std::string got = extract_json(f.input);
      require(got == f.expected, std::string("fixture ") + f.name +
                                     " extracted wrong bytes: " + got);
    }
  }
  return std::to_string(fixtures.size()) +
         " raw outputs classified correctly, numeric literals byte-preserved";
}

std::string run_sql_evaluation() {
  SqlTask task = load_sql_task(kRepoDir + "/data/sql/pets_1.json");
  auto dir = fresh_dir("sql");
  task.database_path = (dir / "pets_1.sqlite").string();
  ensure_database(task);
  std::uint64_t before = fnv1a_file(task.database_path);

  ScriptedBackend gold;
  for (int i = 0; i < 20; ++i) gold.expect_any(task.gold_sql);
  SqlEvalResult good = error_rate(task, gold, SqlRuleSet::defaults(), 20);
  require(good.runs.size() == 20, "gold batch did not run 20 times");
  require(good.rate == 0.0,
          "gold query error rate " + format3(good.rate) + " (want 0.000)");

  ScriptedBackend malformed;
  for (int i = 0; i < 20; ++i)
    malformed.expect_any("I cannot help with that request.");
  SqlEvalResult bad = error_rate(task, malformed, SqlRuleSet::defaults(), 20);
  require(bad.rate == 1.0,
          "malformed output error rate " + format3(bad.rate) + " (want 1.000)");

  require(fnv1a_file(task.database_path) == before,
          "database bytes changed during evaluation");
  std::filesystem::remove_all(dir);
  return "gold backend scores 0.00 over 20 runs, malformed 1.00, database untouched";
}

std::string run_live_smoke() {
  const char* base_url = std::getenv("MLPROMPT_BASE_URL");
  if (base_url == nullptr || *base_url == '\0')
    return "skipped: no live backend configured (set MLPROMPT_BASE_URL to enable)";

  HttpBackendConfig config;
  config.base_url = base_url;
  HttpBackend backend(config);

  ExperimentPlan plan;
  plan.dataset_dir = kRepoDir + "/data/complexor";
  plan.backends = {backend.id()};
  plan.strategies = {Strategy::ml_replace};
  plan.languages = {"zh"};
  plan.runs_per_problem = 1;
  if (const char* model = std::getenv("MLPROMPT_MODEL"); model && *model)
    plan.model_name = model;

  auto dir = fresh_dir("live");
  std::map<std::string, Backend*> backends{{backend.id(), &backend}};
  std::vector<RunRecord> records = run_experiment(plan, backends, dir.string());
  require(records.size() >= 5, "expected at least 5 problem cells");
  for (const RunRecord& rec : records) {
    require(!rec.outcome.iterations.empty(),
            rec.problem_id + ": no transcript recorded");
    require(!rec.outcome.iterations[0].prompt.empty(),
            rec.problem_id + ": empty prompt in transcript");
  }
  std::string table = render_report(summarize(records), ReportFormat::markdown);
  require(table.find("| strategy | language |") != std::string::npos,
          "report header missing");
  return "live grid over " + std::to_string(records.size()) +
         " cells completed with full transcripts; results in " + dir.string();
}

}  // namespace

int main() {
  criterion(1, "corpus parse", run_corpus_parse);
  criterion(2, "rule fixtures", run_rule_fixtures);
  criterion(3, "scoring", run_scoring);
  criterion(4, "loop convergence", run_loop_convergence);
  criterion(5, "strategy call counts", run_call_counts);
  criterion(6, "instance oracle", run_instance_oracle);
  criterion(7, "sampling bounds", run_sampling_bounds);
  criterion(8, "output extraction", run_output_extraction);
  criterion(9, "sql evaluation", run_sql_evaluation);
  criterion(10, "live smoke", run_live_smoke);

  if (g_failures == 0) {
    std::printf("acceptance: all 10 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d of 10 criteria failed\n", g_failures);
  return 1;
}
