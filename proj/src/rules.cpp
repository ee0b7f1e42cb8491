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

#include "mlprompt/rules.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "mlprompt/errors.hpp"

namespace mlprompt {

std::string_view to_string(RuleId id) {
  static const char* names[] = {"R1", "R2", "R3", "R4", "R5",
                                "R6", "R7", "R8", "R9"};
  return names[static_cast<int>(id) - 1];
}

RuleId rule_from_int(int n) {
  if (n < 1 || n > 9)
    throw ConfigError("rule number out of range: " + std::to_string(n));
  return static_cast<RuleId>(n);
}

RuleId rule_from_string(std::string_view name) {
  std::string_view digits = name;
  if (!digits.empty() && (digits[0] == 'R' || digits[0] == 'r'))
    digits.remove_prefix(1);
  if (digits.size() == 1 && digits[0] >= '1' && digits[0] <= '9')
    return rule_from_int(digits[0] - '0');
  throw ConfigError("not a rule name: '" + std::string(name) + "'");
}

const std::vector<RuleId>& checkable_rules() {
  static const std::vector<RuleId> rules = {
      RuleId::r2, RuleId::r3, RuleId::r4, RuleId::r5,
      RuleId::r7, RuleId::r8, RuleId::r9};
  return rules;
}

const std::vector<RuleId>& scored_rules() {
  static const std::vector<RuleId> rules = {RuleId::r4, RuleId::r7,
                                            RuleId::r8};
  return rules;
}

bool ValidationReport::passed(RuleId id) const {
  auto it = per_rule.find(id);
  return it == per_rule.end() || it->second;
}

bool ValidationReport::compliant() const {
  if (!json_valid) return false;
  return std::all_of(per_rule.begin(), per_rule.end(),
                     [](const auto& kv) { return kv.second; });
}

namespace {

struct Checker {
  ValidationReport report;

  void violate(RuleId rule, std::string message, std::string location) {
    report.per_rule[rule] = false;
    report.violations.push_back(
        {rule, std::move(message), std::move(location)});
  }
};

std::string bound_text(const Bound& b) {
  return "[" + (b.lo ? b.lo->to_string() : "null") + ", " +
         (b.hi ? b.hi->to_string() : "null") + "]";
}

}  // namespace

ValidationReport check(const ModelSpec& model, const BoundsSpec& bounds,
                       const RuleOptions& options) {
  Checker c;
  c.report.json_valid = true;
  for (RuleId rule : checkable_rules()) c.report.per_rule[rule] = true;

  const std::size_t n_sets = model.sets.size();
  const std::size_t n_params = model.parameters.size();

  // R2: one set bound and one hyper-parameter bound per set.
  if (bounds.set.size() != n_sets)
    c.violate(RuleId::r2,
              "expected " + std::to_string(n_sets) + " set bounds, got " +
                  std::to_string(bounds.set.size()),
              "set");
  if (bounds.hyper_parameter.size() != n_sets)
    c.violate(RuleId::r2,
              "expected " + std::to_string(n_sets) +
                  " hyper-parameter bounds, got " +
                  std::to_string(bounds.hyper_parameter.size()),
              "hyper-parameter");

  // R3 and R5: every set needs an [lb, ub] pair of actual numbers. R3 is
  // about listing the pairs in order, R5 about them not being null; a
  // null endpoint breaks both.
  for (std::size_t k = 0; k < bounds.set.size(); ++k) {
    const Bound& b = bounds.set[k];
    if (b.lo && b.hi) continue;
    std::string loc = "set[" + std::to_string(k) + "]";
    c.violate(RuleId::r3,
              "set bounds must list [lb, ub] for every set in order, got " +
                  bound_text(b),
              loc);
    c.violate(RuleId::r5,
              "the bounds of a set must be numbers, not null, got " +
                  bound_text(b),
              loc);
  }

  // R4: hyper-parameter bounds mirror the sets positionally. A set
  // without a range takes [null, null]; a ranged set takes numbers.
  if (bounds.hyper_parameter.size() != n_sets) {
    c.violate(RuleId::r4,
              "hyper-parameter bounds cannot be aligned with the model's "
              "sets",
              "hyper-parameter");
  } else {
    for (std::size_t k = 0; k < n_sets; ++k) {
      const Bound& b = bounds.hyper_parameter[k];
      const SetDef& set = model.sets[k];
      std::string loc = "hyper-parameter[" + std::to_string(k) + "]";
      if (set.range) {
        if (!b.lo || !b.hi)
          c.violate(RuleId::r4,
                    "set '" + set.name +
                        "' has a range, so its hyper-parameter needs "
                        "numeric bounds, got " +
                        bound_text(b),
                    loc);
      } else {
        if (b.lo || b.hi)
          c.violate(RuleId::r4,
                    "set '" + set.name +
                        "' has no range, so its hyper-parameter must be "
                        "[null, null], got " +
                        bound_text(b),
                    loc);
      }
    }
  }

  // R7: one type per parameter, in order, coherent with the bounds.
  if (bounds.parameter_types.size() != n_params)
    c.violate(RuleId::r7,
              "expected " + std::to_string(n_params) +
                  " parameter types, got " +
                  std::to_string(bounds.parameter_types.size()),
              "parameter_types");
  if (bounds.parameter.size() != n_params)
    c.violate(RuleId::r7,
              "expected " + std::to_string(n_params) +
                  " parameter bounds, got " +
                  std::to_string(bounds.parameter.size()),
              "parameter");
  for (std::size_t k = 0; k < bounds.parameter_types.size(); ++k) {
    const std::string& type = bounds.parameter_types[k];
    if (type != "integer" && type != "float")
      c.violate(RuleId::r7,
                "unknown parameter type '" + type +
                    "' (must be integer or float)",
                "parameter_types[" + std::to_string(k) + "]");
  }
  std::size_t typed =
      std::min(bounds.parameter_types.size(), bounds.parameter.size());
  for (std::size_t k = 0; k < typed; ++k) {
    const Bound& b = bounds.parameter[k];
    const std::string& type = bounds.parameter_types[k];
    std::string loc = "parameter[" + std::to_string(k) + "]";
    if (!b.lo || !b.hi) {
      c.violate(RuleId::r7,
                "parameter bounds must be numbers to carry a type, got " +
                    bound_text(b),
                loc);
      continue;
    }
    bool lo_int = b.lo->is_integer();
    bool hi_int = b.hi->is_integer();
    if (lo_int != hi_int) {
      c.violate(RuleId::r7,
                "lb and ub must both be integers or both be float, got " +
                    bound_text(b),
                loc);
    } else if (type == "integer" && !lo_int) {
      // Integer bounds under a float type are fine; every integer is a
      // valid float. The reverse direction is the incoherence.
      c.violate(RuleId::r7,
                "type says integer but the bounds " + bound_text(b) +
                    " are fractional",
                loc);
    }
  }

  // R8: per-parameter gap at most 15, lb strictly below ub, and the
  // pairs must not all repeat.
  static const Decimal kGapLimit(15);
  for (std::size_t k = 0; k < bounds.parameter.size(); ++k) {
    const Bound& b = bounds.parameter[k];
    if (!b.lo || !b.hi) continue;  // R7 owns null endpoints
    std::string loc = "parameter[" + std::to_string(k) + "]";
    if (!(*b.lo < *b.hi)) {
      c.violate(RuleId::r8, "ub must exceed lb, got " + bound_text(b), loc);
    } else if (*b.hi - *b.lo > kGapLimit) {
      c.violate(RuleId::r8,
                "ub - lb must be <= 15, got " + (*b.hi - *b.lo).to_string() +
                    " in " + bound_text(b),
                loc);
    }
  }
  const std::size_t pairs = bounds.parameter.size();
  if (pairs >= 2) {
    std::set<std::string> distinct;
    for (const Bound& b : bounds.parameter) distinct.insert(bound_text(b));
    auto needed = static_cast<std::size_t>(
        std::ceil(static_cast<double>(pairs) * options.diversity_fraction));
    if (distinct.size() < needed)
      c.violate(RuleId::r8,
                "bounds are not diversified: only " +
                    std::to_string(distinct.size()) + " distinct [lb, ub] " +
                    "pairs across " + std::to_string(pairs) + " parameters",
                "parameter");
  }

  // R9: the document loaded, so the format was followed.
  return std::move(c.report);
}

ValidationReport json_invalid_report(std::string_view reason) {
  ValidationReport report;
  report.json_valid = false;
  for (RuleId rule : checkable_rules()) report.per_rule[rule] = false;
  report.violations.push_back(
      {RuleId::r9,
       "output is not a valid bounds document: " + std::string(reason),
       "document"});
  return report;
}

std::vector<RuleId> violated_rules(const ValidationReport& report) {
  std::set<RuleId> rules;
  for (const auto& v : report.violations) rules.insert(v.rule);
  for (const auto& [rule, ok] : report.per_rule)
    if (!ok) rules.insert(rule);
  return {rules.begin(), rules.end()};
}

RuleScore score_rules(const std::vector<ValidationReport>& reports) {
  if (reports.empty()) throw ConfigError("no reports to score");
  std::size_t c4 = 0;
  std::size_t c7 = 0;
  std::size_t c8 = 0;
  for (const auto& r : reports) {
    if (r.passed(RuleId::r4)) ++c4;
    if (r.passed(RuleId::r7)) ++c7;
    if (r.passed(RuleId::r8)) ++c8;
  }
  RuleScore score;
  score.n = reports.size();
  const double n = static_cast<double>(reports.size());
  score.r4 = static_cast<double>(c4) / n;
  score.r7 = static_cast<double>(c7) / n;
  score.r8 = static_cast<double>(c8) / n;
  // Single division keeps the mean exact when the counts allow it.
  score.final_score = static_cast<double>(c4 + c7 + c8) / (3.0 * n);
  return score;
}

std::string to_json(const ValidationReport& report) {
  nlohmann::ordered_json j;
  j["json_valid"] = report.json_valid;
  nlohmann::ordered_json rules;
  for (const auto& [rule, ok] : report.per_rule)
    rules[std::string(to_string(rule))] = ok;
  j["rules"] = std::move(rules);
  nlohmann::ordered_json violations = nlohmann::ordered_json::array();
  for (const auto& v : report.violations) {
    nlohmann::ordered_json item;
    item["rule"] = std::string(to_string(v.rule));
    item["message"] = v.message;
    item["location"] = v.location;
    violations.push_back(std::move(item));
  }
  j["violations"] = std::move(violations);
  return j.dump();
}

ValidationReport report_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("bad report JSON: ") + e.what(), e.byte);
  }
  ValidationReport report;
  try {
    report.json_valid = j.at("json_valid").get<bool>();
    for (const auto& [name, ok] : j.at("rules").items())
      report.per_rule[rule_from_string(name)] = ok.get<bool>();
    for (const auto& item : j.at("violations")) {
      Violation v;
      v.rule = rule_from_string(item.at("rule").get<std::string>());
      v.message = item.at("message").get<std::string>();
      v.location = item.at("location").get<std::string>();
      report.violations.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    throw StructureError(std::string("bad report JSON: ") + e.what());
  }
  return report;
}

}  // namespace mlprompt
