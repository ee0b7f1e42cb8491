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

#ifndef MLPROMPT_RULES_HPP
#define MLPROMPT_RULES_HPP

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mlprompt/model.hpp"

namespace mlprompt {

/// The nine prompt rules. R1 and R6 define terms and sampling semantics;
/// they have no checker. The other seven are validated mechanically.
enum class RuleId { r1 = 1, r2, r3, r4, r5, r6, r7, r8, r9 };

std::string_view to_string(RuleId id);
RuleId rule_from_int(int n);
RuleId rule_from_string(std::string_view name);  // accepts "R4", "r4", "4"

/// Rules with a checker, ascending: R2 R3 R4 R5 R7 R8 R9.
const std::vector<RuleId>& checkable_rules();

/// Rules whose accuracy enters the final score: R4 R7 R8.
const std::vector<RuleId>& scored_rules();

struct Violation {
  RuleId rule;
  std::string message;
  std::string location;  // e.g. "parameter[2]", "hyper-parameter"
};

struct RuleOptions {
  /// Distinct [lb, ub] pairs required across P parameter bounds, as a
  /// fraction of P rounded up. Checked only when P >= 2.
  double diversity_fraction = 0.5;
};

struct ValidationReport {
  bool json_valid = true;
  std::map<RuleId, bool> per_rule;  // one entry per checkable rule
  std::vector<Violation> violations;

  /// Unchecked rules count as passed.
  bool passed(RuleId id) const;

  /// json_valid and every checked rule passed.
  bool compliant() const;
};

/// Runs every checkable rule against a loaded bounds document.
ValidationReport check(const ModelSpec& model, const BoundsSpec& bounds,
                       const RuleOptions& options = {});

/// Report for output that never became a bounds document: R9 is violated
/// and every checkable rule counts as failed, so invalid output scores
/// zero on the scored rules.
ValidationReport json_invalid_report(std::string_view reason);

/// Distinct violated rules, ascending. What the rewrite step consumes.
std::vector<RuleId> violated_rules(const ValidationReport& report);

/// Mean per-rule accuracy over a batch of reports. final_score is the
/// unweighted mean of the three scored-rule accuracies.
struct RuleScore {
  std::size_t n = 0;
  double r4 = 0.0;
  double r7 = 0.0;
  double r8 = 0.0;
  double final_score = 0.0;
};

RuleScore score_rules(const std::vector<ValidationReport>& reports);

std::string to_json(const ValidationReport& report);
ValidationReport report_from_json(const std::string& text);

}  // namespace mlprompt

#endif  // MLPROMPT_RULES_HPP
