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

#ifndef MLPROMPT_INSTANCE_HPP
#define MLPROMPT_INSTANCE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mlprompt/expr.hpp"
#include "mlprompt/model.hpp"

namespace mlprompt {

/// Concrete data drawn inside a bounds document: the elements of every
/// set, a value for every symbolic range endpoint, and one number per
/// parameter cell. Scalars live under the empty index tuple.
struct RealizedData {
  std::map<std::string, std::vector<long long>> set_elements;
  std::map<std::string, long long> hyper_values;
  std::map<std::string, std::map<IndexAssignment, double>> param_values;
  std::uint64_t seed = 0;

  bool operator==(const RealizedData&) const = default;
};

/// Draws data for a model from a validated bounds document. The draw is
/// a pure function of (model, bounds, seed): sets in declaration order,
/// then parameters in declaration order, cells in domain-expansion
/// order.
///
/// Per set: a ranged set [L, T] resolves each symbolic endpoint to an
/// integer drawn uniformly (inclusive on both ends) from that set's
/// hyper-parameter bounds, and takes elements L..T. A set without a
/// range draws its cardinality the same way from its set bounds and
/// takes elements lb..lb+card-1, so set bounds read as an index range
/// that may start anywhere; its hyper-parameter entry is [null, null]
/// by rule and nothing is drawn from it.
///
/// Per parameter, the half-open reading of bounds [lb, ub): integers
/// uniform over {lb..ub-1}, floats uniform over [lb, ub).
///
/// Throws StructureError when the bounds fail the rule check, when a
/// realized set comes out empty, or when an integer has to be drawn
/// from a window that contains none.
RealizedData sample_data(const ModelSpec& model, const BoundsSpec& bounds,
                         std::uint64_t seed);

/// Audit form of the data: one JSON object with stable key order, so
/// equal data always dumps to equal bytes.
std::string realized_data_json(const RealizedData& data);

/// evaluate()-ready view of the realized data: set contents plus one
/// value per parameter cell and per hyper symbol. Variable values are
/// the caller's to add.
EvalEnv realized_env(const ModelSpec& model, const RealizedData& data);

/// One linear row: coefficients by variable index, all keys < n.
struct MIPRow {
  std::string name;
  std::map<int, double> coeffs;
  RelOp relation = RelOp::le;
  double rhs = 0.0;
};

/// Matrix form of one instance: optimize c.x subject to the rows, with
/// x bounded below by var_lb (above by var_ub where present) and the
/// integrality indices constrained to integers. Binary variables carry
/// bounds [0, 1] and appear in integrality.
struct MIPInstance {
  int n = 0;
  int m = 0;
  std::vector<double> c;
  double objective_constant = 0.0;
  std::vector<MIPRow> rows;
  std::vector<int> integrality;  // ascending
  std::vector<std::string> var_names;
  std::vector<double> var_lb;
  std::vector<std::optional<double>> var_ub;  // nullopt: unbounded above
  Sense sense = Sense::min;
};

/// Expands the symbolic model against realized data. Variables unroll
/// in declaration order, each over its domain in expansion order, and
/// that flat order defines the column indices. One row per constraint
/// per domain assignment, same ordering. Coefficients come from the
/// linear structure of each expression with sums expanded; a product or
/// quotient of two variable-carrying terms throws StructureError naming
/// the offending constraint or objective.
MIPInstance build_instance(const ModelSpec& model, const RealizedData& data);

/// CPLEX-LP-format text for an instance. Deterministic: equal instances
/// emit equal bytes, numbers are rounded to 6 decimals, and names are
/// sanitized to LP-legal identifiers (made unique if sanitizing
/// collides). Sections appear only when non-empty.
std::string emit_lp(const MIPInstance& instance);

}  // namespace mlprompt

#endif  // MLPROMPT_INSTANCE_HPP
