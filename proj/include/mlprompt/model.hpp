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

#ifndef MLPROMPT_MODEL_HPP
#define MLPROMPT_MODEL_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mlprompt/decimal.hpp"
#include "mlprompt/expr.hpp"

namespace mlprompt {

/// A set range endpoint: either a literal integer or the name of the
/// hyper-parameter that decides it at instantiation time.
using RangeEndpoint = std::variant<long long, std::string>;

struct SetRange {
  RangeEndpoint lo;
  RangeEndpoint hi;

  bool operator==(const SetRange&) const = default;
};

struct SetDef {
  std::string name;
  std::string description;
  std::optional<SetRange> range;
};

struct ParamDef {
  std::string name;
  std::string description;
  std::vector<DomainBinding> domain;  // empty means scalar
};

enum class VarType { binary, integer, continuous };

std::string_view to_string(VarType type);

struct VarDef {
  std::string name;
  std::string description;
  std::vector<DomainBinding> domain;
  VarType type;
};

enum class Sense { min, max };

std::string_view to_string(Sense sense);

struct ObjectiveDef {
  std::string name;
  std::string description;
  Sense sense;
  ExprPtr function;  // plain arithmetic, never a relation
};

struct ConstraintDef {
  std::string name;
  std::string description;
  std::vector<DomainBinding> domain;  // empty means a single constraint
  ExprPtr function;                   // always a relation at the root
};

/// In-memory form of one model file. Declaration order is preserved
/// everywhere; it is what aligns the bound lists with the model.
struct ModelSpec {
  long long id = 0;
  std::string title;
  std::string description;
  std::vector<std::string> category;
  std::vector<SetDef> sets;
  std::vector<ParamDef> parameters;
  std::vector<VarDef> variables;
  std::vector<ObjectiveDef> objectives;
  std::vector<ConstraintDef> constraints;
  std::vector<std::string> warnings;  // unknown keys, collected not fatal

  /// Names introduced by symbolic range endpoints, in first-use order.
  /// Functions may reference these as scalars.
  std::vector<std::string> hyper_parameter_names() const;
};

/// Parses and validates a model document.
///
/// Malformed JSON throws ParseError with the byte offset. A document
/// that is valid JSON but breaks the schema throws StructureError. A
/// function or domain that names an unknown symbol, or uses one with
/// the wrong subscript count, throws ResolutionError.
ModelSpec load_model(const std::string& json_text);

ModelSpec load_model_file(const std::string& path);

/// Canonical JSON for a model. load_model(serialize_model(m)) is
/// structurally equal to m.
std::string serialize_model(const ModelSpec& spec);

bool structurally_equal(const ModelSpec& a, const ModelSpec& b);

/// One [lb, ub] pair from a bounds document. nullopt encodes JSON null;
/// the rule checkers decide what nulls mean, loading does not.
struct Bound {
  std::optional<Decimal> lo;
  std::optional<Decimal> hi;

  bool operator==(const Bound&) const = default;
};

/// The bounds document a generator must produce: element ranges per set,
/// a hyper-parameter range per set (aligned positionally), a range per
/// declared parameter, and one type tag per parameter.
struct BoundsSpec {
  std::vector<Bound> set;
  std::vector<Bound> hyper_parameter;
  std::vector<Bound> parameter;
  std::vector<std::string> parameter_types;

  bool operator==(const BoundsSpec&) const = default;
};

/// Parses a bounds document. The format is deliberately rigid: a single
/// object with exactly the keys 'set', 'hyper-parameter', 'parameter',
/// 'parameter_types' in that order, bound lists holding [lb, ub] pairs
/// of numbers or nulls, and types holding strings. Anything else throws
/// ParseError. Numbers are kept exact; no double round-trip.
BoundsSpec load_bounds(const std::string& json_text);

/// Single-line canonical form; load_bounds(serialize_bounds(b)) == b.
std::string serialize_bounds(const BoundsSpec& bounds);

}  // namespace mlprompt

#endif  // MLPROMPT_MODEL_HPP
