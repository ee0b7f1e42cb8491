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

#ifndef MLPROMPT_EXPR_HPP
#define MLPROMPT_EXPR_HPP

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mlprompt {

/// One index binding of a domain, e.g. the `i <in> I` of "{i <in> I}".
struct DomainBinding {
  std::string index_var;
  std::string set_name;

  bool operator==(const DomainBinding&) const = default;
};

enum class RelOp { le, ge, eq };

std::string_view to_string(RelOp op);

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct NumberLit {
  double value;
};

/// A reference like `c`, `s_{i}` or `x_{i,j}`; subscripts name index
/// variables bound by an enclosing sum or the host constraint's domain.
struct SymbolRef {
  std::string name;
  std::vector<std::string> subscripts;
};

struct Sum {
  std::vector<DomainBinding> bindings;
  ExprPtr body;
};

struct Arith {
  char op;  // one of + - * /
  ExprPtr lhs;
  ExprPtr rhs;
};

struct Relation {
  RelOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};

struct Neg {
  ExprPtr child;
};

/// Immutable expression tree for the model mini-language. Relations only
/// ever appear at the root (constraint functions); objectives are plain
/// arithmetic.
class Expr {
 public:
  using Node = std::variant<NumberLit, SymbolRef, Sum, Arith, Relation, Neg>;

  explicit Expr(Node node) : node_(std::move(node)) {}
  const Node& node() const { return node_; }

  template <class T>
  const T* get_if() const {
    return std::get_if<T>(&node_);
  }

  static ExprPtr make(Node node) {
    return std::make_shared<const Expr>(std::move(node));
  }

 private:
  Node node_;
};

bool structurally_equal(const Expr& a, const Expr& b);
inline bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
  return structurally_equal(*a, *b);
}

/// Parses a domain string such as "{i <in> I, j <in> I}".
std::vector<DomainBinding> parse_domain(std::string_view text);

/// Parses a function string. A `<sum>_{...}` captures the maximal
/// multiplicative term that follows it; `* /` bind tighter than `+ -`;
/// a relation may only appear once, at the top level.
ExprPtr parse_expr(std::string_view text);

/// Surface syntax of an AST, in the exact notation the model files use.
/// parse_expr(render(e)) is structurally equal to e.
std::string render(const Expr& e);
inline std::string render(const ExprPtr& e) { return render(*e); }
std::string render(const std::vector<DomainBinding>& bindings);

/// One concrete choice of element per binding, in binding order.
using IndexAssignment = std::vector<long long>;

/// Cartesian product of the bindings' sets, first binding most
/// significant. No bindings yields a single empty assignment.
std::vector<IndexAssignment> expand_domain(
    const std::vector<DomainBinding>& bindings,
    const std::map<std::string, std::vector<long long>>& set_elements);

/// Key of a concrete symbol instance: a bare name or a name plus the
/// element values its subscripts resolved to.
struct SymbolKey {
  std::string name;
  std::vector<long long> subscripts;

  bool operator==(const SymbolKey&) const = default;
  auto operator<=>(const SymbolKey&) const = default;
  std::string to_string() const;
};

/// Everything evaluate() may look up: set contents for sums, and a value
/// per concrete symbol instance.
struct EvalEnv {
  std::map<std::string, std::vector<long long>> set_elements;
  std::map<SymbolKey, double> values;
};

/// Numeric evaluation. Sums iterate their expanded domain; a bare symbol
/// naming an in-scope index variable evaluates to that index's value.
/// Throws EvalError on a missing symbol, division by zero, or a relation
/// node (relations are checks, not values).
double evaluate(const Expr& e, const EvalEnv& env);
inline double evaluate(const ExprPtr& e, const EvalEnv& env) {
  return evaluate(*e, env);
}

}  // namespace mlprompt

#endif  // MLPROMPT_EXPR_HPP
