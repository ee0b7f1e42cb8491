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

#include "mlprompt/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <type_traits>
#include <utility>

#include "mlprompt/errors.hpp"

namespace mlprompt {

std::string_view to_string(RelOp op) {
  switch (op) {
    case RelOp::le: return "<=";
    case RelOp::ge: return ">=";
    case RelOp::eq: return "=";
  }
  return "?";
}

namespace {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

enum class Tok {
  ident, number, sum, in, rel_le, rel_ge, rel_eq,
  plus, minus, star, slash, lparen, rparen, lbrace, rbrace,
  comma, underscore, end,
};

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> lex(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto fail = [&](const std::string& why) {
    throw ParseError(why, i);
  };
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (c == '<') {
      if (text.substr(i, 5) == "<sum>") {
        out.push_back({Tok::sum, "<sum>", start});
        i += 5;
      } else if (text.substr(i, 4) == "<in>") {
        out.push_back({Tok::in, "<in>", start});
        i += 4;
      } else if (text.substr(i, 2) == "<=") {
        out.push_back({Tok::rel_le, "<=", start});
        i += 2;
      } else {
        fail("unknown token starting with '<' (expected <sum>, <in> or <=)");
      }
      continue;
    }
    if (c == '>') {
      if (text.substr(i, 2) == ">=") {
        out.push_back({Tok::rel_ge, ">=", start});
        i += 2;
      } else {
        fail("unknown token '>' (did you mean '>=')");
      }
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < text.size() &&
             std::isalnum(static_cast<unsigned char>(text[j])))
        ++j;
      out.push_back({Tok::ident, std::string(text.substr(i, j - i)), start});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[j])))
        ++j;
      if (j < text.size() && text[j] == '.') {
        ++j;
        if (j >= text.size() ||
            !std::isdigit(static_cast<unsigned char>(text[j])))
          fail("digits required after decimal point");
        while (j < text.size() &&
               std::isdigit(static_cast<unsigned char>(text[j])))
          ++j;
      }
      out.push_back({Tok::number, std::string(text.substr(i, j - i)), start});
      i = j;
      continue;
    }
    switch (c) {
      case '=': out.push_back({Tok::rel_eq, "=", start}); break;
      case '+': out.push_back({Tok::plus, "+", start}); break;
      case '-': out.push_back({Tok::minus, "-", start}); break;
      case '*': out.push_back({Tok::star, "*", start}); break;
      case '/': out.push_back({Tok::slash, "/", start}); break;
      case '(': out.push_back({Tok::lparen, "(", start}); break;
      case ')': out.push_back({Tok::rparen, ")", start}); break;
      case '{': out.push_back({Tok::lbrace, "{", start}); break;
      case '}': out.push_back({Tok::rbrace, "}", start}); break;
      case ',': out.push_back({Tok::comma, ",", start}); break;
      case '_': out.push_back({Tok::underscore, "_", start}); break;
      default:
        fail(std::string("unknown character '") + c + "'");
    }
    ++i;
  }
  out.push_back({Tok::end, "", text.size()});
  return out;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(lex(text)) {}

  const Token& peek() const { return tokens_[cursor_]; }

  Token next() { return tokens_[cursor_++]; }

  bool accept(Tok kind) {
    if (peek().kind == kind) {
      ++cursor_;
      return true;
    }
    return false;
  }

  Token expect(Tok kind, const std::string& what) {
    if (peek().kind != kind)
      throw ParseError("expected " + what + ", found '" + describe(peek()) +
                           "'",
                       peek().pos);
    return next();
  }

  void expect_end() {
    if (peek().kind != Tok::end)
      throw ParseError("trailing tokens starting at '" + describe(peek()) +
                           "'",
                       peek().pos);
  }

  std::vector<DomainBinding> parse_bindings() {
    std::vector<DomainBinding> out;
    do {
      Token var = expect(Tok::ident, "an index variable");
      expect(Tok::in, "'<in>'");
      Token set = expect(Tok::ident, "a set name");
      out.push_back({var.text, set.text});
    } while (accept(Tok::comma));
    return out;
  }

  std::vector<DomainBinding> parse_domain_string() {
    expect(Tok::lbrace, "'{'");
    auto bindings = parse_bindings();
    expect(Tok::rbrace, "'}'");
    expect_end();
    return bindings;
  }

  ExprPtr parse_root() {
    ExprPtr lhs = parse_additive();
    RelOp op;
    if (accept(Tok::rel_le))
      op = RelOp::le;
    else if (accept(Tok::rel_ge))
      op = RelOp::ge;
    else if (accept(Tok::rel_eq))
      op = RelOp::eq;
    else {
      expect_end();
      return lhs;
    }
    ExprPtr rhs = parse_additive();
    expect_end();
    return Expr::make(Relation{op, std::move(lhs), std::move(rhs)});
  }

 private:
  ExprPtr parse_additive() {
    ExprPtr lhs = parse_mult();
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      char op = next().kind == Tok::plus ? '+' : '-';
      lhs = Expr::make(Arith{op, std::move(lhs), parse_mult()});
    }
    return lhs;
  }

  ExprPtr parse_mult() {
    ExprPtr lhs = parse_unary();
    while (peek().kind == Tok::star || peek().kind == Tok::slash) {
      char op = next().kind == Tok::star ? '*' : '/';
      lhs = Expr::make(Arith{op, std::move(lhs), parse_unary()});
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (accept(Tok::minus)) return Expr::make(Neg{parse_unary()});
    return parse_primary();
  }

  ExprPtr parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::number: {
        Token tok = next();
        return Expr::make(NumberLit{std::strtod(tok.text.c_str(), nullptr)});
      }
      case Tok::lparen: {
        next();
        ExprPtr inner = parse_additive();
        expect(Tok::rparen, "')'");
        return inner;
      }
      case Tok::sum: {
        next();
        expect(Tok::underscore, "'_' after <sum>");
        expect(Tok::lbrace, "'{'");
        auto bindings = parse_bindings();
        expect(Tok::rbrace, "'}'");
        // The sum grabs the whole multiplicative term that follows.
        ExprPtr body = parse_mult();
        return Expr::make(Sum{std::move(bindings), std::move(body)});
      }
      case Tok::ident: {
        Token name = next();
        std::vector<std::string> subs;
        if (accept(Tok::underscore)) {
          expect(Tok::lbrace, "'{'");
          if (peek().kind == Tok::rbrace)
            throw ParseError("empty subscript list", peek().pos);
          do {
            if (peek().kind == Tok::number)
              throw ParseError(
                  "literal subscripts are not supported; subscripts must "
                  "name index variables",
                  peek().pos);
            subs.push_back(expect(Tok::ident, "an index variable").text);
          } while (accept(Tok::comma));
          expect(Tok::rbrace, "'}'");
        }
        return Expr::make(SymbolRef{name.text, std::move(subs)});
      }
      default:
        throw ParseError("expected an expression, found '" + describe(t) + "'",
                         t.pos);
    }
  }

  static std::string describe(const Token& t) {
    return t.kind == Tok::end ? "<end of input>" : t.text;
  }

  std::vector<Token> tokens_;
  std::size_t cursor_ = 0;
};

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

// Precedence ladder used by the minimal-parenthesis printer. Sum sits
// between additive and multiplicative on purpose: it binds whole
// multiplicative terms, so it must be wrapped when it is an operand of
// `*` or `/` but not of `+` or `-`.
constexpr int kPrecRelation = 0;
constexpr int kPrecAdditive = 10;
constexpr int kPrecSum = 15;
constexpr int kPrecMult = 20;
constexpr int kPrecNeg = 30;
constexpr int kPrecAtom = 40;

int precedence(const Expr& e) {
  return std::visit(
      [](const auto& n) -> int {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Relation>) return kPrecRelation;
        if constexpr (std::is_same_v<T, Arith>)
          return n.op == '+' || n.op == '-' ? kPrecAdditive : kPrecMult;
        if constexpr (std::is_same_v<T, Sum>) return kPrecSum;
        if constexpr (std::is_same_v<T, Neg>) return kPrecNeg;
        return kPrecAtom;
      },
      e.node());
}

std::string format_number(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  for (int digits = 15; digits <= 17; ++digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return "0";
}

std::string render_node(const Expr& e);

std::string render_child(const ExprPtr& child, int min_prec) {
  if (precedence(*child) < min_prec) return "(" + render_node(*child) + ")";
  return render_node(*child);
}

std::string render_node(const Expr& e) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, NumberLit>) {
          return format_number(n.value);
        } else if constexpr (std::is_same_v<T, SymbolRef>) {
          if (n.subscripts.empty()) return n.name;
          std::string out = n.name + "_{";
          for (std::size_t i = 0; i < n.subscripts.size(); ++i) {
            if (i) out += ",";
            out += n.subscripts[i];
          }
          return out + "}";
        } else if constexpr (std::is_same_v<T, Sum>) {
          return "<sum>_" + render(n.bindings) + " " +
                 render_child(n.body, kPrecSum);
        } else if constexpr (std::is_same_v<T, Arith>) {
          int p = n.op == '+' || n.op == '-' ? kPrecAdditive : kPrecMult;
          return render_child(n.lhs, p) + " " + n.op + " " +
                 render_child(n.rhs, p + 1);
        } else if constexpr (std::is_same_v<T, Relation>) {
          return render_child(n.lhs, kPrecRelation + 1) + " " +
                 std::string(to_string(n.op)) + " " +
                 render_child(n.rhs, kPrecRelation + 1);
        } else {  // Neg
          return "-" + render_child(n.child, kPrecNeg);
        }
      },
      e.node());
}

}  // namespace

std::vector<DomainBinding> parse_domain(std::string_view text) {
  return Parser(text).parse_domain_string();
}

ExprPtr parse_expr(std::string_view text) { return Parser(text).parse_root(); }

std::string render(const Expr& e) { return render_node(e); }

std::string render(const std::vector<DomainBinding>& bindings) {
  std::string out = "{";
  for (std::size_t i = 0; i < bindings.size(); ++i) {
    if (i) out += ", ";
    out += bindings[i].index_var + " <in> " + bindings[i].set_name;
  }
  return out + "}";
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node().index() != b.node().index()) return false;
  if (auto* x = a.get_if<NumberLit>())
    return x->value == b.get_if<NumberLit>()->value;
  if (auto* x = a.get_if<SymbolRef>()) {
    auto* y = b.get_if<SymbolRef>();
    return x->name == y->name && x->subscripts == y->subscripts;
  }
  if (auto* x = a.get_if<Sum>()) {
    auto* y = b.get_if<Sum>();
    return x->bindings == y->bindings && structurally_equal(x->body, y->body);
  }
  if (auto* x = a.get_if<Arith>()) {
    auto* y = b.get_if<Arith>();
    return x->op == y->op && structurally_equal(x->lhs, y->lhs) &&
           structurally_equal(x->rhs, y->rhs);
  }
  if (auto* x = a.get_if<Relation>()) {
    auto* y = b.get_if<Relation>();
    return x->op == y->op && structurally_equal(x->lhs, y->lhs) &&
           structurally_equal(x->rhs, y->rhs);
  }
  auto* x = a.get_if<Neg>();
  return structurally_equal(x->child, b.get_if<Neg>()->child);
}

std::vector<IndexAssignment> expand_domain(
    const std::vector<DomainBinding>& bindings,
    const std::map<std::string, std::vector<long long>>& set_elements) {
  std::vector<const std::vector<long long>*> axes;
  axes.reserve(bindings.size());
  for (const auto& b : bindings) {
    auto it = set_elements.find(b.set_name);
    if (it == set_elements.end())
      throw EvalError("unknown set '" + b.set_name + "' in domain " +
                      render(bindings));
    axes.push_back(&it->second);
  }
  std::vector<IndexAssignment> out;
  IndexAssignment current(bindings.size());
  // Odometer over the axes, first binding most significant.
  std::size_t total = 1;
  for (auto* axis : axes) {
    if (axis->empty()) return out;
    total *= axis->size();
  }
  out.reserve(total);
  std::vector<std::size_t> idx(bindings.size(), 0);
  for (std::size_t k = 0; k < total; ++k) {
    for (std::size_t d = 0; d < bindings.size(); ++d)
      current[d] = (*axes[d])[idx[d]];
    out.push_back(current);
    for (std::size_t d = bindings.size(); d-- > 0;) {
      if (++idx[d] < axes[d]->size()) break;
      idx[d] = 0;
    }
  }
  return out;
}

std::string SymbolKey::to_string() const {
  if (subscripts.empty()) return name;
  std::string out = name + "[";
  for (std::size_t i = 0; i < subscripts.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(subscripts[i]);
  }
  return out + "]";
}

namespace {

class Evaluator {
 public:
  explicit Evaluator(const EvalEnv& env) : env_(env) {}

  double eval(const Expr& e) {
    return std::visit(
        [this](const auto& n) -> double {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, NumberLit>) {
            return n.value;
          } else if constexpr (std::is_same_v<T, SymbolRef>) {
            return eval_symbol(n);
          } else if constexpr (std::is_same_v<T, Sum>) {
            return eval_sum(n);
          } else if constexpr (std::is_same_v<T, Arith>) {
            double a = eval(*n.lhs);
            double b = eval(*n.rhs);
            switch (n.op) {
              case '+': return a + b;
              case '-': return a - b;
              case '*': return a * b;
              default:
                if (b == 0.0) throw EvalError("division by zero");
                return a / b;
            }
          } else if constexpr (std::is_same_v<T, Relation>) {
            throw EvalError("a relation has no numeric value");
          } else {  // Neg
            return -eval(*n.child);
          }
        },
        e.node());
  }

 private:
  double eval_symbol(const SymbolRef& ref) {
    SymbolKey key{ref.name, {}};
    key.subscripts.reserve(ref.subscripts.size());
    for (const auto& sub : ref.subscripts) {
      auto bound = lookup_index(sub);
      if (!bound)
        throw EvalError("unbound index variable '" + sub + "' in " +
                        ref.name);
      key.subscripts.push_back(*bound);
    }
    if (ref.subscripts.empty()) {
      if (auto bound = lookup_index(ref.name))
        return static_cast<double>(*bound);
    }
    auto it = env_.values.find(key);
    if (it == env_.values.end())
      throw EvalError("missing value for symbol " + key.to_string());
    return it->second;
  }

  double eval_sum(const Sum& sum) {
    auto assignments = expand_domain(sum.bindings, env_.set_elements);
    double total = 0.0;
    for (const auto& assignment : assignments) {
      for (std::size_t d = 0; d < sum.bindings.size(); ++d)
        scope_.emplace_back(sum.bindings[d].index_var, assignment[d]);
      total += eval(*sum.body);
      scope_.resize(scope_.size() - sum.bindings.size());
    }
    return total;
  }

  std::optional<long long> lookup_index(const std::string& name) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (it->first == name) return it->second;
    return std::nullopt;
  }

  const EvalEnv& env_;
  std::vector<std::pair<std::string, long long>> scope_;
};

}  // namespace

double evaluate(const Expr& e, const EvalEnv& env) {
  return Evaluator(env).eval(e);
}

}  // namespace mlprompt
