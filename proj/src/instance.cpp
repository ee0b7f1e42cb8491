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

#include "mlprompt/instance.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <utility>

#include "json.hpp"
#include "mlprompt/errors.hpp"
#include "mlprompt/rng.hpp"
#include "mlprompt/rules.hpp"

namespace mlprompt {

namespace {

// Largest integer <= / smallest integer >= the exact decimal value. Set
// and hyper bounds are not forced to be integers by any rule, so the
// sampler narrows them to the integers they contain.
long long exact_floor(const Decimal& d) {
  if (d.is_integer()) return d.to_int64();
  Decimal::Mantissa p(1);
  for (int i = 0; i < d.scale(); ++i) p *= 10;
  Decimal::Mantissa q = d.mantissa() / p;
  if (d.mantissa() % p != 0 && d.mantissa() < 0) q -= 1;
  return q.convert_to<long long>();
}

long long exact_ceil(const Decimal& d) {
  if (d.is_integer()) return d.to_int64();
  Decimal::Mantissa p(1);
  for (int i = 0; i < d.scale(); ++i) p *= 10;
  Decimal::Mantissa q = d.mantissa() / p;
  if (d.mantissa() % p != 0 && d.mantissa() > 0) q += 1;
  return q.convert_to<long long>();
}

std::string pair_text(const Bound& b) {
  return "[" + (b.lo ? b.lo->to_string() : "null") + ", " +
         (b.hi ? b.hi->to_string() : "null") + "]";
}

// One inclusive integer draw out of a decimal bound pair.
long long draw_from_pair(SplitMix64& rng, const Bound& pair,
                         const std::string& what) {
  long long lo = exact_ceil(*pair.lo);
  long long hi = exact_floor(*pair.hi);
  if (lo > hi)
    throw StructureError(what + ": bounds " + pair_text(pair) +
                         " contain no integer");
  return rng.uniform_int(lo, hi);
}

long long resolve_endpoint(const RangeEndpoint& end, SplitMix64& rng,
                           const Bound& hyper_pair, RealizedData& data,
                           const std::string& set_name) {
  if (const auto* lit = std::get_if<long long>(&end)) return *lit;
  const std::string& name = std::get<std::string>(end);
  auto it = data.hyper_values.find(name);
  if (it != data.hyper_values.end()) return it->second;
  long long v =
      draw_from_pair(rng, hyper_pair, "hyper-parameter '" + name +
                                          "' of set '" + set_name + "'");
  data.hyper_values.emplace(name, v);
  return v;
}

}  // namespace

RealizedData sample_data(const ModelSpec& model, const BoundsSpec& bounds,
                         std::uint64_t seed) {
  ValidationReport report = check(model, bounds);
  if (!report.compliant()) {
    std::string msg = "bounds do not satisfy the generation rules";
    if (!report.violations.empty()) {
      const Violation& v = report.violations.front();
      msg += ": " + std::string(to_string(v.rule)) + " at " + v.location +
             ": " + v.message;
    }
    throw StructureError(msg);
  }

  SplitMix64 rng(seed);
  RealizedData data;
  data.seed = seed;

  for (std::size_t k = 0; k < model.sets.size(); ++k) {
    const SetDef& set = model.sets[k];
    long long first = 0;
    long long last = -1;
    if (set.range) {
      // The rule check guarantees numeric hyper bounds here. A literal
      // endpoint stands as written; a symbolic one is drawn once and
      // shared if another set names the same symbol.
      const Bound& hyper = bounds.hyper_parameter[k];
      first = resolve_endpoint(set.range->lo, rng, hyper, data, set.name);
      last = resolve_endpoint(set.range->hi, rng, hyper, data, set.name);
    } else {
      // No range: the set bounds give the index range. The low end is
      // the first index, and the cardinality is drawn from the pair.
      const Bound& pair = bounds.set[k];
      long long card = draw_from_pair(rng, pair, "set '" + set.name + "'");
      if (card < 1)
        throw StructureError("realized set '" + set.name +
                             "' is empty: drew cardinality " +
                             std::to_string(card) + " from " +
                             pair_text(pair));
      first = exact_ceil(*pair.lo);
      last = first + card - 1;
    }
    if (last < first)
      throw StructureError("realized set '" + set.name +
                           "' is empty: range [" + std::to_string(first) +
                           ", " + std::to_string(last) + "]");
    std::vector<long long> elements;
    elements.reserve(static_cast<std::size_t>(last - first + 1));
    for (long long e = first; e <= last; ++e) elements.push_back(e);
    data.set_elements.emplace(set.name, std::move(elements));
  }

  for (std::size_t k = 0; k < model.parameters.size(); ++k) {
    const ParamDef& param = model.parameters[k];
    const Bound& pair = bounds.parameter[k];
    const std::string& type = bounds.parameter_types[k];
    std::map<IndexAssignment, double> tensor;
    // lb is included, ub is not: integers draw from {lb..ub-1}, floats
    // from [lb, ub). Rule 8 guarantees lb < ub so neither is empty.
    for (const IndexAssignment& cell :
         expand_domain(param.domain, data.set_elements)) {
      double v = 0.0;
      if (type == "integer") {
        v = static_cast<double>(
            rng.uniform_int(pair.lo->to_int64(), pair.hi->to_int64() - 1));
      } else {
        double lo = pair.lo->to_double();
        double hi = pair.hi->to_double();
        v = lo + rng.uniform_double() * (hi - lo);
        if (v >= hi) v = std::nextafter(hi, lo);
      }
      tensor.emplace(cell, v);
    }
    data.param_values.emplace(param.name, std::move(tensor));
  }
  return data;
}

std::string realized_data_json(const RealizedData& data) {
  nlohmann::json j;
  j["seed"] = data.seed;
  j["set_elements"] = nlohmann::json::object();
  for (const auto& [name, elements] : data.set_elements)
    j["set_elements"][name] = elements;
  j["hyper_values"] = nlohmann::json::object();
  for (const auto& [name, value] : data.hyper_values)
    j["hyper_values"][name] = value;
  j["param_values"] = nlohmann::json::object();
  for (const auto& [name, tensor] : data.param_values) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& [index, value] : tensor)
      cells.push_back({{"index", index}, {"value", value}});
    j["param_values"][name] = std::move(cells);
  }
  return j.dump(2);
}

EvalEnv realized_env(const ModelSpec& model, const RealizedData& data) {
  EvalEnv env;
  env.set_elements = data.set_elements;
  for (const std::string& name : model.hyper_parameter_names()) {
    auto it = data.hyper_values.find(name);
    if (it != data.hyper_values.end())
      env.values[SymbolKey{name, {}}] = static_cast<double>(it->second);
  }
  for (const auto& [name, tensor] : data.param_values)
    for (const auto& [index, value] : tensor)
      env.values[SymbolKey{name, index}] = value;
  return env;
}

namespace {

// Linear view of a subexpression: sum of coeff * variable plus a
// constant. The only forms that fail are genuine non-linearities.
struct LinExpr {
  std::map<int, double> coeffs;
  double constant = 0.0;

  void add(const LinExpr& other, double scale) {
    constant += scale * other.constant;
    for (const auto& [idx, c] : other.coeffs) coeffs[idx] += scale * c;
  }
};

class Linearizer {
 public:
  Linearizer(const ModelSpec& model, const RealizedData& data,
             const std::map<SymbolKey, int>& var_index)
      : model_(model), data_(data), var_index_(var_index) {
    for (const auto& p : model.parameters) params_.insert(p.name);
    for (const auto& v : model.variables) vars_.insert(v.name);
    for (const auto& s : model.sets) sets_.insert(s.name);
    for (const auto& h : model.hyper_parameter_names()) hypers_.insert(h);
  }

  // scope carries the host constraint's domain assignment; where names
  // the constraint or objective for error messages.
  LinExpr run(const Expr& e, const std::string& where) {
    where_ = &where;
    return lin(e);
  }

  std::vector<std::pair<std::string, long long>> scope;

 private:
  LinExpr lin(const Expr& e) {
    LinExpr out;
    if (const auto* num = e.get_if<NumberLit>()) {
      out.constant = num->value;
    } else if (const auto* sym = e.get_if<SymbolRef>()) {
      out = lin_symbol(*sym);
    } else if (const auto* neg = e.get_if<Neg>()) {
      out.add(lin(*neg->child), -1.0);
    } else if (const auto* sum = e.get_if<Sum>()) {
      for (const IndexAssignment& a :
           expand_domain(sum->bindings, data_.set_elements)) {
        for (std::size_t d = 0; d < sum->bindings.size(); ++d)
          scope.emplace_back(sum->bindings[d].index_var, a[d]);
        out.add(lin(*sum->body), 1.0);
        scope.resize(scope.size() - sum->bindings.size());
      }
    } else if (const auto* arith = e.get_if<Arith>()) {
      LinExpr lhs = lin(*arith->lhs);
      LinExpr rhs = lin(*arith->rhs);
      switch (arith->op) {
        case '+':
          out = std::move(lhs);
          out.add(rhs, 1.0);
          break;
        case '-':
          out = std::move(lhs);
          out.add(rhs, -1.0);
          break;
        case '*':
          if (!lhs.coeffs.empty() && !rhs.coeffs.empty())
            throw StructureError(*where_ +
                                 ": product of two variable terms is not "
                                 "linear");
          if (lhs.coeffs.empty()) {
            out.add(rhs, lhs.constant);
          } else {
            out.add(lhs, rhs.constant);
          }
          break;
        default:  // '/'
          if (!rhs.coeffs.empty())
            throw StructureError(*where_ +
                                 ": division by a variable term is not "
                                 "linear");
          if (rhs.constant == 0.0)
            throw EvalError("division by zero in " + *where_);
          out.add(lhs, 1.0 / rhs.constant);
      }
    } else {
      throw StructureError(*where_ + ": unexpected nested relation");
    }
    return out;
  }

  LinExpr lin_symbol(const SymbolRef& ref) {
    SymbolKey key{ref.name, {}};
    key.subscripts.reserve(ref.subscripts.size());
    for (const std::string& sub : ref.subscripts) {
      auto bound = lookup_index(sub);
      if (!bound)
        throw EvalError("unbound index variable '" + sub + "' in " +
                        ref.name);
      key.subscripts.push_back(*bound);
    }
    LinExpr out;
    if (ref.subscripts.empty()) {
      if (auto bound = lookup_index(ref.name)) {
        out.constant = static_cast<double>(*bound);
        return out;
      }
    }
    if (vars_.count(ref.name)) {
      auto it = var_index_.find(key);
      if (it == var_index_.end())
        throw EvalError("variable instance " + key.to_string() +
                        " is outside the realized domain");
      out.coeffs[it->second] = 1.0;
      return out;
    }
    if (params_.count(ref.name)) {
      const auto& tensor = data_.param_values.at(ref.name);
      auto it = tensor.find(key.subscripts);
      if (it == tensor.end())
        throw EvalError("no sampled value for " + key.to_string());
      out.constant = it->second;
      return out;
    }
    if (hypers_.count(ref.name)) {
      auto it = data_.hyper_values.find(ref.name);
      if (it == data_.hyper_values.end())
        throw EvalError("no sampled value for hyper-parameter '" +
                        ref.name + "'");
      out.constant = static_cast<double>(it->second);
      return out;
    }
    if (sets_.count(ref.name))
      throw EvalError("set '" + ref.name + "' used as a numeric value");
    throw EvalError("missing value for symbol " + key.to_string());
  }

  std::optional<long long> lookup_index(const std::string& name) const {
    for (auto it = scope.rbegin(); it != scope.rend(); ++it)
      if (it->first == name) return it->second;
    return std::nullopt;
  }

  const ModelSpec& model_;
  const RealizedData& data_;
  const std::map<SymbolKey, int>& var_index_;
  std::set<std::string> params_, vars_, sets_, hypers_;
  const std::string* where_ = nullptr;
};

}  // namespace

MIPInstance build_instance(const ModelSpec& model, const RealizedData& data) {
  for (const SetDef& set : model.sets) {
    auto it = data.set_elements.find(set.name);
    if (it == data.set_elements.end() || it->second.empty())
      throw StructureError("data has no elements for set '" + set.name +
                           "'");
  }

  MIPInstance inst;
  std::map<SymbolKey, int> var_index;
  for (const VarDef& var : model.variables) {
    for (const IndexAssignment& a :
         expand_domain(var.domain, data.set_elements)) {
      SymbolKey key{var.name, a};
      int idx = static_cast<int>(inst.var_names.size());
      var_index.emplace(std::move(key), idx);
      inst.var_names.push_back(SymbolKey{var.name, a}.to_string());
      bool binary = var.type == VarType::binary;
      inst.var_lb.push_back(0.0);
      inst.var_ub.push_back(binary ? std::optional<double>(1.0)
                                   : std::nullopt);
      if (var.type != VarType::continuous) inst.integrality.push_back(idx);
    }
  }
  inst.n = static_cast<int>(inst.var_names.size());

  if (model.objectives.empty())
    throw StructureError("model declares no objective");
  if (model.objectives.size() > 1)
    throw StructureError("model declares " +
                         std::to_string(model.objectives.size()) +
                         " objectives; only one is supported");

  Linearizer lz(model, data, var_index);
  const ObjectiveDef& obj = model.objectives.front();
  LinExpr c = lz.run(*obj.function, "objective '" + obj.name + "'");
  inst.sense = obj.sense;
  inst.c.assign(static_cast<std::size_t>(inst.n), 0.0);
  for (const auto& [idx, coef] : c.coeffs)
    inst.c[static_cast<std::size_t>(idx)] = coef;
  inst.objective_constant = c.constant;

  for (const ConstraintDef& con : model.constraints) {
    const auto* rel = con.function->get_if<Relation>();
    if (!rel)
      throw StructureError("constraint '" + con.name +
                           "' is not a relation");
    std::string where = "constraint '" + con.name + "'";
    for (const IndexAssignment& a :
         expand_domain(con.domain, data.set_elements)) {
      lz.scope.clear();
      for (std::size_t d = 0; d < con.domain.size(); ++d)
        lz.scope.emplace_back(con.domain[d].index_var, a[d]);
      LinExpr lhs = lz.run(*rel->lhs, where);
      LinExpr rhs = lz.run(*rel->rhs, where);
      lhs.add(rhs, -1.0);

      MIPRow row;
      row.name = con.name;
      for (long long v : a) row.name += "_" + std::to_string(v);
      for (const auto& [idx, coef] : lhs.coeffs)
        if (coef != 0.0) row.coeffs.emplace(idx, coef);
      row.relation = rel->op;
      row.rhs = -lhs.constant;
      inst.rows.push_back(std::move(row));
    }
    lz.scope.clear();
  }
  inst.m = static_cast<int>(inst.rows.size());
  return inst;
}

namespace {

// 6-decimal rounding with minimal digits: "2", "2.5", "-0.333333".
std::string lp_number(double v) {
  double r = std::round(v * 1e6) / 1e6;
  if (r == 0.0) r = 0.0;  // normalize -0
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", r);
  std::string s(buf);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

// LP identifiers: word characters only, must not start with a digit, a
// period, or an e/E that a parser could read as an exponent.
std::string lp_identifier(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (char ch : raw) {
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_') {
      out += ch;
    } else if (ch == ']' || ch == ')') {
      continue;  // closing brackets vanish so x[1,2] reads as x_1_2
    } else {
      out += '_';
    }
  }
  if (out.empty()) out = "v";
  bool exponent_like =
      (out[0] == 'e' || out[0] == 'E') && out.size() > 1 &&
      std::isdigit(static_cast<unsigned char>(out[1]));
  if (std::isdigit(static_cast<unsigned char>(out[0])) || out[0] == '.' ||
      exponent_like)
    out = "v_" + out;
  return out;
}

void append_terms(std::string& line, const std::map<int, double>& coeffs,
                  const std::vector<std::string>& names) {
  bool first = true;
  for (const auto& [idx, coef] : coeffs) {
    double r = std::round(coef * 1e6) / 1e6;
    if (r == 0.0) continue;
    double mag = std::fabs(r);
    if (first) {
      line += " ";
      if (r < 0) line += "-";
      first = false;
    } else {
      line += r < 0 ? " - " : " + ";
    }
    if (mag != 1.0) line += lp_number(mag) + " ";
    line += names[static_cast<std::size_t>(idx)];
  }
  if (first) line += " 0";
}

std::string_view relation_text(RelOp op) {
  switch (op) {
    case RelOp::le: return "<=";
    case RelOp::ge: return ">=";
    default: return "=";
  }
}

}  // namespace

std::string emit_lp(const MIPInstance& inst) {
  // Sanitize names up front, forcing uniqueness so two distinct columns
  // can never alias after cleanup.
  std::vector<std::string> names;
  names.reserve(inst.var_names.size());
  std::set<std::string> taken;
  for (const std::string& raw : inst.var_names) {
    std::string name = lp_identifier(raw);
    std::string candidate = name;
    for (int k = 2; taken.count(candidate); ++k)
      candidate = name + "_" + std::to_string(k);
    taken.insert(candidate);
    names.push_back(std::move(candidate));
  }

  std::string out;
  out += inst.sense == Sense::min ? "Minimize\n" : "Maximize\n";
  std::string obj_line = " obj:";
  std::map<int, double> obj_coeffs;
  for (int i = 0; i < inst.n; ++i)
    if (inst.c[static_cast<std::size_t>(i)] != 0.0)
      obj_coeffs.emplace(i, inst.c[static_cast<std::size_t>(i)]);
  append_terms(obj_line, obj_coeffs, names);
  if (inst.objective_constant != 0.0) {
    double k = inst.objective_constant;
    obj_line += k < 0 ? " - " : " + ";
    obj_line += lp_number(std::fabs(k));
  }
  out += obj_line + "\n";

  if (!inst.rows.empty()) {
    out += "Subject To\n";
    std::set<std::string> row_taken;
    for (const MIPRow& row : inst.rows) {
      std::string name = lp_identifier(row.name);
      std::string candidate = name;
      for (int k = 2; row_taken.count(candidate); ++k)
        candidate = name + "_" + std::to_string(k);
      row_taken.insert(candidate);
      std::string line = " " + candidate + ":";
      if (row.coeffs.empty() && inst.n > 0) {
        // A degenerate all-constant row still has to parse as a row.
        line += " 0 " + names[0];
      } else {
        append_terms(line, row.coeffs, names);
      }
      line += " ";
      line += relation_text(row.relation);
      line += " " + lp_number(row.rhs);
      out += line + "\n";
    }
  }

  std::string bounds_section;
  for (int i = 0; i < inst.n; ++i) {
    double lb = inst.var_lb[static_cast<std::size_t>(i)];
    const auto& ub = inst.var_ub[static_cast<std::size_t>(i)];
    if (lb == 0.0 && !ub) continue;  // the LP default, nothing to say
    std::string line = " " + lp_number(lb) + " <= " +
                       names[static_cast<std::size_t>(i)];
    if (ub) line += " <= " + lp_number(*ub);
    bounds_section += line + "\n";
  }
  if (!bounds_section.empty()) out += "Bounds\n" + bounds_section;

  std::string binaries, generals;
  for (int idx : inst.integrality) {
    const auto& ub = inst.var_ub[static_cast<std::size_t>(idx)];
    bool binary = inst.var_lb[static_cast<std::size_t>(idx)] == 0.0 && ub &&
                  *ub == 1.0;
    std::string& section = binary ? binaries : generals;
    section += " " + names[static_cast<std::size_t>(idx)];
  }
  if (!generals.empty()) out += "Generals\n" + generals + "\n";
  if (!binaries.empty()) out += "Binaries\n" + binaries + "\n";
  out += "End\n";
  return out;
}

}  // namespace mlprompt
