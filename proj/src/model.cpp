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

#include "mlprompt/model.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mlprompt/errors.hpp"

namespace mlprompt {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(VarType type) {
  switch (type) {
    case VarType::binary: return "binary";
    case VarType::integer: return "integer";
    case VarType::continuous: return "continuous";
  }
  return "?";
}

std::string_view to_string(Sense sense) {
  return sense == Sense::min ? "min" : "max";
}

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0])))
    return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c);
  });
}

const ordered_json& require_key(const ordered_json& obj, const char* key,
                                const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw StructureError(where + ": missing key '" + key + "'");
  return *it;
}

std::string require_string(const ordered_json& obj, const char* key,
                           const std::string& where) {
  const auto& v = require_key(obj, key, where);
  if (!v.is_string())
    throw StructureError(where + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

void collect_unknown_keys(const ordered_json& obj,
                          std::initializer_list<const char*> allowed,
                          const std::string& where,
                          std::vector<std::string>& warnings) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = std::any_of(allowed.begin(), allowed.end(),
                             [&](const char* k) { return it.key() == k; });
    if (!known)
      warnings.push_back("unknown key '" + it.key() + "' at " + where);
  }
}

std::vector<DomainBinding> parse_domain_field(const ordered_json& obj,
                                              const std::string& where) {
  auto it = obj.find("domain");
  if (it == obj.end()) return {};
  if (!it->is_string())
    throw StructureError(where + ": 'domain' must be a string");
  try {
    return parse_domain(it->get<std::string>());
  } catch (const ParseError& e) {
    throw StructureError(where + ": bad domain: " + e.what());
  }
}

ExprPtr parse_function_field(const ordered_json& obj,
                             const std::string& where) {
  std::string text = require_string(obj, "function", where);
  try {
    return parse_expr(text);
  } catch (const ParseError& e) {
    throw StructureError(where + ": bad function: " + e.what());
  }
}

RangeEndpoint parse_range_endpoint(const ordered_json& v,
                                   const std::string& where) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_string()) {
    std::string name = v.get<std::string>();
    if (!is_identifier(name))
      throw StructureError(where + ": range endpoint '" + name +
                           "' is not a valid name");
    return name;
  }
  throw StructureError(where +
                       ": range endpoint must be an integer or a name");
}

// Declared symbols and their subscript arity. Sets are tracked so a set
// name used as a value can be reported precisely.
struct SymbolTable {
  enum class Kind { set, parameter, variable, hyper };

  void declare(const std::string& name, Kind kind, std::size_t arity,
               const std::string& where) {
    if (!entries.emplace(name, std::pair{kind, arity}).second)
      throw StructureError(where + ": duplicate symbol '" + name + "'");
  }

  std::map<std::string, std::pair<Kind, std::size_t>> entries;
};

void check_domain(const std::vector<DomainBinding>& bindings,
                  const SymbolTable& table, const std::string& context) {
  for (const auto& b : bindings) {
    auto it = table.entries.find(b.set_name);
    if (it == table.entries.end())
      throw ResolutionError(b.set_name, context);
    if (it->second.first != SymbolTable::Kind::set)
      throw StructureError(context + ": '" + b.set_name + "' is not a set");
  }
}

void check_function(const Expr& e, const SymbolTable& table,
                    std::vector<std::string>& scope,
                    const std::string& context) {
  if (auto* ref = e.get_if<SymbolRef>()) {
    bool in_scope =
        std::find(scope.begin(), scope.end(), ref->name) != scope.end();
    if (in_scope) {
      if (!ref->subscripts.empty())
        throw StructureError(context + ": index variable '" + ref->name +
                             "' cannot take subscripts");
    } else {
      auto it = table.entries.find(ref->name);
      if (it == table.entries.end())
        throw ResolutionError(ref->name, context);
      if (it->second.first == SymbolTable::Kind::set)
        throw StructureError(context + ": set '" + ref->name +
                             "' cannot be used as a value");
      if (it->second.second != ref->subscripts.size())
        throw StructureError(
            context + ": '" + ref->name + "' takes " +
            std::to_string(it->second.second) + " subscript(s), got " +
            std::to_string(ref->subscripts.size()));
    }
    for (const auto& sub : ref->subscripts) {
      if (std::find(scope.begin(), scope.end(), sub) == scope.end())
        throw ResolutionError(sub, context);
    }
    return;
  }
  if (auto* sum = e.get_if<Sum>()) {
    check_domain(sum->bindings, table, context);
    for (const auto& b : sum->bindings) scope.push_back(b.index_var);
    check_function(*sum->body, table, scope, context);
    scope.resize(scope.size() - sum->bindings.size());
    return;
  }
  if (auto* arith = e.get_if<Arith>()) {
    check_function(*arith->lhs, table, scope, context);
    check_function(*arith->rhs, table, scope, context);
    return;
  }
  if (auto* rel = e.get_if<Relation>()) {
    check_function(*rel->lhs, table, scope, context);
    check_function(*rel->rhs, table, scope, context);
    return;
  }
  if (auto* neg = e.get_if<Neg>()) {
    check_function(*neg->child, table, scope, context);
    return;
  }
}

const ordered_json* section(const ordered_json& model, const char* key,
                            const std::string& where) {
  auto it = model.find(key);
  if (it == model.end()) return nullptr;
  if (!it->is_array())
    throw StructureError(where + ": '" + key + "' must be an array");
  return &*it;
}

}  // namespace

std::vector<std::string> ModelSpec::hyper_parameter_names() const {
  std::vector<std::string> out;
  auto add = [&](const RangeEndpoint& e) {
    if (auto* name = std::get_if<std::string>(&e))
      if (std::find(out.begin(), out.end(), *name) == out.end())
        out.push_back(*name);
  };
  for (const auto& s : sets) {
    if (!s.range) continue;
    add(s.range->lo);
    add(s.range->hi);
  }
  return out;
}

ModelSpec load_model(const std::string& json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model document is not valid JSON: ") +
                         e.what(),
                     e.byte);
  }
  if (!doc.is_object())
    throw StructureError("model document must be a JSON object");

  ModelSpec spec;
  collect_unknown_keys(doc, {"id", "title", "description", "category",
                             "model"},
                       "document root", spec.warnings);

  const auto& id = require_key(doc, "id", "document root");
  if (!id.is_number_integer())
    throw StructureError("document root: 'id' must be an integer");
  spec.id = id.get<long long>();
  spec.title = require_string(doc, "title", "document root");
  spec.description = require_string(doc, "description", "document root");

  const auto& category = require_key(doc, "category", "document root");
  if (!category.is_array())
    throw StructureError("document root: 'category' must be an array");
  for (const auto& c : category) {
    if (!c.is_string())
      throw StructureError("document root: 'category' entries must be strings");
    spec.category.push_back(c.get<std::string>());
  }

  const auto& model = require_key(doc, "model", "document root");
  if (!model.is_object())
    throw StructureError("document root: 'model' must be an object");
  collect_unknown_keys(model, {"set", "parameter", "variable", "objective",
                               "constraint"},
                       "model", spec.warnings);

  if (const auto* sets = section(model, "set", "model")) {
    for (std::size_t i = 0; i < sets->size(); ++i) {
      std::string where = "model.set[" + std::to_string(i) + "]";
      const auto& item = (*sets)[i];
      if (!item.is_object())
        throw StructureError(where + ": must be an object");
      collect_unknown_keys(item, {"name", "description", "range"}, where,
                           spec.warnings);
      SetDef def;
      def.name = require_string(item, "name", where);
      def.description = require_string(item, "description", where);
      if (auto it = item.find("range"); it != item.end()) {
        if (!it->is_array() || it->size() != 2)
          throw StructureError(where +
                               ": 'range' must be a two-element array");
        def.range = SetRange{parse_range_endpoint((*it)[0], where),
                             parse_range_endpoint((*it)[1], where)};
      }
      spec.sets.push_back(std::move(def));
    }
  }

  if (const auto* params = section(model, "parameter", "model")) {
    for (std::size_t i = 0; i < params->size(); ++i) {
      std::string where = "model.parameter[" + std::to_string(i) + "]";
      const auto& item = (*params)[i];
      if (!item.is_object())
        throw StructureError(where + ": must be an object");
      collect_unknown_keys(item, {"name", "description", "domain"}, where,
                           spec.warnings);
      ParamDef def;
      def.name = require_string(item, "name", where);
      def.description = require_string(item, "description", where);
      def.domain = parse_domain_field(item, where);
      spec.parameters.push_back(std::move(def));
    }
  }

  if (const auto* vars = section(model, "variable", "model")) {
    for (std::size_t i = 0; i < vars->size(); ++i) {
      std::string where = "model.variable[" + std::to_string(i) + "]";
      const auto& item = (*vars)[i];
      if (!item.is_object())
        throw StructureError(where + ": must be an object");
      collect_unknown_keys(item, {"name", "description", "domain", "type"},
                           where, spec.warnings);
      VarDef def;
      def.name = require_string(item, "name", where);
      def.description = require_string(item, "description", where);
      def.domain = parse_domain_field(item, where);
      std::string type = require_string(item, "type", where);
      if (type == "binary")
        def.type = VarType::binary;
      else if (type == "integer")
        def.type = VarType::integer;
      else if (type == "continuous")
        def.type = VarType::continuous;
      else
        throw StructureError(where + ": unknown variable type '" + type +
                             "' (binary, integer or continuous)");
      spec.variables.push_back(std::move(def));
    }
  }

  if (const auto* objectives = section(model, "objective", "model")) {
    for (std::size_t i = 0; i < objectives->size(); ++i) {
      std::string where = "model.objective[" + std::to_string(i) + "]";
      const auto& item = (*objectives)[i];
      if (!item.is_object())
        throw StructureError(where + ": must be an object");
      collect_unknown_keys(item, {"name", "description", "sense", "function"},
                           where, spec.warnings);
      ObjectiveDef def;
      def.name = require_string(item, "name", where);
      def.description = require_string(item, "description", where);
      std::string sense = require_string(item, "sense", where);
      if (sense == "min")
        def.sense = Sense::min;
      else if (sense == "max")
        def.sense = Sense::max;
      else
        throw StructureError(where + ": sense must be 'min' or 'max'");
      def.function = parse_function_field(item, where);
      spec.objectives.push_back(std::move(def));
    }
  }

  if (const auto* constraints = section(model, "constraint", "model")) {
    for (std::size_t i = 0; i < constraints->size(); ++i) {
      std::string where = "model.constraint[" + std::to_string(i) + "]";
      const auto& item = (*constraints)[i];
      if (!item.is_object())
        throw StructureError(where + ": must be an object");
      collect_unknown_keys(item, {"name", "description", "domain", "function"},
                           where, spec.warnings);
      ConstraintDef def;
      def.name = require_string(item, "name", where);
      def.description = require_string(item, "description", where);
      def.domain = parse_domain_field(item, where);
      def.function = parse_function_field(item, where);
      spec.constraints.push_back(std::move(def));
    }
  }

  if (spec.objectives.empty())
    throw StructureError("model declares no objective");

  SymbolTable table;
  for (const auto& s : spec.sets)
    table.declare(s.name, SymbolTable::Kind::set, 0, "model.set");
  for (const auto& s : spec.sets) {
    if (!s.range) continue;
    for (const RangeEndpoint* e : {&s.range->lo, &s.range->hi}) {
      if (auto* name = std::get_if<std::string>(e)) {
        auto it = table.entries.find(*name);
        if (it != table.entries.end()) {
          if (it->second.first != SymbolTable::Kind::hyper)
            throw StructureError("set '" + s.name +
                                 "': range endpoint '" + *name +
                                 "' collides with another declaration");
          throw StructureError("set '" + s.name + "': hyper-parameter '" +
                               *name + "' is already used by another set");
        }
        table.declare(*name, SymbolTable::Kind::hyper, 0,
                      "set '" + s.name + "'");
      }
    }
  }
  for (const auto& p : spec.parameters)
    table.declare(p.name, SymbolTable::Kind::parameter, p.domain.size(),
                  "model.parameter");
  for (const auto& v : spec.variables)
    table.declare(v.name, SymbolTable::Kind::variable, v.domain.size(),
                  "model.variable");

  for (const auto& p : spec.parameters)
    check_domain(p.domain, table, "parameter '" + p.name + "'");
  for (const auto& v : spec.variables)
    check_domain(v.domain, table, "variable '" + v.name + "'");

  for (const auto& o : spec.objectives) {
    std::string context = "objective '" + o.name + "'";
    if (o.function->get_if<Relation>())
      throw StructureError(context + ": an objective cannot be a relation");
    std::vector<std::string> scope;
    check_function(*o.function, table, scope, context);
  }
  for (const auto& c : spec.constraints) {
    std::string context = "constraint '" + c.name + "'";
    check_domain(c.domain, table, context);
    if (!c.function->get_if<Relation>())
      throw StructureError(context +
                           ": a constraint must relate two sides with "
                           "<=, >= or =");
    std::vector<std::string> scope;
    for (const auto& b : c.domain) scope.push_back(b.index_var);
    check_function(*c.function, table, scope, context);
  }

  return spec;
}

ModelSpec load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_model(buf.str());
}

std::string serialize_model(const ModelSpec& spec) {
  ordered_json doc;
  doc["id"] = spec.id;
  doc["title"] = spec.title;
  doc["description"] = spec.description;
  doc["category"] = spec.category;

  ordered_json model;
  ordered_json sets = ordered_json::array();
  for (const auto& s : spec.sets) {
    ordered_json item;
    item["name"] = s.name;
    item["description"] = s.description;
    if (s.range) {
      ordered_json range = ordered_json::array();
      for (const RangeEndpoint* e : {&s.range->lo, &s.range->hi}) {
        if (auto* n = std::get_if<long long>(e))
          range.push_back(*n);
        else
          range.push_back(std::get<std::string>(*e));
      }
      item["range"] = std::move(range);
    }
    sets.push_back(std::move(item));
  }
  model["set"] = std::move(sets);

  ordered_json params = ordered_json::array();
  for (const auto& p : spec.parameters) {
    ordered_json item;
    item["name"] = p.name;
    item["description"] = p.description;
    if (!p.domain.empty()) item["domain"] = render(p.domain);
    params.push_back(std::move(item));
  }
  model["parameter"] = std::move(params);

  ordered_json vars = ordered_json::array();
  for (const auto& v : spec.variables) {
    ordered_json item;
    item["name"] = v.name;
    item["description"] = v.description;
    if (!v.domain.empty()) item["domain"] = render(v.domain);
    item["type"] = std::string(to_string(v.type));
    vars.push_back(std::move(item));
  }
  model["variable"] = std::move(vars);

  ordered_json objectives = ordered_json::array();
  for (const auto& o : spec.objectives) {
    ordered_json item;
    item["name"] = o.name;
    item["description"] = o.description;
    item["sense"] = std::string(to_string(o.sense));
    item["function"] = render(o.function);
    objectives.push_back(std::move(item));
  }
  model["objective"] = std::move(objectives);

  ordered_json constraints = ordered_json::array();
  for (const auto& c : spec.constraints) {
    ordered_json item;
    item["name"] = c.name;
    item["description"] = c.description;
    if (!c.domain.empty()) item["domain"] = render(c.domain);
    item["function"] = render(c.function);
    constraints.push_back(std::move(item));
  }
  model["constraint"] = std::move(constraints);

  doc["model"] = std::move(model);
  return doc.dump(2) + "\n";
}

bool structurally_equal(const ModelSpec& a, const ModelSpec& b) {
  auto same_domain = [](const std::vector<DomainBinding>& x,
                        const std::vector<DomainBinding>& y) { return x == y; };
  if (a.id != b.id || a.title != b.title || a.description != b.description ||
      a.category != b.category)
    return false;
  if (a.sets.size() != b.sets.size() ||
      a.parameters.size() != b.parameters.size() ||
      a.variables.size() != b.variables.size() ||
      a.objectives.size() != b.objectives.size() ||
      a.constraints.size() != b.constraints.size())
    return false;
  for (std::size_t i = 0; i < a.sets.size(); ++i) {
    const auto& x = a.sets[i];
    const auto& y = b.sets[i];
    if (x.name != y.name || x.description != y.description ||
        x.range != y.range)
      return false;
  }
  for (std::size_t i = 0; i < a.parameters.size(); ++i) {
    const auto& x = a.parameters[i];
    const auto& y = b.parameters[i];
    if (x.name != y.name || x.description != y.description ||
        !same_domain(x.domain, y.domain))
      return false;
  }
  for (std::size_t i = 0; i < a.variables.size(); ++i) {
    const auto& x = a.variables[i];
    const auto& y = b.variables[i];
    if (x.name != y.name || x.description != y.description ||
        !same_domain(x.domain, y.domain) || x.type != y.type)
      return false;
  }
  for (std::size_t i = 0; i < a.objectives.size(); ++i) {
    const auto& x = a.objectives[i];
    const auto& y = b.objectives[i];
    if (x.name != y.name || x.description != y.description ||
        x.sense != y.sense || !structurally_equal(x.function, y.function))
      return false;
  }
  for (std::size_t i = 0; i < a.constraints.size(); ++i) {
    const auto& x = a.constraints[i];
    const auto& y = b.constraints[i];
    if (x.name != y.name || x.description != y.description ||
        !same_domain(x.domain, y.domain) ||
        !structurally_equal(x.function, y.function))
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Bounds documents
// ---------------------------------------------------------------------------

namespace {

// Hand-rolled reader for the rigid bounds format. A general JSON parser
// would round numbers through double; the rule checks need the digits the
// generator actually wrote.
class BoundsReader {
 public:
  explicit BoundsReader(std::string_view text) : text_(text) {}

  BoundsSpec read() {
    BoundsSpec out;
    skip_ws();
    expect('{', "'{'");
    read_key("set");
    out.set = read_bound_list("set");
    expect(',', "','");
    read_key("hyper-parameter");
    out.hyper_parameter = read_bound_list("hyper-parameter");
    expect(',', "','");
    read_key("parameter");
    out.parameter = read_bound_list("parameter");
    expect(',', "','");
    read_key("parameter_types");
    out.parameter_types = read_type_list();
    skip_ws();
    expect('}', "'}' (exactly four keys are allowed)");
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError("trailing content after bounds object", pos_);
    return out;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
            text_[pos_] == '\r'))
      ++pos_;
  }

  void expect(char c, const std::string& what) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c)
      throw ParseError("expected " + what, pos_);
    ++pos_;
  }

  // Keys must appear in the fixed order; read_key enforces both the name
  // and the position.
  void read_key(const std::string& key) {
    skip_ws();
    std::size_t at = pos_;
    std::string found = read_string();
    if (found != key)
      throw ParseError("expected key '" + key + "', found '" + found + "'",
                       at);
    expect(':', "':'");
  }

  std::string read_string() {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != '"')
      throw ParseError("expected a string", pos_);
    ++pos_;
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      char c = text_[pos_];
      if (c == '\\') {
        ++pos_;
        if (pos_ >= text_.size())
          throw ParseError("unterminated escape", pos_);
        switch (text_[pos_]) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case '/': out += '/'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case 'b': out += '\b'; break;
          case 'f': out += '\f'; break;
          default:
            throw ParseError("unsupported escape in bounds string", pos_);
        }
        ++pos_;
      } else {
        out += c;
        ++pos_;
      }
    }
    if (pos_ >= text_.size()) throw ParseError("unterminated string", pos_);
    ++pos_;
    return out;
  }

  std::optional<Decimal> read_number_or_null(const char* list) {
    skip_ws();
    if (text_.substr(pos_).starts_with("null")) {
      pos_ += 4;
      return std::nullopt;
    }
    std::size_t start = pos_;
    if (pos_ < text_.size() && text_[pos_] == '-') ++pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E' ||
            ((text_[pos_] == '+' || text_[pos_] == '-') &&
             (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
      ++pos_;
    if (pos_ == start)
      throw ParseError(std::string("'") + list +
                           "' entries must be numbers or null",
                       pos_);
    try {
      return Decimal::parse(text_.substr(start, pos_ - start));
    } catch (const ParseError& e) {
      throw ParseError(std::string("bad number in '") + list + "': " +
                           e.what(),
                       start);
    }
  }

  Bound read_bound(const char* list) {
    expect('[', "'[' (each bound is an [lb, ub] pair)");
    Bound b;
    b.lo = read_number_or_null(list);
    expect(',', "','");
    b.hi = read_number_or_null(list);
    expect(']', "']' (each bound is an [lb, ub] pair)");
    return b;
  }

  std::vector<Bound> read_bound_list(const char* list) {
    std::vector<Bound> out;
    expect('[', "'['");
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return out;
    }
    out.push_back(read_bound(list));
    while (true) {
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == ',') {
        ++pos_;
        out.push_back(read_bound(list));
      } else {
        expect(']', "']'");
        return out;
      }
    }
  }

  std::vector<std::string> read_type_list() {
    std::vector<std::string> out;
    expect('[', "'['");
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return out;
    }
    out.push_back(read_string());
    while (true) {
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == ',') {
        ++pos_;
        out.push_back(read_string());
      } else {
        expect(']', "']'");
        return out;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void append_bound_list(std::string& out, const std::vector<Bound>& list) {
  out += '[';
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (i) out += ", ";
    out += '[';
    out += list[i].lo ? list[i].lo->to_string() : "null";
    out += ", ";
    out += list[i].hi ? list[i].hi->to_string() : "null";
    out += ']';
  }
  out += ']';
}

}  // namespace

BoundsSpec load_bounds(const std::string& json_text) {
  return BoundsReader(json_text).read();
}

std::string serialize_bounds(const BoundsSpec& bounds) {
  std::string out = "{\"set\": ";
  append_bound_list(out, bounds.set);
  out += ", \"hyper-parameter\": ";
  append_bound_list(out, bounds.hyper_parameter);
  out += ", \"parameter\": ";
  append_bound_list(out, bounds.parameter);
  out += ", \"parameter_types\": [";
  for (std::size_t i = 0; i < bounds.parameter_types.size(); ++i) {
    if (i) out += ", ";
    out += '"' + bounds.parameter_types[i] + '"';
  }
  out += "]}";
  return out;
}

}  // namespace mlprompt
