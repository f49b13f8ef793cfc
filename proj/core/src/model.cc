// Copyright 2026 The Proxy Audit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "proxy_audit/model.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "absl/status/status.h"
#include "proxy_audit/syntax.h"
#include "str.h"

namespace proxy_audit {

using nlohmann::json;

namespace {

absl::Status Malformed(std::string_view what) {
  return absl::InvalidArgumentError(StrCat("malformed model document: ", what));
}

absl::StatusOr<double> Number(const json& j, std::string_view key) {
  auto it = j.find(std::string(key));
  if (it == j.end() || !it->is_number()) {
    return Malformed(StrCat("expected numeric '", key, "'"));
  }
  const double v = it->get<double>();
  if (!std::isfinite(v)) return Malformed(StrCat("'", key, "' is not finite"));
  return v;
}

absl::StatusOr<RelOp> ParseRelOp(const json& j) {
  if (!j.is_string()) return Malformed("guard op must be a string");
  const std::string op = j.get<std::string>();
  if (op == "<=") return RelOp::kLe;
  if (op == "<") return RelOp::kLt;
  if (op == "==") return RelOp::kEq;
  if (op == ">=") return RelOp::kGe;
  if (op == ">") return RelOp::kGt;
  return Malformed(StrCat("unknown guard op '", op, "'"));
}

class Translator {
 public:
  static absl::StatusOr<Translator> Create(const json& doc) {
    if (!doc.is_object()) return Malformed("top level must be an object");
    auto f = doc.find("features");
    if (f == doc.end() || !f->is_array()) return Malformed("missing 'features'");
    Translator t;
    std::vector<Type> types(f->size(), Type::kReal);
    auto p = doc.find("payload");
    if (p != doc.end() && p->is_object() && p->contains("types")) {
      const json& ty = (*p)["types"];
      if (!ty.is_array() || ty.size() != f->size()) {
        return Malformed("'types' must match 'features'");
      }
      for (size_t i = 0; i < ty.size(); ++i) {
        if (ty[i] == "bool") {
          types[i] = Type::kBool;
        } else if (ty[i] != "real") {
          return Malformed("type must be 'real' or 'bool'");
        }
      }
    }
    std::set<std::string> seen;
    for (size_t i = 0; i < f->size(); ++i) {
      if (!(*f)[i].is_string()) return Malformed("feature names must be strings");
      std::string name = (*f)[i].get<std::string>();
      if (!seen.insert(name).second) {
        return Malformed(StrCat("duplicate feature '", name, "'"));
      }
      t.params_.push_back({std::move(name), types[i]});
    }
    return t;
  }

  const std::vector<Param>& params() const { return params_; }

  absl::StatusOr<ExprPtr> Feature(const json& name) const {
    if (!name.is_string()) return Malformed("feature reference must be a string");
    const std::string n = name.get<std::string>();
    for (const Param& p : params_) {
      if (p.name == n) return Expr::Var(n, p.type);
    }
    return absl::NotFoundError(StrCat("unknown feature '", n, "'"));
  }

  absl::StatusOr<ExprPtr> Guard(const json& node) const {
    if (!node.is_object()) return Malformed("guard must be an object");
    absl::StatusOr<ExprPtr> f = Feature(node.value("feature", json()));
    if (!f.ok()) return f.status();
    if ((*f)->type() != Type::kReal) {
      return Malformed("guards compare real features");
    }
    absl::StatusOr<RelOp> op = ParseRelOp(node.value("op", json("<=")));
    if (!op.ok()) return op.status();
    absl::StatusOr<double> t = Number(node, "threshold");
    if (!t.ok()) return t.status();
    return Expr::Rel(*op, *f, Expr::Real(*t));
  }

  absl::StatusOr<ExprPtr> Tree(const json& payload) const {
    auto nodes = payload.find("nodes");
    if (nodes == payload.end() || !nodes->is_array()) {
      return Malformed("decision tree needs 'nodes'");
    }
    if (nodes->empty()) return absl::FailedPreconditionError("empty model");
    std::vector<bool> on_path(nodes->size(), false);
    return TreeNode(*nodes, 0, on_path);
  }

  absl::StatusOr<ExprPtr> TreeNode(const json& nodes, size_t i,
                                   std::vector<bool>& on_path) const {
    if (i >= nodes.size()) return Malformed("child index out of range");
    if (on_path[i]) return Malformed("tree nodes form a cycle");
    const json& n = nodes[i];
    if (!n.is_object()) return Malformed("tree node must be an object");
    if (n.contains("value")) {
      absl::StatusOr<double> v = Number(n, "value");
      if (!v.ok()) return v.status();
      return Expr::Real(*v);
    }
    absl::StatusOr<ExprPtr> guard = Guard(n);
    if (!guard.ok()) return guard.status();
    auto child = [&](std::string_view key) -> absl::StatusOr<size_t> {
      auto it = n.find(std::string(key));
      if (it == n.end() || !it->is_number_unsigned()) {
        return Malformed(StrCat("internal node needs '", key, "' index"));
      }
      return it->get<size_t>();
    };
    absl::StatusOr<size_t> l = child("left");
    if (!l.ok()) return l.status();
    absl::StatusOr<size_t> r = child("right");
    if (!r.ok()) return r.status();
    on_path[i] = true;
    absl::StatusOr<ExprPtr> left = TreeNode(nodes, *l, on_path);
    if (!left.ok()) return left;
    absl::StatusOr<ExprPtr> right = TreeNode(nodes, *r, on_path);
    if (!right.ok()) return right;
    on_path[i] = false;
    return Expr::Ite(*guard, *left, *right);
  }

  absl::StatusOr<ExprPtr> RuleList(const json& payload) const {
    auto rules = payload.find("rules");
    if (rules == payload.end() || !rules->is_array()) {
      return Malformed("rule list needs 'rules'");
    }
    absl::StatusOr<double> dflt = Number(payload, "default");
    if (!dflt.ok()) return dflt.status();
    ExprPtr out = Expr::Real(*dflt);
    for (auto it = rules->rbegin(); it != rules->rend(); ++it) {
      auto conds = it->find("conditions");
      if (conds == it->end() || !conds->is_array() || conds->empty()) {
        return Malformed("rule needs nonempty 'conditions'");
      }
      std::vector<ExprPtr> lits;
      for (const json& c : *conds) {
        absl::StatusOr<ExprPtr> g = Guard(c);
        if (!g.ok()) return g;
        lits.push_back(*g);
      }
      absl::StatusOr<double> v = Number(*it, "value");
      if (!v.ok()) return v.status();
      ExprPtr guard = lits.size() == 1 ? lits[0] : Expr::And(std::move(lits));
      out = Expr::Ite(std::move(guard), Expr::Real(*v), std::move(out));
    }
    return out;
  }

  absl::StatusOr<ExprPtr> LinearScore(const json& payload) const {
    auto w = payload.find("weights");
    if (w == payload.end() || !w->is_array()) {
      return Malformed("linear model needs 'weights'");
    }
    if (w->size() != params_.size()) {
      return Malformed("'weights' must have one entry per feature");
    }
    if (params_.empty()) return absl::FailedPreconditionError("empty model");
    absl::StatusOr<double> b = Number(payload, "bias");
    if (!b.ok()) return b.status();
    std::vector<ExprPtr> terms;
    for (size_t i = 0; i < w->size(); ++i) {
      if (!(*w)[i].is_number()) return Malformed("weights must be numbers");
      if (params_[i].type != Type::kReal) {
        return Malformed("linear models take real features");
      }
      terms.push_back(Expr::Mul({Expr::Real((*w)[i].get<double>()),
                                 Expr::Var(params_[i].name)}));
    }
    terms.push_back(Expr::Real(*b));
    return Expr::Add(std::move(terms));
  }

  absl::StatusOr<ExprPtr> Forest(const json& payload) const {
    auto trees = payload.find("trees");
    if (trees == payload.end() || !trees->is_array()) {
      return Malformed("forest needs 'trees'");
    }
    if (trees->empty()) return absl::FailedPreconditionError("empty model");
    std::vector<double> weights;
    if (payload.contains("weights")) {
      const json& w = payload["weights"];
      if (!w.is_array() || w.size() != trees->size()) {
        return Malformed("'weights' must have one entry per tree");
      }
      for (const json& x : w) {
        if (!x.is_number()) return Malformed("weights must be numbers");
        weights.push_back(x.get<double>());
      }
    }
    std::vector<ExprPtr> terms;
    for (size_t i = 0; i < trees->size(); ++i) {
      absl::StatusOr<ExprPtr> t = Tree((*trees)[i]);
      if (!t.ok()) return t;
      terms.push_back(weights.empty()
                          ? *t
                          : Expr::Mul({Expr::Real(weights[i]), *t}));
    }
    ExprPtr sum = terms.size() == 1 ? terms[0] : Expr::Add(std::move(terms));
    const std::string task = payload.value("task", "classification");
    if (task == "regression") return sum;
    if (task != "classification") return Malformed("unknown forest task");
    double tau;
    if (payload.contains("threshold")) {
      absl::StatusOr<double> t = Number(payload, "threshold");
      if (!t.ok()) return t.status();
      tau = *t;
    } else if (!weights.empty()) {
      tau = 0;
      for (double w : weights) tau += w;
      tau /= 2;
    } else {
      tau = std::ceil(static_cast<double>(trees->size()) / 2.0);
    }
    return Expr::Ite(Expr::Rel(RelOp::kGe, sum, Expr::Real(tau)),
                     Expr::Real(1), Expr::Real(0));
  }

  absl::StatusOr<ExprPtr> Node(const json& n) const {
    if (!n.is_object() || !n.contains("node") || !n["node"].is_string()) {
      return Malformed("expression node needs 'node'");
    }
    const std::string k = n["node"].get<std::string>();
    if (k == "real") {
      absl::StatusOr<double> v = Number(n, "value");
      if (!v.ok()) return v.status();
      return Expr::Real(*v);
    }
    if (k == "bool") {
      if (!n.contains("value") || !n["value"].is_boolean()) {
        return Malformed("bool node needs a boolean 'value'");
      }
      return Expr::Bool(n["value"].get<bool>());
    }
    if (k == "var") return Feature(n.value("name", json()));
    auto c = n.find("children");
    if (c == n.end() || !c->is_array()) {
      return Malformed(StrCat("'", k, "' node needs 'children'"));
    }
    std::vector<ExprPtr> kids;
    for (const json& x : *c) {
      absl::StatusOr<ExprPtr> e = Node(x);
      if (!e.ok()) return e;
      kids.push_back(*e);
    }
    auto all = [&](Type t) {
      for (const ExprPtr& e : kids) {
        if (e->type() != t) return false;
      }
      return true;
    };
    auto arity = [&](size_t want) { return kids.size() == want; };
    auto type_error = [&]() {
      return absl::InvalidArgumentError(
          StrCat("type error: ill-typed '", k, "' node"));
    };
    if (k == "add" || k == "mul" || k == "and" || k == "or") {
      const bool arith = k == "add" || k == "mul";
      if (kids.size() < 2) return Malformed(StrCat("'", k, "' needs 2 operands"));
      if (!all(arith ? Type::kReal : Type::kBool)) return type_error();
      const NAryOp op = k == "add"   ? NAryOp::kAdd
                        : k == "mul" ? NAryOp::kMul
                        : k == "and" ? NAryOp::kAnd
                                     : NAryOp::kOr;
      return Expr::NAry(op, std::move(kids));
    }
    if (k == "sub" || k == "div") {
      if (!arity(2)) return Malformed(StrCat("'", k, "' needs 2 operands"));
      if (!all(Type::kReal)) return type_error();
      return Expr::Binary(k == "sub" ? BinaryOp::kSub : BinaryOp::kDiv,
                          kids[0], kids[1]);
    }
    if (k == "not") {
      if (!arity(1)) return Malformed("'not' needs 1 operand");
      if (!all(Type::kBool)) return type_error();
      return Expr::Not(kids[0]);
    }
    if (k == "le" || k == "lt" || k == "eq" || k == "ge" || k == "gt") {
      if (!arity(2)) return Malformed(StrCat("'", k, "' needs 2 operands"));
      if (!all(Type::kReal)) return type_error();
      const RelOp op = k == "le"   ? RelOp::kLe
                       : k == "lt" ? RelOp::kLt
                       : k == "eq" ? RelOp::kEq
                       : k == "ge" ? RelOp::kGe
                                   : RelOp::kGt;
      return Expr::Rel(op, kids[0], kids[1]);
    }
    if (k == "ite") {
      if (!arity(3)) return Malformed("'ite' needs 3 operands");
      if (kids[0]->type() != Type::kBool || kids[1]->type() != Type::kReal ||
          kids[2]->type() != Type::kReal) {
        return type_error();
      }
      return Expr::Ite(kids[0], kids[1], kids[2]);
    }
    return Malformed(StrCat("unknown node kind '", k, "'"));
  }

 private:
  std::vector<Param> params_;
};

const json& Payload(const json& doc) {
  static const json kEmpty = json::object();
  auto it = doc.find("payload");
  return it != doc.end() && it->is_object() ? *it : kEmpty;
}

std::string_view RelOpText(RelOp op) { return OpSymbol(op); }

std::string_view NodeKind(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::kRealConst:
      return "real";
    case ExprKind::kBoolConst:
      return "bool";
    case ExprKind::kVar:
      return "var";
    case ExprKind::kNAry:
      switch (e.nary_op()) {
        case NAryOp::kAdd:
          return "add";
        case NAryOp::kMul:
          return "mul";
        case NAryOp::kAnd:
          return "and";
        case NAryOp::kOr:
          return "or";
      }
      break;
    case ExprKind::kBinary:
      return e.binary_op() == BinaryOp::kSub ? "sub" : "div";
    case ExprKind::kNot:
      return "not";
    case ExprKind::kRel:
      switch (e.rel_op()) {
        case RelOp::kLe:
          return "le";
        case RelOp::kLt:
          return "lt";
        case RelOp::kEq:
          return "eq";
        case RelOp::kGe:
          return "ge";
        case RelOp::kGt:
          return "gt";
      }
      break;
    case ExprKind::kIte:
      return "ite";
  }
  return "?";
}

json NodeDocument(const Expr& e) {
  json n = {{"node", std::string(NodeKind(e))}};
  switch (e.kind()) {
    case ExprKind::kRealConst:
      n["value"] = e.real_value();
      return n;
    case ExprKind::kBoolConst:
      n["value"] = e.bool_value();
      return n;
    case ExprKind::kVar:
      n["name"] = e.var_name();
      return n;
    default:
      break;
  }
  json kids = json::array();
  for (const ExprPtr& c : e.children()) kids.push_back(NodeDocument(*c));
  n["children"] = std::move(kids);
  return n;
}

bool IsTreeShaped(const Expr& e) {
  if (e.kind() == ExprKind::kRealConst) return true;
  if (e.kind() != ExprKind::kIte) return false;
  const Expr& g = *e.child(0);
  return g.kind() == ExprKind::kRel && g.child(0)->kind() == ExprKind::kVar &&
         g.child(1)->kind() == ExprKind::kRealConst &&
         IsTreeShaped(*e.child(1)) && IsTreeShaped(*e.child(2));
}

size_t EmitTree(const Expr& e, json& nodes) {
  const size_t id = nodes.size();
  nodes.push_back(json::object());
  if (e.kind() == ExprKind::kRealConst) {
    nodes[id] = {{"value", e.real_value()}};
    return id;
  }
  const Expr& g = *e.child(0);
  json n = {{"feature", g.child(0)->var_name()},
            {"op", std::string(RelOpText(g.rel_op()))},
            {"threshold", g.child(1)->real_value()}};
  n["left"] = EmitTree(*e.child(1), nodes);
  n["right"] = EmitTree(*e.child(2), nodes);
  nodes[id] = std::move(n);
  return id;
}

}  // namespace

absl::StatusOr<Program> Translate(const json& doc) {
  absl::StatusOr<Translator> t = Translator::Create(doc);
  if (!t.ok()) return t.status();
  if (!doc.contains("kind") || !doc["kind"].is_string()) {
    return Malformed("missing 'kind'");
  }
  const std::string kind = doc["kind"].get<std::string>();
  const json& payload = Payload(doc);
  absl::StatusOr<ExprPtr> body;
  if (kind == model_kind::kDecisionTree) {
    body = t->Tree(payload);
  } else if (kind == model_kind::kRuleList) {
    body = t->RuleList(payload);
  } else if (kind == model_kind::kLinearRegression) {
    body = t->LinearScore(payload);
  } else if (kind == model_kind::kLinearClassifier) {
    body = t->LinearScore(payload);
    if (body.ok()) {
      body = Expr::Ite(Expr::Rel(RelOp::kGe, *body, Expr::Real(0)),
                       Expr::Real(1), Expr::Real(0));
    }
  } else if (kind == model_kind::kDecisionForest) {
    body = t->Forest(payload);
  } else if (kind == model_kind::kExpression) {
    if (!payload.contains("body")) return Malformed("expression needs 'body'");
    body = t->Node(payload["body"]);
    if (body.ok() && (*body)->type() != Type::kReal) {
      return absl::InvalidArgumentError(
          "type error: a program body must be arithmetic");
    }
  } else {
    return Malformed(StrCat("unknown kind '", kind, "'"));
  }
  if (!body.ok()) return body.status();
  return Program::Create(t->params(), *std::move(body));
}

absl::StatusOr<Program> TranslateLinearScore(const json& doc) {
  absl::StatusOr<Translator> t = Translator::Create(doc);
  if (!t.ok()) return t.status();
  absl::StatusOr<ExprPtr> body = t->LinearScore(Payload(doc));
  if (!body.ok()) return body.status();
  return Program::Create(t->params(), *std::move(body));
}

absl::StatusOr<json> ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(StrCat("cannot open '", path, "'"));
  json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    return absl::InvalidArgumentError(StrCat("'", path, "' is not valid JSON"));
  }
  return doc;
}

absl::StatusOr<Program> LoadModel(const std::string& path) {
  absl::StatusOr<json> doc = ReadJsonFile(path);
  if (!doc.ok()) return doc.status();
  absl::StatusOr<Program> p = Translate(*doc);
  if (!p.ok()) {
    return absl::Status(p.status().code(),
                        StrCat(path, ": ", std::string(p.status().message())));
  }
  return p;
}

json ExpressionDocument(const Program& p) {
  json types = json::array();
  for (const Param& q : p.params()) types.push_back(std::string(TypeName(q.type)));
  return {{"kind", std::string(model_kind::kExpression)},
          {"features", p.ParamNames()},
          {"payload",
           {{"types", types}, {"text", Print(p)}, {"body", NodeDocument(p.expr())}}}};
}

json ModelDocument(const Program& p) {
  bool all_real = true;
  for (const Param& q : p.params()) all_real = all_real && q.type == Type::kReal;
  if (!all_real || !IsTreeShaped(p.expr())) return ExpressionDocument(p);
  json nodes = json::array();
  EmitTree(p.expr(), nodes);
  return {{"kind", std::string(model_kind::kDecisionTree)},
          {"features", p.ParamNames()},
          {"payload", {{"nodes", nodes}}}};
}

}  // namespace proxy_audit
