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

#include "proxy_audit/syntax.h"

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>

#include "absl/status/status.h"
#include "str.h"

namespace proxy_audit {
namespace {

enum class Tok {
  kEnd,
  kIdent,
  kNumber,
  kLParen,
  kRParen,
  kComma,
  kDot,
  kColon,
  kPlus,
  kMinus,
  kStar,
  kSlash,
  kLe,
  kLt,
  kEq,
  kGe,
  kGt,
  kAnd,
  kOr,
  kBang,
};

struct Token {
  Tok kind = Tok::kEnd;
  std::string_view text;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  absl::StatusOr<std::vector<Token>> Run() {
    std::vector<Token> out;
    while (true) {
      SkipSpace();
      Token t;
      t.line = line_;
      t.column = column_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::kEnd;
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      const size_t start = pos_;
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                src_[pos_] == '_')) {
          Advance();
        }
        t.kind = Tok::kIdent;
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < src_.size() &&
                  std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        LexNumber();
        t.kind = Tok::kNumber;
      } else {
        auto two = [&](char a, char b) {
          return c == a && pos_ + 1 < src_.size() && src_[pos_ + 1] == b;
        };
        if (two('<', '=')) {
          t.kind = Tok::kLe;
          Advance(2);
        } else if (two('>', '=')) {
          t.kind = Tok::kGe;
          Advance(2);
        } else if (two('=', '=')) {
          t.kind = Tok::kEq;
          Advance(2);
        } else if (two('&', '&')) {
          t.kind = Tok::kAnd;
          Advance(2);
        } else if (two('|', '|')) {
          t.kind = Tok::kOr;
          Advance(2);
        } else {
          switch (c) {
            case '(':
              t.kind = Tok::kLParen;
              break;
            case ')':
              t.kind = Tok::kRParen;
              break;
            case ',':
              t.kind = Tok::kComma;
              break;
            case '.':
              t.kind = Tok::kDot;
              break;
            case ':':
              t.kind = Tok::kColon;
              break;
            case '+':
              t.kind = Tok::kPlus;
              break;
            case '-':
              t.kind = Tok::kMinus;
              break;
            case '*':
              t.kind = Tok::kStar;
              break;
            case '/':
              t.kind = Tok::kSlash;
              break;
            case '<':
              t.kind = Tok::kLt;
              break;
            case '>':
              t.kind = Tok::kGt;
              break;
            case '!':
              t.kind = Tok::kBang;
              break;
            default:
              return absl::InvalidArgumentError(
                  StrCat("syntax error at ", line_, ":", column_,
                               ": unexpected character '",
                               std::string_view(&src_[pos_], 1), "'"));
          }
          Advance();
        }
      }
      t.text = src_.substr(start, pos_ - start);
      out.push_back(t);
    }
  }

 private:
  void Advance(size_t n = 1) {
    for (size_t i = 0; i < n && pos_ < src_.size(); ++i) {
      if (src_[pos_] == '\n') {
        ++line_;
        column_ = 1;
      } else {
        ++column_;
      }
      ++pos_;
    }
  }

  void SkipSpace() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_]))) {
      Advance();
    }
  }

  void LexNumber() {
    auto digits = [&] {
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        Advance();
      }
    };
    digits();
    // A '.' continues the number only when followed by a digit.
    if (pos_ + 1 < src_.size() && src_[pos_] == '.' &&
        std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
      Advance();
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) {
        ++look;
      }
      if (look < src_.size() &&
          std::isdigit(static_cast<unsigned char>(src_[look]))) {
        Advance(look - pos_);
        digits();
      }
    }
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::vector<Param> params)
      : toks_(std::move(tokens)), params_(std::move(params)) {}

  absl::StatusOr<Program> ParseProgramText() {
    if (!IsKeyword("lambda")) return Expected("'lambda'");
    ++i_;
    std::vector<Param> params;
    while (true) {
      if (Peek().kind != Tok::kIdent || IsReserved(Peek().text)) {
        return Expected("parameter name");
      }
      Param p{std::string(Peek().text), Type::kReal};
      ++i_;
      if (Peek().kind == Tok::kColon) {
        ++i_;
        if (IsKeyword("real")) {
          p.type = Type::kReal;
        } else if (IsKeyword("bool")) {
          p.type = Type::kBool;
        } else {
          return Expected("'real' or 'bool'");
        }
        ++i_;
      }
      for (const Param& q : params) {
        if (q.name == p.name) {
          return Error(StrCat("duplicate parameter '", p.name, "'"));
        }
      }
      params.push_back(std::move(p));
      if (Peek().kind == Tok::kComma) {
        ++i_;
        continue;
      }
      break;
    }
    if (Peek().kind != Tok::kDot) return Expected("'.'");
    ++i_;
    params_ = params;
    absl::StatusOr<ExprPtr> body = ParseTopExpr();
    if (!body.ok()) return body.status();
    return Program::Create(std::move(params), *std::move(body));
  }

  absl::StatusOr<ExprPtr> ParseTopExpr() {
    absl::StatusOr<ExprPtr> e = ParseOr();
    if (!e.ok()) return e;
    if (Peek().kind != Tok::kEnd) return Expected("end of input");
    return e;
  }

 private:
  const Token& Peek() const { return toks_[i_]; }

  bool IsKeyword(std::string_view kw) const {
    return Peek().kind == Tok::kIdent && Peek().text == kw;
  }

  static bool IsReserved(std::string_view s) {
    return s == "lambda" || s == "ite" || s == "true" || s == "false";
  }

  absl::Status Error(std::string_view msg) const {
    return absl::InvalidArgumentError(StrCat(
        "syntax error at ", Peek().line, ":", Peek().column, ": ", msg));
  }

  absl::Status Expected(std::string_view what) const {
    std::string got = Peek().kind == Tok::kEnd
                          ? std::string("end of input")
                          : StrCat("'", Peek().text, "'");
    return Error(StrCat("expected ", what, ", got ", got));
  }

  absl::Status TypeError(const Token& at, std::string_view msg) const {
    return absl::InvalidArgumentError(
        StrCat("type error at ", at.line, ":", at.column, ": ", msg));
  }

  absl::Status Require(const Token& at, const ExprPtr& e, Type t,
                       std::string_view context) const {
    if (e->type() == t) return absl::OkStatus();
    return TypeError(at, StrCat(context, " must be ", TypeName(t),
                                      ", got ", TypeName(e->type())));
  }

  absl::StatusOr<ExprPtr> ParseOr() {
    const Token start = Peek();
    absl::StatusOr<ExprPtr> first = ParseAnd();
    if (!first.ok()) return first;
    if (Peek().kind != Tok::kOr) return first;
    std::vector<ExprPtr> ops{*first};
    while (Peek().kind == Tok::kOr) {
      ++i_;
      absl::StatusOr<ExprPtr> next = ParseAnd();
      if (!next.ok()) return next;
      ops.push_back(*next);
    }
    for (const ExprPtr& e : ops) {
      absl::Status s = Require(start, e, Type::kBool, "operand of '||'");
      if (!s.ok()) return s;
    }
    return Expr::Or(std::move(ops));
  }

  absl::StatusOr<ExprPtr> ParseAnd() {
    const Token start = Peek();
    absl::StatusOr<ExprPtr> first = ParseNot();
    if (!first.ok()) return first;
    if (Peek().kind != Tok::kAnd) return first;
    std::vector<ExprPtr> ops{*first};
    while (Peek().kind == Tok::kAnd) {
      ++i_;
      absl::StatusOr<ExprPtr> next = ParseNot();
      if (!next.ok()) return next;
      ops.push_back(*next);
    }
    for (const ExprPtr& e : ops) {
      absl::Status s = Require(start, e, Type::kBool, "operand of '&&'");
      if (!s.ok()) return s;
    }
    return Expr::And(std::move(ops));
  }

  absl::StatusOr<ExprPtr> ParseNot() {
    if (Peek().kind == Tok::kBang) {
      const Token at = Peek();
      ++i_;
      absl::StatusOr<ExprPtr> inner = ParseNot();
      if (!inner.ok()) return inner;
      absl::Status s = Require(at, *inner, Type::kBool, "operand of '!'");
      if (!s.ok()) return s;
      return Expr::Not(*std::move(inner));
    }
    return ParseRel();
  }

  absl::StatusOr<ExprPtr> ParseRel() {
    const Token start = Peek();
    absl::StatusOr<ExprPtr> left = ParseSum();
    if (!left.ok()) return left;
    std::optional<RelOp> op;
    switch (Peek().kind) {
      case Tok::kLe:
        op = RelOp::kLe;
        break;
      case Tok::kLt:
        op = RelOp::kLt;
        break;
      case Tok::kEq:
        op = RelOp::kEq;
        break;
      case Tok::kGe:
        op = RelOp::kGe;
        break;
      case Tok::kGt:
        op = RelOp::kGt;
        break;
      default:
        return left;
    }
    const Token at = Peek();
    ++i_;
    absl::StatusOr<ExprPtr> right = ParseSum();
    if (!right.ok()) return right;
    absl::Status s = Require(start, *left, Type::kReal, "relational operand");
    if (!s.ok()) return s;
    s = Require(at, *right, Type::kReal, "relational operand");
    if (!s.ok()) return s;
    return Expr::Rel(*op, *std::move(left), *std::move(right));
  }

  // Shared driver for the two arithmetic levels: `assoc` chains collect into
  // one n-ary node, `left_op` is left-associative binary.
  template <typename Next>
  absl::StatusOr<ExprPtr> ParseArith(Tok assoc_tok, NAryOp assoc, Tok left_tok,
                                     BinaryOp left_op, Next next) {
    const Token start = Peek();
    absl::StatusOr<ExprPtr> first = next();
    if (!first.ok()) return first;
    ExprPtr cur = *first;
    std::vector<ExprPtr> pending;
    while (Peek().kind == assoc_tok || Peek().kind == left_tok) {
      const Token at = Peek();
      ++i_;
      absl::StatusOr<ExprPtr> rhs = next();
      if (!rhs.ok()) return rhs;
      if (pending.empty()) {
        absl::Status s = Require(start, cur, Type::kReal, "arithmetic operand");
        if (!s.ok()) return s;
      }
      absl::Status s = Require(at, *rhs, Type::kReal, "arithmetic operand");
      if (!s.ok()) return s;
      if (at.kind == assoc_tok) {
        if (pending.empty()) pending.push_back(cur);
        pending.push_back(*std::move(rhs));
      } else {
        ExprPtr lhs = pending.empty() ? cur : Expr::NAry(assoc, std::move(pending));
        pending.clear();
        cur = Expr::Binary(left_op, std::move(lhs), *std::move(rhs));
      }
    }
    if (!pending.empty()) return Expr::NAry(assoc, std::move(pending));
    return cur;
  }

  absl::StatusOr<ExprPtr> ParseSum() {
    return ParseArith(Tok::kPlus, NAryOp::kAdd, Tok::kMinus, BinaryOp::kSub,
                      [this] { return ParseProd(); });
  }

  absl::StatusOr<ExprPtr> ParseProd() {
    return ParseArith(Tok::kStar, NAryOp::kMul, Tok::kSlash, BinaryOp::kDiv,
                      [this] { return ParseUnary(); });
  }

  absl::StatusOr<ExprPtr> ParseUnary() {
    if (Peek().kind == Tok::kMinus) {
      const Token at = Peek();
      ++i_;
      if (Peek().kind == Tok::kNumber) {
        absl::StatusOr<double> v = NumberValue(Peek());
        if (!v.ok()) return v.status();
        ++i_;
        return Expr::Real(-*v);
      }
      absl::StatusOr<ExprPtr> inner = ParseUnary();
      if (!inner.ok()) return inner;
      absl::Status s = Require(at, *inner, Type::kReal, "operand of '-'");
      if (!s.ok()) return s;
      return Expr::Binary(BinaryOp::kSub, Expr::Real(0.0), *std::move(inner));
    }
    return ParsePrimary();
  }

  absl::StatusOr<double> NumberValue(const Token& t) const {
    double v = 0.0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
      return absl::InvalidArgumentError(StrCat(
          "syntax error at ", t.line, ":", t.column, ": bad number '",
          t.text, "'"));
    }
    return v;
  }

  absl::StatusOr<ExprPtr> ParsePrimary() {
    const Token t = Peek();
    switch (t.kind) {
      case Tok::kNumber: {
        absl::StatusOr<double> v = NumberValue(t);
        if (!v.ok()) return v.status();
        ++i_;
        return Expr::Real(*v);
      }
      case Tok::kLParen: {
        ++i_;
        absl::StatusOr<ExprPtr> inner = ParseOr();
        if (!inner.ok()) return inner;
        if (Peek().kind != Tok::kRParen) return Expected("')'");
        ++i_;
        return inner;
      }
      case Tok::kIdent:
        break;
      default:
        return Expected("expression");
    }
    if (t.text == "true" || t.text == "false") {
      ++i_;
      return Expr::Bool(t.text == "true");
    }
    if (t.text == "ite") {
      ++i_;
      if (Peek().kind != Tok::kLParen) return Expected("'('");
      ++i_;
      const Token cond_at = Peek();
      absl::StatusOr<ExprPtr> c = ParseOr();
      if (!c.ok()) return c;
      if (Peek().kind != Tok::kComma) return Expected("','");
      ++i_;
      const Token then_at = Peek();
      absl::StatusOr<ExprPtr> a = ParseOr();
      if (!a.ok()) return a;
      if (Peek().kind != Tok::kComma) return Expected("','");
      ++i_;
      const Token else_at = Peek();
      absl::StatusOr<ExprPtr> b = ParseOr();
      if (!b.ok()) return b;
      if (Peek().kind != Tok::kRParen) return Expected("')'");
      ++i_;
      absl::Status s = Require(cond_at, *c, Type::kBool, "ite condition");
      if (!s.ok()) return s;
      s = Require(then_at, *a, Type::kReal, "ite branch");
      if (!s.ok()) return s;
      s = Require(else_at, *b, Type::kReal, "ite branch");
      if (!s.ok()) return s;
      return Expr::Ite(*std::move(c), *std::move(a), *std::move(b));
    }
    if (IsReserved(t.text)) return Expected("expression");
    for (const Param& p : params_) {
      if (p.name == t.text) {
        ++i_;
        return Expr::Var(p.name, p.type);
      }
    }
    return absl::NotFoundError(StrCat("unbound variable '", t.text,
                                            "' at ", t.line, ":", t.column));
  }

  std::vector<Token> toks_;
  std::vector<Param> params_;
  size_t i_ = 0;
};

// Binding strength used by the printer; higher binds tighter.
int Precedence(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::kNAry:
      switch (e.nary_op()) {
        case NAryOp::kOr:
          return 1;
        case NAryOp::kAnd:
          return 2;
        case NAryOp::kAdd:
          return 5;
        case NAryOp::kMul:
          return 6;
      }
      return 0;
    case ExprKind::kNot:
      return 3;
    case ExprKind::kRel:
      return 4;
    case ExprKind::kBinary:
      return e.binary_op() == BinaryOp::kSub ? 5 : 6;
    default:
      return 7;
  }
}

void PrintTo(const Expr& e, std::string& out);

void PrintChild(const Expr& child, int min_prec, std::string& out) {
  if (Precedence(child) < min_prec) {
    out.push_back('(');
    PrintTo(child, out);
    out.push_back(')');
  } else {
    PrintTo(child, out);
  }
}

void PrintTo(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case ExprKind::kRealConst:
      out += FormatReal(e.real_value());
      return;
    case ExprKind::kBoolConst:
      out += e.bool_value() ? "true" : "false";
      return;
    case ExprKind::kVar:
      out += e.var_name();
      return;
    case ExprKind::kNAry: {
      const int p = Precedence(e);
      // Children bind strictly tighter so that no regrouping happens on
      // re-parse (e.g. an add operand that is a subtraction).
      const int child_min = p + 1;
      for (size_t i = 0; i < e.arity(); ++i) {
        if (i > 0) StrAppend(&out, " ", OpSymbol(e.nary_op()), " ");
        PrintChild(*e.child(i), child_min, out);
      }
      return;
    }
    case ExprKind::kBinary: {
      const int p = Precedence(e);
      PrintChild(*e.child(0), p, out);
      StrAppend(&out, " ", OpSymbol(e.binary_op()), " ");
      PrintChild(*e.child(1), p + 1, out);
      return;
    }
    case ExprKind::kNot:
      out.push_back('!');
      PrintChild(*e.child(0), 5, out);
      return;
    case ExprKind::kRel:
      PrintChild(*e.child(0), 5, out);
      StrAppend(&out, " ", OpSymbol(e.rel_op()), " ");
      PrintChild(*e.child(1), 5, out);
      return;
    case ExprKind::kIte:
      out += "ite(";
      PrintTo(*e.child(0), out);
      out += ", ";
      PrintTo(*e.child(1), out);
      out += ", ";
      PrintTo(*e.child(2), out);
      out += ")";
      return;
  }
}

}  // namespace

std::string FormatReal(double value) {
  if (value == 0.0) return "0";  // folds -0
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

absl::StatusOr<Program> ParseProgram(std::string_view text) {
  absl::StatusOr<std::vector<Token>> toks = Lexer(text).Run();
  if (!toks.ok()) return toks.status();
  Parser parser(*std::move(toks), {});
  return parser.ParseProgramText();
}

absl::StatusOr<ExprPtr> ParseExpr(std::string_view text,
                                  const std::vector<Param>& params) {
  absl::StatusOr<std::vector<Token>> toks = Lexer(text).Run();
  if (!toks.ok()) return toks.status();
  Parser parser(*std::move(toks), params);
  return parser.ParseTopExpr();
}

std::string Print(const Expr& e) {
  std::string out;
  PrintTo(e, out);
  return out;
}

std::string Print(const Program& p) {
  std::string out = "lambda ";
  for (size_t i = 0; i < p.params().size(); ++i) {
    if (i > 0) out += ", ";
    out += p.params()[i].name;
    if (p.params()[i].type == Type::kBool) out += ":bool";
  }
  out += ". ";
  PrintTo(p.expr(), out);
  return out;
}

}  // namespace proxy_audit
