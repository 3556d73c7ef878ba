#include "hgsc/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <vector>

#include "hgsc/errors.hpp"

namespace hgsc {

enum class Kind { kConst, kVar, kNeg, kAdd, kSub, kMul, kDiv, kPow, kCall };

struct Expr::Node {
  Kind kind{Kind::kConst};
  double value{0.0};
  int var{0};
  Func func{Func::kSin};
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr MakeConst(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = Kind::kConst;
  n->value = v;
  return n;
}

NodePtr MakeVar(int index) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = Kind::kVar;
  n->var = index;
  return n;
}

NodePtr MakeNode(Kind kind, NodePtr lhs, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

NodePtr MakeCall(Func f, NodePtr arg) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = Kind::kCall;
  n->func = f;
  n->lhs = std::move(arg);
  return n;
}

bool IsConst(const NodePtr& n, double v) {
  return n->kind == Kind::kConst && n->value == v;
}

const char* FuncName(Func f) {
  switch (f) {
    case Func::kSin: return "sin";
    case Func::kCos: return "cos";
    case Func::kTan: return "tan";
    case Func::kExp: return "exp";
    case Func::kLog: return "log";
    case Func::kAbs: return "abs";
    case Func::kSqrt: return "sqrt";
    case Func::kSign: return "sign";
  }
  return "?";
}

bool LookupFunc(std::string_view name, Func* f) {
  static const std::pair<const char*, Func> kTable[] = {
      {"sin", Func::kSin}, {"cos", Func::kCos},   {"tan", Func::kTan},
      {"exp", Func::kExp}, {"log", Func::kLog},   {"abs", Func::kAbs},
      {"sqrt", Func::kSqrt}, {"sign", Func::kSign}};
  for (const auto& [n, fn] : kTable) {
    if (name == n) {
      *f = fn;
      return true;
    }
  }
  return false;
}

bool IsInteger(double v) {
  return std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15;
}

double Power(double base, double exponent) {
  if (IsInteger(exponent)) {
    if (base == 0.0 && exponent < 0.0) {
      throw EvalError("division by zero in negative integer power");
    }
    return std::pow(base, exponent);
  }
  if (base < 0.0) {
    throw EvalError("non-integer power of a negative base");
  }
  if (base == 0.0 && exponent <= 0.0) {
    throw EvalError("non-positive power of zero");
  }
  return std::pow(base, exponent);
}

double Call(Func f, double v) {
  switch (f) {
    case Func::kSin: return std::sin(v);
    case Func::kCos: return std::cos(v);
    case Func::kTan: return std::tan(v);
    case Func::kExp: return std::exp(v);
    case Func::kLog:
      if (v <= 0.0) throw EvalError("log of a non-positive value");
      return std::log(v);
    case Func::kAbs: return std::fabs(v);
    case Func::kSqrt:
      if (v < 0.0) throw EvalError("sqrt of a negative value");
      return std::sqrt(v);
    case Func::kSign: return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  }
  return 0.0;
}

double Eval(const Expr::Node& n, std::span<const double> x) {
  switch (n.kind) {
    case Kind::kConst: return n.value;
    case Kind::kVar:
      if (n.var > static_cast<int>(x.size())) {
        throw EvalError("missing variable x" + std::to_string(n.var));
      }
      return x[n.var - 1];
    case Kind::kNeg: return -Eval(*n.lhs, x);
    case Kind::kAdd: return Eval(*n.lhs, x) + Eval(*n.rhs, x);
    case Kind::kSub: return Eval(*n.lhs, x) - Eval(*n.rhs, x);
    case Kind::kMul: return Eval(*n.lhs, x) * Eval(*n.rhs, x);
    case Kind::kDiv: {
      const double num = Eval(*n.lhs, x);
      const double den = Eval(*n.rhs, x);
      if (den == 0.0) throw EvalError("division by zero");
      return num / den;
    }
    case Kind::kPow: return Power(Eval(*n.lhs, x), Eval(*n.rhs, x));
    case Kind::kCall: return Call(n.func, Eval(*n.lhs, x));
  }
  return 0.0;
}

int MaxVar(const Expr::Node& n) {
  int m = n.kind == Kind::kVar ? n.var : 0;
  if (n.lhs) m = std::max(m, MaxVar(*n.lhs));
  if (n.rhs) m = std::max(m, MaxVar(*n.rhs));
  return m;
}

bool Depends(const Expr::Node& n, int index) {
  if (n.kind == Kind::kVar) return n.var == index;
  return (n.lhs && Depends(*n.lhs, index)) || (n.rhs && Depends(*n.rhs, index));
}

std::string FormatNumber(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  std::string s(buf);
  if (v < 0.0) s = "(" + s + ")";
  return s;
}

void Print(const Expr::Node& n, std::string* out) {
  auto binary = [&](const char* op) {
    out->push_back('(');
    Print(*n.lhs, out);
    out->append(op);
    Print(*n.rhs, out);
    out->push_back(')');
  };
  switch (n.kind) {
    case Kind::kConst: out->append(FormatNumber(n.value)); break;
    case Kind::kVar: out->append("x" + std::to_string(n.var)); break;
    case Kind::kNeg:
      out->append("(-");
      Print(*n.lhs, out);
      out->push_back(')');
      break;
    case Kind::kAdd: binary(" + "); break;
    case Kind::kSub: binary(" - "); break;
    case Kind::kMul: binary(" * "); break;
    case Kind::kDiv: binary(" / "); break;
    case Kind::kPow: binary("^"); break;
    case Kind::kCall:
      out->append(FuncName(n.func));
      out->push_back('(');
      Print(*n.lhs, out);
      out->push_back(')');
      break;
  }
}

// Recursive-descent parser.
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | '+' unary | power
//   power   := primary ('^' unary)?
//   primary := number | name | name '(' sum ')' | '(' sum ')'
class Parser {
 public:
  Parser(std::string_view text, int max_index)
      : text_(text), max_index_(max_index) {}

  NodePtr Run() {
    NodePtr e = Sum();
    SkipSpace();
    if (pos_ != text_.size()) Fail("unexpected character");
    return e;
  }

 private:
  [[noreturn]] void Fail(const std::string& what) const {
    throw ParseError(what, pos_);
  }

  void SkipSpace() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
            text_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool Accept(char c) {
    SkipSpace();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr Sum() {
    NodePtr lhs = Product();
    for (;;) {
      if (Accept('+')) {
        lhs = MakeNode(Kind::kAdd, lhs, Product());
      } else if (Accept('-')) {
        lhs = MakeNode(Kind::kSub, lhs, Product());
      } else {
        return lhs;
      }
    }
  }

  NodePtr Product() {
    NodePtr lhs = Unary();
    for (;;) {
      if (Accept('*')) {
        lhs = MakeNode(Kind::kMul, lhs, Unary());
      } else if (Accept('/')) {
        lhs = MakeNode(Kind::kDiv, lhs, Unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr Unary() {
    if (Accept('-')) return MakeNode(Kind::kNeg, Unary());
    if (Accept('+')) return Unary();
    return PowerTerm();
  }

  NodePtr PowerTerm() {
    NodePtr base = Primary();
    if (Accept('^')) return MakeNode(Kind::kPow, base, Unary());
    return base;
  }

  NodePtr Primary() {
    SkipSpace();
    if (pos_ >= text_.size()) Fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = Sum();
      if (!Accept(')')) Fail("expected ')'");
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') return Number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return Name();
    Fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr Number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (pos_ < text_.size() &&
               std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          ++pos_;
        }
      }
    }
    double v = 0.0;
    const auto [ptr, ec] =
        std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || ptr != text_.data() + pos_) {
      pos_ = start;
      Fail("malformed number");
    }
    return MakeConst(v);
  }

  NodePtr Name() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = text_.substr(start, pos_ - start);
    Func f;
    if (LookupFunc(name, &f)) {
      if (!Accept('(')) Fail("expected '(' after function name");
      NodePtr arg = Sum();
      if (!Accept(')')) Fail("expected ')'");
      return MakeCall(f, arg);
    }
    if (name.size() >= 2 && name[0] == 'x' && name[1] != '0') {
      int index = 0;
      const auto [ptr, ec] =
          std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (ec == std::errc() && ptr == name.data() + name.size() && index >= 1 &&
          (max_index_ <= 0 || index <= max_index_)) {
        return MakeVar(index);
      }
    }
    pos_ = start;
    Fail("unknown identifier '" + std::string(name) + "'");
  }

  std::string_view text_;
  int max_index_;
  std::size_t pos_{0};
};

}  // namespace

Expr::Expr() : node_(MakeConst(0.0)) {}

Expr::Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expr Expr::Constant(double value) { return Expr(MakeConst(value)); }

Expr Expr::Variable(int index) {
  if (index < 1) throw Error("variable index must be at least 1");
  return Expr(MakeVar(index));
}

double Expr::Evaluate(std::span<const double> x) const {
  return Eval(*node_, x);
}

double Expr::Evaluate(const std::map<std::string, double>& assignment) const {
  const int m = max_variable();
  std::vector<double> x(m, 0.0);
  for (int i = 1; i <= m; ++i) {
    const auto it = assignment.find("x" + std::to_string(i));
    if (it != assignment.end()) {
      x[i - 1] = it->second;
    } else if (DependsOn(i)) {
      throw EvalError("missing variable x" + std::to_string(i));
    }
  }
  return Eval(*node_, x);
}

int Expr::max_variable() const { return MaxVar(*node_); }

bool Expr::is_constant() const { return max_variable() == 0; }

bool Expr::DependsOn(int index) const { return Depends(*node_, index); }

std::string Expr::ToString() const {
  std::string out;
  Print(*node_, &out);
  return out;
}

// The builders fold constants and drop additive zeros and multiplicative
// ones so that derivative trees stay small.
Expr operator+(const Expr& a, const Expr& b) {
  if (a.node_->kind == Kind::kConst && b.node_->kind == Kind::kConst) {
    return Expr::Constant(a.node_->value + b.node_->value);
  }
  if (IsConst(a.node_, 0.0)) return b;
  if (IsConst(b.node_, 0.0)) return a;
  return Expr(MakeNode(Kind::kAdd, a.node_, b.node_));
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.node_->kind == Kind::kConst && b.node_->kind == Kind::kConst) {
    return Expr::Constant(a.node_->value - b.node_->value);
  }
  if (IsConst(b.node_, 0.0)) return a;
  if (IsConst(a.node_, 0.0)) return -b;
  return Expr(MakeNode(Kind::kSub, a.node_, b.node_));
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.node_->kind == Kind::kConst && b.node_->kind == Kind::kConst) {
    return Expr::Constant(a.node_->value * b.node_->value);
  }
  if (IsConst(a.node_, 0.0) || IsConst(b.node_, 0.0)) return Expr::Constant(0);
  if (IsConst(a.node_, 1.0)) return b;
  if (IsConst(b.node_, 1.0)) return a;
  return Expr(MakeNode(Kind::kMul, a.node_, b.node_));
}

Expr operator/(const Expr& a, const Expr& b) {
  if (IsConst(b.node_, 1.0)) return a;
  if (IsConst(a.node_, 0.0) && !IsConst(b.node_, 0.0)) return Expr::Constant(0);
  return Expr(MakeNode(Kind::kDiv, a.node_, b.node_));
}

Expr operator-(const Expr& a) {
  if (a.node_->kind == Kind::kConst) return Expr::Constant(-a.node_->value);
  return Expr(MakeNode(Kind::kNeg, a.node_));
}

Expr pow(const Expr& base, const Expr& exponent) {
  if (IsConst(exponent.node_, 1.0)) return base;
  if (IsConst(exponent.node_, 0.0)) return Expr::Constant(1.0);
  return Expr(MakeNode(Kind::kPow, base.node_, exponent.node_));
}

Expr apply(Func f, const Expr& arg) { return Expr(MakeCall(f, arg.node_)); }

Expr Differentiate(const Expr& e, int index) {
  const Expr::Node& n = *e.node_;
  auto sub = [](const NodePtr& p) { return Expr(p); };
  switch (n.kind) {
    case Kind::kConst: return Expr::Constant(0.0);
    case Kind::kVar: return Expr::Constant(n.var == index ? 1.0 : 0.0);
    case Kind::kNeg: return -Differentiate(sub(n.lhs), index);
    case Kind::kAdd:
      return Differentiate(sub(n.lhs), index) + Differentiate(sub(n.rhs), index);
    case Kind::kSub:
      return Differentiate(sub(n.lhs), index) - Differentiate(sub(n.rhs), index);
    case Kind::kMul: {
      const Expr u = sub(n.lhs), v = sub(n.rhs);
      return Differentiate(u, index) * v + u * Differentiate(v, index);
    }
    case Kind::kDiv: {
      const Expr u = sub(n.lhs), v = sub(n.rhs);
      return (Differentiate(u, index) * v - u * Differentiate(v, index)) /
             (v * v);
    }
    case Kind::kPow: {
      const Expr u = sub(n.lhs), v = sub(n.rhs);
      const Expr du = Differentiate(u, index);
      if (!v.DependsOn(index)) {
        return v * pow(u, v - Expr::Constant(1.0)) * du;
      }
      const Expr dv = Differentiate(v, index);
      return e * (dv * apply(Func::kLog, u) + v * du / u);
    }
    case Kind::kCall: {
      const Expr u = sub(n.lhs);
      const Expr du = Differentiate(u, index);
      switch (n.func) {
        case Func::kSin: return apply(Func::kCos, u) * du;
        case Func::kCos: return -(apply(Func::kSin, u) * du);
        case Func::kTan: {
          const Expr t = apply(Func::kTan, u);
          return (Expr::Constant(1.0) + t * t) * du;
        }
        case Func::kExp: return e * du;
        case Func::kLog: return du / u;
        case Func::kAbs: return apply(Func::kSign, u) * du;
        case Func::kSqrt: return du / (Expr::Constant(2.0) * e);
        case Func::kSign: return Expr::Constant(0.0);
      }
    }
  }
  return Expr::Constant(0.0);
}

Expr Parse(std::string_view text, int max_index) {
  Parser parser(text, max_index);
  NodePtr root = parser.Run();
  return Expr(std::move(root));
}

}  // namespace hgsc
