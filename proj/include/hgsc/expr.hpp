#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace hgsc {

/// Built-in scalar functions. `log` and `sign` are not needed by typical
/// system descriptions but appear in derivatives (of general powers and of
/// abs respectively), so they are also accepted by the parser.
enum class Func { kSin, kCos, kTan, kExp, kLog, kAbs, kSqrt, kSign };

/// Immutable scalar expression over the variables x1, x2, ...
///
/// Copies share the underlying tree, so passing by value is cheap and
/// concurrent evaluation of the same Expr is safe.
class Expr {
 public:
  /// The constant zero.
  Expr();

  static Expr Constant(double value);
  /// Variable x_{index}, with 1-based `index` as written in text.
  static Expr Variable(int index);

  /// Evaluates with x[0] bound to x1, x[1] to x2, and so on.
  /// @throws EvalError on missing variables or domain errors.
  double Evaluate(std::span<const double> x) const;
  /// Evaluates with variables looked up by name ("x1", "x2", ...).
  double Evaluate(const std::map<std::string, double>& assignment) const;

  /// Highest variable index referenced (0 for a constant expression).
  int max_variable() const;
  bool is_constant() const;
  bool DependsOn(int index) const;

  /// Fully parenthesized text that parses back to an equivalent tree.
  std::string ToString() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr pow(const Expr& base, const Expr& exponent);
  friend Expr apply(Func f, const Expr& arg);
  friend Expr Differentiate(const Expr& e, int index);
  friend Expr Parse(std::string_view text, int max_index);

  struct Node;

 private:
  explicit Expr(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

/// Parses `text`. When `max_index` is positive, variables beyond
/// x_{max_index} are rejected as unknown identifiers.
/// @throws ParseError with the byte offset of the problem.
Expr Parse(std::string_view text, int max_index = 0);

/// Symbolic partial derivative with respect to x_{index}. abs(u) is
/// differentiated as sign(u)·u' with sign(0) = 0.
Expr Differentiate(const Expr& e, int index);

}  // namespace hgsc
