#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "holonome/dual.hpp"
#include "holonome/errors.hpp"

namespace holonome {

enum class Op : std::uint8_t { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Log, Sqrt, Atan2 };

/// One node of a flattened expression tree. Children are indices into the
/// owning node array; `index` is the variable index for Var and the integer
/// exponent for Pow.
struct ExprNode {
  Op op = Op::Num;
  int lhs = -1;
  int rhs = -1;
  int index = 0;
  double number = 0.0;
};

/// Immutable scalar expression over variables x1..xn.
///
/// Nodes live in a shared, never-mutated array, so copies are cheap and an
/// Expr can be evaluated from any number of threads at once.
class Expr {
 public:
  Expr() : Expr(constant(0.0, 1)) {}

  static Expr constant(double value, int dim);
  static Expr variable(int index, int dim);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return nodes_->size(); }
  int root() const noexcept { return root_; }
  const ExprNode& node(int i) const { return (*nodes_)[static_cast<std::size_t>(i)]; }

  /// True when the tree contains no variable reference.
  bool is_constant() const;

  /// Same expression re-declared over a larger variable set.
  Expr with_dim(int dim) const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr pow(const Expr& a, int n);
  friend Expr sin(const Expr& a);
  friend Expr cos(const Expr& a);
  friend Expr exp(const Expr& a);
  friend Expr log(const Expr& a);
  friend Expr sqrt(const Expr& a);
  friend Expr atan2(const Expr& y, const Expr& x);
  friend Expr compose(const Expr& e, std::span<const Expr> args);

 private:
  Expr(std::shared_ptr<const std::vector<ExprNode>> nodes, int root, int dim)
      : nodes_(std::move(nodes)), root_(root), dim_(dim) {}

  static Expr unary(Op op, const Expr& a, int index = 0);
  static Expr binary(Op op, const Expr& a, const Expr& b);

  std::shared_ptr<const std::vector<ExprNode>> nodes_;
  int root_ = 0;
  int dim_ = 1;
};

Expr operator+(const Expr& a, double b);
Expr operator+(double a, const Expr& b);
Expr operator-(const Expr& a, double b);
Expr operator-(double a, const Expr& b);
Expr operator*(double a, const Expr& b);
Expr operator*(const Expr& a, double b);

/// Substitute args[i] for x(i+1). All args must share one dimension, which
/// becomes the dimension of the result.
Expr compose(const Expr& e, std::span<const Expr> args);

/// Parse per the grammar
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := ('-')? atom ('^' INT)?
///   atom   := NUMBER | VAR | FUNC '(' expr (',' expr)? ')' | '(' expr ')'
/// with VAR = x1..x9 and FUNC in {sin, cos, exp, log, sqrt, atan2}.
Expr parse(std::string_view source, int dim);

/// Same grammar, additionally accepting `aliases[i]` as a name for x(i+1);
/// scenario files use this to write paths in `t` and families in `t, s`.
Expr parse(std::string_view source, int dim, std::span<const std::string> aliases);

/// Fully parenthesized rendering that parses back to the same tree.
std::string to_string(const Expr& e);

/// Structural equality of two trees (numbers compared bitwise).
bool same_tree(const Expr& a, const Expr& b);

double eval(const Expr& e, std::span<const double> x);

struct DualValue {
  double value = 0.0;
  Eigen::VectorXd deriv;
};

DualValue eval_dual(const Expr& e, std::span<const double> x);

namespace detail {

[[noreturn]] void domain_error(const char* what);

template <typename T>
T check_finite(T r) {
  if (!std::isfinite(primal(r))) domain_error("non-finite result");
  return r;
}

template <typename T>
T evaluate_node(const Expr& e, int i, std::span<const T> x) {
  const ExprNode& n = e.node(i);
  auto sub = [&](int j) { return evaluate_node<T>(e, j, x); };
  using std::atan2;
  using std::cos;
  using std::exp;
  using std::log;
  using std::sin;
  using std::sqrt;
  switch (n.op) {
    case Op::Num: return T(n.number);
    case Op::Var: return x[static_cast<std::size_t>(n.index)];
    case Op::Neg: return -sub(n.lhs);
    case Op::Add: return check_finite(T(sub(n.lhs) + sub(n.rhs)));
    case Op::Sub: return check_finite(T(sub(n.lhs) - sub(n.rhs)));
    case Op::Mul: return check_finite(T(sub(n.lhs) * sub(n.rhs)));
    case Op::Div: {
      const T num = sub(n.lhs);
      const T den = sub(n.rhs);
      if (primal(den) == 0.0) domain_error("division by zero");
      return check_finite(T(num / den));
    }
    case Op::Pow: return check_finite(T(ipow(sub(n.lhs), n.index)));
    case Op::Sin: return sin(sub(n.lhs));
    case Op::Cos: return cos(sub(n.lhs));
    case Op::Exp: return check_finite(T(exp(sub(n.lhs))));
    case Op::Log: {
      const T a = sub(n.lhs);
      if (primal(a) <= 0.0) domain_error("log of non-positive value");
      return log(a);
    }
    case Op::Sqrt: {
      const T a = sub(n.lhs);
      if (primal(a) < 0.0) domain_error("sqrt of negative value");
      if constexpr (!std::is_same_v<T, double>) {
        if (primal(a) == 0.0) domain_error("sqrt is not differentiable at 0");
      }
      return sqrt(a);
    }
    case Op::Atan2: {
      const T y = sub(n.lhs);
      const T xx = sub(n.rhs);
      if (primal(y) == 0.0 && primal(xx) == 0.0) domain_error("atan2(0, 0)");
      return atan2(y, xx);
    }
  }
  domain_error("corrupt expression node");
}

}  // namespace detail

/// Evaluate over any scalar type closed under the DSL operations
/// (double, Dual<double>, ...). Domain violations throw DomainError.
template <typename T>
T evaluate(const Expr& e, std::span<const T> x) {
  if (x.size() != static_cast<std::size_t>(e.dim()))
    throw Error(ErrorKind::Dimension, "expression of dimension " + std::to_string(e.dim()) +
                                          " evaluated at a point of size " + std::to_string(x.size()));
  return detail::evaluate_node<T>(e, e.root(), x);
}

}  // namespace holonome
