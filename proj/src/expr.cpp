#include "holonome/expr.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <functional>

namespace holonome {

namespace detail {

void domain_error(const char* what) { throw Error(ErrorKind::Domain, what); }

}  // namespace detail

namespace {

using NodeVec = std::vector<ExprNode>;

// Copy the subtree of `e` rooted at `i` into `out`, optionally replacing
// variables; returns the index of the copied root.
int append_subtree(NodeVec& out, const Expr& e, int i, const std::function<int(NodeVec&, int)>* var_hook) {
  ExprNode n = e.node(i);
  if (n.op == Op::Var && var_hook) return (*var_hook)(out, n.index);
  if (n.lhs >= 0) n.lhs = append_subtree(out, e, n.lhs, var_hook);
  if (n.rhs >= 0) n.rhs = append_subtree(out, e, n.rhs, var_hook);
  out.push_back(n);
  return static_cast<int>(out.size()) - 1;
}

void require_same_dim(const Expr& a, const Expr& b) {
  if (a.dim() != b.dim())
    throw Error(ErrorKind::Dimension, "cannot combine expressions of dimension " + std::to_string(a.dim()) +
                                          " and " + std::to_string(b.dim()));
}

void require_valid_dim(int dim) {
  if (dim < 1 || dim > static_cast<int>(kMaxVars))
    throw Error(ErrorKind::Dimension, "expression dimension must be in [1, 9], got " + std::to_string(dim));
}

}  // namespace

Expr Expr::constant(double value, int dim) {
  require_valid_dim(dim);
  ExprNode n;
  n.op = Op::Num;
  n.number = value;
  return Expr(std::make_shared<const NodeVec>(NodeVec{n}), 0, dim);
}

Expr Expr::variable(int index, int dim) {
  require_valid_dim(dim);
  if (index < 0 || index >= dim)
    throw Error(ErrorKind::Dimension, "variable x" + std::to_string(index + 1) + " outside dimension " +
                                          std::to_string(dim));
  ExprNode n;
  n.op = Op::Var;
  n.index = index;
  return Expr(std::make_shared<const NodeVec>(NodeVec{n}), 0, dim);
}

bool Expr::is_constant() const {
  for (const auto& n : *nodes_)
    if (n.op == Op::Var) return false;
  return true;
}

Expr Expr::with_dim(int dim) const {
  require_valid_dim(dim);
  for (const auto& n : *nodes_)
    if (n.op == Op::Var && n.index >= dim)
      throw Error(ErrorKind::Dimension, "expression references x" + std::to_string(n.index + 1));
  return Expr(nodes_, root_, dim);
}

Expr Expr::unary(Op op, const Expr& a, int index) {
  NodeVec out;
  out.reserve(a.size() + 1);
  ExprNode n;
  n.op = op;
  n.index = index;
  n.lhs = append_subtree(out, a, a.root(), nullptr);
  out.push_back(n);
  const int root = static_cast<int>(out.size()) - 1;
  return Expr(std::make_shared<const NodeVec>(std::move(out)), root, a.dim());
}

Expr Expr::binary(Op op, const Expr& a, const Expr& b) {
  require_same_dim(a, b);
  NodeVec out;
  out.reserve(a.size() + b.size() + 1);
  ExprNode n;
  n.op = op;
  n.lhs = append_subtree(out, a, a.root(), nullptr);
  n.rhs = append_subtree(out, b, b.root(), nullptr);
  out.push_back(n);
  const int root = static_cast<int>(out.size()) - 1;
  return Expr(std::make_shared<const NodeVec>(std::move(out)), root, a.dim());
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(Op::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(Op::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(Op::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(Op::Div, a, b); }
Expr operator-(const Expr& a) { return Expr::unary(Op::Neg, a); }
Expr pow(const Expr& a, int n) {
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "negative integer power");
  return Expr::unary(Op::Pow, a, n);
}
Expr sin(const Expr& a) { return Expr::unary(Op::Sin, a); }
Expr cos(const Expr& a) { return Expr::unary(Op::Cos, a); }
Expr exp(const Expr& a) { return Expr::unary(Op::Exp, a); }
Expr log(const Expr& a) { return Expr::unary(Op::Log, a); }
Expr sqrt(const Expr& a) { return Expr::unary(Op::Sqrt, a); }
Expr atan2(const Expr& y, const Expr& x) { return Expr::binary(Op::Atan2, y, x); }

Expr operator+(const Expr& a, double b) { return a + Expr::constant(b, a.dim()); }
Expr operator+(double a, const Expr& b) { return Expr::constant(a, b.dim()) + b; }
Expr operator-(const Expr& a, double b) { return a - Expr::constant(b, a.dim()); }
Expr operator-(double a, const Expr& b) { return Expr::constant(a, b.dim()) - b; }
Expr operator*(double a, const Expr& b) { return Expr::constant(a, b.dim()) * b; }
Expr operator*(const Expr& a, double b) { return a * Expr::constant(b, a.dim()); }

Expr compose(const Expr& e, std::span<const Expr> args) {
  if (args.size() != static_cast<std::size_t>(e.dim()))
    throw Error(ErrorKind::Dimension, "compose needs " + std::to_string(e.dim()) + " arguments, got " +
                                          std::to_string(args.size()));
  const int dim = args.front().dim();
  for (const auto& a : args) require_same_dim(args.front(), a);
  std::function<int(NodeVec&, int)> hook = [&](NodeVec& out, int var) {
    const Expr& a = args[static_cast<std::size_t>(var)];
    return append_subtree(out, a, a.root(), nullptr);
  };
  NodeVec out;
  const int root = append_subtree(out, e, e.root(), &hook);
  return Expr(std::make_shared<const NodeVec>(std::move(out)), root, dim);
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  Parser(std::string_view src, int dim, std::span<const std::string> aliases)
      : src_(src), dim_(dim), aliases_(aliases) {}

  Expr run() {
    Expr e = expr();
    skip_ws();
    if (pos_ != src_.size()) throw SyntaxError(pos_, std::string("unexpected '") + src_[pos_] + "'");
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= src_.size()) throw SyntaxError(pos_, std::string("expected '") + c + "' before end of input");
      throw SyntaxError(pos_, std::string("expected '") + c + "'");
    }
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = lhs + term();
      } else if (accept('-')) {
        lhs = lhs - term();
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = lhs * factor();
      } else if (accept('/')) {
        lhs = lhs / factor();
      } else {
        return lhs;
      }
    }
  }

  Expr factor() {
    const bool negate = accept('-');
    Expr a = atom();
    if (accept('^')) {
      skip_ws();
      const std::size_t start = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      if (start == pos_) throw SyntaxError(start, "expected integer exponent");
      int n = 0;
      auto [p, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, n);
      if (ec != std::errc()) throw SyntaxError(start, "exponent out of range");
      a = pow(a, n);
    }
    return negate ? -a : a;
  }

  Expr atom() {
    skip_ws();
    if (pos_ >= src_.size()) throw SyntaxError(pos_, "unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    throw SyntaxError(pos_, std::string("unexpected '") + c + "'");
  }

  Expr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      const std::size_t s = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      return pos_ - s;
    };
    std::size_t count = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      count += digits();
    }
    if (count == 0) throw SyntaxError(start, "malformed number");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      const std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;
    }
    double value = 0.0;
    auto [p, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc() || p != src_.data() + pos_) throw SyntaxError(start, "malformed number");
    return Expr::constant(value, dim_);
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::string name(src_.substr(start, pos_ - start));

    if (name.size() == 2 && name[0] == 'x' && name[1] >= '1' && name[1] <= '9') {
      const int index = name[1] - '1';
      if (index >= dim_)
        throw Error(ErrorKind::Dimension, "variable " + name + " at byte " + std::to_string(start) +
                                              " exceeds dimension " + std::to_string(dim_));
      return Expr::variable(index, dim_);
    }
    for (std::size_t i = 0; i < aliases_.size(); ++i) {
      if (aliases_[i] == name) {
        if (static_cast<int>(i) >= dim_)
          throw Error(ErrorKind::Dimension, "variable " + name + " exceeds dimension " + std::to_string(dim_));
        return Expr::variable(static_cast<int>(i), dim_);
      }
    }

    static constexpr std::string_view unary_names[] = {"sin", "cos", "exp", "log", "sqrt"};
    static constexpr Op unary_ops[] = {Op::Sin, Op::Cos, Op::Exp, Op::Log, Op::Sqrt};
    int unary_index = -1;
    for (int i = 0; i < 5; ++i)
      if (name == unary_names[i]) unary_index = i;
    const bool is_atan2 = name == "atan2";
    if (unary_index < 0 && !is_atan2)
      throw Error(ErrorKind::UnknownIdentifier, "'" + name + "' at byte " + std::to_string(start));

    expect('(');
    std::vector<Expr> args{expr()};
    while (accept(',')) args.push_back(expr());
    expect(')');
    const std::size_t want = is_atan2 ? 2 : 1;
    if (args.size() != want)
      throw Error(ErrorKind::Arity, name + " takes " + std::to_string(want) + " argument(s), got " +
                                        std::to_string(args.size()) + " at byte " + std::to_string(start));
    if (is_atan2) return atan2(args[0], args[1]);
    switch (unary_ops[unary_index]) {
      case Op::Sin: return sin(args[0]);
      case Op::Cos: return cos(args[0]);
      case Op::Exp: return exp(args[0]);
      case Op::Log: return log(args[0]);
      default: return sqrt(args[0]);
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int dim_;
  std::span<const std::string> aliases_;
};

}  // namespace

Expr parse(std::string_view source, int dim) { return parse(source, dim, {}); }

Expr parse(std::string_view source, int dim, std::span<const std::string> aliases) {
  require_valid_dim(dim);
  return Parser(source, dim, aliases).run();
}

// ---------------------------------------------------------------------------
// Printing and comparison

namespace {

void print_node(const Expr& e, int i, std::string& out) {
  const ExprNode& n = e.node(i);
  auto binary = [&](const char* op) {
    out += '(';
    print_node(e, n.lhs, out);
    out += op;
    print_node(e, n.rhs, out);
    out += ')';
  };
  auto call = [&](const char* name) {
    out += name;
    out += '(';
    print_node(e, n.lhs, out);
    if (n.rhs >= 0) {
      out += ", ";
      print_node(e, n.rhs, out);
    }
    out += ')';
  };
  switch (n.op) {
    case Op::Num: {
      char buf[32];
      if (n.number < 0.0) {
        std::snprintf(buf, sizeof buf, "%.17g", -n.number);
        out += "(-";
        out += buf;
        out += ')';
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", n.number);
        out += buf;
      }
      return;
    }
    case Op::Var: out += "x" + std::to_string(n.index + 1); return;
    case Op::Neg:
      out += "-(";
      print_node(e, n.lhs, out);
      out += ')';
      return;
    case Op::Add: binary(" + "); return;
    case Op::Sub: binary(" - "); return;
    case Op::Mul: binary(" * "); return;
    case Op::Div: binary(" / "); return;
    case Op::Pow:
      out += '(';
      print_node(e, n.lhs, out);
      out += ")^" + std::to_string(n.index);
      return;
    case Op::Sin: call("sin"); return;
    case Op::Cos: call("cos"); return;
    case Op::Exp: call("exp"); return;
    case Op::Log: call("log"); return;
    case Op::Sqrt: call("sqrt"); return;
    case Op::Atan2: call("atan2"); return;
  }
}

bool same_node(const Expr& a, int i, const Expr& b, int j) {
  const ExprNode& x = a.node(i);
  const ExprNode& y = b.node(j);
  if (x.op != y.op || x.index != y.index) return false;
  if (x.op == Op::Num && std::memcmp(&x.number, &y.number, sizeof(double)) != 0) return false;
  if ((x.lhs >= 0) != (y.lhs >= 0) || (x.rhs >= 0) != (y.rhs >= 0)) return false;
  if (x.lhs >= 0 && !same_node(a, x.lhs, b, y.lhs)) return false;
  if (x.rhs >= 0 && !same_node(a, x.rhs, b, y.rhs)) return false;
  return true;
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print_node(e, e.root(), out);
  return out;
}

bool same_tree(const Expr& a, const Expr& b) {
  return a.dim() == b.dim() && same_node(a, a.root(), b, b.root());
}

double eval(const Expr& e, std::span<const double> x) { return evaluate<double>(e, x); }

DualValue eval_dual(const Expr& e, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(e.dim()))
    throw Error(ErrorKind::Dimension, "expression of dimension " + std::to_string(e.dim()) +
                                          " evaluated at a point of size " + std::to_string(x.size()));
  std::vector<Dual<double>> seeded;
  seeded.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) seeded.push_back(Dual<double>::variable(x[i], i));
  const Dual<double> r = evaluate<Dual<double>>(e, std::span<const Dual<double>>(seeded));
  DualValue out;
  out.value = r.value;
  out.deriv.resize(e.dim());
  for (int i = 0; i < e.dim(); ++i) out.deriv[i] = r.grad[static_cast<std::size_t>(i)];
  return out;
}

}  // namespace holonome
