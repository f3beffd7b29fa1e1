#include <charconv>
#include <numbers>

#include "holonome/connection.hpp"

namespace holonome {

namespace {

using ExprMatrix = std::vector<std::vector<Expr>>;

Expr var(int i) { return Expr::variable(i, 2); }
Expr num(double v) { return Expr::constant(v, 2); }

ExprMatrix zero_matrix(int k) { return ExprMatrix(static_cast<std::size_t>(k), std::vector<Expr>(static_cast<std::size_t>(k), num(0.0))); }

// scalar * generator, entry by entry, keeping structural zeros constant.
ExprMatrix times_generator(const Expr& scalar, const Matrix& gen) {
  const auto k = static_cast<int>(gen.rows());
  ExprMatrix out = zero_matrix(k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double c = gen(i, j);
      if (c == 1.0) {
        out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = scalar;
      } else if (c == -1.0) {
        out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = -scalar;
      } else if (c != 0.0) {
        out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = c * scalar;
      }
    }
  return out;
}

ExprMatrix matmul(const ExprMatrix& a, const ExprMatrix& b) {
  const std::size_t k = a.size();
  ExprMatrix out = zero_matrix(static_cast<int>(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      std::vector<Expr> terms;
      for (std::size_t l = 0; l < k; ++l) {
        const bool a_zero = a[i][l].is_constant() && eval(a[i][l], std::vector<double>{0.0, 0.0}) == 0.0;
        const bool b_zero = b[l][j].is_constant() && eval(b[l][j], std::vector<double>{0.0, 0.0}) == 0.0;
        if (!a_zero && !b_zero) terms.push_back(a[i][l] * b[l][j]);
      }
      if (terms.empty()) continue;
      Expr sum = terms.front();
      for (std::size_t t = 1; t < terms.size(); ++t) sum = sum + terms[t];
      out[i][j] = sum;
    }
  return out;
}

// Rotation exp(angle * L) for a standard so(2)/so(3) generator.
ExprMatrix rotation(const Expr& angle, int k, int axis) {
  ExprMatrix r = zero_matrix(k);
  if (k == 2) {
    r[0][0] = cos(angle);
    r[0][1] = -sin(angle);
    r[1][0] = sin(angle);
    r[1][1] = cos(angle);
    return r;
  }
  const int a = (axis + 1) % 3;
  const int b = (axis + 2) % 3;
  for (int i = 0; i < 3; ++i) r[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = num(1.0);
  r[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)] = cos(angle);
  r[static_cast<std::size_t>(b)][static_cast<std::size_t>(b)] = cos(angle);
  r[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = sin(angle);
  r[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = -sin(angle);
  return r;
}

Box square_box(double half) {
  Box b;
  b.lo = Vector::Constant(2, -half);
  b.hi = Vector::Constant(2, half);
  return b;
}

ConnectionForm single_chart(StructureGroup group, double half, std::vector<ExprMatrix> table, std::string name) {
  Atlas atlas({Chart{0, square_box(half)}}, {});
  auto field = std::make_shared<ExprCoefficients>(2, group.k, std::move(table));
  return ConnectionForm(group, std::move(atlas), {field}, {}, std::move(name));
}

// Levi-Civita coefficients of the round unit sphere in a stereographic
// chart (conformal factor 4 / (1 + |x|^2)^2):
//   A = 2 (x1 dx2 - x2 dx1) / (1 + |x|^2) * J.
std::vector<ExprMatrix> sphere_coefficients() {
  const Expr denom = 1.0 + pow(var(0), 2) + pow(var(1), 2);
  const Matrix j = so2_generator();
  return {times_generator((-2.0 * var(1)) / denom, j), times_generator((2.0 * var(0)) / denom, j)};
}

// Charts related by z' = 1/z (orientation preserving); the frames differ
// by the rotation R(pi - 2 arg z), i.e. g = [[c, -s], [s, c]] with
// c = (x2^2 - x1^2) / r^2 and s = 2 x1 x2 / r^2. The same formulas hold in
// either direction.
ConnectionForm sphere_two_chart() {
  const Expr r2 = pow(var(0), 2) + pow(var(1), 2);
  const std::vector<Expr> inversion = {var(0) / r2, -var(1) / r2};
  const Expr c = (pow(var(1), 2) - pow(var(0), 2)) / r2;
  const Expr s = (2.0 * var(0) * var(1)) / r2;
  auto gauge = std::make_shared<ExprMatrixField>(ExprMatrix{{c, -s}, {s, c}});

  Atlas atlas({Chart{0, square_box(1.5)}, Chart{1, square_box(1.5)}},
              {ChartMap{0, 1, inversion}, ChartMap{1, 0, inversion}});
  const auto group = StructureGroup::so(2);
  auto f0 = std::make_shared<ExprCoefficients>(2, 2, sphere_coefficients());
  auto f1 = std::make_shared<ExprCoefficients>(2, 2, sphere_coefficients());
  return ConnectionForm(group, std::move(atlas), {f0, f1}, {GaugeTransition{0, 1, gauge}, GaugeTransition{1, 0, gauge}},
                        "levi-civita-s2-twochart");
}

struct ParsedName {
  std::string base;
  std::vector<double> args;
};

ParsedName parse_name(std::string_view name) {
  ParsedName out;
  const auto open = name.find('(');
  if (open == std::string_view::npos) {
    out.base = std::string(name);
    return out;
  }
  if (name.back() != ')') throw Error(ErrorKind::Validation, "malformed builtin name '" + std::string(name) + "'");
  out.base = std::string(name.substr(0, open));
  std::string_view rest = name.substr(open + 1, name.size() - open - 2);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string_view tok = rest.substr(0, comma);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
      throw Error(ErrorKind::Validation, "bad numeric argument '" + std::string(tok) + "' in builtin name");
    out.args.push_back(v);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

double arg_or(const ParsedName& p, std::size_t i, double fallback) { return i < p.args.size() ? p.args[i] : fallback; }

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

ConnectionForm builtin(std::string_view name) {
  const ParsedName p = parse_name(name);
  auto expect_args = [&](std::size_t max) {
    if (p.args.size() > max)
      throw Error(ErrorKind::Validation, "builtin '" + p.base + "' takes at most " + std::to_string(max) + " arguments");
  };

  if (p.base == "flat-so2") {
    expect_args(0);
    return single_chart(StructureGroup::so(2), 2.0, {zero_matrix(2), zero_matrix(2)}, "flat-so2");
  }
  if (p.base == "abelian-area") {
    expect_args(1);
    const double f = arg_or(p, 0, 1.5);
    const Matrix j = so2_generator();
    return single_chart(StructureGroup::so(2), 2.0,
                        {times_generator((-0.5 * f) * var(1), j), times_generator((0.5 * f) * var(0), j)},
                        "abelian-area(" + format_number(f) + ")");
  }
  if (p.base == "constant-so3") {
    expect_args(2);
    const double a1 = arg_or(p, 0, 1.0);
    const double a2 = arg_or(p, 1, 0.5);
    return single_chart(StructureGroup::so(3), 2.0,
                        {times_generator(num(a1), so3_generator(0)), times_generator(num(a2), so3_generator(1))},
                        "constant-so3(" + format_number(a1) + "," + format_number(a2) + ")");
  }
  if (p.base == "levi-civita-s2-stereo") {
    expect_args(0);
    return single_chart(StructureGroup::so(2), 3.0, sphere_coefficients(), "levi-civita-s2-stereo");
  }
  if (p.base == "levi-civita-s2-twochart") {
    expect_args(0);
    return sphere_two_chart();
  }
  if (p.base == "pure-gauge") {
    expect_args(1);
    const double c = arg_or(p, 0, 1.0);
    auto flat = single_chart(StructureGroup::so(2), 2.0, {zero_matrix(2), zero_matrix(2)}, "flat-so2");
    auto g = std::make_shared<ExprMatrixField>(rotation(c * var(0) * var(1), 2, 2));
    auto out = gauge_transform(flat, 0, g);
    return ConnectionForm(out.group(), out.atlas(), {out.field_ptr(0)}, {}, "pure-gauge(" + format_number(c) + ")");
  }
  if (p.base == "pure-gauge-so3") {
    expect_args(1);
    const double c = arg_or(p, 0, 1.0);
    auto flat = single_chart(StructureGroup::so(3), 2.0, {zero_matrix(3), zero_matrix(3)}, "flat-so3");
    auto g = std::make_shared<ExprMatrixField>(matmul(rotation(c * var(0), 3, 0), rotation(c * var(1), 3, 1)));
    auto out = gauge_transform(flat, 0, g);
    return ConnectionForm(out.group(), out.atlas(), {out.field_ptr(0)}, {},
                          "pure-gauge-so3(" + format_number(c) + ")");
  }
  throw Error(ErrorKind::Validation, "unknown builtin connection '" + std::string(name) + "'");
}

std::vector<std::string> builtin_names() {
  return {"flat-so2",   "abelian-area(1.5)",        "constant-so3(1,0.5)", "levi-civita-s2-stereo",
          "levi-civita-s2-twochart", "pure-gauge(1)", "pure-gauge-so3(1)"};
}

}  // namespace holonome
