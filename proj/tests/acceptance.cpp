// Acceptance run: one PASS/FAIL line per criterion.
// Usage: holonome_acceptance <path-to-holonome-cli>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "holonome/holonomy.hpp"
#include "holonome/reconstruction.hpp"
#include "holonome/scenario.hpp"
#include "oracles.hpp"

using namespace holonome;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  Outcome() { detail.precision(3); }

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Matrix> exact(const ConnectionForm& conn, const ChartPoint& x) {
  std::vector<Matrix> a;
  conn.field(x.chart_id).values(std::span<const double>(x.coords.data(), static_cast<std::size_t>(x.coords.size())), a);
  return a;
}

PathSpec circle(int chart, double r, double turns = 1.0) {
  const Expr t = Expr::variable(0, 1);
  return path_from_exprs(chart, {r * cos(2 * kPi * turns * t), r * sin(2 * kPi * turns * t)});
}

const std::vector<std::string> kAxiomBuiltins = {"flat-so2", "abelian-area(1.5)", "constant-so3",
                                                 "levi-civita-s2-stereo"};

Outcome axioms() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const auto& name : kAxiomBuiltins) {
    const ConnectionForm conn = builtin(name);
    const AxiomReport r = verify_axioms(engine_oracle(conn, SolverConfig{}), default_axiom_suite(conn), 1e-7);
    const double d = std::max({r.identity_deviation, r.reparametrization_deviation, r.juxtaposition_deviation});
    worst = std::max(worst, d);
    o.check(r.pass && d <= 1e-7, name);
  }
  const double elapsed = seconds_since(t0);
  o.check(elapsed < 10.0, "runtime");
  o.detail << " max deviation " << worst << ", " << elapsed << " s";
  return o;
}

Outcome forward() {
  Outcome o;
  double worst_area = 0.0;
  for (double f : {0.5, 1.5, 3.0}) {
    const ConnectionForm conn = builtin("abelian-area(" + std::to_string(f) + ")");
    const HolonomyResult h = holonomy(conn, coordinate_rectangle({0, Vector::Zero(2)}, 0, 1, 1.0), SolverConfig{});
    const double flux = oracle::abelian_loop_integral(f, {{0, 0}, {1, 0}, {1, 1}, {0, 1}}, 100000);
    const double d = (h.g.matrix() - oracle::rotation2(-flux)).norm();
    worst_area = std::max(worst_area, d);
    o.check(d <= 1e-7, "area law f=" + std::to_string(f));
  }

  const ConnectionForm so3 = builtin("constant-so3");
  Vector a(2), b(2);
  a << -0.5, -0.5;
  b << 1.2, 0.4;
  const Matrix u = transport(so3, straight_line(0, a, b), SolverConfig{}).g.matrix();
  const Vector d = b - a;
  const double closed = (u - oracle::rodrigues({-d[0], -0.5 * d[1], 0.0})).norm();
  o.check(closed <= 1e-9, "constant-coefficient exponential");
  o.detail << " area law " << worst_area << ", closed form " << closed;
  return o;
}

Outcome roundtrip() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  for (const char* name : {"constant-so3", "abelian-area(1.5)"}) {
    const ConnectionForm conn = builtin(name);
    const ReconstructionTable t =
        reconstruct_connection(engine_oracle(conn, SolverConfig{}), conn.group(), reconstruction_grid(conn.atlas(), 5), 1e-3);
    double err = 0.0;
    for (const auto& p : t.points) {
      const auto ex = exact(conn, p.x);
      for (std::size_t mu = 0; mu < ex.size(); ++mu) err = std::max(err, (p.coefficients[mu] - ex[mu]).norm());
    }
    o.check(t.dropped.empty() && err <= 3e-4, std::string(name) + " error at h=1e-3");
    const RoundtripReport r = roundtrip_report(conn, SolverConfig{});
    o.check(r.degenerate || r.order >= 1.7, std::string(name) + " order");
    o.detail << " " << name << ": error(1e-3) " << err << ", ";
    if (r.degenerate)
      o.detail << "sweep errors <= " << r.noise_floor << " (exact up to rounding, order not measurable);";
    else
      o.detail << "order " << r.order << ";";
  }
  // A connection whose reconstruction error is not at rounding level.
  const RoundtripReport sphere = roundtrip_report(builtin("levi-civita-s2-stereo"), SolverConfig{});
  o.check(!sphere.degenerate && sphere.order >= 1.7, "sphere order");
  const double elapsed = seconds_since(t0);
  o.check(elapsed < 30.0, "runtime");
  o.detail << " levi-civita-s2-stereo order " << sphere.order << "; " << elapsed << " s";
  return o;
}

Outcome lifted_velocity() {
  Outcome o;
  for (const auto& name : kAxiomBuiltins) {
    const ConnectionForm conn = builtin(name);
    const TransportOracle oracle = engine_oracle(conn, SolverConfig{});
    const ChartPoint x{0, Vector::Constant(2, 0.3)};
    Vector v(2);
    v << 0.8, -0.6;
    const Expr t = Expr::variable(0, 1);
    auto path = [&](const Expr& bend1, const Expr& bend2) {
      return path_from_exprs(0, {0.3 + 0.8 * t + bend1, 0.3 - 0.6 * t + bend2});
    };
    const std::vector<PathSpec> paths = {path(0.0 * t, 0.0 * t), path(0.6 * t * t, 0.8 * t * t),
                                         path(-0.5 * t * t, 0.4 * t * t * t), path(0.2 * sin(t) * sin(t), -t * t)};
    std::mt19937 rng(31);
    std::normal_distribution<double> n(0.0, 1.0);
    const GroupElement p = conn.group().k == 3 ? GroupElement(oracle::rodrigues({n(rng), n(rng), n(rng)}), conn.group())
                                               : GroupElement(oracle::rotation2(n(rng)), conn.group());
    const LemmaReport r = lemma_independence_check(oracle, x, p, {x, v}, paths);
    o.detail << " " << name << ":";
    if (r.degenerate) {
      o.check(r.extrapolated <= 1e-6, name);
      o.detail << " deviations <= 1e-11 (path independent exactly);";
    } else {
      o.check(r.slope >= 0.9 && r.extrapolated <= 1e-6, name);
      o.detail << " slope " << r.slope << ", extrapolated " << r.extrapolated << ";";
    }
  }
  return o;
}

Outcome complementarity() {
  Outcome o;
  std::mt19937 rng(41);
  std::normal_distribution<double> n(0.0, 1.0);
  double recompose = 0.0, equivariance = 0.0;
  for (const char* name : {"constant-so3", "levi-civita-s2-stereo"}) {
    const ConnectionForm conn = builtin(name);
    const TransportOracle oracle = engine_oracle(conn, SolverConfig{});
    const int k = conn.group().k;
    auto random_group = [&] {
      return k == 3 ? GroupElement(oracle::rodrigues({n(rng), n(rng), n(rng)}), conn.group())
                    : GroupElement(oracle::rotation2(n(rng)), conn.group());
    };
    auto random_algebra = [&] {
      return k == 3 ? Matrix(oracle::skew3({n(rng), n(rng), n(rng)})) : Matrix(n(rng) * so2_generator());
    };
    const ChartPoint x{0, Vector::Constant(2, 0.4)};
    const GroupElement p = random_group();
    const HorizontalBasis basis = horizontal_space(oracle, x, p, 1e-3);
    for (int i = 0; i < 50; ++i) {
      Vector base(2);
      base << n(rng), n(rng);
      const Matrix fiber = random_algebra();
      const Splitting s = split_horizontal_vertical(basis, base, fiber);
      recompose = std::max(recompose, (s.horizontal + s.vertical - fiber).norm());
    }
    for (int i = 0; i < 5; ++i) {
      const GroupElement g = random_group();
      const HorizontalBasis moved = horizontal_space(oracle, x, p * g, 1e-3);
      for (std::size_t mu = 0; mu < 2; ++mu) {
        const Matrix expected = g.matrix().transpose() * basis.lifts[mu].vertical_part.matrix() * g.matrix();
        equivariance = std::max(equivariance, (moved.lifts[mu].vertical_part.matrix() - expected).norm());
      }
    }
  }
  o.check(recompose <= 1e-10, "recomposition");
  o.check(equivariance <= 1e-6, "equivariance");
  o.detail << " recomposition " << recompose << " over 100 vectors, equivariance " << equivariance;
  return o;
}

Outcome flatness() {
  Outcome o;
  auto run = [&](const std::string& name, Verdict expected, const std::function<bool(double)>& spread_ok) {
    const FlatnessVerdict v = flatness_verdict(builtin(name), SolverConfig{});
    o.check(v.verdict == expected, name + " verdict " + to_string(v.verdict));
    o.check(v.verdict != Verdict::Inconsistent, name + " inconsistent");
    double lo = v.spreads.empty() ? 0.0 : v.spreads[0], hi = 0.0;
    for (double s : v.spreads) lo = std::min(lo, s), hi = std::max(hi, s);
    o.check(spread_ok(expected == Verdict::Flat ? hi : lo), name + " spread");
    o.detail << " " << name << " " << to_string(v.verdict) << " (spread " << (expected == Verdict::Flat ? hi : lo)
             << ");";
  };
  run("flat-so2", Verdict::Flat, [](double s) { return s <= 1e-7; });
  run("pure-gauge", Verdict::Flat, [](double s) { return s <= 1e-7; });
  run("abelian-area(1.5)", Verdict::Curved, [](double s) { return s >= 0.5; });
  run("levi-civita-s2-stereo", Verdict::Curved, [](double) { return true; });
  return o;
}

// Loop in the two-chart atlas: chart-1 line from its interior out to the
// circle, the circle in chart 0, and back out to the start.
PathSpec lasso_inbound(double r) { return straight_line(1, Vector::Unit(2, 0) * 0.5, Vector::Unit(2, 0) / r); }

PathSpec lasso(const Atlas& atlas, double r) {
  const PathSpec out = straight_line(0, Vector::Unit(2, 0) * r, Vector::Unit(2, 0) * 2.0);
  return juxtapose(juxtapose(lasso_inbound(r), circle(0, r), &atlas), out, &atlas);
}

Outcome latitude() {
  Outcome o;
  const ConnectionForm one = builtin("levi-civita-s2-stereo");
  const ConnectionForm two = builtin("levi-civita-s2-twochart");
  double angle_err = 0.0, conj_err = 0.0;
  for (double theta : {kPi / 6, kPi / 3, kPi / 2}) {
    const double r = std::tan(theta / 2);
    const double expected = -2 * kPi * (1 - std::cos(theta));
    const HolonomyResult h1 = holonomy(one, circle(0, r), SolverConfig{});
    const PathSpec loop = lasso(two.atlas(), r);
    const HolonomyResult h2 = holonomy(two, loop, SolverConfig{});
    const TransportResult in = transport(two, lasso_inbound(r), SolverConfig{});
    const Matrix t0 = to_end_chart(two, in, 0);
    const Matrix conj = t0 * h2.g.matrix() * t0.inverse();
    for (double a : {*h1.angle, *h2.angle}) angle_err = std::max(angle_err, std::abs(std::remainder(a - expected, 2 * kPi)));
    conj_err = std::max(conj_err, (conj - h1.g.matrix()).norm());
  }
  o.check(angle_err <= 1e-6, "angle");
  o.check(conj_err <= 1e-6, "two-chart conjugation");
  o.detail << " angle error " << angle_err << ", two-chart after conjugation " << conj_err;
  return o;
}

Outcome integrator() {
  Outcome o;
  const ConnectionForm conn = builtin("constant-so3");
  const PathSpec loop = circle(0, 1.5, 3.0);
  auto run = [&](double h) { return transport(conn, loop, SolverConfig{StepMethod::Rk4Fixed, h, 1, 1e-10}).g.matrix(); };
  const Matrix reference = run(2.5e-4);
  const std::vector<double> steps = {1e-2, 5e-3, 2.5e-3};
  std::vector<double> errors;
  for (double h : steps) errors.push_back((run(h) - reference).norm());
  const double slope = loglog_slope(steps, errors);
  o.check(slope >= 3.7, "slope");

  std::mt19937 rng(51);
  std::normal_distribution<double> n(0.0, 1.0);
  const GroupElement p(oracle::rodrigues({n(rng), n(rng), n(rng)}), conn.group());
  double drift = 0.0;
  std::size_t samples = 0;
  for (double h : steps) {
    const LiftedPath lift = lift_path(conn, loop, p, SolverConfig{StepMethod::Rk4Fixed, h, 1, 1e-10});
    for (const auto& s : lift.samples) {
      const Matrix& u = s.fiber.matrix();
      drift = std::max(drift, (u.transpose() * u - Matrix::Identity(3, 3)).norm());
    }
    samples += lift.samples.size();
  }
  o.check(drift <= 1e-9, "drift");
  o.detail << " slope " << slope << " (errors " << errors[0] << ", " << errors[1] << ", " << errors[2]
           << "), drift " << drift << " over " << samples << " samples";
  return o;
}

Outcome expressions() {
  Outcome o;
  oracle::ExprGenerator gen(3, 9001u);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Expr e = parse(gen(6), 3);
    const std::vector<double> x = gen.point();
    const DualValue d = eval_dual(e, x);
    for (int j = 0; j < 3; ++j) {
      const double fd = oracle::central_difference([&](const std::vector<double>& y) { return eval(e, y); }, x, j, 1e-6);
      worst = std::max(worst, std::abs(d.deriv[j] - fd) / (1.0 + std::abs(d.deriv[j])));
    }
  }
  o.check(worst <= 1e-6, "gradients");
  int mismatches = 0;
  oracle::ExprGenerator texts(4, 77u);
  for (int i = 0; i < 200; ++i) {
    const Expr e = parse(texts(6), 4);
    if (!same_tree(e, parse(to_string(e), 4))) ++mismatches;
  }
  o.check(mismatches == 0, "round trip");
  o.detail << " gradient relative error " << worst << " over 200 cases, round-trip mismatches " << mismatches;
  return o;
}

std::string read_without_timestamp(const fs::path& file) {
  std::ifstream in(file);
  std::string line, out;
  while (std::getline(in, line))
    if (line.find("\"generated_at\"") == std::string::npos) out += line + '\n';
  return out;
}

Outcome determinism(const std::string& cli) {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "holonome-acceptance";
  fs::remove_all(root);
  int count = 0;
  for (const auto& file : shipped_scenarios()) {
    std::string reports[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path dir = root / (file.stem().string() + "-" + std::to_string(run));
      fs::create_directories(dir);
      const std::string cmd = "\"" + cli + "\" run \"" + file.string() + "\" --out \"" + dir.string() + "\" > \"" +
                              (dir / "stdout.txt").string() + "\" 2>&1";
      const int status = std::system(cmd.c_str());
      o.check(status == 0, file.filename().string() + " exit status " + std::to_string(status));
      reports[run] = read_without_timestamp(dir / "report.json");
    }
    o.check(!reports[0].empty() && reports[0] == reports[1], file.filename().string() + " differs");
    ++count;
  }
  o.check(count > 0, "no scenarios");
  o.detail << " " << count << " scenarios, two runs each";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: holonome_acceptance <holonome-cli>\n";
    return 2;
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"transport axioms", axioms},
      {"forward direction", forward},
      {"reconstruction roundtrip", roundtrip},
      {"lifted velocity independence", lifted_velocity},
      {"complementarity and equivariance", complementarity},
      {"flatness verdict", flatness},
      {"sphere latitude holonomy", latitude},
      {"integrator order and drift", integrator},
      {"expression layer", expressions},
      {"cli determinism", [&] { return determinism(argv[1]); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " exception: " << e.what();
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << i + 1 << " (" << criteria[i].first << "): " << (o.pass ? "PASS" : "FAIL") << " -"
              << o.detail.str() << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
