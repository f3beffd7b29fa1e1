#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "holonome/holonomy.hpp"
#include "oracles.hpp"

using namespace holonome;

namespace {

constexpr double kPi = std::numbers::pi;

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InvalidArgument;
}

ConnectionForm constant_j(double lambda) {
  const Box box{Vector::Constant(2, -2.0), Vector::Constant(2, 2.0)};
  const Expr zero = Expr::constant(0.0, 2);
  const Expr l = Expr::constant(lambda, 2);
  std::vector<std::vector<std::vector<Expr>>> table = {{{zero, -l}, {l, zero}}, {{zero, zero}, {zero, zero}}};
  return ConnectionForm(StructureGroup::so(2), Atlas({Chart{0, box}}, {}),
                        {std::make_shared<ExprCoefficients>(2, 2, std::move(table))}, {});
}

PathSpec unit_square() {
  const Vector c[4] = {Vector::Zero(2), Vector::Unit(2, 0), Vector::Ones(2), Vector::Unit(2, 1)};
  PathSpec loop = straight_line(0, c[0], c[1]);
  for (int i = 1; i < 4; ++i) loop = juxtapose(loop, straight_line(0, c[i], c[(i + 1) % 4]));
  return loop;
}

GroupElement random_rotation(std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return GroupElement(oracle::rodrigues({n(rng), n(rng), n(rng)}), StructureGroup::so(3));
}

}  // namespace

TEST(Transport, ZeroConnectionIsIdentity) {
  const ConnectionForm flat = builtin("flat-so2");
  const Expr t = Expr::variable(0, 1);
  const PathSpec wiggle = path_from_exprs(0, {sin(3 * t), t * t - 0.5});
  EXPECT_LE((transport(flat, wiggle, {}).g.matrix() - Matrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(Transport, ConstantCoefficientClosedForm) {
  const ConnectionForm conn = constant_j(kPi / 2);
  const Expr t = Expr::variable(0, 1);
  const TransportResult r = transport(conn, path_from_exprs(0, {t, 0.0 * t}), {});
  Matrix expected(2, 2);
  expected << 0, 1, -1, 0;
  EXPECT_LE((r.g.matrix() - expected).norm(), 1e-9);
  EXPECT_EQ(r.step_count, 1000);
}

TEST(Transport, AbelianSquareMatchesStokes) {
  const ConnectionForm conn = builtin("abelian-area(1.5)");
  const TransportResult r = transport(conn, unit_square(), {});
  const double flux = oracle::abelian_loop_integral(1.5, {{0, 0}, {1, 0}, {1, 1}, {0, 1}}, 100000);
  EXPECT_NEAR(flux, 1.5, 1e-10);
  EXPECT_LE((r.g.matrix() - oracle::rotation2(-flux)).norm(), 1e-7);
}

TEST(Transport, ConstantSo3LineMatchesRodrigues) {
  const ConnectionForm conn = builtin("constant-so3");
  const Vector a = Vector::Constant(2, -0.5);
  Vector b(2);
  b << 1.2, 0.4;
  const TransportResult r = transport(conn, straight_line(0, a, b), {});
  const Vector d = b - a;
  // A(d) = d1 L1 + 0.5 d2 L2, so U = exp(-A(d)).
  EXPECT_LE((r.g.matrix() - oracle::rodrigues({-d[0], -0.5 * d[1], 0.0})).norm(), 1e-9);
}

TEST(Transport, StepDoublingEstimatesAndUnderflow) {
  const ConnectionForm conn = builtin("constant-so3");
  const Expr t = Expr::variable(0, 1);
  const PathSpec arc = path_from_exprs(0, {1.5 * cos(2 * kPi * t), 1.5 * sin(2 * kPi * t)});
  SolverConfig cfg;
  cfg.method = StepMethod::Rk4Doubling;
  cfg.h = 1e-2;
  cfg.tol = 1e-10;
  const TransportResult coarse = transport(conn, arc, cfg);
  const TransportResult fine = transport(conn, arc, SolverConfig{StepMethod::Rk4Fixed, 1e-4, 1, 1e-10});
  EXPECT_GT(coarse.est_error, 0.0);
  EXPECT_LE((coarse.g.matrix() - fine.g.matrix()).norm(), 1e-8);

  cfg.tol = 1e-300;
  EXPECT_EQ(kind_of([&] { transport(conn, arc, cfg); }), ErrorKind::StepUnderflow);
}

TEST(Transport, ConfigValidation) {
  const ConnectionForm conn = builtin("flat-so2");
  const PathSpec p = constant_path({0, Vector::Zero(2)});
  EXPECT_EQ(kind_of([&] { transport(conn, p, SolverConfig{StepMethod::Rk4Fixed, 0.5, 1, 1e-10}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { transport(conn, p, SolverConfig{StepMethod::Rk4Fixed, 1e-3, 0, 1e-10}); }), ErrorKind::InvalidArgument);
}

TEST(Transport, LeavingTheOnlyChart) {
  const ConnectionForm conn = builtin("abelian-area(1.5)");
  EXPECT_EQ(kind_of([&] { transport(conn, straight_line(0, Vector::Zero(2), Vector::Constant(2, 3.0)), {}); }),
            ErrorKind::OutsideChart);
}

TEST(Transport, ChartSwitchingMatchesSingleChart) {
  // Circle of radius 1.7 leaves the two-chart atlas's first box at four arcs.
  const Expr t = Expr::variable(0, 1);
  const PathSpec loop = path_from_exprs(0, {1.7 * cos(2 * kPi * t), 1.7 * sin(2 * kPi * t)});
  const HolonomyResult one = holonomy(builtin("levi-civita-s2-stereo"), loop, {});
  const HolonomyResult two = holonomy(builtin("levi-civita-s2-twochart"), loop, {});
  const double theta = 2 * std::atan(1.7);
  EXPECT_NEAR(wrap_angle(*one.angle + 2 * kPi * (1 - std::cos(theta))), 0.0, 1e-6);
  EXPECT_LE((one.g.matrix() - two.g.matrix()).norm(), 1e-6);
}

TEST(Transport, ProjectionCadence) {
  const ConnectionForm conn = builtin("constant-so3");
  const Expr t = Expr::variable(0, 1);
  const PathSpec arc = path_from_exprs(0, {1.5 * cos(6 * kPi * t), 1.5 * sin(6 * kPi * t)});
  const TransportResult every = transport(conn, arc, SolverConfig{StepMethod::Rk4Fixed, 1e-3, 1, 1e-10});
  const TransportResult sparse = transport(conn, arc, SolverConfig{StepMethod::Rk4Fixed, 1e-3, 50, 1e-10});
  EXPECT_LE(orthogonality_defect(sparse.g.matrix()), 1e-12);
  EXPECT_LE((every.g.matrix() - sparse.g.matrix()).norm(), 1e-8);
}

TEST(LiftPath, ConstantPathStaysPut) {
  const ConnectionForm conn = builtin("constant-so3");
  std::mt19937 rng(1);
  const GroupElement p = random_rotation(rng);
  const LiftedPath lift = lift_path(conn, constant_path({0, Vector::Constant(2, 0.2)}), p, {});
  ASSERT_FALSE(lift.samples.empty());
  for (const auto& s : lift.samples) {
    EXPECT_EQ((s.point.coords - Vector::Constant(2, 0.2)).norm(), 0.0);
    EXPECT_LE((s.fiber.matrix() - p.matrix()).norm(), 1e-15);
  }
}

TEST(LiftPath, EndpointAndEquivariance) {
  const ConnectionForm conn = builtin("constant-so3");
  const Expr t = Expr::variable(0, 1);
  const PathSpec arc = path_from_exprs(0, {cos(kPi * t), sin(kPi * t)});
  std::mt19937 rng(2);
  const GroupElement p = random_rotation(rng);
  const LiftedPath lift = lift_path(conn, arc, p, {});
  EXPECT_EQ((lift.samples.front().fiber.matrix() - p.matrix()).norm(), 0.0);
  EXPECT_LE((lift.samples.back().fiber.matrix() - (transport(conn, arc, {}).g * p).matrix()).norm(), 1e-10);
  for (const auto& s : lift.samples) EXPECT_LE(orthogonality_defect(s.fiber.matrix()), 1e-9);

  for (int i = 0; i < 10; ++i) {
    const GroupElement g = random_rotation(rng);
    const LiftedPath moved = lift_path(conn, arc, p * g, {});
    ASSERT_EQ(moved.samples.size(), lift.samples.size());
    for (std::size_t j = 0; j < lift.samples.size(); ++j)
      EXPECT_LE((moved.samples[j].fiber.matrix() - lift.samples[j].fiber.matrix() * g.matrix()).norm(), 1e-12);
  }
}

TEST(LiftPath, IdentityStartTracesTransport) {
  const ConnectionForm conn = builtin("abelian-area(1.5)");
  const PathSpec sq = unit_square();
  const LiftedPath lift = lift_path(conn, sq, GroupElement::identity(conn.group()), {});
  EXPECT_LE((lift.samples.back().fiber.matrix() - transport(conn, sq, {}).g.matrix()).norm(), 1e-12);
  for (std::size_t i = 1; i < lift.samples.size(); ++i) EXPECT_GE(lift.samples[i].t, lift.samples[i - 1].t);
}

TEST(Axioms, EngineSatisfiesThemOnBuiltins) {
  for (const char* name : {"flat-so2", "abelian-area(1.5)", "constant-so3", "levi-civita-s2-stereo", "pure-gauge"}) {
    const ConnectionForm conn = builtin(name);
    const AxiomReport r = verify_axioms(engine_oracle(conn, {}), default_axiom_suite(conn), 1e-7);
    EXPECT_TRUE(r.pass) << name;
    EXPECT_TRUE(r.failures.empty()) << name;
    EXPECT_EQ(r.checks, 9);
  }
}

TEST(Axioms, BrokenOracleFailsReparametrization) {
  const ConnectionForm conn = builtin("abelian-area(1.5)");
  const TransportOracle engine = engine_oracle(conn, {});
  const TransportOracle truncated = [&](const PathSpec& p) { return engine(restrict_path(p, 0.0, 0.99)); };
  const AxiomReport r = verify_axioms(truncated, default_axiom_suite(conn), 1e-7);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.reparametrization_deviation, 1e-3);
}

TEST(Axioms, ConstantIdentityOracleIsConsistent) {
  const ConnectionForm conn = builtin("abelian-area(1.5)");
  const TransportOracle trivial = [&](const PathSpec& p) {
    return TransportResult{start_point(p), end_point(p), GroupElement::identity(conn.group()), 0, 0.0};
  };
  EXPECT_TRUE(verify_axioms(trivial, default_axiom_suite(conn), 1e-7).pass);
}

TEST(Axioms, OracleErrorsBecomeEntries) {
  const ConnectionForm conn = builtin("flat-so2");
  const TransportOracle failing = [](const PathSpec&) -> TransportResult { throw Error(ErrorKind::OracleFailure, "down"); };
  const AxiomReport r = verify_axioms(failing, default_axiom_suite(conn), 1e-7);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.failures.size(), 9u);
}

TEST(InversePath, Examples) {
  const Expr t = Expr::variable(0, 1);
  const PathSpec wiggle = path_from_exprs(0, {sin(3 * t) - 0.5, t * t - 0.5});
  EXPECT_LE(inverse_path_check(builtin("flat-so2"), wiggle, {}), 1e-12);
  EXPECT_LE(inverse_path_check(builtin("abelian-area(1.5)"), unit_square(), {}), 1e-7);
  EXPECT_LE(inverse_path_check(builtin("constant-so3"), wiggle, {}), 1e-7);
}
