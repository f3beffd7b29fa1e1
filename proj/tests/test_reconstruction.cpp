#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "holonome/reconstruction.hpp"
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

std::vector<Matrix> exact(const ConnectionForm& conn, const ChartPoint& x) {
  std::vector<Matrix> a;
  conn.field(x.chart_id).values(std::span<const double>(x.coords.data(), static_cast<std::size_t>(x.coords.size())), a);
  return a;
}

}  // namespace

TEST(LiftVector, ZeroConnection) {
  const ConnectionForm conn = builtin("flat-so2");
  const ChartPoint x{0, Vector::Constant(2, 0.1)};
  const LiftedVector l = lift_vector(engine_oracle(conn, {}), x, GroupElement::identity(conn.group()), {x, Vector::Ones(2)}, 1e-3);
  EXPECT_LE(l.vertical_part.matrix().norm(), 1e-10);
  EXPECT_EQ((l.base_part.components - Vector::Ones(2)).norm(), 0.0);
}

TEST(LiftVector, ConstantCoefficient) {
  const ConnectionForm conn = constant_j(0.7);
  const ChartPoint x{0, Vector::Zero(2)};
  const LiftedVector l =
      lift_vector(engine_oracle(conn, {}), x, GroupElement::identity(conn.group()), {x, Vector::Unit(2, 0)}, 1e-3);
  EXPECT_LE((l.vertical_part.matrix() + 0.7 * so2_generator()).norm(), 2e-4);
}

TEST(LiftVector, LinearInTheVector) {
  const ConnectionForm conn = builtin("levi-civita-s2-stereo");
  const TransportOracle oracle = engine_oracle(conn, {});
  const GroupElement id = GroupElement::identity(conn.group());
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 5; ++i) {
    const ChartPoint x{0, Vector::Constant(2, u(rng))};
    Vector v(2), w(2);
    v << u(rng), u(rng);
    w << u(rng), u(rng);
    const double a = u(rng), b = u(rng);
    const Matrix lv = lift_vector(oracle, x, id, {x, v}, 1e-3).vertical_part.matrix();
    const Matrix lw = lift_vector(oracle, x, id, {x, w}, 1e-3).vertical_part.matrix();
    const Matrix lc = lift_vector(oracle, x, id, {x, a * v + b * w}, 1e-3).vertical_part.matrix();
    EXPECT_LE((lc - (a * lv + b * lw)).norm(), 5e-4);
  }
}

TEST(LiftVector, StepBounds) {
  const ConnectionForm conn = builtin("flat-so2");
  const ChartPoint x{0, Vector::Zero(2)};
  const GroupElement id = GroupElement::identity(conn.group());
  EXPECT_EQ(kind_of([&] { lift_vector(engine_oracle(conn, {}), x, id, {x, Vector::Ones(2)}, 0.1); }),
            ErrorKind::InvalidArgument);
  const TransportOracle failing = [](const PathSpec&) -> TransportResult { throw Error(ErrorKind::OutsideChart, "edge"); };
  EXPECT_EQ(kind_of([&] { lift_vector(failing, x, id, {x, Vector::Ones(2)}, 1e-3); }), ErrorKind::OracleFailure);
}

TEST(LiftedVelocity, StraightVersusParabolaOnZeroConnection) {
  const ConnectionForm conn = builtin("flat-so2");
  const ChartPoint x{0, Vector::Zero(2)};
  const Expr t = Expr::variable(0, 1);
  const std::vector<PathSpec> paths = {path_from_exprs(0, {t, 0.0 * t}), path_from_exprs(0, {t, t * t})};
  const LemmaReport r = lemma_independence_check(engine_oracle(conn, {}), x, GroupElement::identity(conn.group()),
                                                 {x, Vector::Unit(2, 0)}, paths);
  for (double d : r.deviations) EXPECT_LE(d, 1e-11);
  EXPECT_TRUE(r.degenerate);
}

TEST(LiftedVelocity, AbelianDeviationsShrink) {
  const ConnectionForm conn = builtin("abelian-area(1.5)");
  const ChartPoint x{0, Vector::Constant(2, 0.2)};
  const Expr t = Expr::variable(0, 1);
  const std::vector<PathSpec> paths = {path_from_exprs(0, {0.2 + t, 0.2 + 0.0 * t}),
                                       path_from_exprs(0, {0.2 + t, 0.2 + t * t})};
  const LemmaReport r = lemma_independence_check(engine_oracle(conn, {}), x, GroupElement::identity(conn.group()),
                                                 {x, Vector::Unit(2, 0)}, paths);
  EXPECT_GE(r.slope, 0.9);
  EXPECT_LE(r.extrapolated, 1e-6);
  EXPECT_GT(r.deviations[0], r.deviations[1]);
  EXPECT_GT(r.deviations[1], r.deviations[2]);
}

TEST(LiftedVelocity, LineVersusArcOnSphere) {
  const ConnectionForm conn = builtin("levi-civita-s2-stereo");
  const ChartPoint x{0, Vector::Unit(2, 0)};
  const Expr t = Expr::variable(0, 1);
  // Unit circle through (1, 0) with tangent (0, 1).
  const std::vector<PathSpec> paths = {path_from_exprs(0, {1.0 + 0.0 * t, t}), path_from_exprs(0, {cos(t), sin(t)})};
  const LemmaReport r = lemma_independence_check(engine_oracle(conn, {}), x, GroupElement::identity(conn.group()),
                                                 {x, Vector::Unit(2, 1)}, paths);
  EXPECT_GE(r.slope, 0.9);
  EXPECT_LE(r.extrapolated, 1e-6);
}

TEST(LiftedVelocity, VelocityMismatch) {
  const ConnectionForm conn = builtin("flat-so2");
  const ChartPoint x{0, Vector::Zero(2)};
  const Expr t = Expr::variable(0, 1);
  const std::vector<PathSpec> paths = {path_from_exprs(0, {t, 0.0 * t}), path_from_exprs(0, {2.0 * t, 0.0 * t})};
  EXPECT_EQ(kind_of([&] {
              lemma_independence_check(engine_oracle(conn, {}), x, GroupElement::identity(conn.group()),
                                       {x, Vector::Unit(2, 0)}, paths);
            }),
            ErrorKind::VelocityMismatch);
}

TEST(HorizontalSpace, ZeroAndConstantSo3) {
  const ChartPoint x{0, Vector::Constant(2, 0.3)};
  const ConnectionForm flat = builtin("flat-so2");
  const HorizontalBasis b0 = horizontal_space(engine_oracle(flat, {}), x, GroupElement::identity(flat.group()), 1e-3);
  ASSERT_EQ(b0.lifts.size(), 2u);
  for (int mu = 0; mu < 2; ++mu) {
    EXPECT_EQ((b0.lifts[static_cast<std::size_t>(mu)].base_part.components - Vector::Unit(2, mu)).norm(), 0.0);
    EXPECT_LE(b0.lifts[static_cast<std::size_t>(mu)].vertical_part.matrix().norm(), 1e-10);
  }

  const ConnectionForm so3 = builtin("constant-so3(1,0.5)");
  const HorizontalBasis b = horizontal_space(engine_oracle(so3, {}), x, GroupElement::identity(so3.group()), 1e-3);
  EXPECT_LE((b.lifts[0].vertical_part.matrix() + so3_generator(0)).norm(), 2e-4);
  EXPECT_LE((b.lifts[1].vertical_part.matrix() + 0.5 * so3_generator(1)).norm(), 2e-4);
  EXPECT_LT(b.condition, 1e6);
}

TEST(HorizontalSpace, EquivariantUnderRightTranslation) {
  const ConnectionForm conn = builtin("constant-so3");
  const TransportOracle oracle = engine_oracle(conn, {});
  const ChartPoint x{0, Vector::Constant(2, -0.4)};
  std::mt19937 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  const GroupElement p(oracle::rodrigues({n(rng), n(rng), n(rng)}), conn.group());
  const HorizontalBasis at_p = horizontal_space(oracle, x, p, 1e-3);
  for (int i = 0; i < 5; ++i) {
    const GroupElement g(oracle::rodrigues({n(rng), n(rng), n(rng)}), conn.group());
    const HorizontalBasis at_pg = horizontal_space(oracle, x, p * g, 1e-3);
    for (std::size_t mu = 0; mu < 2; ++mu) {
      const Matrix moved = g.inverse().matrix() * at_p.lifts[mu].vertical_part.matrix() * g.matrix();
      EXPECT_LE((at_pg.lifts[mu].vertical_part.matrix() - moved).norm(), 1e-6);
    }
  }
}

TEST(Split, Examples) {
  const ConnectionForm conn = builtin("constant-so3");
  const ChartPoint x{0, Vector::Zero(2)};
  const HorizontalBasis basis = horizontal_space(engine_oracle(conn, {}), x, GroupElement::identity(conn.group()), 1e-3);

  const Matrix a = so3_generator(2);
  const Splitting vertical = split_horizontal_vertical(basis, Vector::Zero(2), a);
  EXPECT_EQ(vertical.horizontal.norm(), 0.0);
  EXPECT_EQ((vertical.vertical - a).norm(), 0.0);

  const Splitting lift = split_horizontal_vertical(basis, Vector::Unit(2, 0), basis.lifts[0].vertical_part.matrix());
  EXPECT_LE(lift.vertical.norm(), 1e-10);

  const ConnectionForm flat = builtin("flat-so2");
  const HorizontalBasis fb = horizontal_space(engine_oracle(flat, {}), x, GroupElement::identity(flat.group()), 1e-3);
  Vector base(2);
  base << 0.3, -1.1;
  const Matrix fiber = 0.8 * so2_generator();
  EXPECT_EQ((split_horizontal_vertical(fb, base, fiber).vertical - fiber).norm(), 0.0);
}

TEST(Split, RecomposesAndHorizontalHasNoVerticalResidual) {
  const ConnectionForm conn = builtin("levi-civita-s2-stereo");
  const TransportOracle oracle = engine_oracle(conn, {});
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    const ChartPoint x{0, Vector::Constant(2, u(rng))};
    const GroupElement p(oracle::rotation2(3 * u(rng)), conn.group());
    const HorizontalBasis basis = horizontal_space(oracle, x, p, 1e-3);
    for (int j = 0; j < 10; ++j) {
      Vector base(2);
      base << u(rng), u(rng);
      const Matrix fiber = u(rng) * so2_generator();
      const Splitting s = split_horizontal_vertical(basis, base, fiber);
      EXPECT_LE((s.horizontal + s.vertical - fiber).norm(), 1e-10);
      EXPECT_EQ((s.coefficients - base).norm(), 0.0);
      EXPECT_EQ(split_horizontal_vertical(basis, s.coefficients, s.horizontal).vertical.norm(), 0.0);
    }
  }
}

TEST(Reconstruct, ZeroAndAbelian) {
  const ConnectionForm flat = builtin("flat-so2");
  const auto grid = reconstruction_grid(flat.atlas(), 5);
  EXPECT_EQ(grid.size(), 25u);
  const ReconstructionTable t0 = reconstruct_connection(engine_oracle(flat, {}), flat.group(), grid, 1e-3);
  for (const auto& p : t0.points)
    for (const auto& a : p.coefficients) EXPECT_LE(a.norm(), 1e-10);

  for (const char* name : {"abelian-area(1.5)", "levi-civita-s2-stereo"}) {
    const ConnectionForm conn = builtin(name);
    std::vector<ChartPoint> square;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) square.push_back({0, Vector{{-1.0 + 0.5 * i, -1.0 + 0.5 * j}}});
    const ReconstructionTable t = reconstruct_connection(engine_oracle(conn, {}), conn.group(), square, 1e-3);
    ASSERT_EQ(t.points.size(), 25u);
    double worst = 0.0;
    for (const auto& p : t.points) {
      const auto a = exact(conn, p.x);
      for (std::size_t mu = 0; mu < 2; ++mu) worst = std::max(worst, (p.coefficients[mu] - a[mu]).norm());
    }
    EXPECT_LE(worst, std::string(name) == "abelian-area(1.5)" ? 3e-4 : 5e-4) << name;
  }
}

TEST(Reconstruct, DropsFailingPoints) {
  const ConnectionForm conn = builtin("abelian-area(1.5)");
  const std::vector<ChartPoint> grid = {{0, Vector::Zero(2)}, {0, Vector::Constant(2, 1.9999)}};
  const ReconstructionTable t = reconstruct_connection(engine_oracle(conn, {}), conn.group(), grid, 1e-3);
  EXPECT_EQ(t.points.size(), 1u);
  ASSERT_EQ(t.dropped.size(), 1u);
  EXPECT_NE(t.dropped[0].reason.find("OracleFailure"), std::string::npos);

  std::ostringstream os;
  write_reconstruction_csv(os, t);
  const std::string csv = os.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "chart_id,x1,x2,mu,i,j,value,h");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 4);
}

TEST(Roundtrip, ZeroIsDegenerate) {
  const RoundtripReport r = roundtrip_report(builtin("flat-so2"), {});
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(r.pass);
}

TEST(Roundtrip, SphereHasSecondOrder) {
  const RoundtripReport r = roundtrip_report(builtin("levi-civita-s2-stereo"), {});
  EXPECT_FALSE(r.degenerate);
  EXPECT_NEAR(r.order, 2.0, 0.3);
  EXPECT_TRUE(r.pass);
}

TEST(Slope, LogLogFit) {
  EXPECT_NEAR(loglog_slope({1.0, 2.0, 4.0}, {3.0, 12.0, 48.0}), 2.0, 1e-14);
}
