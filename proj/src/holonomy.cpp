#include "holonome/holonomy.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace holonome {

HolonomyResult holonomy(const ConnectionForm& conn, const PathSpec& loop, const SolverConfig& cfg) {
  const ChartPoint a = start_point(loop);
  const ChartPoint b = end_point(loop);
  const double gap = point_distance(a, b, &conn.atlas());
  if (!(gap <= 1e-10)) throw Error(ErrorKind::NotClosed, "loop does not return to its start (gap " + std::to_string(gap) + ")");
  const TransportResult r = transport(conn, loop, cfg);
  const GroupElement g = project_to_group(to_end_chart(conn, r, r.start.chart_id), conn.group());
  HolonomyResult out{g, std::nullopt, r.start, r.step_count};
  const StructureGroup& group = conn.group();
  if (group.orthogonal() && (group.k == 2 || group.k == 3)) out.angle = rotation_angle(g.matrix(), group);
  return out;
}

PathSpec coordinate_rectangle(const ChartPoint& x, int mu, int nu, double eps) {
  const auto n = static_cast<int>(x.coords.size());
  if (mu < 0 || nu < 0 || mu >= n || nu >= n || mu == nu)
    throw Error(ErrorKind::InvalidArgument, "rectangle needs two distinct coordinate directions");
  const Vector e1 = eps * Vector::Unit(n, mu);
  const Vector e2 = eps * Vector::Unit(n, nu);
  const Vector corners[4] = {x.coords, x.coords + e1, x.coords + e1 + e2, x.coords + e2};
  PathSpec loop = straight_line(x.chart_id, corners[0], corners[1]);
  for (int i = 1; i < 4; ++i) loop = juxtapose(loop, straight_line(x.chart_id, corners[i], corners[(i + 1) % 4]));
  return loop;
}

CurvatureEstimate shrinking_loop_curvature(const TransportOracle& oracle, const Atlas& atlas, const ChartPoint& x,
                                           int mu, int nu, const std::vector<double>& eps) {
  if (eps.size() < 2) throw Error(ErrorKind::InvalidArgument, "curvature sweep needs at least two eps values");
  const Box& box = atlas.chart(x.chart_id).domain;
  CurvatureEstimate out;
  out.eps = eps;
  for (double e : eps) {
    if (!(e > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");
    const Vector far = x.coords + e * (Vector::Unit(x.coords.size(), mu) + Vector::Unit(x.coords.size(), nu));
    if (!box.contains(x.coords) || !box.contains(far))
      throw Error(ErrorKind::OutsideChart, "rectangle of size " + std::to_string(e) + " leaves the chart");
    const TransportResult r = oracle(coordinate_rectangle(x, mu, nu, e));
    const AlgebraElement log = group_log(r.g);
    out.estimates.push_back(log.matrix() / (-e * e));
  }
  const std::size_t m = out.estimates.size();
  const Matrix& last = out.estimates[m - 1];
  const double d1 = (out.estimates[m - 2] - last).norm();
  double d0 = std::numeric_limits<double>::quiet_NaN();
  if (m >= 3) d0 = (out.estimates[m - 3] - out.estimates[m - 2]).norm();
  const double ratio = eps[m - 2] / eps[m - 1];
  constexpr double kFloor = 1e-10;
  if (m >= 3 && d1 > kFloor && d0 > kFloor) {
    out.order = std::log(d0 / d1) / std::log(eps[m - 3] / eps[m - 2]);
  } else {
    out.order = std::numeric_limits<double>::quiet_NaN();
  }
  if (std::isfinite(out.order) && out.order > 0.0) {
    out.extrapolated = last + (last - out.estimates[m - 2]) / (std::pow(ratio, out.order) - 1.0);
  } else if (d1 > kFloor) {
    out.extrapolated = last + (last - out.estimates[m - 2]) / (ratio - 1.0);
  } else {
    out.extrapolated = last;
  }
  return out;
}

HomotopyFamily::HomotopyFamily(int chart_id, std::vector<Expr> family, int s_samples, std::string name)
    : chart_id_(chart_id), family_(std::move(family)), s_samples_(s_samples), name_(std::move(name)) {
  if (family_.empty()) throw Error(ErrorKind::InvalidArgument, "homotopy family has no coordinates");
  if (s_samples_ < 2) throw Error(ErrorKind::InvalidArgument, "homotopy family needs s_samples >= 2");
  for (const auto& e : family_)
    if (e.dim() != 2) throw Error(ErrorKind::Dimension, "family expressions take (t, s)");
  for (double t : {0.0, 1.0}) {
    const Vector ref = eval_vector(family_, std::vector<double>{t, 0.0});
    for (int i = 1; i <= 20; ++i) {
      const Vector x = eval_vector(family_, std::vector<double>{t, i / 20.0});
      if ((x - ref).norm() > 1e-10)
        throw Error(ErrorKind::Validation, "family '" + name_ + "' moves its " + (t == 0.0 ? "start" : "end") +
                                               " point as s varies");
    }
  }
}

PathSpec HomotopyFamily::member(double s) const {
  const std::vector<Expr> args = {Expr::variable(0, 1), Expr::constant(s, 1)};
  std::vector<Expr> coords;
  for (const auto& e : family_) coords.push_back(compose(e, args));
  return path_from_exprs(chart_id_, std::move(coords));
}

HomotopyScan homotopy_scan(const TransportOracle& oracle, const HomotopyFamily& family) {
  HomotopyScan scan;
  const int m = family.s_samples();
  for (int i = 0; i < m; ++i) {
    const double s = static_cast<double>(i) / (m - 1);
    scan.s.push_back(s);
    scan.transports.push_back(oracle(family.member(s)).g.matrix());
  }
  for (std::size_t a = 0; a < scan.transports.size(); ++a)
    for (std::size_t b = a + 1; b < scan.transports.size(); ++b)
      scan.spread = std::max(scan.spread, (scan.transports[a] - scan.transports[b]).norm());
  return scan;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Flat: return "FLAT";
    case Verdict::Curved: return "CURVED";
    case Verdict::Inconsistent: return "INCONSISTENT";
  }
  return "INCONSISTENT";
}

std::vector<HomotopyFamily> canned_families(const ConnectionForm& conn, int s_samples) {
  const Chart& chart = conn.atlas().charts().front();
  const int n = chart.dim();
  const Vector c = chart.domain.center();
  const double r = 0.35 * (0.5 * (chart.domain.hi - chart.domain.lo)).minCoeff();
  const Expr t = Expr::variable(0, 2);
  const Expr s = Expr::variable(1, 2);
  constexpr double pi = std::numbers::pi;

  auto family = [&](const Expr& u, const Expr& w, const char* name) {
    std::vector<Expr> coords;
    for (int i = 0; i < n; ++i) {
      if (i == 0) {
        coords.push_back(c[0] + r * u);
      } else if (i == 1) {
        coords.push_back(c[1] + r * w);
      } else {
        coords.push_back(Expr::constant(c[i], 2));
      }
    }
    return HomotopyFamily(chart.id, std::move(coords), s_samples, name);
  };
  return {family(2.0 * t - 1.0, s * sin(pi * t), "arch"),
          family(s * sin(pi * t), 1.0 - 2.0 * t, "side-arch"),
          family(-cos(pi * t), -1.5 * s * sin(pi * t), "deep-arch")};
}

FlatnessVerdict flatness_verdict(const ConnectionForm& conn, const SolverConfig& cfg, int grid) {
  FlatnessVerdict out;
  out.grid = grid;
  const FlatnessReport flat = is_flat(conn, grid, out.curvature_tol);
  out.max_curvature = flat.max_norm;
  out.worst = flat.worst;
  const TransportOracle oracle = engine_oracle(conn, cfg);
  double max_spread = 0.0;
  for (const auto& fam : canned_families(conn)) {
    const HomotopyScan scan = homotopy_scan(oracle, fam);
    out.families.push_back(fam.name());
    out.spreads.push_back(scan.spread);
    max_spread = std::max(max_spread, scan.spread);
  }
  const bool curvature_zero = out.max_curvature <= out.curvature_tol;
  const bool spreads_zero = max_spread <= out.spread_tol;
  if (curvature_zero && spreads_zero) {
    out.verdict = Verdict::Flat;
  } else if (!curvature_zero && !spreads_zero) {
    out.verdict = Verdict::Curved;
  } else {
    out.verdict = Verdict::Inconsistent;
  }
  return out;
}

}  // namespace holonome
