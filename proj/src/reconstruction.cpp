#include "holonome/reconstruction.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/SVD>

namespace holonome {

namespace {

TransportResult call_oracle(const TransportOracle& oracle, const PathSpec& path) {
  try {
    return oracle(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::OracleFailure, e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::OracleFailure, e.what());
  }
}

Matrix left_trivialize(const Matrix& xi, const GroupElement& p) { return p.inverse().matrix() * xi * p.matrix(); }

}  // namespace

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::InvalidArgument, "slope needs >= 2 pairs");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double m = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

LiftedVector lift_vector(const TransportOracle& oracle, const ChartPoint& x, const GroupElement& p,
                         const TangentVector& v, double h) {
  if (!(h >= 1e-6 && h <= 1e-2)) throw Error(ErrorKind::InvalidArgument, "lift step h must lie in [1e-6, 1e-2]");
  if (v.base.chart_id != x.chart_id || v.base.coords.size() != x.coords.size() ||
      (v.base.coords - x.coords).norm() != 0.0)
    throw Error(ErrorKind::InvalidArgument, "tangent vector is not based at x");
  const StructureGroup& group = p.group();
  const Matrix forward = call_oracle(oracle, straight_line(x.chart_id, x.coords, x.coords + h * v.components)).g.matrix();
  const Matrix backward = call_oracle(oracle, straight_line(x.chart_id, x.coords, x.coords - h * v.components)).g.matrix();
  const GroupElement step = project_to_group(forward * backward.inverse(), group);
  const Matrix xi = log_near_identity(step.matrix(), group) / (2.0 * h);
  return {v, AlgebraElement(left_trivialize(xi, p), group), x, p};
}

LemmaReport lemma_independence_check(const TransportOracle& oracle, const ChartPoint& x, const GroupElement& p,
                                     const TangentVector& v, const std::vector<PathSpec>& paths,
                                     const std::vector<double>& steps) {
  if (paths.size() < 2) throw Error(ErrorKind::InvalidArgument, "lemma check needs at least two paths");
  if (steps.size() < 2) throw Error(ErrorKind::InvalidArgument, "lemma check needs at least two steps");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!(steps[i] > 0.0 && steps[i] <= 1.0)) throw Error(ErrorKind::InvalidArgument, "lemma steps must lie in (0, 1]");
    for (std::size_t j = 0; j < i; ++j)
      if (steps[i] == steps[j]) throw Error(ErrorKind::InvalidArgument, "lemma steps must be distinct");
  }
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const ChartPoint s = start_point(paths[i]);
    const TangentVector w = path_velocity(paths[i], 0.0);
    if (s.chart_id != x.chart_id || (s.coords - x.coords).norm() > 1e-10 ||
        (w.components - v.components).norm() > 1e-10)
      throw Error(ErrorKind::VelocityMismatch,
                  "path " + std::to_string(i) + " does not start at x with the given velocity");
  }

  LemmaReport report;
  report.steps = steps;
  report.paths = static_cast<int>(paths.size());
  const StructureGroup& group = p.group();
  std::vector<std::vector<Matrix>> velocities;  // [step][path]
  for (double h : steps) {
    auto& row = velocities.emplace_back();
    for (const auto& path : paths) {
      const Matrix u = call_oracle(oracle, restrict_path(path, 0.0, h)).g.matrix();
      row.push_back(left_trivialize(log_near_identity(u, group) / h, p));
    }
    double worst = 0.0;
    for (std::size_t a = 0; a < row.size(); ++a)
      for (std::size_t b = a + 1; b < row.size(); ++b) worst = std::max(worst, (row[a] - row[b]).norm());
    report.deviations.push_back(worst);
  }

  constexpr double kFloor = 1e-11;
  const double largest = *std::max_element(report.deviations.begin(), report.deviations.end());
  const double d_min = report.deviations.back();
  if (largest <= kFloor) {
    report.degenerate = true;
    report.slope = std::numeric_limits<double>::quiet_NaN();
    report.extrapolated = d_min;
    return report;
  }
  report.slope = loglog_slope(report.steps, report.deviations);
  // Polynomial extrapolation of each pairwise difference matrix to h = 0.
  std::vector<double> weights(steps.size(), 1.0);
  for (std::size_t i = 0; i < steps.size(); ++i)
    for (std::size_t j = 0; j < steps.size(); ++j)
      if (j != i) weights[i] *= steps[j] / (steps[j] - steps[i]);
  double limit = 0.0;
  for (std::size_t a = 0; a < paths.size(); ++a)
    for (std::size_t b = a + 1; b < paths.size(); ++b) {
      Matrix d = Matrix::Zero(velocities[0][a].rows(), velocities[0][a].cols());
      for (std::size_t i = 0; i < steps.size(); ++i) d += weights[i] * (velocities[i][a] - velocities[i][b]);
      limit = std::max(limit, d.norm());
    }
  report.extrapolated = limit;
  return report;
}

HorizontalBasis horizontal_space(const TransportOracle& oracle, const ChartPoint& x, const GroupElement& p, double h) {
  const int n = static_cast<int>(x.coords.size());
  const int k = p.group().k;
  HorizontalBasis basis{x, p, {}, 1.0};
  Matrix stacked(n, n + k * k);
  for (int mu = 0; mu < n; ++mu) {
    TangentVector e{x, Vector::Unit(n, mu)};
    basis.lifts.push_back(lift_vector(oracle, x, p, e, h));
    const Matrix& a = basis.lifts.back().vertical_part.matrix();
    stacked.row(mu).head(n) = e.components.transpose();
    stacked.row(mu).tail(k * k) = Eigen::Map<const Eigen::RowVectorXd>(a.data(), k * k);
  }
  Eigen::JacobiSVD<Matrix> svd(stacked);
  const Vector s = svd.singularValues();
  basis.condition = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(basis.condition < 1e6)) throw Error(ErrorKind::IllConditionedBasis, "horizontal lifts are nearly dependent");
  return basis;
}

Splitting split_horizontal_vertical(const HorizontalBasis& basis, const Vector& base, const Matrix& fiber) {
  if (!(basis.condition < 1e6)) throw Error(ErrorKind::IllConditionedBasis, "horizontal lifts are nearly dependent");
  const auto n = static_cast<int>(basis.lifts.size());
  if (base.size() != n) throw Error(ErrorKind::Dimension, "base part has the wrong dimension");
  const int k = basis.p.group().k;
  if (fiber.rows() != k || fiber.cols() != k) throw Error(ErrorKind::Dimension, "fiber part has the wrong shape");
  Splitting out;
  out.coefficients = base;
  out.horizontal = Matrix::Zero(k, k);
  for (int mu = 0; mu < n; ++mu)
    out.horizontal += base[mu] * basis.lifts[static_cast<std::size_t>(mu)].vertical_part.matrix();
  out.vertical = fiber - out.horizontal;
  return out;
}

ReconstructionTable reconstruct_connection(const TransportOracle& oracle, const StructureGroup& group,
                                           const std::vector<ChartPoint>& grid, double h, double oracle_step) {
  ReconstructionTable table;
  table.h = h;
  table.oracle_step = oracle_step;
  const GroupElement id = GroupElement::identity(group);
  for (const auto& x : grid) {
    try {
      const HorizontalBasis basis = horizontal_space(oracle, x, id, h);
      ReconstructedPoint point{x, {}};
      for (const auto& lift : basis.lifts) point.coefficients.push_back(-lift.vertical_part.matrix());
      table.points.push_back(std::move(point));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::OracleFailure && e.kind() != ErrorKind::OutOfBranch) throw;
      table.dropped.push_back({x, e.what()});
    }
  }
  return table;
}

void write_reconstruction_csv(std::ostream& os, const ReconstructionTable& table) {
  const int n = table.points.empty() ? 0 : static_cast<int>(table.points.front().x.coords.size());
  os << "chart_id";
  for (int i = 0; i < n; ++i) os << ",x" << (i + 1);
  os << ",mu,i,j,value,h\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& point : table.points) {
    for (std::size_t mu = 0; mu < point.coefficients.size(); ++mu) {
      const Matrix& a = point.coefficients[mu];
      for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) {
          os << point.x.chart_id;
          for (int c = 0; c < n; ++c) os << ',' << num(point.x.coords[c]);
          os << ',' << mu << ',' << i << ',' << j << ',' << num(a(i, j)) << ',' << num(table.h) << '\n';
        }
    }
  }
}

std::vector<ChartPoint> reconstruction_grid(const Atlas& atlas, int count) {
  if (count < 1) throw Error(ErrorKind::InvalidArgument, "grid count must be >= 1");
  std::vector<ChartPoint> grid;
  for (const auto& chart : atlas.charts()) {
    const int n = chart.dim();
    const Vector c = chart.domain.center();
    const Vector half = 0.25 * (chart.domain.hi - chart.domain.lo);
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (;;) {
      ChartPoint p{chart.id, Vector(n)};
      for (int i = 0; i < n; ++i) {
        const double u = count == 1 ? 0.0 : -1.0 + 2.0 * idx[static_cast<std::size_t>(i)] / (count - 1);
        p.coords[i] = c[i] + u * half[i];
      }
      grid.push_back(std::move(p));
      int axis = 0;
      while (axis < n && ++idx[static_cast<std::size_t>(axis)] == count) idx[static_cast<std::size_t>(axis++)] = 0;
      if (axis == n) break;
    }
  }
  return grid;
}

RoundtripReport roundtrip_report(const ConnectionForm& conn, const SolverConfig& cfg, const std::vector<double>& steps,
                                 int grid) {
  if (steps.empty()) throw Error(ErrorKind::InvalidArgument, "roundtrip needs at least one step");
  RoundtripReport report;
  report.steps = steps;
  const TransportOracle oracle = engine_oracle(conn, cfg);
  const std::vector<ChartPoint> points = reconstruction_grid(conn.atlas(), grid);
  report.grid_points = static_cast<int>(points.size());
  std::vector<Matrix> exact;
  for (double h : steps) {
    const ReconstructionTable table = reconstruct_connection(oracle, conn.group(), points, h, cfg.h);
    report.dropped = std::max(report.dropped, static_cast<int>(table.dropped.size()));
    double worst = 0.0;
    for (const auto& point : table.points) {
      conn.field(point.x.chart_id)
          .values(std::span<const double>(point.x.coords.data(), static_cast<std::size_t>(point.x.coords.size())),
                  exact);
      for (std::size_t mu = 0; mu < exact.size(); ++mu)
        worst = std::max(worst, (point.coefficients[mu] - exact[mu]).norm());
    }
    report.errors.push_back(worst);
  }
  const double smallest_h_error = report.errors[static_cast<std::size_t>(
      std::min_element(steps.begin(), steps.end()) - steps.begin())];
  const double largest = *std::max_element(report.errors.begin(), report.errors.end());
  if (largest <= report.noise_floor || steps.size() < 2) {
    report.degenerate = true;
    report.order = std::numeric_limits<double>::quiet_NaN();
    report.pass = smallest_h_error <= 1e-3 && report.dropped == 0;
    return report;
  }
  report.order = loglog_slope(steps, report.errors);
  report.pass = report.order >= 1.7 && smallest_h_error <= 1e-3 && report.dropped == 0;
  return report;
}

}  // namespace holonome
