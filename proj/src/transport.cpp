#include "holonome/transport.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace holonome {

void SolverConfig::validate() const {
  if (!(h > 0.0 && h <= 0.1)) throw Error(ErrorKind::InvalidArgument, "solver step h must lie in (0, 0.1]");
  if (project_every < 1) throw Error(ErrorKind::InvalidArgument, "project_every must be >= 1");
  if (method == StepMethod::Rk4Doubling && !(tol > 0.0))
    throw Error(ErrorKind::InvalidArgument, "step-doubling needs tol > 0");
}

namespace {

constexpr double kCrossingTolerance = 1e-12;
constexpr double kMinStep = 1e-7;
constexpr int kMaxChartSwitches = 10000;

using Observer = std::function<void(double t, const ChartPoint& x, const Matrix& u)>;

/// Integration state for one transport: the accumulated matrix, the chart
/// currently in use and the path coordinates expressed in that chart.
class Integrator {
 public:
  Integrator(const ConnectionForm& conn, const SolverConfig& cfg, const Observer* observer)
      : conn_(conn), cfg_(cfg), observer_(observer), n_(conn.dim()) {}

  TransportResult run(const PathSpec& path) {
    cfg_.validate();
    if (path.dim() != n_) throw Error(ErrorKind::Dimension, "path dimension does not match the connection");
    u_ = Matrix::Identity(conn_.k(), conn_.k());
    const auto& segs = path.segments();
    bool first = true;
    for (const auto& seg : segs) {
      seg_ = &seg;
      enter_segment(seg, first);
      first = false;
      integrate_segment(seg);
    }
    project();
    TransportResult r{start_, current_point(segs.back().local_end), GroupElement(u_, conn_.group()), steps_, est_error_};
    return r;
  }

 private:
  ChartPoint current_point(double tau) const {
    return {chart_, eval_vector(coords_, std::span<const double>(&tau, 1))};
  }

  // Point and tau-derivative of the path in the active chart.
  void jet(double tau, Vector& x, Vector& v) const {
    x.resize(n_);
    v.resize(n_);
    for (int i = 0; i < n_; ++i) {
      const DualValue d = eval_dual(coords_[static_cast<std::size_t>(i)], std::span<const double>(&tau, 1));
      x[i] = d.value;
      v[i] = d.deriv[0];
    }
  }

  // -A(x)(v) for the active chart.
  Matrix generator(double tau) {
    jet(tau, x_buf_, v_buf_);
    field_->values(std::span<const double>(x_buf_.data(), static_cast<std::size_t>(n_)), a_buf_);
    Matrix m = Matrix::Zero(conn_.k(), conn_.k());
    for (int mu = 0; mu < n_; ++mu) {
      const double c = v_buf_[mu];
      if (c != 0.0) m.noalias() -= c * a_buf_[static_cast<std::size_t>(mu)];
    }
    return m;
  }

  Matrix rk4(const Matrix& u, double tau, double dt) {
    const Matrix m0 = generator(tau);
    const Matrix m1 = generator(tau + 0.5 * dt);
    const Matrix m2 = generator(tau + dt);
    const Matrix k1 = m0 * u;
    const Matrix k2 = m1 * (u + 0.5 * dt * k1);
    const Matrix k3 = m1 * (u + 0.5 * dt * k2);
    const Matrix k4 = m2 * (u + dt * k3);
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  void project() {
    if (conn_.group().orthogonal()) u_ = polar_factor(u_);
  }

  bool inside(double tau) const {
    const ChartPoint p = current_point(tau);
    return conn_.atlas().chart(chart_).domain.contains(p.coords);
  }

  void activate(int chart, std::vector<Expr> coords) {
    chart_ = chart;
    coords_ = std::move(coords);
    field_ = conn_.field_ptr(chart);
  }

  // Move to the trivialization of `to` at the current point x (coordinates
  // in the active chart): u_to = g(x)^{-1} u_from.
  void switch_chart(int to, const Vector& x) {
    const GaugeTransition* tr = conn_.transition(chart_, to);
    const ChartMap* map = conn_.atlas().map(chart_, to);
    if (!tr || !map)
      throw Error(ErrorKind::OutsideChart, "no transition from chart " + std::to_string(chart_) + " to chart " +
                                               std::to_string(to));
    const Matrix g = tr->gauge->value(std::span<const double>(x.data(), static_cast<std::size_t>(n_)));
    u_ = g.inverse() * u_;
    std::vector<Expr> mapped;
    for (const auto& c : map->coords) mapped.push_back(compose(c, coords_));
    activate(to, std::move(mapped));
    if (++switches_ > kMaxChartSwitches) throw Error(ErrorKind::OutsideChart, "path keeps switching charts");
  }

  // Leave the active chart for a neighbour whose box contains the point,
  // preferring the largest margin to the neighbour's boundary.
  void escape_chart(const Vector& x) {
    int best = -1;
    double best_margin = -1.0;
    for (const auto& tr : conn_.transitions()) {
      if (tr.from != chart_) continue;
      const Vector y = conn_.atlas().transform(chart_, tr.to, x);
      const Box& box = conn_.atlas().chart(tr.to).domain;
      if (!box.contains(y)) continue;
      const double margin = std::min((y - box.lo).minCoeff(), (box.hi - y).minCoeff());
      if (margin > best_margin) {
        best_margin = margin;
        best = tr.to;
      }
    }
    if (best < 0)
      throw Error(ErrorKind::OutsideChart, "path leaves chart " + std::to_string(chart_) +
                                               " and no neighbouring chart contains it");
    switch_chart(best, x);
  }

  void enter_segment(const PathSegment& seg, bool first) {
    if (first) {
      activate(seg.chart_id, seg.coords);
      start_ = current_point(seg.local_begin);
      if (observer_) (*observer_)(0.0, start_, u_);
    } else if (seg.chart_id != chart_) {
      const Vector x = current_point(seg_end_tau_).coords;
      switch_chart(seg.chart_id, x);
      activate(seg.chart_id, seg.coords);
    } else {
      activate(seg.chart_id, seg.coords);
    }
    if (!inside(seg.local_begin)) escape_chart(current_point(seg.local_begin).coords);
    seg_end_tau_ = seg.local_end;
  }

  // Largest tau in [lo, hi] still inside the active chart (lo inside, hi not).
  double crossing(double lo, double hi) const {
    const double rate = std::abs(seg_->local_rate());
    while (std::abs(hi - lo) / rate > kCrossingTolerance) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      if (inside(mid)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return lo;
  }

  // One accepted step of size dt from tau; returns the new matrix.
  Matrix step(double tau, double dt, double& err) {
    if (cfg_.method == StepMethod::Rk4Fixed) {
      err = 0.0;
      return rk4(u_, tau, dt);
    }
    const Matrix full = rk4(u_, tau, dt);
    const Matrix half = rk4(u_, tau, 0.5 * dt);
    const Matrix two = rk4(half, tau + 0.5 * dt, 0.5 * dt);
    err = (two - full).norm() / 15.0;
    return two;
  }

  void integrate_segment(const PathSegment& seg) {
    const double tau0 = seg.local_begin;
    const double tau1 = seg.local_end;
    const double span = tau1 - tau0;
    const double dir = span > 0.0 ? 1.0 : -1.0;
    const double rate = std::abs(seg.local_rate());  // |dtau / dt|
    const double global_len = seg.global_end - seg.global_begin;
    const int nominal_steps = std::max(1, static_cast<int>(std::ceil(global_len / cfg_.h - 1e-9)));
    const double nominal = std::abs(span) / nominal_steps;
    double dt = nominal;  // |dtau| of the next attempt
    double tau = tau0;
    int since_projection = 0;

    while (dir * (tau1 - tau) > 0.0) {
      double remaining = std::abs(tau1 - tau);
      double attempt = std::min(dt, remaining);
      if (remaining - attempt < 1e-12 * std::abs(span)) attempt = remaining;
      double err = 0.0;
      Matrix next = step(tau, dir * attempt, err);

      if (cfg_.method == StepMethod::Rk4Doubling) {
        const double allowed = cfg_.tol * attempt / rate;
        if (err > allowed) {
          dt = 0.5 * attempt;
          if (dt / rate < kMinStep)
            throw Error(ErrorKind::StepUnderflow, "step-doubling cannot meet tol with h >= 1e-7");
          continue;
        }
        const double grow = err > 0.0 ? std::min(2.0, 0.9 * std::pow(allowed / err, 0.2)) : 2.0;
        dt = std::min(nominal, attempt * std::max(1.0, grow));
      }

      double tau_next = tau + dir * attempt;
      if (dir * (tau1 - tau_next) <= 0.0) tau_next = tau1;
      if (!inside(tau_next)) {
        const double cut = crossing(tau, tau_next);
        double cut_err = 0.0;
        if (cut != tau) {
          next = step(tau, cut - tau, cut_err);
          u_ = next;
          est_error_ += cut_err;
          ++steps_;
        }
        tau = cut;
        escape_chart(current_point(tau).coords);
        if (observer_) record(seg, tau);
        continue;
      }
      u_ = next;
      est_error_ += err;
      tau = tau_next;
      ++steps_;
      if (++since_projection >= cfg_.project_every) {
        project();
        since_projection = 0;
      }
      if (observer_) record(seg, tau);
    }
  }

  void record(const PathSegment& seg, double tau) {
    const double t = seg.global_begin + (tau - seg.local_begin) / seg.local_rate();
    Matrix u = u_;
    if (conn_.group().orthogonal()) u = polar_factor(u);
    (*observer_)(std::clamp(t, 0.0, 1.0), current_point(tau), u);
  }

  const ConnectionForm& conn_;
  SolverConfig cfg_;
  const Observer* observer_;
  int n_;
  Matrix u_;
  int chart_ = 0;
  std::vector<Expr> coords_;
  std::shared_ptr<const CoefficientField> field_;
  const PathSegment* seg_ = nullptr;
  double seg_end_tau_ = 0.0;
  ChartPoint start_;
  int steps_ = 0;
  int switches_ = 0;
  double est_error_ = 0.0;
  Vector x_buf_;
  Vector v_buf_;
  std::vector<Matrix> a_buf_;
};

}  // namespace

TransportResult transport(const ConnectionForm& conn, const PathSpec& path, const SolverConfig& cfg) {
  return Integrator(conn, cfg, nullptr).run(path);
}

TransportOracle engine_oracle(const ConnectionForm& conn, const SolverConfig& cfg) {
  return [&conn, cfg](const PathSpec& path) { return transport(conn, path, cfg); };
}

LiftedPath lift_path(const ConnectionForm& conn, const PathSpec& path, const GroupElement& p, const SolverConfig& cfg) {
  if (!(p.group() == conn.group())) throw Error(ErrorKind::InvalidArgument, "fiber point is in the wrong group");
  LiftedPath out{path, p, {}};
  const Observer observer = [&](double t, const ChartPoint& x, const Matrix& u) {
    if (out.samples.empty()) {
      out.samples.push_back({t, x, p});
      return;
    }
    out.samples.push_back({t, x, GroupElement(u * p.matrix(), conn.group())});
  };
  const TransportResult r = Integrator(conn, cfg, &observer).run(path);
  // The final sample carries the projected endpoint exactly.
  out.samples.back().fiber = r.g * p;
  return out;
}

AxiomReport verify_axioms(const TransportOracle& oracle, const AxiomSuite& suite, double tol) {
  AxiomReport report;
  report.tol = tol;
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto guarded = [&](double& slot, const std::string& label, auto&& body) {
    ++report.checks;
    try {
      slot = std::max(slot, body());
    } catch (const std::exception& e) {
      slot = inf;
      report.failures.push_back(label + ": " + e.what());
    }
  };

  for (std::size_t i = 0; i < suite.constant_points.size(); ++i) {
    guarded(report.identity_deviation, "constant path " + std::to_string(i), [&] {
      const Matrix g = oracle(constant_path(suite.constant_points[i])).g.matrix();
      return (g - Matrix::Identity(g.rows(), g.cols())).norm();
    });
  }
  for (std::size_t i = 0; i < suite.reparametrizations.size(); ++i) {
    const auto& [path, alpha] = suite.reparametrizations[i];
    guarded(report.reparametrization_deviation, "reparametrization " + std::to_string(i), [&] {
      const Matrix direct = oracle(path).g.matrix();
      const Matrix composed = oracle(reparametrize(path, alpha)).g.matrix();
      return (composed - direct).norm();
    });
  }
  for (std::size_t i = 0; i < suite.juxtapositions.size(); ++i) {
    const auto& [first, second] = suite.juxtapositions[i];
    guarded(report.juxtaposition_deviation, "juxtaposition " + std::to_string(i), [&] {
      const Matrix joined = oracle(juxtapose(first, second, suite.atlas)).g.matrix();
      const Matrix product = oracle(second).g.matrix() * oracle(first).g.matrix();
      return (joined - product).norm();
    });
  }
  report.pass = report.failures.empty() && report.identity_deviation <= tol &&
                report.reparametrization_deviation <= tol && report.juxtaposition_deviation <= tol;
  return report;
}

AxiomSuite default_axiom_suite(const ConnectionForm& conn) {
  const Chart& chart = conn.atlas().charts().front();
  const int n = chart.dim();
  const Vector c = chart.domain.center();
  const Vector w = 0.5 * (chart.domain.hi - chart.domain.lo);
  const double r = 0.35 * w.minCoeff();
  const Expr t = Expr::variable(0, 1);
  constexpr double two_pi = 2.0 * std::numbers::pi;

  auto point = [&](double a, double b) {
    Vector x = c;
    x[0] += a * r;
    if (n > 1) x[1] += b * r;
    return x;
  };
  auto coords_of = [&](const Expr& dx, const Expr& dy) {
    std::vector<Expr> out;
    for (int i = 0; i < n; ++i) {
      if (i == 0) {
        out.push_back(c[0] + r * dx);
      } else if (i == 1) {
        out.push_back(c[1] + r * dy);
      } else {
        out.push_back(Expr::constant(c[i], 1));
      }
    }
    return out;
  };

  AxiomSuite suite;
  suite.atlas = &conn.atlas();
  suite.constant_points = {{chart.id, c}, {chart.id, point(0.6, -0.4)}};

  const PathSpec line = straight_line(chart.id, point(-1.0, -0.5), point(1.0, 0.8));
  const PathSpec arc = path_from_exprs(chart.id, coords_of(cos(two_pi * 0.75 * t), sin(two_pi * 0.75 * t)));
  const PathSpec wiggle = path_from_exprs(chart.id, coords_of(2.0 * t - 1.0, 0.5 * sin(two_pi * t) + 0.3 * pow(t, 2)));

  const Expr square = pow(t, 2);
  const Expr cubic_mix = 0.5 * (t + pow(t, 3));
  const Expr wobble = t - 0.1 * sin(two_pi * t);
  suite.reparametrizations = {{line, square}, {arc, cubic_mix}, {wiggle, wobble}, {arc, square}};

  // Second legs start where the first ones end.
  const PathSpec back = straight_line(chart.id, point(1.0, 0.8), point(0.2, -0.9));
  const PathSpec arc_tail = straight_line(chart.id, end_point(arc).coords, point(-0.5, 0.5));
  suite.juxtapositions = {{line, back}, {arc, arc_tail}, {line, reverse(line)}};
  return suite;
}

double inverse_path_check(const ConnectionForm& conn, const PathSpec& path, const SolverConfig& cfg) {
  const Matrix forward = transport(conn, path, cfg).g.matrix();
  const Matrix backward = transport(conn, reverse(path), cfg).g.matrix();
  return (backward * forward - Matrix::Identity(forward.rows(), forward.cols())).norm();
}

Matrix to_end_chart(const ConnectionForm& conn, const TransportResult& r, int chart_id) {
  if (r.end.chart_id == chart_id) return r.g.matrix();
  const GaugeTransition* tr = conn.transition(r.end.chart_id, chart_id);
  if (!tr)
    throw Error(ErrorKind::OutsideChart, "no transition from chart " + std::to_string(r.end.chart_id) + " to chart " +
                                             std::to_string(chart_id));
  const Matrix g = tr->gauge->value(std::span<const double>(r.end.coords.data(), static_cast<std::size_t>(r.end.coords.size())));
  return g.inverse() * r.g.matrix();
}

}  // namespace holonome
