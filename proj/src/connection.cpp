#include "holonome/connection.hpp"

#include <random>

namespace holonome {

namespace {

constexpr double kFiniteDifferenceStep = 1e-5;
constexpr double kOverlapTolerance = 1e-8;
constexpr int kOverlapSamples = 20;

}  // namespace

std::vector<Vector> sample_box(const Box& box, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  const Vector width = box.hi - box.lo;
  for (int s = 0; s < count; ++s) {
    Vector x(box.dim());
    for (int i = 0; i < box.dim(); ++i) {
      std::uniform_real_distribution<double> u(box.lo[i] + 1e-3 * width[i], box.hi[i] - 1e-3 * width[i]);
      x[i] = u(rng);
    }
    out.push_back(std::move(x));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix fields

void MatrixField::jet(std::span<const double> x, Matrix& value_out, std::vector<Matrix>& d) const {
  value_out = value(x);
  std::vector<double> probe(x.begin(), x.end());
  d.assign(x.size(), Matrix());
  for (std::size_t mu = 0; mu < x.size(); ++mu) {
    probe[mu] = x[mu] + kFiniteDifferenceStep;
    const Matrix plus = value(probe);
    probe[mu] = x[mu] - kFiniteDifferenceStep;
    const Matrix minus = value(probe);
    probe[mu] = x[mu];
    d[mu] = (plus - minus) / (2.0 * kFiniteDifferenceStep);
  }
}

ExprMatrixField::ExprMatrixField(std::vector<std::vector<Expr>> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw Error(ErrorKind::InvalidArgument, "empty matrix field");
  dim_ = entries_.front().front().dim();
  for (const auto& row : entries_) {
    if (row.size() != entries_.size()) throw Error(ErrorKind::InvalidArgument, "matrix field must be square");
    for (const auto& e : row)
      if (e.dim() != dim_) throw Error(ErrorKind::Dimension, "matrix field entries disagree on dimension");
  }
}

Matrix ExprMatrixField::value(std::span<const double> x) const {
  const auto k = static_cast<Eigen::Index>(entries_.size());
  Matrix m(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      m(i, j) = eval(entries_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], x);
  return m;
}

void ExprMatrixField::jet(std::span<const double> x, Matrix& value_out, std::vector<Matrix>& d) const {
  const auto k = static_cast<Eigen::Index>(entries_.size());
  value_out.resize(k, k);
  d.assign(x.size(), Matrix(k, k));
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const DualValue v = eval_dual(entries_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], x);
      value_out(i, j) = v.value;
      for (std::size_t mu = 0; mu < x.size(); ++mu) d[mu](i, j) = v.deriv[static_cast<Eigen::Index>(mu)];
    }
  }
}

// ---------------------------------------------------------------------------
// Coefficient fields

void CoefficientField::jet(std::span<const double> x, std::vector<Matrix>& a,
                           std::vector<std::vector<Matrix>>& d) const {
  values(x, a);
  const std::size_t n = x.size();
  std::vector<double> probe(x.begin(), x.end());
  std::vector<Matrix> plus;
  std::vector<Matrix> minus;
  d.assign(n, std::vector<Matrix>(n));
  for (std::size_t nu = 0; nu < n; ++nu) {
    probe[nu] = x[nu] + kFiniteDifferenceStep;
    values(probe, plus);
    probe[nu] = x[nu] - kFiniteDifferenceStep;
    values(probe, minus);
    probe[nu] = x[nu];
    for (std::size_t mu = 0; mu < n; ++mu) d[mu][nu] = (plus[mu] - minus[mu]) / (2.0 * kFiniteDifferenceStep);
  }
}

ExprCoefficients::ExprCoefficients(int dim, int k, std::vector<std::vector<std::vector<Expr>>> table)
    : dim_(dim), k_(k), table_(std::move(table)) {
  if (static_cast<int>(table_.size()) != dim_)
    throw Error(ErrorKind::Validation, "need one coefficient matrix per coordinate (" + std::to_string(dim_) + ")");
  constant_part_.assign(static_cast<std::size_t>(dim_), Matrix::Zero(k_, k_));
  for (int mu = 0; mu < dim_; ++mu) {
    const auto& m = table_[static_cast<std::size_t>(mu)];
    if (static_cast<int>(m.size()) != k_) throw Error(ErrorKind::Validation, "coefficient matrix has the wrong row count");
    for (int i = 0; i < k_; ++i) {
      const auto& row = m[static_cast<std::size_t>(i)];
      if (static_cast<int>(row.size()) != k_)
        throw Error(ErrorKind::Validation, "coefficient matrix has the wrong column count");
      for (int j = 0; j < k_; ++j) {
        const Expr& e = row[static_cast<std::size_t>(j)];
        if (e.dim() != dim_) throw Error(ErrorKind::Dimension, "coefficient expression has the wrong dimension");
        if (e.is_constant()) {
          const std::vector<double> origin(static_cast<std::size_t>(dim_), 0.0);
          constant_part_[static_cast<std::size_t>(mu)](i, j) = eval(e, origin);
        } else {
          live_.push_back({mu, i, j});
        }
      }
    }
  }
}

void ExprCoefficients::values(std::span<const double> x, std::vector<Matrix>& a) const {
  a = constant_part_;
  for (const auto& l : live_)
    a[static_cast<std::size_t>(l.mu)](l.i, l.j) =
        eval(table_[static_cast<std::size_t>(l.mu)][static_cast<std::size_t>(l.i)][static_cast<std::size_t>(l.j)], x);
}

void ExprCoefficients::jet(std::span<const double> x, std::vector<Matrix>& a,
                           std::vector<std::vector<Matrix>>& d) const {
  a = constant_part_;
  const auto n = static_cast<std::size_t>(dim_);
  d.assign(n, std::vector<Matrix>(n, Matrix::Zero(k_, k_)));
  for (const auto& l : live_) {
    const auto mu = static_cast<std::size_t>(l.mu);
    const DualValue v = eval_dual(table_[mu][static_cast<std::size_t>(l.i)][static_cast<std::size_t>(l.j)], x);
    a[mu](l.i, l.j) = v.value;
    for (std::size_t nu = 0; nu < n; ++nu) d[mu][nu](l.i, l.j) = v.deriv[static_cast<Eigen::Index>(nu)];
  }
}

// ---------------------------------------------------------------------------
// ConnectionForm

ConnectionForm::ConnectionForm(StructureGroup group, Atlas atlas,
                               std::vector<std::shared_ptr<const CoefficientField>> fields,
                               std::vector<GaugeTransition> transitions, std::string name)
    : group_(group), atlas_(std::move(atlas)), fields_(std::move(fields)), transitions_(std::move(transitions)),
      name_(std::move(name)) {
  const int n = atlas_.dim();
  if (fields_.size() != atlas_.charts().size())
    throw Error(ErrorKind::Validation, "need one coefficient field per chart");
  for (std::size_t c = 0; c < fields_.size(); ++c) {
    const auto& f = fields_[c];
    const Chart& chart = atlas_.charts()[c];
    if (!f || f->dim() != n || f->k() != group_.k)
      throw Error(ErrorKind::Validation, "coefficient field of chart " + std::to_string(chart.id) +
                                             " does not match the atlas dimension or group size");
    std::vector<Matrix> a;
    for (const auto& x : sample_box(chart.domain, 20, 17u + static_cast<unsigned>(c))) {
      f->values(std::span<const double>(x.data(), static_cast<std::size_t>(n)), a);
      for (const auto& m : a) {
        if (!in_algebra(m, group_, 1e-12 * std::max(1.0, m.norm())))
          throw Error(ErrorKind::Validation, "coefficients of chart " + std::to_string(chart.id) +
                                                 " leave the Lie algebra of " + group_.name());
      }
    }
  }

  for (std::size_t t = 0; t < transitions_.size(); ++t) {
    const auto& tr = transitions_[t];
    const ChartMap* map = atlas_.map(tr.from, tr.to);
    if (!map)
      throw Error(ErrorKind::Validation, "gauge transition " + std::to_string(tr.from) + "->" + std::to_string(tr.to) +
                                             " has no coordinate map");
    if (!tr.gauge || tr.gauge->rows() != group_.k || tr.gauge->dim() != n)
      throw Error(ErrorKind::Validation, "gauge transition has the wrong shape");

    const Chart& from = atlas_.chart(tr.from);
    const Chart& to = atlas_.chart(tr.to);
    const auto& from_field = field(tr.from);
    const auto& to_field = field(tr.to);
    int checked = 0;
    for (const auto& x : sample_box(from.domain, 4000, 101u + static_cast<unsigned>(t))) {
      if (checked == kOverlapSamples) break;
      const std::span<const double> xs(x.data(), static_cast<std::size_t>(n));
      Vector y;
      Matrix jac;
      eval_vector_dual(map->coords, xs, y, jac);
      if (!to.domain.contains(y)) continue;
      ++checked;

      Matrix g;
      std::vector<Matrix> dg;
      tr.gauge->jet(xs, g, dg);
      if (group_.orthogonal() && !(orthogonality_defect(g) <= 1e-9 && g.determinant() > 0.0))
        throw Error(ErrorKind::Validation, "transition gauge leaves " + group_.name());
      const Matrix g_inv = g.inverse();
      std::vector<Matrix> a_from;
      std::vector<Matrix> a_to;
      from_field.values(xs, a_from);
      to_field.values(std::span<const double>(y.data(), static_cast<std::size_t>(n)), a_to);
      for (int mu = 0; mu < n; ++mu) {
        Matrix pulled = Matrix::Zero(group_.k, group_.k);
        for (int nu = 0; nu < n; ++nu) pulled += a_to[static_cast<std::size_t>(nu)] * jac(nu, mu);
        const Matrix expected =
            g_inv * a_from[static_cast<std::size_t>(mu)] * g + g_inv * dg[static_cast<std::size_t>(mu)];
        overlap_defect_ = std::max(overlap_defect_, (pulled - expected).norm());
      }
    }
    if (checked == 0)
      throw Error(ErrorKind::Validation, "transition " + std::to_string(tr.from) + "->" + std::to_string(tr.to) +
                                             " has no sampled overlap");
    if (!(overlap_defect_ <= kOverlapTolerance))
      throw Error(ErrorKind::Validation, "transition " + std::to_string(tr.from) + "->" + std::to_string(tr.to) +
                                             " violates A_to = g^-1 A_from g + g^-1 dg (defect " +
                                             std::to_string(overlap_defect_) + ")");
  }
}

const CoefficientField& ConnectionForm::field(int chart_id) const { return *field_ptr(chart_id); }

std::shared_ptr<const CoefficientField> ConnectionForm::field_ptr(int chart_id) const {
  const auto& charts = atlas_.charts();
  for (std::size_t c = 0; c < charts.size(); ++c)
    if (charts[c].id == chart_id) return fields_[c];
  throw Error(ErrorKind::OutsideChart, "unknown chart " + std::to_string(chart_id));
}

const GaugeTransition* ConnectionForm::transition(int from, int to) const {
  for (const auto& t : transitions_)
    if (t.from == from && t.to == to) return &t;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Operations

namespace {

void require_inside(const ConnectionForm& conn, const ChartPoint& x) {
  if (!conn.atlas().contains(x))
    throw Error(ErrorKind::OutsideChart, "point is outside the domain of chart " + std::to_string(x.chart_id));
}

}  // namespace

AlgebraElement eval_connection(const ConnectionForm& conn, const ChartPoint& x, const TangentVector& v) {
  if (v.base.chart_id != x.chart_id || v.base.coords != x.coords)
    throw Error(ErrorKind::InvalidArgument, "tangent vector is not based at the evaluation point");
  if (v.components.size() != conn.dim()) throw Error(ErrorKind::Dimension, "tangent vector has the wrong dimension");
  require_inside(conn, x);
  std::vector<Matrix> a;
  conn.field(x.chart_id).values(std::span<const double>(x.coords.data(), static_cast<std::size_t>(x.coords.size())), a);
  Matrix sum = Matrix::Zero(conn.k(), conn.k());
  for (int mu = 0; mu < conn.dim(); ++mu) sum += a[static_cast<std::size_t>(mu)] * v.components[mu];
  return AlgebraElement(std::move(sum), conn.group());
}

Matrix CurvatureValue::component(int mu, int nu) const {
  if (mu == nu) return Matrix::Zero(upper.front().rows(), upper.front().cols());
  const bool flip = mu > nu;
  const int a = flip ? nu : mu;
  const int b = flip ? mu : nu;
  const int index = a * dim - a * (a + 1) / 2 + (b - a - 1);
  const Matrix& f = upper[static_cast<std::size_t>(index)];
  return flip ? Matrix(-f) : f;
}

double CurvatureValue::max_norm() const {
  double m = 0.0;
  for (const auto& f : upper) m = std::max(m, f.norm());
  return m;
}

CurvatureValue curvature_at(const ConnectionForm& conn, const ChartPoint& x) {
  require_inside(conn, x);
  std::vector<Matrix> a;
  std::vector<std::vector<Matrix>> d;
  conn.field(x.chart_id).jet(std::span<const double>(x.coords.data(), static_cast<std::size_t>(x.coords.size())), a, d);
  CurvatureValue out;
  out.base = x;
  out.dim = conn.dim();
  for (int mu = 0; mu < out.dim; ++mu) {
    for (int nu = mu + 1; nu < out.dim; ++nu) {
      const auto m = static_cast<std::size_t>(mu);
      const auto n = static_cast<std::size_t>(nu);
      out.upper.push_back(d[n][m] - d[m][n] + a[m] * a[n] - a[n] * a[m]);
    }
  }
  return out;
}

ConnectionForm gauge_transform(const ConnectionForm& conn, int chart_id, std::shared_ptr<const MatrixField> g) {
  if (!g || g->rows() != conn.k() || g->dim() != conn.dim())
    throw Error(ErrorKind::InvalidArgument, "gauge must be a k x k matrix field over the chart");
  const Chart& chart = conn.atlas().chart(chart_id);
  for (const auto& x : sample_box(chart.domain, 20, 7u)) {
    const Matrix gx = g->value(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    if (!(std::abs(gx.determinant()) > 1e-9)) throw Error(ErrorKind::SingularGauge, "gauge is singular on the chart");
  }

  std::vector<std::shared_ptr<const CoefficientField>> fields;
  for (const auto& c : conn.atlas().charts()) {
    auto base = conn.field_ptr(c.id);
    if (c.id != chart_id) {
      fields.push_back(std::move(base));
      continue;
    }
    fields.push_back(std::make_shared<FunctionCoefficients>(
        conn.dim(), conn.k(), [base, g](std::span<const double> x, std::vector<Matrix>& out) {
          Matrix gx;
          std::vector<Matrix> dg;
          g->jet(x, gx, dg);
          const Matrix g_inv = gx.inverse();
          base->values(x, out);
          for (std::size_t mu = 0; mu < out.size(); ++mu) out[mu] = g_inv * out[mu] * gx + g_inv * dg[mu];
        }));
  }

  // u_old = g u_new on the transformed chart, so transitions pick up g on
  // the matching side.
  std::vector<GaugeTransition> transitions;
  const Atlas& atlas = conn.atlas();
  for (const auto& tr : conn.transitions()) {
    GaugeTransition out = tr;
    if (tr.from == chart_id) {
      auto old = tr.gauge;
      out.gauge = std::make_shared<FunctionMatrixField>(conn.dim(), conn.k(), [old, g](std::span<const double> x) {
        return Matrix(g->value(x).inverse() * old->value(x));
      });
    } else if (tr.to == chart_id) {
      auto old = tr.gauge;
      const ChartMap map = *atlas.map(tr.from, tr.to);
      out.gauge = std::make_shared<FunctionMatrixField>(conn.dim(), conn.k(), [old, g, map](std::span<const double> x) {
        const Vector y = eval_vector(map.coords, x);
        return Matrix(old->value(x) * g->value(std::span<const double>(y.data(), static_cast<std::size_t>(y.size()))));
      });
    }
    transitions.push_back(std::move(out));
  }
  return ConnectionForm(conn.group(), conn.atlas(), std::move(fields), std::move(transitions), conn.name() + "+gauge");
}

FlatnessReport is_flat(const ConnectionForm& conn, int samples, double tol) {
  if (samples < 1) throw Error(ErrorKind::InvalidArgument, "is_flat needs samples >= 1");
  FlatnessReport report;
  report.tol = tol;
  const int n = conn.dim();
  for (const auto& chart : conn.atlas().charts()) {
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (;;) {
      ChartPoint p{chart.id, Vector(n)};
      for (int i = 0; i < n; ++i)
        p.coords[i] = chart.domain.lo[i] +
                      (idx[static_cast<std::size_t>(i)] + 0.5) / samples * (chart.domain.hi[i] - chart.domain.lo[i]);
      const double norm = curvature_at(conn, p).max_norm();
      ++report.points;
      if (report.points == 1 || norm > report.max_norm) {
        report.max_norm = norm;
        report.worst = p;
      }
      int axis = 0;
      while (axis < n && ++idx[static_cast<std::size_t>(axis)] == samples) idx[static_cast<std::size_t>(axis++)] = 0;
      if (axis == n) break;
    }
  }
  report.flat = report.max_norm <= tol;
  return report;
}

}  // namespace holonome
