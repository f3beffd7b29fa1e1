#include "holonome/chart.hpp"

namespace holonome {

bool Box::contains(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(lo.size())) return false;
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    const double v = x[static_cast<std::size_t>(i)];
    if (!(v > lo[i] && v < hi[i])) return false;
  }
  return true;
}

Atlas::Atlas(std::vector<Chart> charts, std::vector<ChartMap> maps) : charts_(std::move(charts)), maps_(std::move(maps)) {
  if (charts_.empty()) throw Error(ErrorKind::Validation, "atlas needs at least one chart");
  const int n = charts_.front().dim();
  for (const auto& c : charts_) {
    if (c.dim() != n || c.domain.hi.size() != n)
      throw Error(ErrorKind::Validation, "chart " + std::to_string(c.id) + " has inconsistent dimension");
    for (int i = 0; i < n; ++i)
      if (!(c.domain.lo[i] < c.domain.hi[i]))
        throw Error(ErrorKind::Validation, "chart " + std::to_string(c.id) + " has an empty domain box");
  }
  for (std::size_t i = 0; i < charts_.size(); ++i)
    for (std::size_t j = i + 1; j < charts_.size(); ++j)
      if (charts_[i].id == charts_[j].id)
        throw Error(ErrorKind::Validation, "duplicate chart id " + std::to_string(charts_[i].id));
  for (const auto& m : maps_) {
    if (!has_chart(m.from) || !has_chart(m.to))
      throw Error(ErrorKind::Validation, "transition references an undeclared chart");
    if (static_cast<int>(m.coords.size()) != n)
      throw Error(ErrorKind::Validation, "transition map needs one expression per coordinate");
    for (const auto& e : m.coords)
      if (e.dim() != n) throw Error(ErrorKind::Dimension, "transition map expression has the wrong dimension");
  }
}

int Atlas::dim() const {
  if (charts_.empty()) throw Error(ErrorKind::Validation, "empty atlas");
  return charts_.front().dim();
}

const Chart& Atlas::chart(int id) const {
  for (const auto& c : charts_)
    if (c.id == id) return c;
  throw Error(ErrorKind::OutsideChart, "unknown chart " + std::to_string(id));
}

bool Atlas::has_chart(int id) const {
  for (const auto& c : charts_)
    if (c.id == id) return true;
  return false;
}

const ChartMap* Atlas::map(int from, int to) const {
  for (const auto& m : maps_)
    if (m.from == from && m.to == to) return &m;
  return nullptr;
}

Vector Atlas::transform(int from, int to, const Vector& x) const {
  if (from == to) return x;
  const ChartMap* m = map(from, to);
  if (!m)
    throw Error(ErrorKind::OutsideChart, "no transition from chart " + std::to_string(from) + " to chart " +
                                             std::to_string(to));
  return eval_vector(m->coords, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

bool Atlas::contains(const ChartPoint& p) const { return chart(p.chart_id).domain.contains(p.coords); }

Vector eval_vector(std::span<const Expr> fs, std::span<const double> x) {
  Vector out(static_cast<Eigen::Index>(fs.size()));
  for (std::size_t i = 0; i < fs.size(); ++i) out[static_cast<Eigen::Index>(i)] = eval(fs[i], x);
  return out;
}

void eval_vector_dual(std::span<const Expr> fs, std::span<const double> x, Vector& value, Matrix& jacobian) {
  const auto rows = static_cast<Eigen::Index>(fs.size());
  const auto cols = static_cast<Eigen::Index>(x.size());
  value.resize(rows);
  jacobian.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const DualValue d = eval_dual(fs[static_cast<std::size_t>(i)], x);
    value[i] = d.value;
    jacobian.row(i) = d.deriv.transpose();
  }
}

}  // namespace holonome
