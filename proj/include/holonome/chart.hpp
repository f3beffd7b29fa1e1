#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "holonome/expr.hpp"
#include "holonome/lie_group.hpp"

namespace holonome {

/// Axis-aligned coordinate box. Membership is strict: lo < x < hi.
struct Box {
  Vector lo;
  Vector hi;

  int dim() const noexcept { return static_cast<int>(lo.size()); }
  bool contains(std::span<const double> x) const;
  bool contains(const Vector& x) const { return contains(std::span<const double>(x.data(), x.size())); }
  Vector center() const { return 0.5 * (lo + hi); }
};

struct Chart {
  int id = 0;
  Box domain;

  int dim() const noexcept { return domain.dim(); }
};

/// Coordinate change x_to = coords(x_from), one Expr per target coordinate.
struct ChartMap {
  int from = 0;
  int to = 0;
  std::vector<Expr> coords;
};

struct ChartPoint {
  int chart_id = 0;
  Vector coords;
};

struct TangentVector {
  ChartPoint base;
  Vector components;
};

/// Charts with boxed domains plus explicit coordinate transitions.
class Atlas {
 public:
  Atlas() = default;
  Atlas(std::vector<Chart> charts, std::vector<ChartMap> maps);

  const std::vector<Chart>& charts() const noexcept { return charts_; }
  const std::vector<ChartMap>& maps() const noexcept { return maps_; }
  int dim() const;

  const Chart& chart(int id) const;
  bool has_chart(int id) const;
  const ChartMap* map(int from, int to) const;

  /// Coordinates of `x` (given in chart `from`) in chart `to`.
  Vector transform(int from, int to, const Vector& x) const;

  /// Strict box check; OutsideChart when the chart id is unknown.
  bool contains(const ChartPoint& p) const;

 private:
  std::vector<Chart> charts_;
  std::vector<ChartMap> maps_;
};

/// Evaluate a vector of expressions at a point.
Vector eval_vector(std::span<const Expr> fs, std::span<const double> x);

/// Values and Jacobian (rows = functions, cols = variables).
void eval_vector_dual(std::span<const Expr> fs, std::span<const double> x, Vector& value, Matrix& jacobian);

}  // namespace holonome
