#pragma once

#include <utility>
#include <vector>

#include "holonome/chart.hpp"

namespace holonome {

/// One smooth piece of a path: coordinates in chart `chart_id` as
/// functions of a local parameter on [local_begin, local_end], occupying
/// [global_begin, global_end] of the path's normalized parameter.
struct PathSegment {
  int chart_id = 0;
  std::vector<Expr> coords;
  double local_begin = 0.0;
  double local_end = 1.0;
  double global_begin = 0.0;
  double global_end = 1.0;

  int dim() const noexcept { return static_cast<int>(coords.size()); }
  double local_param(double t) const;
  double local_rate() const { return (local_end - local_begin) / (global_end - global_begin); }
};

/// Piecewise-smooth path on [0, 1]. Consecutive segments join within 1e-10
/// (through the atlas transition when the chart changes).
class PathSpec {
 public:
  PathSpec() = default;

  /// Validates segment layout and continuity. Joins across a chart change
  /// need an atlas, unless `trust_chart_changes` is set by an operation
  /// deriving the path from one that was already validated.
  static PathSpec from_segments(std::vector<PathSegment> segments, const Atlas* atlas = nullptr,
                                bool trust_chart_changes = false);

  const std::vector<PathSegment>& segments() const noexcept { return segments_; }
  int dim() const { return segments_.front().dim(); }

 private:
  explicit PathSpec(std::vector<PathSegment> segments) : segments_(std::move(segments)) {}

  std::vector<PathSegment> segments_;
};

enum class Side { Left, Right };

inline constexpr double kJoinTolerance = 1e-10;

/// Point at global parameter t. At a breakpoint the right segment wins
/// (the left one at t = 1).
ChartPoint path_point(const PathSpec& path, double t, Side side = Side::Right);
TangentVector path_velocity(const PathSpec& path, double t, Side side = Side::Right);

inline ChartPoint start_point(const PathSpec& path) { return path_point(path, 0.0); }
inline ChartPoint end_point(const PathSpec& path) { return path_point(path, 1.0); }

/// Coordinates of a segment at a local parameter value.
Vector segment_point(const PathSegment& seg, double local);

/// Position and derivative with respect to the local parameter.
void segment_jet(const PathSegment& seg, double local, Vector& point, Vector& velocity);

PathSpec constant_path(const ChartPoint& x);
PathSpec straight_line(int chart_id, const Vector& from, const Vector& to);

/// Path from coordinate expressions in t on [0, 1].
PathSpec path_from_exprs(int chart_id, std::vector<Expr> coords);

/// Run `first`, then `second`, packed into [0, 1/2] and [1/2, 1].
PathSpec juxtapose(const PathSpec& first, const PathSpec& second, const Atlas* atlas = nullptr);

/// path o alpha, for alpha increasing from 0 to 1 (checked at 101 samples).
PathSpec reparametrize(const PathSpec& path, const Expr& alpha);

PathSpec reverse(const PathSpec& path);

/// The part of `path` over [a, b], renormalized to [0, 1].
PathSpec restrict_path(const PathSpec& path, double a, double b);

/// Throws NotMonotone unless alpha(0) = 0, alpha(1) = 1 and alpha increases.
void check_reparametrization(const Expr& alpha);

/// Endpoint distance, mapping `b` into `a`'s chart when they differ.
double point_distance(const ChartPoint& a, const ChartPoint& b, const Atlas* atlas);

}  // namespace holonome
