#include "holonome/path.hpp"

#include <cmath>

namespace holonome {

namespace {

const Expr& param_var() {
  static const Expr t = Expr::variable(0, 1);
  return t;
}

std::size_t segment_index(const PathSpec& path, double t, Side side) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorKind::OutOfRange, "path parameter " + std::to_string(t) + " outside [0, 1]");
  const auto& segs = path.segments();
  if (segs.empty()) throw Error(ErrorKind::InvalidArgument, "empty path");
  if (side == Side::Right) {
    if (t >= 1.0) return segs.size() - 1;
    for (std::size_t i = 0; i < segs.size(); ++i)
      if (t < segs[i].global_end) return i;
    return segs.size() - 1;
  }
  if (t <= 0.0) return 0;
  for (std::size_t i = 0; i < segs.size(); ++i)
    if (t <= segs[i].global_end) return i;
  return segs.size() - 1;
}

// alpha^{-1}(s) for increasing alpha on [0, 1].
double invert_monotone(const Expr& alpha, double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double v = eval(alpha, std::span<const double>(&mid, 1));
    if (v < s) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// The segment's coordinates re-expressed as functions of `u` through the
// local parameter `local_of_u` (an Expr in one variable).
std::vector<Expr> substitute(const PathSegment& seg, const Expr& local_of_u) {
  std::vector<Expr> out;
  out.reserve(seg.coords.size());
  const Expr args[] = {local_of_u};
  for (const auto& c : seg.coords) out.push_back(compose(c, args));
  return out;
}

}  // namespace

double PathSegment::local_param(double t) const {
  return local_begin + (t - global_begin) * local_rate();
}

PathSpec PathSpec::from_segments(std::vector<PathSegment> segments, const Atlas* atlas, bool trust_chart_changes) {
  if (segments.empty()) throw Error(ErrorKind::InvalidArgument, "a path needs at least one segment");
  const int n = segments.front().dim();
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "path segment has no coordinates");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    auto& s = segments[i];
    if (s.dim() != n) throw Error(ErrorKind::Dimension, "path segments disagree on dimension");
    for (const auto& c : s.coords)
      if (c.dim() != 1) throw Error(ErrorKind::Dimension, "path coordinates must be functions of one parameter");
    if (!(s.global_begin < s.global_end)) throw Error(ErrorKind::InvalidArgument, "path segment has empty parameter range");
    if (!(s.local_begin != s.local_end)) throw Error(ErrorKind::InvalidArgument, "path segment has empty local domain");
    const double expected_begin = i == 0 ? 0.0 : segments[i - 1].global_end;
    if (std::abs(s.global_begin - expected_begin) > 1e-14)
      throw Error(ErrorKind::InvalidArgument, "path segment parameter ranges are not contiguous");
    s.global_begin = expected_begin;
    if (atlas && !atlas->has_chart(s.chart_id))
      throw Error(ErrorKind::OutsideChart, "path uses undeclared chart " + std::to_string(s.chart_id));
  }
  if (std::abs(segments.back().global_end - 1.0) > 1e-14)
    throw Error(ErrorKind::InvalidArgument, "path parameter range must end at 1");
  segments.back().global_end = 1.0;

  for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
    const ChartPoint a{segments[i].chart_id, segment_point(segments[i], segments[i].local_end)};
    const ChartPoint b{segments[i + 1].chart_id, segment_point(segments[i + 1], segments[i + 1].local_begin)};
    if (a.chart_id != b.chart_id && !atlas && trust_chart_changes) continue;
    const double gap = point_distance(a, b, atlas);
    if (!(gap <= kJoinTolerance))
      throw Error(ErrorKind::EndpointMismatch, "segments " + std::to_string(i) + " and " + std::to_string(i + 1) +
                                                   " do not join (gap " + std::to_string(gap) + ")");
  }
  return PathSpec(std::move(segments));
}

Vector segment_point(const PathSegment& seg, double local) {
  return eval_vector(seg.coords, std::span<const double>(&local, 1));
}

void segment_jet(const PathSegment& seg, double local, Vector& point, Vector& velocity) {
  const auto n = static_cast<Eigen::Index>(seg.coords.size());
  point.resize(n);
  velocity.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const DualValue d = eval_dual(seg.coords[static_cast<std::size_t>(i)], std::span<const double>(&local, 1));
    point[i] = d.value;
    velocity[i] = d.deriv[0];
  }
}

ChartPoint path_point(const PathSpec& path, double t, Side side) {
  const PathSegment& seg = path.segments()[segment_index(path, t, side)];
  return {seg.chart_id, segment_point(seg, seg.local_param(t))};
}

TangentVector path_velocity(const PathSpec& path, double t, Side side) {
  const PathSegment& seg = path.segments()[segment_index(path, t, side)];
  Vector point;
  Vector velocity;
  segment_jet(seg, seg.local_param(t), point, velocity);
  return {{seg.chart_id, point}, velocity * seg.local_rate()};
}

PathSpec constant_path(const ChartPoint& x) {
  PathSegment seg;
  seg.chart_id = x.chart_id;
  for (Eigen::Index i = 0; i < x.coords.size(); ++i) seg.coords.push_back(Expr::constant(x.coords[i], 1));
  return PathSpec::from_segments({std::move(seg)});
}

PathSpec straight_line(int chart_id, const Vector& from, const Vector& to) {
  if (from.size() != to.size()) throw Error(ErrorKind::Dimension, "line endpoints differ in dimension");
  PathSegment seg;
  seg.chart_id = chart_id;
  for (Eigen::Index i = 0; i < from.size(); ++i) {
    const double d = to[i] - from[i];
    seg.coords.push_back(d == 0.0 ? Expr::constant(from[i], 1) : from[i] + d * param_var());
  }
  return PathSpec::from_segments({std::move(seg)});
}

PathSpec path_from_exprs(int chart_id, std::vector<Expr> coords) {
  PathSegment seg;
  seg.chart_id = chart_id;
  seg.coords = std::move(coords);
  return PathSpec::from_segments({std::move(seg)});
}

PathSpec juxtapose(const PathSpec& first, const PathSpec& second, const Atlas* atlas) {
  if (first.dim() != second.dim()) throw Error(ErrorKind::Dimension, "cannot join paths of different dimension");
  const double gap = point_distance(end_point(first), start_point(second), atlas);
  if (!(gap <= kJoinTolerance))
    throw Error(ErrorKind::EndpointMismatch, "end of the first path misses the start of the second by " +
                                                 std::to_string(gap));
  std::vector<PathSegment> segs;
  for (auto s : first.segments()) {
    s.global_begin *= 0.5;
    s.global_end *= 0.5;
    segs.push_back(std::move(s));
  }
  for (auto s : second.segments()) {
    s.global_begin = 0.5 + 0.5 * s.global_begin;
    s.global_end = 0.5 + 0.5 * s.global_end;
    segs.push_back(std::move(s));
  }
  return PathSpec::from_segments(std::move(segs), atlas, true);
}

void check_reparametrization(const Expr& alpha) {
  if (alpha.dim() != 1) throw Error(ErrorKind::Dimension, "reparametrization must be a function of one variable");
  constexpr int samples = 101;
  double previous = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) / (samples - 1);
    const DualValue d = eval_dual(alpha, std::span<const double>(&t, 1));
    if (i == 0 && std::abs(d.value) > 1e-12) throw Error(ErrorKind::NotMonotone, "alpha(0) != 0");
    if (i == samples - 1 && std::abs(d.value - 1.0) > 1e-12) throw Error(ErrorKind::NotMonotone, "alpha(1) != 1");
    const bool interior = i > 0 && i < samples - 1;
    if (interior ? !(d.deriv[0] > 0.0) : !(d.deriv[0] >= 0.0))
      throw Error(ErrorKind::NotMonotone, "alpha' <= 0 at t = " + std::to_string(t));
    if (i > 0 && !(d.value > previous)) throw Error(ErrorKind::NotMonotone, "alpha is not increasing");
    previous = d.value;
  }
}

PathSpec reparametrize(const PathSpec& path, const Expr& alpha) {
  check_reparametrization(alpha);
  std::vector<PathSegment> segs;
  for (const auto& s : path.segments()) {
    PathSegment r;
    r.chart_id = s.chart_id;
    r.global_begin = invert_monotone(alpha, s.global_begin);
    r.global_end = invert_monotone(alpha, s.global_end);
    if (!(r.global_begin < r.global_end)) continue;
    r.local_begin = r.global_begin;
    r.local_end = r.global_end;
    // local parameter of the original segment as a function of u: s.local_param(alpha(u))
    r.coords = substitute(s, s.local_begin + s.local_rate() * (alpha - s.global_begin));
    segs.push_back(std::move(r));
  }
  // Snap the breakpoints so the ranges stay exactly contiguous.
  for (std::size_t i = 1; i < segs.size(); ++i) {
    segs[i].global_begin = segs[i - 1].global_end;
    segs[i].local_begin = segs[i].global_begin;
  }
  return PathSpec::from_segments(std::move(segs), nullptr, true);
}

PathSpec reverse(const PathSpec& path) {
  std::vector<PathSegment> segs;
  const auto& src = path.segments();
  for (auto it = src.rbegin(); it != src.rend(); ++it) {
    PathSegment r = *it;
    r.global_begin = 1.0 - it->global_end;
    r.global_end = 1.0 - it->global_begin;
    r.coords = substitute(*it, (it->local_begin + it->local_end) - param_var());
    segs.push_back(std::move(r));
  }
  segs.front().global_begin = 0.0;
  segs.back().global_end = 1.0;
  for (std::size_t i = 1; i < segs.size(); ++i) segs[i].global_begin = segs[i - 1].global_end;
  return PathSpec::from_segments(std::move(segs), nullptr, true);
}

PathSpec restrict_path(const PathSpec& path, double a, double b) {
  if (!(a >= 0.0 && b <= 1.0 && a < b)) throw Error(ErrorKind::OutOfRange, "restriction interval must satisfy 0 <= a < b <= 1");
  std::vector<PathSegment> segs;
  const double width = b - a;
  for (const auto& s : path.segments()) {
    const double lo = std::max(a, s.global_begin);
    const double hi = std::min(b, s.global_end);
    if (!(lo < hi)) continue;
    PathSegment r = s;
    r.local_begin = s.local_param(lo);
    r.local_end = s.local_param(hi);
    r.global_begin = (lo - a) / width;
    r.global_end = (hi - a) / width;
    segs.push_back(std::move(r));
  }
  segs.front().global_begin = 0.0;
  segs.back().global_end = 1.0;
  for (std::size_t i = 1; i < segs.size(); ++i) segs[i].global_begin = segs[i - 1].global_end;
  return PathSpec::from_segments(std::move(segs), nullptr, true);
}

double point_distance(const ChartPoint& a, const ChartPoint& b, const Atlas* atlas) {
  if (a.chart_id == b.chart_id) return (a.coords - b.coords).norm();
  if (!atlas || !atlas->map(b.chart_id, a.chart_id))
    throw Error(ErrorKind::EndpointMismatch, "cannot compare points in charts " + std::to_string(a.chart_id) + " and " +
                                                 std::to_string(b.chart_id) + " without a transition");
  return (a.coords - atlas->transform(b.chart_id, a.chart_id, b.coords)).norm();
}

}  // namespace holonome
