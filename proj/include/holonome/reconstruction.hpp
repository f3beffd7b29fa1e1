#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "holonome/transport.hpp"

namespace holonome {

/// Tangent vector to the bundle at (x, p): base part v plus the fiber part
/// in the left trivialization at p (an algebra element).
struct LiftedVector {
  TangentVector base_part;
  AlgebraElement vertical_part;
  ChartPoint x;
  GroupElement p;
};

/// Lifts of the coordinate basis e_1..e_n at (x, p).
struct HorizontalBasis {
  ChartPoint x;
  GroupElement p;
  std::vector<LiftedVector> lifts;
  double condition = 1.0;  // of the stacked n x (n + k^2) matrix
};

/// Central difference of the lifted straight path t -> x + t v:
/// xi = log(U(h) U(-h)^{-1}) / (2h), vertical part p^{-1} xi p.
/// At p = I this estimates -A_x(v).
LiftedVector lift_vector(const TransportOracle& oracle, const ChartPoint& x, const GroupElement& p,
                         const TangentVector& v, double h);

struct LemmaReport {
  std::vector<double> steps;       // h sweep
  std::vector<double> deviations;  // max pairwise lifted-velocity deviation per h
  double slope = 0.0;              // log-log fit of deviation against h
  double extrapolated = 0.0;       // h -> 0 limit of the pairwise differences
  bool degenerate = false;         // all deviations at rounding level
  int paths = 0;
};

/// One-sided lifted velocity log(P(alpha|[0,h])) / h of each path, compared
/// pairwise across the sweep. VelocityMismatch unless every path starts at
/// x with velocity v (within 1e-10).
LemmaReport lemma_independence_check(const TransportOracle& oracle, const ChartPoint& x, const GroupElement& p,
                                     const TangentVector& v, const std::vector<PathSpec>& paths,
                                     const std::vector<double>& steps = {1e-2, 5e-3, 2.5e-3});

/// IllConditionedBasis when the stacked lifts have condition number >= 1e6.
HorizontalBasis horizontal_space(const TransportOracle& oracle, const ChartPoint& x, const GroupElement& p, double h);

struct Splitting {
  Vector coefficients;  // c_mu, equal to the base components
  Matrix horizontal;    // sum c_mu vertical_part(lift_mu)
  Matrix vertical;      // fiber(w) - horizontal
};

/// Unique decomposition of w = (base, fiber) into a horizontal combination
/// of the basis and a vertical algebra element.
Splitting split_horizontal_vertical(const HorizontalBasis& basis, const Vector& base, const Matrix& fiber);

struct ReconstructedPoint {
  ChartPoint x;
  std::vector<Matrix> coefficients;  // A_hat_mu(x)
};

struct DroppedPoint {
  ChartPoint x;
  std::string reason;
};

struct ReconstructionTable {
  double h = 0.0;
  double oracle_step = 0.0;
  std::vector<ReconstructedPoint> points;
  std::vector<DroppedPoint> dropped;
};

/// A_hat_mu(x) = -vertical_part(lift of e_mu at (x, I)). Grid points where
/// the oracle fails are dropped and listed.
ReconstructionTable reconstruct_connection(const TransportOracle& oracle, const StructureGroup& group,
                                           const std::vector<ChartPoint>& grid, double h, double oracle_step = 0.0);

/// CSV with columns chart_id, x1..xn, mu, i, j, value, h.
void write_reconstruction_csv(std::ostream& os, const ReconstructionTable& table);

/// count x count points per chart over the middle half of each box.
std::vector<ChartPoint> reconstruction_grid(const Atlas& atlas, int count);

struct RoundtripReport {
  std::vector<double> steps;
  std::vector<double> errors;  // max ||A_hat - A||_F per h
  double order = 0.0;
  bool degenerate = false;     // errors below the noise floor; order not measurable
  double noise_floor = 1e-11;
  int grid_points = 0;
  int dropped = 0;
  bool pass = false;
};

/// connection -> transport -> connection. PASS iff order >= 1.7 and the
/// smallest-h error is <= 1e-3; when every error sits below the noise
/// floor the order test is skipped.
RoundtripReport roundtrip_report(const ConnectionForm& conn, const SolverConfig& cfg,
                                 const std::vector<double>& steps = {1e-2, 5e-3, 2.5e-3}, int grid = 5);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace holonome
