#pragma once

#include <optional>
#include <string>
#include <vector>

#include "holonome/transport.hpp"

namespace holonome {

struct HolonomyResult {
  GroupElement g;               // in the start chart's trivialization at the base point
  std::optional<double> angle;  // SO(2)/U(1): signed; SO(3): from the trace
  ChartPoint base;
  int step_count = 0;
};

/// Transport around a closed loop. NotClosed unless the end point matches
/// the start within 1e-10.
HolonomyResult holonomy(const ConnectionForm& conn, const PathSpec& loop, const SolverConfig& cfg);

/// Counter-clockwise coordinate rectangle x, x + eps e_mu, x + eps (e_mu + e_nu), x + eps e_nu.
PathSpec coordinate_rectangle(const ChartPoint& x, int mu, int nu, double eps);

struct CurvatureEstimate {
  std::vector<double> eps;
  std::vector<Matrix> estimates;  // log(hol) / (-eps^2)
  Matrix extrapolated;
  double order = 0.0;             // observed order in eps; NaN when the estimates agree to rounding
};

/// Shrinking-loop curvature estimate of F_{mu nu}(x).
CurvatureEstimate shrinking_loop_curvature(const TransportOracle& oracle, const Atlas& atlas, const ChartPoint& x,
                                           int mu, int nu, const std::vector<double>& eps = {0.2, 0.1, 0.05});

/// Paths gamma_s(t) given by expressions in (t, s), endpoints fixed in s.
class HomotopyFamily {
 public:
  /// Checks endpoint constancy at 21 values of s within 1e-10.
  HomotopyFamily(int chart_id, std::vector<Expr> family, int s_samples = 11, std::string name = "family");

  int chart_id() const noexcept { return chart_id_; }
  int s_samples() const noexcept { return s_samples_; }
  const std::string& name() const noexcept { return name_; }
  const std::vector<Expr>& exprs() const noexcept { return family_; }

  PathSpec member(double s) const;

 private:
  int chart_id_;
  std::vector<Expr> family_;
  int s_samples_;
  std::string name_;
};

struct HomotopyScan {
  std::vector<double> s;
  std::vector<Matrix> transports;
  double spread = 0.0;  // max ||P(gamma_s) - P(gamma_s')||_F
};

HomotopyScan homotopy_scan(const TransportOracle& oracle, const HomotopyFamily& family);

enum class Verdict { Flat, Curved, Inconsistent };

std::string to_string(Verdict v);

struct FlatnessVerdict {
  Verdict verdict = Verdict::Inconsistent;
  double max_curvature = 0.0;
  ChartPoint worst;
  std::vector<std::string> families;
  std::vector<double> spreads;
  double curvature_tol = 1e-6;
  double spread_tol = 1e-6;
  int grid = 0;
};

/// Three area-sweeping families inside the first chart.
std::vector<HomotopyFamily> canned_families(const ConnectionForm& conn, int s_samples = 11);

/// FLAT iff grid curvature and every homotopy spread are <= 1e-6, CURVED iff
/// both exceed it, INCONSISTENT otherwise.
FlatnessVerdict flatness_verdict(const ConnectionForm& conn, const SolverConfig& cfg, int grid = 9);

}  // namespace holonome
