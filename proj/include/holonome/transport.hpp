#pragma once

#include <functional>
#include <string>
#include <vector>

#include "holonome/connection.hpp"
#include "holonome/path.hpp"

namespace holonome {

enum class StepMethod { Rk4Fixed, Rk4Doubling };

struct SolverConfig {
  StepMethod method = StepMethod::Rk4Fixed;
  double h = 1e-3;         // step in the path's normalized parameter; the doubling variant never exceeds it
  int project_every = 1;   // polar projection cadence for orthogonal groups
  double tol = 1e-10;      // local error per unit parameter, doubling variant only

  /// InvalidArgument unless h in (0, 0.1] and project_every >= 1.
  void validate() const;
};

/// P(gamma) as a group element, with the fiber at the start expressed in
/// the start chart's trivialization and the fiber at the end in the end
/// chart's.
struct TransportResult {
  ChartPoint start;
  ChartPoint end;
  GroupElement g;
  int step_count = 0;
  double est_error = 0.0;
};

using TransportOracle = std::function<TransportResult(const PathSpec&)>;

/// Integrates U' = -A(gamma(t))(gamma'(t)) U, U(0) = I, segment by segment,
/// so corners between segments never fall inside a step. Leaving a chart's
/// box switches to a neighbouring chart at the crossing (bisection to 1e-12
/// in t) and re-trivializes U by the transition gauge.
TransportResult transport(const ConnectionForm& conn, const PathSpec& path, const SolverConfig& cfg);

TransportOracle engine_oracle(const ConnectionForm& conn, const SolverConfig& cfg);

struct LiftSample {
  double t = 0.0;
  ChartPoint point;
  GroupElement fiber;  // U(t) p
};

/// Horizontal lift t -> P(gamma|[0,t]) p, sampled at the integrator steps.
struct LiftedPath {
  PathSpec base;
  GroupElement start;
  std::vector<LiftSample> samples;
};

LiftedPath lift_path(const ConnectionForm& conn, const PathSpec& path, const GroupElement& p, const SolverConfig& cfg);

/// Inputs quantified over by the three transport axioms.
struct AxiomSuite {
  std::vector<ChartPoint> constant_points;
  std::vector<std::pair<PathSpec, Expr>> reparametrizations;
  std::vector<std::pair<PathSpec, PathSpec>> juxtapositions;  // (first, second): run first, then second
  const Atlas* atlas = nullptr;
};

struct AxiomReport {
  double identity_deviation = 0.0;      // max ||P(c_x) - I||_F
  double reparametrization_deviation = 0.0;  // max ||P(gamma o alpha) - P(gamma)||_F
  double juxtaposition_deviation = 0.0;  // max ||P(second * first) - P(second) P(first)||_F
  double tol = 0.0;
  int checks = 0;
  bool pass = false;
  std::vector<std::string> failures;
};

/// Works with any oracle; oracle errors become report entries.
AxiomReport verify_axioms(const TransportOracle& oracle, const AxiomSuite& suite, double tol);

/// Constant points, reparametrizations and juxtapositions inside the first
/// chart of `conn`.
AxiomSuite default_axiom_suite(const ConnectionForm& conn);

/// ||P(reverse gamma) P(gamma) - I||_F.
double inverse_path_check(const ConnectionForm& conn, const PathSpec& path, const SolverConfig& cfg);

/// Express a transport result whose end lies in another chart in the
/// trivialization of `chart_id` at the end point.
Matrix to_end_chart(const ConnectionForm& conn, const TransportResult& r, int chart_id);

}  // namespace holonome
