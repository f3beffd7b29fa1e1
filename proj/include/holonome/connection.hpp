#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "holonome/chart.hpp"
#include "holonome/lie_group.hpp"

namespace holonome {

/// x -> k x k matrix on one chart.
class MatrixField {
 public:
  virtual ~MatrixField() = default;

  virtual int dim() const = 0;
  virtual int rows() const = 0;
  virtual Matrix value(std::span<const double> x) const = 0;

  /// Value and partial derivatives d[mu] = dM/dx^mu. The default uses
  /// central differences with step 1e-5.
  virtual void jet(std::span<const double> x, Matrix& value, std::vector<Matrix>& d) const;
};

/// Matrix of expressions; derivatives are exact (dual numbers).
class ExprMatrixField final : public MatrixField {
 public:
  explicit ExprMatrixField(std::vector<std::vector<Expr>> entries);

  int dim() const override { return dim_; }
  int rows() const override { return static_cast<int>(entries_.size()); }
  Matrix value(std::span<const double> x) const override;
  void jet(std::span<const double> x, Matrix& value, std::vector<Matrix>& d) const override;

  const std::vector<std::vector<Expr>>& entries() const noexcept { return entries_; }

 private:
  std::vector<std::vector<Expr>> entries_;
  int dim_ = 1;
};

/// Any callable matrix function; derivatives by central differences.
class FunctionMatrixField final : public MatrixField {
 public:
  FunctionMatrixField(int dim, int rows, std::function<Matrix(std::span<const double>)> f)
      : dim_(dim), rows_(rows), f_(std::move(f)) {}

  int dim() const override { return dim_; }
  int rows() const override { return rows_; }
  Matrix value(std::span<const double> x) const override { return f_(x); }

 private:
  int dim_;
  int rows_;
  std::function<Matrix(std::span<const double>)> f_;
};

/// Connection coefficients A_mu(x), mu = 0..n-1, on one chart.
class CoefficientField {
 public:
  virtual ~CoefficientField() = default;

  virtual int dim() const = 0;
  virtual int k() const = 0;

  /// a[mu] = A_mu(x).
  virtual void values(std::span<const double> x, std::vector<Matrix>& a) const = 0;

  /// a[mu] = A_mu(x) and d[mu][nu] = d_nu A_mu(x). The default uses central
  /// differences with step 1e-5.
  virtual void jet(std::span<const double> x, std::vector<Matrix>& a, std::vector<std::vector<Matrix>>& d) const;

  /// True when derivatives are exact rather than finite differences.
  virtual bool exact_derivatives() const { return false; }
};

/// Coefficients given as expressions: table[mu][i][j].
class ExprCoefficients final : public CoefficientField {
 public:
  ExprCoefficients(int dim, int k, std::vector<std::vector<std::vector<Expr>>> table);

  int dim() const override { return dim_; }
  int k() const override { return k_; }
  void values(std::span<const double> x, std::vector<Matrix>& a) const override;
  void jet(std::span<const double> x, std::vector<Matrix>& a, std::vector<std::vector<Matrix>>& d) const override;
  bool exact_derivatives() const override { return true; }

  const std::vector<std::vector<std::vector<Expr>>>& table() const noexcept { return table_; }

 private:
  int dim_;
  int k_;
  std::vector<std::vector<std::vector<Expr>>> table_;
  // Constant entries are folded once so the integrator's hot loop only
  // evaluates entries that actually depend on x.
  std::vector<Matrix> constant_part_;
  struct Live {
    int mu;
    int i;
    int j;
  };
  std::vector<Live> live_;
};

/// Coefficients realized numerically by a callable.
class FunctionCoefficients final : public CoefficientField {
 public:
  using Fn = std::function<void(std::span<const double>, std::vector<Matrix>&)>;

  FunctionCoefficients(int dim, int k, Fn fn) : dim_(dim), k_(k), fn_(std::move(fn)) {}

  int dim() const override { return dim_; }
  int k() const override { return k_; }
  void values(std::span<const double> x, std::vector<Matrix>& a) const override { fn_(x, a); }

 private:
  int dim_;
  int k_;
  Fn fn_;
};

/// Trivialization change attached to a chart transition: a point with
/// fiber coordinate u in chart `from` has fiber coordinate g(x)^{-1} u in
/// chart `to`, so that A_to = g^{-1} A_from g + g^{-1} dg (pulled back).
struct GaugeTransition {
  int from = 0;
  int to = 0;
  std::shared_ptr<const MatrixField> gauge;  // function of from-chart coordinates
};

/// Local connection form: coefficients per chart plus gauge transitions.
/// Construction checks that coefficients lie in the Lie algebra at sampled
/// points and that the transition law holds within 1e-8 at 20 sampled
/// overlap points per transition.
class ConnectionForm {
 public:
  ConnectionForm(StructureGroup group, Atlas atlas, std::vector<std::shared_ptr<const CoefficientField>> fields,
                 std::vector<GaugeTransition> transitions, std::string name = "inline");

  const StructureGroup& group() const noexcept { return group_; }
  const Atlas& atlas() const noexcept { return atlas_; }
  const std::string& name() const noexcept { return name_; }
  int dim() const { return atlas_.dim(); }
  int k() const noexcept { return group_.k; }

  const CoefficientField& field(int chart_id) const;
  std::shared_ptr<const CoefficientField> field_ptr(int chart_id) const;
  const std::vector<GaugeTransition>& transitions() const noexcept { return transitions_; }
  const GaugeTransition* transition(int from, int to) const;

  /// Largest deviation from the overlap transition law seen at load time.
  double max_overlap_defect() const noexcept { return overlap_defect_; }

 private:
  StructureGroup group_;
  Atlas atlas_;
  std::vector<std::shared_ptr<const CoefficientField>> fields_;  // parallel to atlas_.charts()
  std::vector<GaugeTransition> transitions_;
  std::string name_;
  double overlap_defect_ = 0.0;
};

/// Curvature components F[mu][nu] for mu < nu at a point.
struct CurvatureValue {
  ChartPoint base;
  int dim = 0;
  std::vector<Matrix> upper;  // row-major over pairs mu < nu

  /// F_{mu nu}; antisymmetry comes from the storage convention.
  Matrix component(int mu, int nu) const;
  double max_norm() const;
};

struct FlatnessReport {
  bool flat = false;
  double max_norm = 0.0;
  ChartPoint worst;
  int points = 0;
  double tol = 0.0;
};

AlgebraElement eval_connection(const ConnectionForm& conn, const ChartPoint& x, const TangentVector& v);

/// F_{mu nu} = d_mu A_nu - d_nu A_mu + [A_mu, A_nu].
CurvatureValue curvature_at(const ConnectionForm& conn, const ChartPoint& x);

/// Re-trivialize chart `chart_id` by g(x): A -> g^{-1} A g + g^{-1} dg.
/// The transformed coefficients are realized numerically.
ConnectionForm gauge_transform(const ConnectionForm& conn, int chart_id, std::shared_ptr<const MatrixField> g);

/// Grid check of max ||F_{mu nu}||_F over `samples` cell-centred points per axis in every chart.
FlatnessReport is_flat(const ConnectionForm& conn, int samples, double tol);

/// Built-in connections by name:
///   flat-so2, abelian-area(f), constant-so3(a1, a2), levi-civita-s2-stereo,
///   levi-civita-s2-twochart, pure-gauge(c), pure-gauge-so3(c).
ConnectionForm builtin(std::string_view name);

/// Names accepted by builtin(), with default arguments.
std::vector<std::string> builtin_names();

/// Deterministic sample of points strictly inside a box.
std::vector<Vector> sample_box(const Box& box, int count, unsigned seed);

}  // namespace holonome
