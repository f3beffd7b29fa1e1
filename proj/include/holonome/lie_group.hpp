#pragma once

#include <cmath>
#include <string>

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "holonome/errors.hpp"

namespace holonome {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class GroupKind { GL, SO, U1 };

/// Real matrix structure group. U1 is realized as SO(2).
struct StructureGroup {
  GroupKind kind = GroupKind::SO;
  int k = 2;

  static StructureGroup gl(int k);
  static StructureGroup so(int k);
  static StructureGroup u1();

  bool orthogonal() const noexcept { return kind != GroupKind::GL; }
  std::string name() const;

  friend bool operator==(const StructureGroup&, const StructureGroup&) = default;
};

// ---------------------------------------------------------------------------
// Scalar-generic matrix kernels

/// Matrix exponential by scaling and squaring with a truncated Taylor series
/// on the scaled argument (norm <= 1/2, 24 terms is past double precision).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> expm(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index k = a.rows();
  const Scalar norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > Scalar(0.5)) squarings = static_cast<int>(std::ceil(std::log2(norm / Scalar(0.5))));
  const M scaled = a / std::ldexp(Scalar(1), squarings);

  M result = M::Identity(k, k);
  M term = M::Identity(k, k);
  for (int i = 1; i <= 24; ++i) {
    term = (term * scaled) / Scalar(i);
    result += term;
    if (term.cwiseAbs().maxCoeff() < Scalar(1e-18)) break;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

/// Principal logarithm of a matrix close to the identity, by inverse
/// scaling and squaring: Denman-Beavers square roots until ||X - I|| <= 0.05,
/// then the Mercator series. Caller guarantees ||g - I||_F < 1.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> logm_near_identity(
    const Eigen::MatrixBase<Derived>& g) {
  using Scalar = typename Derived::Scalar;
  using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index k = g.rows();
  const M id = M::Identity(k, k);
  M x = g;
  int roots = 0;
  while ((x - id).norm() > Scalar(0.05) && roots < 40) {
    M y = x;
    M z = id;
    for (int it = 0; it < 60; ++it) {
      const M y_next = Scalar(0.5) * (y + z.inverse());
      const M z_next = Scalar(0.5) * (z + y.inverse());
      const Scalar delta = (y_next - y).norm();
      y = y_next;
      z = z_next;
      if (delta <= Scalar(1e-16) * y.norm()) break;
    }
    x = y;
    ++roots;
  }
  const M e = x - id;
  M result = M::Zero(k, k);
  M power = e;
  for (int i = 1; i <= 60; ++i) {
    const M term = power / Scalar(i);
    if (i % 2 == 1) {
      result += term;
    } else {
      result -= term;
    }
    if (term.norm() < Scalar(1e-19)) break;
    power = power * e;
  }
  return result * std::ldexp(Scalar(1), roots);
}

/// Orthogonal polar factor U V^T of the SVD m = U S V^T: the nearest
/// orthogonal matrix in the Frobenius norm.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> polar_factor(
    const Eigen::MatrixBase<Derived>& m) {
  using M = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::JacobiSVD<M> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

template <typename Derived>
typename Derived::Scalar orthogonality_defect(const Eigen::MatrixBase<Derived>& g) {
  using M = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  return (g.transpose() * g - M::Identity(g.rows(), g.cols())).norm();
}

// ---------------------------------------------------------------------------
// Checked group / algebra values

/// k x k matrix checked against the group's defining constraints on
/// construction: |det| > 1e-12 for GL, orthogonal within 1e-9 with
/// positive determinant for SO and U1.
class GroupElement {
 public:
  GroupElement(Matrix g, StructureGroup group);

  static GroupElement identity(StructureGroup group);

  const Matrix& matrix() const noexcept { return g_; }
  const StructureGroup& group() const noexcept { return group_; }

  GroupElement inverse() const;
  friend GroupElement operator*(const GroupElement& a, const GroupElement& b);

 private:
  Matrix g_;
  StructureGroup group_;
};

/// Lie algebra element; skew-symmetric within 1e-12 for SO and U1.
class AlgebraElement {
 public:
  AlgebraElement(Matrix a, StructureGroup group);

  static AlgebraElement zero(StructureGroup group);

  const Matrix& matrix() const noexcept { return a_; }
  const StructureGroup& group() const noexcept { return group_; }

 private:
  Matrix a_;
  StructureGroup group_;
};

/// Checks the algebra constraint without throwing.
bool in_algebra(const Matrix& a, const StructureGroup& group, double tol = 1e-12);

GroupElement group_exp(const AlgebraElement& a);

/// Principal logarithm; OutOfBranch unless ||g - I||_F < 1.
AlgebraElement group_log(const GroupElement& g);

/// Same as group_log on a raw matrix, returning the raw algebra matrix
/// (skew part only for orthogonal groups).
Matrix log_near_identity(const Matrix& g, const StructureGroup& group);

/// Map a nearby raw matrix onto the group: polar factor for SO/U1, a
/// determinant check for GL. SingularInput on degenerate input.
GroupElement project_to_group(const Matrix& m, const StructureGroup& group);

/// Rotation angle in (-pi, pi]: signed (atan2) for SO(2)/U1, unsigned from
/// the trace for SO(3). InvalidArgument for other groups.
double rotation_angle(const Matrix& g, const StructureGroup& group);

/// Angle difference reduced to (-pi, pi].
double wrap_angle(double a);

/// Standard so(2) generator [[0,-1],[1,0]].
Matrix so2_generator();

/// Standard so(3) generators L1, L2, L3 with [L1, L2] = L3 (cyclic).
Matrix so3_generator(int axis);

}  // namespace holonome
