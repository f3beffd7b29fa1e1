#include "holonome/lie_group.hpp"

#include <algorithm>
#include <numbers>

namespace holonome {

StructureGroup StructureGroup::gl(int k) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "GL(k) needs k >= 1");
  return {GroupKind::GL, k};
}

StructureGroup StructureGroup::so(int k) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "SO(k) needs k >= 1");
  return {GroupKind::SO, k};
}

StructureGroup StructureGroup::u1() { return {GroupKind::U1, 2}; }

std::string StructureGroup::name() const {
  switch (kind) {
    case GroupKind::GL: return "GL(" + std::to_string(k) + ")";
    case GroupKind::SO: return "SO(" + std::to_string(k) + ")";
    case GroupKind::U1: return "U(1)";
  }
  return "?";
}

namespace {

void check_shape(const Matrix& m, const StructureGroup& group, const char* what) {
  if (group.kind == GroupKind::U1 && group.k != 2) throw Error(ErrorKind::InvalidArgument, "U(1) is realized with k = 2");
  if (m.rows() != group.k || m.cols() != group.k)
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be " + std::to_string(group.k) + "x" +
                                                std::to_string(group.k) + " for " + group.name());
}

}  // namespace

GroupElement::GroupElement(Matrix g, StructureGroup group) : g_(std::move(g)), group_(group) {
  check_shape(g_, group_, "group element");
  const double det = g_.determinant();
  if (group_.orthogonal()) {
    const double defect = orthogonality_defect(g_);
    if (!(defect <= 1e-9) || !(det > 0.0))
      throw Error(ErrorKind::InvalidArgument, "matrix is not in " + group_.name() +
                                                  " (||g^T g - I|| = " + std::to_string(defect) + ")");
  } else if (!(std::abs(det) > 1e-12)) {
    throw Error(ErrorKind::InvalidArgument, "matrix is not invertible");
  }
}

GroupElement GroupElement::identity(StructureGroup group) {
  return GroupElement(Matrix::Identity(group.k, group.k), group);
}

GroupElement GroupElement::inverse() const {
  if (group_.orthogonal()) return GroupElement(g_.transpose(), group_);
  return GroupElement(g_.inverse(), group_);
}

GroupElement operator*(const GroupElement& a, const GroupElement& b) {
  if (!(a.group_ == b.group_)) throw Error(ErrorKind::InvalidArgument, "group mismatch in product");
  return GroupElement(a.g_ * b.g_, a.group_);
}

bool in_algebra(const Matrix& a, const StructureGroup& group, double tol) {
  if (a.rows() != group.k || a.cols() != group.k) return false;
  if (!a.allFinite()) return false;
  if (group.orthogonal()) return (a + a.transpose()).norm() <= tol;
  return true;
}

AlgebraElement::AlgebraElement(Matrix a, StructureGroup group) : a_(std::move(a)), group_(group) {
  check_shape(a_, group_, "algebra element");
  if (!in_algebra(a_, group_))
    throw Error(ErrorKind::InvalidArgument, "matrix is not in the Lie algebra of " + group_.name());
}

AlgebraElement AlgebraElement::zero(StructureGroup group) {
  return AlgebraElement(Matrix::Zero(group.k, group.k), group);
}

GroupElement group_exp(const AlgebraElement& a) {
  Matrix g = expm(a.matrix());
  if (a.group().orthogonal()) g = polar_factor(g);
  return GroupElement(std::move(g), a.group());
}

Matrix log_near_identity(const Matrix& g, const StructureGroup& group) {
  const double dist = (g - Matrix::Identity(g.rows(), g.cols())).norm();
  if (!(dist < 1.0))
    throw Error(ErrorKind::OutOfBranch, "||g - I||_F = " + std::to_string(dist) + " is outside the principal branch");
  Matrix a = logm_near_identity(g);
  if (group.orthogonal()) a = 0.5 * (a - a.transpose());
  return a;
}

AlgebraElement group_log(const GroupElement& g) {
  return AlgebraElement(log_near_identity(g.matrix(), g.group()), g.group());
}

GroupElement project_to_group(const Matrix& m, const StructureGroup& group) {
  check_shape(m, group, "matrix");
  if (!m.allFinite()) throw Error(ErrorKind::SingularInput, "non-finite matrix");
  if (group.orthogonal()) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const double smallest = svd.singularValues().minCoeff();
    if (!(smallest > 1e-12)) throw Error(ErrorKind::SingularInput, "matrix is numerically singular");
    if (!(m.determinant() > 0.0)) throw Error(ErrorKind::SingularInput, "matrix has non-positive determinant");
    return GroupElement(polar_factor(m), group);
  }
  if (!(std::abs(m.determinant()) > 1e-12)) throw Error(ErrorKind::SingularInput, "matrix is numerically singular");
  return GroupElement(m, group);
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(a, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

double rotation_angle(const Matrix& g, const StructureGroup& group) {
  if (group.orthogonal() && group.k == 2) return wrap_angle(std::atan2(g(1, 0), g(0, 0)));
  if (group.orthogonal() && group.k == 3) {
    const double c = std::clamp(0.5 * (g.trace() - 1.0), -1.0, 1.0);
    return std::acos(c);
  }
  throw Error(ErrorKind::InvalidArgument, "rotation angle is defined for SO(2), U(1) and SO(3) only");
}

Matrix so2_generator() {
  Matrix j(2, 2);
  j << 0.0, -1.0, 1.0, 0.0;
  return j;
}

Matrix so3_generator(int axis) {
  Matrix l = Matrix::Zero(3, 3);
  switch (axis) {
    case 0: l(2, 1) = 1.0; l(1, 2) = -1.0; break;
    case 1: l(0, 2) = 1.0; l(2, 0) = -1.0; break;
    case 2: l(1, 0) = 1.0; l(0, 1) = -1.0; break;
    default: throw Error(ErrorKind::InvalidArgument, "so(3) axis must be 0, 1 or 2");
  }
  return l;
}

}  // namespace holonome
