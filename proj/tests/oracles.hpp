#pragma once

// Reference computations used by the tests. Nothing here calls into the
// library's numerical kernels.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Mat rotation2(double theta) {
  Mat r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

inline Mat skew3(const Eigen::Vector3d& w) {
  Mat s(3, 3);
  s << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return s;
}

/// exp(skew3(w)) by Rodrigues' formula.
inline Mat rodrigues(const Eigen::Vector3d& w) {
  const double th = w.norm();
  const Mat k = skew3(w);
  if (th < 1e-14) return Mat::Identity(3, 3) + k;
  return Mat::Identity(3, 3) + std::sin(th) / th * k + (1.0 - std::cos(th)) / (th * th) * k * k;
}

/// Plain Taylor series, no scaling.
inline Mat taylor_exp(const Mat& a, int terms = 30) {
  Mat sum = Mat::Identity(a.rows(), a.cols());
  Mat term = sum;
  for (int i = 1; i <= terms; ++i) {
    term = term * a / static_cast<double>(i);
    sum += term;
  }
  return sum;
}

/// Midpoint rule for the closed polygon integral of (f/2)(x dy - y dx).
inline double abelian_loop_integral(double f, const std::vector<Eigen::Vector2d>& corners, int steps_per_edge) {
  double sum = 0.0;
  for (std::size_t e = 0; e < corners.size(); ++e) {
    const Eigen::Vector2d a = corners[e];
    const Eigen::Vector2d b = corners[(e + 1) % corners.size()];
    const Eigen::Vector2d d = (b - a) / steps_per_edge;
    for (int i = 0; i < steps_per_edge; ++i) {
      const Eigen::Vector2d m = a + (i + 0.5) * d;
      sum += 0.5 * f * (m.x() * d.y() - m.y() * d.x());
    }
  }
  return sum;
}

inline double central_difference(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                                 int i, double h) {
  const double x0 = x[static_cast<std::size_t>(i)];
  x[static_cast<std::size_t>(i)] = x0 + h;
  const double up = f(x);
  x[static_cast<std::size_t>(i)] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

/// Random expression text over x1..x{dim} with nesting depth <= depth.
/// Domains are kept safe: log and sqrt see 1 + square, division sees
/// 2 + square.
class ExprGenerator {
 public:
  ExprGenerator(int dim, unsigned seed) : dim_(dim), rng_(seed) {}

  std::string operator()(int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 11);
    switch (pick(rng_)) {
      case 0: return var();
      case 1: return literal();
      case 2: return "(" + (*this)(depth - 1) + " + " + (*this)(depth - 1) + ")";
      case 3: return "(" + (*this)(depth - 1) + " - " + (*this)(depth - 1) + ")";
      case 4: return "(" + (*this)(depth - 1) + " * " + (*this)(depth - 1) + ")";
      case 5: return "(" + (*this)(depth - 1) + " / (2 + (" + (*this)(depth - 1) + ")^2))";
      case 6: return "sin(" + (*this)(depth - 1) + ")";
      case 7: return "cos(" + (*this)(depth - 1) + ")";
      case 8: return "exp(sin(" + (*this)(depth - 1) + "))";
      case 9: return "log(1 + (" + (*this)(depth - 1) + ")^2)";
      case 10: return "sqrt(1 + (" + (*this)(depth - 1) + ")^2)";
      default: return "-(" + (*this)(depth - 1) + ")^" + std::to_string(std::uniform_int_distribution<int>(1, 3)(rng_));
    }
  }

  std::vector<double> point() {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(dim_));
    for (auto& v : x) v = u(rng_);
    return x;
  }

 private:
  std::string var() { return "x" + std::to_string(std::uniform_int_distribution<int>(1, dim_)(rng_)); }
  std::string literal() {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", std::uniform_real_distribution<double>(0.1, 2.0)(rng_));
    return buf;
  }

  int dim_;
  std::mt19937 rng_;
};

}  // namespace oracle
