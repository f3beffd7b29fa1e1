#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "holonome/errors.hpp"

namespace holonome {

/// Largest number of independent variables an expression may reference
/// (the grammar only has x1..x9).
inline constexpr std::size_t kMaxVars = 9;

/// Forward-mode dual number carrying a gradient with respect to up to
/// kMaxVars variables. Unused slots stay zero.
template <typename T>
struct Dual {
  T value{};
  std::array<T, kMaxVars> grad{};

  constexpr Dual() = default;
  constexpr Dual(T v) : value(v) {}  // NOLINT: constants promote implicitly

  static constexpr Dual variable(T v, std::size_t index) {
    Dual d(v);
    d.grad[index] = T(1);
    return d;
  }
};

inline double primal(double x) noexcept { return x; }

template <typename T>
double primal(const Dual<T>& x) noexcept {
  return primal(x.value);
}

namespace detail {

template <typename T>
Dual<T> chain(const Dual<T>& x, T value, T slope) {
  Dual<T> r(value);
  for (std::size_t i = 0; i < kMaxVars; ++i) r.grad[i] = slope * x.grad[i];
  return r;
}

}  // namespace detail

template <typename T>
Dual<T> operator-(const Dual<T>& a) {
  Dual<T> r(-a.value);
  for (std::size_t i = 0; i < kMaxVars; ++i) r.grad[i] = -a.grad[i];
  return r;
}

template <typename T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r(a.value + b.value);
  for (std::size_t i = 0; i < kMaxVars; ++i) r.grad[i] = a.grad[i] + b.grad[i];
  return r;
}

template <typename T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r(a.value - b.value);
  for (std::size_t i = 0; i < kMaxVars; ++i) r.grad[i] = a.grad[i] - b.grad[i];
  return r;
}

template <typename T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r(a.value * b.value);
  for (std::size_t i = 0; i < kMaxVars; ++i) r.grad[i] = a.grad[i] * b.value + a.value * b.grad[i];
  return r;
}

template <typename T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  const T q = a.value / b.value;
  Dual<T> r(q);
  for (std::size_t i = 0; i < kMaxVars; ++i) r.grad[i] = (a.grad[i] - q * b.grad[i]) / b.value;
  return r;
}

template <typename T>
Dual<T> sin(const Dual<T>& x) {
  using std::cos;
  using std::sin;
  return detail::chain(x, T(sin(x.value)), T(cos(x.value)));
}

template <typename T>
Dual<T> cos(const Dual<T>& x) {
  using std::cos;
  using std::sin;
  return detail::chain(x, T(cos(x.value)), T(-sin(x.value)));
}

template <typename T>
Dual<T> exp(const Dual<T>& x) {
  using std::exp;
  const T e = exp(x.value);
  return detail::chain(x, e, e);
}

template <typename T>
Dual<T> log(const Dual<T>& x) {
  using std::log;
  return detail::chain(x, T(log(x.value)), T(1) / x.value);
}

/// sqrt is not differentiable at 0; the caller rejects that case before
/// getting here.
template <typename T>
Dual<T> sqrt(const Dual<T>& x) {
  using std::sqrt;
  const T s = sqrt(x.value);
  return detail::chain(x, s, T(0.5) / s);
}

template <typename T>
Dual<T> atan2(const Dual<T>& y, const Dual<T>& x) {
  using std::atan2;
  const T r2 = x.value * x.value + y.value * y.value;
  Dual<T> r(atan2(y.value, x.value));
  for (std::size_t i = 0; i < kMaxVars; ++i)
    r.grad[i] = (x.value * y.grad[i] - y.value * x.grad[i]) / r2;
  return r;
}

template <typename T>
Dual<T> ipow(const Dual<T>& x, int n) {
  if (n == 0) return Dual<T>(T(1));
  T lower(1);
  for (int i = 0; i < n - 1; ++i) lower = lower * x.value;
  return detail::chain(x, T(lower * x.value), T(T(n) * lower));
}

inline double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

}  // namespace holonome
