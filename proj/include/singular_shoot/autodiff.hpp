#pragma once

// Forward-mode dual numbers. Dual<T> carries a value and one tangent; nesting
// gives higher derivatives (Dual<Dual<double>> for second order, and so on).
// Vector fields are written once as templates over the scalar type.

#include <cmath>
#include <cstddef>
#include <span>
#include <type_traits>
#include <vector>

#include "singular_shoot/errors.hpp"
#include "singular_shoot/linalg.hpp"

namespace sshoot {

template <class T>
struct Dual {
  T v{};
  T d{};

  Dual() = default;
  Dual(double x) : v(x), d(0.0) {}  // NOLINT: implicit lift of constants
  Dual(T value, T tangent) : v(std::move(value)), d(std::move(tangent)) {}

  Dual& operator+=(const Dual& b) { v += b.v; d += b.d; return *this; }
  Dual& operator-=(const Dual& b) { v -= b.v; d -= b.d; return *this; }
  Dual& operator*=(const Dual& b) { d = d * b.v + v * b.d; v *= b.v; return *this; }
  Dual& operator/=(const Dual& b) { *this = *this / b; return *this; }
};

using D1 = Dual<double>;
using D2 = Dual<D1>;
using D3 = Dual<D2>;

template <class T> struct is_dual : std::false_type {};
template <class T> struct is_dual<Dual<T>> : std::true_type {};

template <class T> Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) { return {a.v + b.v, a.d + b.d}; }
template <class T> Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) { return {a.v - b.v, a.d - b.d}; }
template <class T> Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }
template <class T> Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
template <class T> Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  const T q = a.v / b.v;
  return {q, (a.d - q * b.d) / b.v};
}
template <class T> Dual<T> operator+(const Dual<T>& a, double b) { return {a.v + b, a.d}; }
template <class T> Dual<T> operator+(double a, const Dual<T>& b) { return {a + b.v, b.d}; }
template <class T> Dual<T> operator-(const Dual<T>& a, double b) { return {a.v - b, a.d}; }
template <class T> Dual<T> operator-(double a, const Dual<T>& b) { return {a - b.v, -b.d}; }
template <class T> Dual<T> operator*(const Dual<T>& a, double b) { return {a.v * b, a.d * b}; }
template <class T> Dual<T> operator*(double a, const Dual<T>& b) { return {a * b.v, a * b.d}; }
template <class T> Dual<T> operator/(const Dual<T>& a, double b) { return {a.v / b, a.d / b}; }
template <class T> Dual<T> operator/(double a, const Dual<T>& b) {
  const T q = a / b.v;
  return {q, -q * b.d / b.v};
}

inline double primal(double x) { return x; }
template <class T> double primal(const Dual<T>& x) { return primal(x.v); }

template <class T> bool operator<(const Dual<T>& a, const Dual<T>& b) { return primal(a) < primal(b); }
template <class T> bool operator>(const Dual<T>& a, const Dual<T>& b) { return primal(a) > primal(b); }
template <class T> bool operator<(const Dual<T>& a, double b) { return primal(a) < b; }
template <class T> bool operator>(const Dual<T>& a, double b) { return primal(a) > b; }

using std::abs;
using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;
using std::tanh;

template <class T> Dual<T> sin(const Dual<T>& a) { return {sin(a.v), cos(a.v) * a.d}; }
template <class T> Dual<T> cos(const Dual<T>& a) { return {cos(a.v), -sin(a.v) * a.d}; }
template <class T> Dual<T> exp(const Dual<T>& a) {
  const T e = exp(a.v);
  return {e, e * a.d};
}
template <class T> Dual<T> log(const Dual<T>& a) {
  if (primal(a) <= 0.0) throw DomainError("log of non-positive argument");
  return {log(a.v), a.d / a.v};
}
template <class T> Dual<T> sqrt(const Dual<T>& a) {
  if (primal(a) <= 0.0) throw DomainError("sqrt derivative at non-positive argument");
  const T s = sqrt(a.v);
  return {s, a.d / (2.0 * s)};
}
template <class T> Dual<T> tanh(const Dual<T>& a) {
  const T t = tanh(a.v);
  return {t, (1.0 - t * t) * a.d};
}
template <class T> Dual<T> pow(const Dual<T>& a, double e) {
  return {pow(a.v, e), e * pow(a.v, e - 1.0) * a.d};
}
/// |a| with the tangent of the branch containing a (sign(0) = +1).
template <class T> Dual<T> abs(const Dual<T>& a) { return primal(a) < 0.0 ? -a : a; }

/// Embeds a lower-order scalar into S with zero tangents.
template <class S, class T>
S lift(const T& x) {
  if constexpr (std::is_same_v<S, T>) {
    return x;
  } else {
    static_assert(is_dual<S>::value, "cannot lift into a plain scalar");
    using Inner = decltype(S{}.v);
    return S(lift<Inner>(x), Inner(0.0));
  }
}

template <class S, class T>
std::vector<S> lift_vec(std::span<const T> x) {
  std::vector<S> out;
  out.reserve(x.size());
  for (const auto& xi : x) out.push_back(lift<S>(xi));
  return out;
}
template <class S, class T>
std::vector<S> lift_vec(const std::vector<T>& x) {
  return lift_vec<S>(std::span<const T>(x));
}

template <class S>
std::vector<Dual<S>> seed(std::span<const S> x, std::span<const S> dir) {
  std::vector<Dual<S>> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = Dual<S>(x[i], dir[i]);
  return out;
}

template <class S>
std::vector<Dual<S>> seed_unit(std::span<const S> x, std::size_t k) {
  std::vector<Dual<S>> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = Dual<S>(x[i], S(i == k ? 1.0 : 0.0));
  return out;
}

template <class S>
std::vector<S> values(const std::vector<Dual<S>>& y) {
  std::vector<S> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i].v;
  return out;
}

template <class S>
std::vector<S> tangents(const std::vector<Dual<S>>& y) {
  std::vector<S> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i].d;
  return out;
}

/// Directional derivative Df(x)·dir for a generic vector map f.
template <class S, class F>
std::vector<S> directional(F&& f, const std::vector<S>& x, const std::vector<S>& dir) {
  return tangents(f(seed<S>(x, dir)));
}

/// Jacobian of a generic map f: R^k -> R^j evaluated at plain doubles.
template <class F>
Matrix jacobian(F&& f, std::span<const double> x) {
  const std::size_t k = x.size();
  Matrix jac;
  for (std::size_t s = 0; s < k; ++s) {
    const std::vector<D1> y = f(seed_unit<double>(x, s));
    if (s == 0) jac = Matrix(y.size(), k);
    for (std::size_t i = 0; i < y.size(); ++i) jac(i, s) = y[i].d;
  }
  if (k == 0) jac = Matrix(f(std::vector<D1>{}).size(), 0);
  return jac;
}

/// Gradient of a generic scalar map.
template <class G>
Vector gradient(G&& g, std::span<const double> x) {
  Vector out(x.size());
  for (std::size_t s = 0; s < x.size(); ++s) out[s] = g(seed_unit<double>(x, s)).d;
  return out;
}

/// Hessian of a generic scalar map; bitwise symmetric.
template <class G>
Matrix hessian(G&& g, std::span<const double> x) {
  const std::size_t k = x.size();
  Matrix h(k, k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a; b < k; ++b) {
      std::vector<D2> z(k);
      for (std::size_t i = 0; i < k; ++i)
        z[i] = D2(D1(x[i], i == a ? 1.0 : 0.0), D1(i == b ? 1.0 : 0.0, 0.0));
      const double hab = g(z).d.d;
      h(a, b) = hab;
      h(b, a) = hab;
    }
  return h;
}

/// Gaussian elimination with partial pivoting on primal values, generic scalar.
/// `a` is row-major n x n. Throws RankDeficient on an exactly singular pivot.
template <class S>
std::vector<S> solve_generic(std::vector<S> a, std::vector<S> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(primal(a[i * n + k])) > std::abs(primal(a[p * n + k]))) p = i;
    if (primal(a[p * n + k]) == 0.0) throw RankDeficient("singular generic system");
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
      std::swap(b[k], b[p]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const S f = a[i * n + k] / a[k * n + k];
      for (std::size_t j = k; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
      b[i] -= f * b[k];
    }
  }
  std::vector<S> x(n);
  for (std::size_t i = n; i-- > 0;) {
    S s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i * n + j] * x[j];
    x[i] = s / a[i * n + i];
  }
  return x;
}

}  // namespace sshoot
