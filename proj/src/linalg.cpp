#include "singular_shoot/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "singular_shoot/errors.hpp"

namespace sshoot {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols) {
    throw DimensionMismatch("matrix entry count " + std::to_string(data_.size()) +
                            " != " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (!all_finite()) throw DomainError("non-finite matrix entry");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionMismatch("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  if (!all_finite()) throw DomainError("non-finite matrix entry");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Vector Matrix::col(std::size_t j) const {
  Vector c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

void Matrix::set_col(std::size_t j, std::span<const double> c) {
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = c[i];
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  Matrix b(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

void Matrix::set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& b) {
  if (b.rows_ != rows_ || b.cols_ != cols_) throw DimensionMismatch("matrix sum");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += b.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& b) {
  if (b.rows_ != rows_ || b.cols_ != cols_) throw DimensionMismatch("matrix difference");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= b.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matrix product");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw DimensionMismatch("matrix-vector product");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) {
  double scale = 0.0, ssq = 1.0;
  for (double v : a) {
    if (v == 0.0) continue;
    const double av = std::abs(v);
    if (scale < av) {
      ssq = 1.0 + ssq * (scale / av) * (scale / av);
      scale = av;
    } else {
      ssq += (av / scale) * (av / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

Vector axpy(double alpha, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("axpy");
  Vector r(y.begin(), y.end());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += alpha * x[i];
  return r;
}

// ---------------------------------------------------------------------------
// QR

QRDecomposition qr_pivoted(const Matrix& a, double rtol) {
  const std::size_t m = a.rows(), n = a.cols();
  if (m < n) throw DimensionMismatch("qr_pivoted needs rows >= cols");
  if (!a.all_finite()) throw DomainError("non-finite entry in QR input");
  QRDecomposition f;
  f.qr = a;
  f.tau.assign(n, 0.0);
  f.perm.resize(n);
  std::iota(f.perm.begin(), f.perm.end(), 0);
  Matrix& r = f.qr;

  std::vector<double> cnorm(n);
  for (std::size_t j = 0; j < n; ++j) cnorm[j] = norm2(r.col(j));

  for (std::size_t k = 0; k < n; ++k) {
    // Recompute remaining norms exactly; matrices here are small.
    std::size_t piv = k;
    double best = -1.0;
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += r(i, j) * r(i, j);
      cnorm[j] = std::sqrt(s);
      if (cnorm[j] > best) {
        best = cnorm[j];
        piv = j;
      }
    }
    if (piv != k) {
      for (std::size_t i = 0; i < m; ++i) std::swap(r(i, k), r(i, piv));
      std::swap(f.perm[k], f.perm[piv]);
    }

    Vector x(m - k);
    for (std::size_t i = k; i < m; ++i) x[i - k] = r(i, k);
    const double alpha = norm2(x);
    if (alpha == 0.0) {
      f.tau[k] = 0.0;
      continue;
    }
    const double beta = x[0] >= 0 ? -alpha : alpha;
    const double v0 = x[0] - beta;
    // v = (1, x[1:]/v0), tau = (beta - x0)/beta
    f.tau[k] = (beta - x[0]) / beta;
    r(k, k) = beta;
    for (std::size_t i = k + 1; i < m; ++i) r(i, k) /= v0;
    for (std::size_t j = k + 1; j < n; ++j) {
      double s = r(k, j);
      for (std::size_t i = k + 1; i < m; ++i) s += r(i, k) * r(i, j);
      s *= f.tau[k];
      r(k, j) -= s;
      for (std::size_t i = k + 1; i < m; ++i) r(i, j) -= s * r(i, k);
    }
  }

  const double r00 = n ? std::abs(r(0, 0)) : 0.0;
  f.rank = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (r00 > 0.0 && std::abs(r(k, k)) >= rtol * r00)
      ++f.rank;
    else
      break;
  }
  return f;
}

Vector QRDecomposition::apply_qt(std::span<const double> b) const {
  const std::size_t m = qr.rows(), n = qr.cols();
  if (b.size() != m) throw DimensionMismatch("apply_qt");
  Vector y(b.begin(), b.end());
  for (std::size_t k = 0; k < n; ++k) {
    if (tau[k] == 0.0) continue;
    double s = y[k];
    for (std::size_t i = k + 1; i < m; ++i) s += qr(i, k) * y[i];
    s *= tau[k];
    y[k] -= s;
    for (std::size_t i = k + 1; i < m; ++i) y[i] -= s * qr(i, k);
  }
  return y;
}

Matrix QRDecomposition::q() const {
  const std::size_t m = qr.rows(), n = qr.cols();
  Matrix out(m, n);
  for (std::size_t j = 0; j < n; ++j) {
    Vector e(m, 0.0);
    e[j] = 1.0;
    // Q e_j = H_0 ... H_{n-1} e_j
    for (std::size_t kk = n; kk-- > 0;) {
      if (tau[kk] == 0.0) continue;
      double s = e[kk];
      for (std::size_t i = kk + 1; i < m; ++i) s += qr(i, kk) * e[i];
      s *= tau[kk];
      e[kk] -= s;
      for (std::size_t i = kk + 1; i < m; ++i) e[i] -= s * qr(i, kk);
    }
    out.set_col(j, e);
  }
  return out;
}

Matrix QRDecomposition::r() const {
  const std::size_t n = qr.cols();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) out(i, j) = qr(i, j);
  return out;
}

Vector solve_least_squares(const Matrix& a, std::span<const double> b, double rtol) {
  const std::size_t m = a.rows(), n = a.cols();
  if (n == 0) throw DimensionMismatch("least squares with zero unknowns");
  if (b.size() != m) throw DimensionMismatch("least squares right-hand side");
  const QRDecomposition f = qr_pivoted(a, rtol);
  if (f.rank < n) {
    throw RankDeficient("pivot " + std::to_string(f.rank) + " of " + std::to_string(n) +
                        " below rtol " + std::to_string(rtol));
  }
  const Vector y = f.apply_qt(b);
  Vector z(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= f.qr(i, j) * z[j];
    z[i] = s / f.qr(i, i);
  }
  Vector x(n);
  for (std::size_t j = 0; j < n; ++j) x[f.perm[j]] = z[j];
  return x;
}

// ---------------------------------------------------------------------------
// Square systems

namespace {

struct LU {
  Matrix lu;
  std::vector<std::size_t> piv;
  int sign = 1;
  bool singular = false;
};

LU lu_factor(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("square matrix expected");
  const std::size_t n = a.rows();
  LU f{a, std::vector<std::size_t>(n), 1, false};
  std::iota(f.piv.begin(), f.piv.end(), 0);
  Matrix& m = f.lu;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(m(i, k)) > std::abs(m(p, k))) p = i;
    if (m(p, k) == 0.0) {
      f.singular = true;
      continue;
    }
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(p, j));
      std::swap(f.piv[k], f.piv[p]);
      f.sign = -f.sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      m(i, k) /= m(k, k);
      for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= m(i, k) * m(k, j);
    }
  }
  return f;
}

}  // namespace

Vector solve(const Matrix& a, std::span<const double> b) {
  const LU f = lu_factor(a);
  if (f.singular) throw RankDeficient("singular square system");
  const std::size_t n = a.rows();
  if (b.size() != n) throw DimensionMismatch("solve right-hand side");
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[f.piv[i]];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = i + 1; j < n; ++j) x[i] -= f.lu(i, j) * x[j];
    x[i] /= f.lu(i, i);
  }
  return x;
}

Matrix inverse(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix inv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    Vector e(n, 0.0);
    e[j] = 1.0;
    inv.set_col(j, solve(a, e));
  }
  return inv;
}

double determinant(const Matrix& a) {
  const LU f = lu_factor(a);
  if (f.singular) return 0.0;
  double d = f.sign;
  for (std::size_t i = 0; i < a.rows(); ++i) d *= f.lu(i, i);
  return d;
}

// ---------------------------------------------------------------------------
// Symmetric eigenvalues

Vector eig_symmetric(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("eigenvalues of a non-square matrix");
  const std::size_t n = a.rows();
  const double scale = std::max(a.max_abs(), 1e-300);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-10 * scale)
        throw NotSymmetric("entry (" + std::to_string(i) + "," + std::to_string(j) + ")");

  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = 0.5 * (a(i, j) + a(j, i));

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
    if (off <= 1e-34 * scale * scale) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
      }
  }
  Vector ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = m(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

double eig_min_symmetric(const Matrix& a) {
  if (a.rows() == 0) throw DimensionMismatch("eigenvalues of an empty matrix");
  return eig_symmetric(a).front();
}

}  // namespace sshoot
