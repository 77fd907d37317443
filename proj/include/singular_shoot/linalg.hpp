#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace sshoot {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Throws DomainError if any entry is not finite.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  Vector col(std::size_t j) const;
  void set_col(std::size_t j, std::span<const double> c);

  Matrix transpose() const;
  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Matrix& b);

  double max_abs() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& b);
  Matrix& operator-=(const Matrix& b);
  Matrix& operator*=(double s);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);
Vector axpy(double alpha, std::span<const double> x, std::span<const double> y);

/// Householder QR with column pivoting, A P = Q R.
struct QRDecomposition {
  Matrix qr;                      // R on and above the diagonal, reflectors below
  std::vector<double> tau;        // reflector coefficients
  std::vector<std::size_t> perm;  // column j of A P is column perm[j] of A
  std::size_t rank = 0;

  Matrix q() const;  // thin Q, m x n
  Matrix r() const;  // n x n upper triangle
  /// Q^T b for a vector of length m.
  Vector apply_qt(std::span<const double> b) const;
};

/// Factorizes A; `rank` counts leading pivots with |R_kk| >= rtol*|R_00|.
QRDecomposition qr_pivoted(const Matrix& a, double rtol = 1e-12);

/// argmin |Ax - b| for m >= n. Throws RankDeficient on a rank-deficient A.
Vector solve_least_squares(const Matrix& a, std::span<const double> b, double rtol = 1e-12);

/// Square solve with partial pivoting. Throws RankDeficient on exact singularity.
Vector solve(const Matrix& a, std::span<const double> b);
Matrix inverse(const Matrix& a);
double determinant(const Matrix& a);

/// Eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi).
/// Throws NotSymmetric if |A - A^T| exceeds 1e-10 relative.
Vector eig_symmetric(const Matrix& a);
double eig_min_symmetric(const Matrix& a);

}  // namespace sshoot
