#pragma once

// Small dense linear algebra for matrices of size <= 7 (and the occasional
// least-squares design matrix). Row-major storage, value semantics.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace msl {

using Vec = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0);
  Matrix(int rows, int cols, std::initializer_list<double> row_major);

  static Matrix identity(int k);
  static Matrix diagonal(std::span<const double> d);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int r, int c) { return a_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return a_[static_cast<std::size_t>(r) * cols_ + c]; }

  std::span<double> data() { return a_; }
  std::span<const double> data() const { return a_; }

  Matrix transpose() const;
  double frobenius() const;
  double max_abs() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> a_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vec operator*(const Matrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

// LU with partial pivoting. Throws InvalidArgument on non-square input.
double determinant(const Matrix& a);
// Solves a X = b; throws DegenerateSample when a is numerically singular.
Matrix solve(const Matrix& a, const Matrix& b);
Vec solve(const Matrix& a, std::span<const double> b);
Matrix inverse(const Matrix& a);

// Symmetric matrix; symmetry is enforced on construction by averaging the
// two triangles, so every SymMatrix is exactly symmetric in storage.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int k) : m_(k, k) {}
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(int k) { return SymMatrix(Matrix::identity(k)); }

  int size() const { return m_.rows(); }
  double operator()(int r, int c) const { return m_(r, c); }
  // Sets both (r,c) and (c,r).
  void set(int r, int c, double v);
  void add(int r, int c, double v);

  const Matrix& matrix() const { return m_; }
  double frobenius() const { return m_.frobenius(); }

 private:
  Matrix m_;
};

struct EigenSystem {
  Vec values;      // ascending
  Matrix vectors;  // column j is the eigenvector of values[j]
};

// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
// tol * (1 + ||a||_F).
EigenSystem jacobi_eigen(const SymMatrix& a, double tol = 1e-12, int max_sweeps = 100);
Vec eigenvalues(const SymMatrix& a);

// Householder QR least squares: minimizes ||a x - b||_2 for a tall a with
// full column rank. Throws DegenerateSample on rank deficiency.
Vec least_squares(const Matrix& a, std::span<const double> b);
// Column-wise least squares for several right-hand sides at once.
Matrix least_squares(const Matrix& a, const Matrix& b);

}  // namespace msl
