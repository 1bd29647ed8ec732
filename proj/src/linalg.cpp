#include "msl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "msl/errors.hpp"

namespace msl {

Matrix::Matrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, fill) {}

Matrix::Matrix(int rows, int cols, std::initializer_list<double> row_major)
    : rows_(rows), cols_(cols), a_(row_major) {
  if (a_.size() != static_cast<std::size_t>(rows) * cols)
    throw InvalidArgument("Matrix: initializer size mismatch");
}

Matrix Matrix::identity(int k) {
  Matrix m(k, k);
  for (int i = 0; i < k; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  const int k = static_cast<int>(d.size());
  Matrix m(k, k);
  for (int i = 0; i < k; ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double Matrix::frobenius() const {
  double s = 0.0;
  for (double v : a_) s += v * v;
  return std::sqrt(s);
}

double Matrix::max_abs() const {
  double s = 0.0;
  for (double v : a_) s = std::max(s, std::abs(v));
  return s;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw InvalidArgument("Matrix +=: shape mismatch");
  for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw InvalidArgument("Matrix -=: shape mismatch");
  for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : a_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InvalidArgument("Matrix *: shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Vec operator*(const Matrix& a, std::span<const double> x) {
  if (static_cast<int>(x.size()) != a.cols()) throw InvalidArgument("Matrix * vec: shape mismatch");
  Vec y(a.rows(), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (int k = 0; k < a.cols(); ++k) s += a(i, k) * x[k];
    y[i] = s;
  }
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

namespace {

struct LU {
  Matrix lu;
  std::vector<int> perm;
  int sign = 1;
  bool singular = false;
};

LU factor(const Matrix& a) {
  if (a.rows() != a.cols()) throw InvalidArgument("LU: matrix must be square");
  const int k = a.rows();
  LU f{a, std::vector<int>(k), 1, false};
  std::iota(f.perm.begin(), f.perm.end(), 0);
  const double scale = std::max(1.0, a.max_abs());
  for (int c = 0; c < k; ++c) {
    int piv = c;
    for (int r = c + 1; r < k; ++r)
      if (std::abs(f.lu(r, c)) > std::abs(f.lu(piv, c))) piv = r;
    if (std::abs(f.lu(piv, c)) <= 1e-14 * scale) {
      f.singular = true;
      continue;
    }
    if (piv != c) {
      for (int j = 0; j < k; ++j) std::swap(f.lu(piv, j), f.lu(c, j));
      std::swap(f.perm[piv], f.perm[c]);
      f.sign = -f.sign;
    }
    for (int r = c + 1; r < k; ++r) {
      const double l = f.lu(r, c) / f.lu(c, c);
      f.lu(r, c) = l;
      for (int j = c + 1; j < k; ++j) f.lu(r, j) -= l * f.lu(c, j);
    }
  }
  return f;
}

}  // namespace

double determinant(const Matrix& a) {
  const LU f = factor(a);
  if (f.singular) return 0.0;
  double d = f.sign;
  for (int i = 0; i < a.rows(); ++i) d *= f.lu(i, i);
  return d;
}

Matrix solve(const Matrix& a, const Matrix& b) {
  const LU f = factor(a);
  if (f.singular) throw DegenerateSample("solve: singular matrix");
  const int k = a.rows();
  if (b.rows() != k) throw InvalidArgument("solve: shape mismatch");
  Matrix x(k, b.cols());
  for (int col = 0; col < b.cols(); ++col) {
    Vec y(k);
    for (int i = 0; i < k; ++i) {
      double s = b(f.perm[i], col);
      for (int j = 0; j < i; ++j) s -= f.lu(i, j) * y[j];
      y[i] = s;
    }
    for (int i = k - 1; i >= 0; --i) {
      double s = y[i];
      for (int j = i + 1; j < k; ++j) s -= f.lu(i, j) * x(j, col);
      x(i, col) = s / f.lu(i, i);
    }
  }
  return x;
}

Vec solve(const Matrix& a, std::span<const double> b) {
  Matrix bm(static_cast<int>(b.size()), 1);
  for (std::size_t i = 0; i < b.size(); ++i) bm(static_cast<int>(i), 0) = b[i];
  const Matrix x = solve(a, bm);
  return Vec(x.data().begin(), x.data().end());
}

Matrix inverse(const Matrix& a) { return solve(a, Matrix::identity(a.rows())); }

SymMatrix::SymMatrix(const Matrix& m) : m_(m.rows(), m.cols()) {
  if (m.rows() != m.cols()) throw InvalidArgument("SymMatrix: matrix must be square");
  for (int r = 0; r < m.rows(); ++r)
    for (int c = r; c < m.cols(); ++c) set(r, c, 0.5 * (m(r, c) + m(c, r)));
}

void SymMatrix::set(int r, int c, double v) {
  m_(r, c) = v;
  m_(c, r) = v;
}

void SymMatrix::add(int r, int c, double v) {
  m_(r, c) += v;
  if (r != c) m_(c, r) += v;
}

EigenSystem jacobi_eigen(const SymMatrix& s, double tol, int max_sweeps) {
  const int k = s.size();
  Matrix a = s.matrix();
  Matrix v = Matrix::identity(k);
  const double stop = tol * (1.0 + a.frobenius());
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < k; ++p)
      for (int q = p + 1; q < k; ++q) off += 2.0 * a(p, q) * a(p, q);
    if (std::sqrt(off) <= stop) break;
    for (int p = 0; p < k; ++p) {
      for (int q = p + 1; q < k; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (int r = 0; r < k; ++r) {
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = c * arp - sn * arq;
          a(r, q) = sn * arp + c * arq;
        }
        for (int r = 0; r < k; ++r) {
          const double apr = a(p, r);
          const double aqr = a(q, r);
          a(p, r) = c * apr - sn * aqr;
          a(q, r) = sn * apr + c * aqr;
        }
        for (int r = 0; r < k; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = c * vrp - sn * vrq;
          v(r, q) = sn * vrp + c * vrq;
        }
      }
    }
  }
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });
  EigenSystem out{Vec(k), Matrix(k, k)};
  for (int j = 0; j < k; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (int r = 0; r < k; ++r) out.vectors(r, j) = v(r, order[j]);
  }
  return out;
}

Vec eigenvalues(const SymMatrix& a) { return jacobi_eigen(a).values; }

Matrix least_squares(const Matrix& a, const Matrix& b) {
  const int rows = a.rows();
  const int cols = a.cols();
  if (rows < cols) throw DegenerateSample("least_squares: fewer samples than unknowns");
  if (b.rows() != rows) throw InvalidArgument("least_squares: shape mismatch");
  Matrix r = a;
  Matrix y = b;
  const double scale = std::max(1.0, a.max_abs());
  for (int c = 0; c < cols; ++c) {
    double alpha = 0.0;
    for (int i = c; i < rows; ++i) alpha += r(i, c) * r(i, c);
    alpha = std::sqrt(alpha);
    if (alpha <= 1e-12 * scale) throw DegenerateSample("least_squares: rank-deficient design");
    if (r(c, c) > 0) alpha = -alpha;
    // Householder vector v = x - alpha e1, stored temporarily.
    Vec v(rows - c);
    for (int i = c; i < rows; ++i) v[i - c] = r(i, c);
    v[0] -= alpha;
    const double vnorm2 = dot(v, v);
    if (vnorm2 == 0.0) continue;
    auto reflect = [&](Matrix& m) {
      for (int j = 0; j < m.cols(); ++j) {
        double s = 0.0;
        for (int i = c; i < rows; ++i) s += v[i - c] * m(i, j);
        s = 2.0 * s / vnorm2;
        for (int i = c; i < rows; ++i) m(i, j) -= s * v[i - c];
      }
    };
    reflect(r);
    reflect(y);
  }
  Matrix x(cols, b.cols());
  for (int j = 0; j < b.cols(); ++j) {
    for (int i = cols - 1; i >= 0; --i) {
      double s = y(i, j);
      for (int k = i + 1; k < cols; ++k) s -= r(i, k) * x(k, j);
      x(i, j) = s / r(i, i);
    }
  }
  return x;
}

Vec least_squares(const Matrix& a, std::span<const double> b) {
  Matrix bm(static_cast<int>(b.size()), 1);
  for (std::size_t i = 0; i < b.size(); ++i) bm(static_cast<int>(i), 0) = b[i];
  const Matrix x = least_squares(a, bm);
  return Vec(x.data().begin(), x.data().end());
}

}  // namespace msl
