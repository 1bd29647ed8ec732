#include "msl/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msl/errors.hpp"

namespace msl {

namespace {

double sq(double v) { return v * v; }

struct Split {
  std::span<const double> x, z;
};

Split split(std::span<const double> X, const Dims& d) {
  if (static_cast<int>(X.size()) != d.ambient()) throw InvalidArgument("field point has wrong dimension");
  return {X.first(d.n), X.subspan(d.n, d.m)};
}

// |z - q(x)| - eps phi(x).
class TubeField final : public ScalarField {
 public:
  TubeField(std::string family, QuadraticMap q, double eps, Profile phi, double rho_min, double beta)
      : ScalarField(Dims{q.n(), q.m()}),
        family_(std::move(family)),
        q_(std::move(q)),
        eps_(eps),
        phi_(std::move(phi)),
        rho_min_(rho_min),
        beta_(beta) {}

  double value(std::span<const double> X) const override {
    const auto [x, z] = split(X, dims());
    return offset_norm(x, z) - eps_ * phi_.value(x);
  }

  Vec gradient(std::span<const double> X) const override {
    const auto [x, z] = split(X, dims());
    const int n = dims().n, m = dims().m;
    Vec d(m);
    q_.eval(x, d);
    for (int a = 0; a < m; ++a) d[a] = z[a] - d[a];
    const double r = norm(d);
    Vec nu(m, 0.0);
    if (r > 0.0)
      for (int a = 0; a < m; ++a) nu[a] = d[a] / r;
    const Gradient Dq = q_.jacobian(x);
    const Vec gphi = phi_.gradient(x);
    Vec g(n + m);
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int a = 0; a < m; ++a) s += Dq(i, a) * nu[a];
      g[i] = -s - eps_ * gphi[i];
    }
    for (int a = 0; a < m; ++a) g[n + a] = nu[a];
    return g;
  }

  SymMatrix hessian(std::span<const double> X) const override {
    const auto [x, z] = split(X, dims());
    const int n = dims().n, m = dims().m, k = n + m;
    Vec d(m);
    q_.eval(x, d);
    for (int a = 0; a < m; ++a) d[a] = z[a] - d[a];
    const double r = norm(d);
    if (r == 0.0) throw DegenerateGradient("tube field evaluated on its singular set");
    Vec nu(m);
    for (int a = 0; a < m; ++a) nu[a] = d[a] / r;
    const Gradient Dq = q_.jacobian(x);
    // J = [-Dq^T | I], P = I - nu nu^T; Hess = J^T P J / r + x-block terms.
    Matrix J(m, k);
    for (int a = 0; a < m; ++a) {
      for (int i = 0; i < n; ++i) J(a, i) = -Dq(i, a);
      J(a, n + a) = 1.0;
    }
    Matrix P = Matrix::identity(m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) P(a, b) -= nu[a] * nu[b];
    Matrix H = J.transpose() * P * J;
    H *= 1.0 / r;
    const SymMatrix hphi = phi_.hessian(x);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int a = 0; a < m; ++a) s -= 2.0 * nu[a] * q_.Q[a](i, j);
        H(i, j) += s - eps_ * hphi(i, j);
      }
    return SymMatrix(H);
  }

  FieldInfo info() const override {
    FieldInfo f{family_, {{"eps", eps_}, {"rho_min", rho_min_}, {"phi_scale", phi_.scale}}};
    f.params.emplace_back("slope", q_.affine_part().slope_norm());
    if (beta_ > 0.0) {
      f.params.emplace_back("beta", beta_);
      f.params.emplace_back("quadratic_bound", q_.quadratic_bound());
    }
    return f;
  }

  bool excluded(std::span<const double> X) const override {
    const auto [x, z] = split(X, dims());
    return offset_norm(x, z) < rho_min_ * eps_;
  }

 private:
  double offset_norm(std::span<const double> x, std::span<const double> z) const {
    Vec d(dims().m);
    q_.eval(x, d);
    double s = 0.0;
    for (int a = 0; a < dims().m; ++a) s += sq(z[a] - d[a]);
    return std::sqrt(s);
  }

  std::string family_;
  QuadraticMap q_;
  double eps_;
  Profile phi_;
  double rho_min_;
  double beta_;
};

// |f|^2 + eta |x|^2, f = (z - q(x)) / eps - h(x).
class L35Field final : public ScalarField {
 public:
  L35Field(VectorFunctionPtr h, QuadraticMap q, double eps, double eta)
      : ScalarField(Dims{q.n(), q.m()}), h_(std::move(h)), q_(std::move(q)), eps_(eps), eta_(eta) {}

  double value(std::span<const double> X) const override {
    const auto [x, z] = split(X, dims());
    const Vec f = residual(x, z);
    return dot(f, f) + eta_ * dot(x, x);
  }

  Vec gradient(std::span<const double> X) const override {
    const auto [x, z] = split(X, dims());
    const int n = dims().n, m = dims().m;
    const Vec f = residual(x, z);
    const Matrix J = jacobian(x);
    Vec g(n + m, 0.0);
    for (int c = 0; c < n + m; ++c) {
      double s = 0.0;
      for (int a = 0; a < m; ++a) s += J(a, c) * f[a];
      g[c] = 2.0 * s;
    }
    for (int i = 0; i < n; ++i) g[i] += 2.0 * eta_ * x[i];
    return g;
  }

  SymMatrix hessian(std::span<const double> X) const override {
    const auto [x, z] = split(X, dims());
    const int n = dims().n, m = dims().m;
    const Vec f = residual(x, z);
    const Matrix J = jacobian(x);
    Matrix H = J.transpose() * J;
    H *= 2.0;
    const auto hh = h_->hessians(x);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int a = 0; a < m; ++a) s += f[a] * (-2.0 * q_.Q[a](i, j) / eps_ - hh[a](i, j));
        H(i, j) += 2.0 * s;
      }
      H(i, i) += 2.0 * eta_;
    }
    return SymMatrix(H);
  }

  FieldInfo info() const override {
    return {"l35", {{"eps", eps_}, {"eta", eta_}, {"slope", q_.affine_part().slope_norm()},
                    {"quadratic_bound", q_.quadratic_bound()}, {"h_hessian_error", h_->hessian_error()}}};
  }

  double hessian_error(std::span<const double> X) const override {
    const double e = h_->hessian_error();
    if (e == 0.0) return 0.0;
    const auto [x, z] = split(X, dims());
    const Vec f = residual(x, z);
    double s = 0.0;
    for (double v : f) s += std::abs(v);
    return 2.0 * s * dims().n * e;
  }

 private:
  Vec residual(std::span<const double> x, std::span<const double> z) const {
    const int m = dims().m;
    Vec qv(m), hv(m), f(m);
    q_.eval(x, qv);
    h_->eval(x, hv);
    for (int a = 0; a < m; ++a) f[a] = (z[a] - qv[a]) / eps_ - hv[a];
    return f;
  }

  // Jf, m x (n + m).
  Matrix jacobian(std::span<const double> x) const {
    const int n = dims().n, m = dims().m;
    const Gradient Dq = q_.jacobian(x), Dh = h_->jacobian(x);
    Matrix J(m, n + m);
    for (int a = 0; a < m; ++a) {
      for (int i = 0; i < n; ++i) J(a, i) = -Dq(i, a) / eps_ - Dh(i, a);
      J(a, n + a) = 1.0 / eps_;
    }
    return J;
  }

  VectorFunctionPtr h_;
  QuadraticMap q_;
  double eps_;
  double eta_;
};

class SphereField final : public ScalarField {
 public:
  SphereField(Dims d, Vec X0, double sign) : ScalarField(d), X0_(std::move(X0)), sign_(sign) {}
  double value(std::span<const double> X) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < X0_.size(); ++i) s += sq(X[i] - X0_[i]);
    return sign_ * s;
  }
  Vec gradient(std::span<const double> X) const override {
    Vec g(X0_.size());
    for (std::size_t i = 0; i < X0_.size(); ++i) g[i] = 2.0 * sign_ * (X[i] - X0_[i]);
    return g;
  }
  SymMatrix hessian(std::span<const double>) const override {
    return SymMatrix(Matrix::identity(static_cast<int>(X0_.size())) * (2.0 * sign_));
  }
  FieldInfo info() const override { return {sign_ > 0 ? "sphere" : "neg-sphere", {{"sign", sign_}}}; }

 private:
  Vec X0_;
  double sign_;
};

class LinearField final : public ScalarField {
 public:
  LinearField(Dims d, Vec c) : ScalarField(d), c_(std::move(c)) {}
  double value(std::span<const double> X) const override { return dot(c_, X); }
  Vec gradient(std::span<const double>) const override { return c_; }
  SymMatrix hessian(std::span<const double>) const override { return SymMatrix(static_cast<int>(c_.size())); }
  FieldInfo info() const override { return {"linear", {{"norm", norm(c_)}}}; }

 private:
  Vec c_;
};

class RawField final : public ScalarField {
 public:
  RawField(Dims d, std::string name, ValueFn v, GradientFn g, HessianFn h)
      : ScalarField(d), name_(std::move(name)), v_(std::move(v)), g_(std::move(g)), h_(std::move(h)) {}

  double value(std::span<const double> X) const override { return v_(X); }

  Vec gradient(std::span<const double> X) const override {
    if (g_) return g_(X);
    const int k = dims().ambient();
    const double s = 1e-5 * (1.0 + max_abs(X));
    Vec Y(X.begin(), X.end()), g(k);
    for (int i = 0; i < k; ++i) {
      Y[i] = X[i] + s;
      const double fp = v_(Y);
      Y[i] = X[i] - s;
      const double fm = v_(Y);
      Y[i] = X[i];
      g[i] = (fp - fm) / (2.0 * s);
    }
    return g;
  }

  SymMatrix hessian(std::span<const double> X) const override {
    if (h_) return h_(X);
    const int k = dims().ambient();
    const double s = 1e-4 * (1.0 + max_abs(X));
    Vec Y(X.begin(), X.end());
    auto at = [&](int i, double a, int j, double b) {
      Y[i] += a;
      Y[j] += b;
      const double v = v_(Y);
      Y[i] = X[i];
      Y[j] = X[j];
      return v;
    };
    SymMatrix H(k);
    for (int i = 0; i < k; ++i)
      for (int j = i; j < k; ++j) {
        const double v = at(i, s, j, s) - at(i, s, j, -s) - at(i, -s, j, s) + at(i, -s, j, -s);
        H.set(i, j, v / (4.0 * s * s));
      }
    return H;
  }

  FieldTag tag() const override { return (g_ && h_) ? FieldTag::Analytic : FieldTag::FiniteDifference; }
  FieldInfo info() const override { return {"raw:" + name_, {}}; }

 private:
  static double max_abs(std::span<const double> X) {
    double s = 0.0;
    for (double v : X) s = std::max(s, std::abs(v));
    return s;
  }

  std::string name_;
  ValueFn v_;
  GradientFn g_;
  HessianFn h_;
};

class MovedField final : public ScalarField {
 public:
  MovedField(FieldPtr base, Matrix R, Vec t) : ScalarField(base->dims()), base_(std::move(base)), R_(std::move(R)), t_(std::move(t)) {}
  double value(std::span<const double> X) const override { return base_->value(pull(X)); }
  Vec gradient(std::span<const double> X) const override {
    const Vec g = base_->gradient(pull(X));
    return R_ * std::span<const double>(g);
  }
  SymMatrix hessian(std::span<const double> X) const override {
    return SymMatrix(R_ * base_->hessian(pull(X)).matrix() * R_.transpose());
  }
  FieldTag tag() const override { return base_->tag(); }
  FieldInfo info() const override {
    FieldInfo f = base_->info();
    f.family = "moved:" + f.family;
    return f;
  }
  bool excluded(std::span<const double> X) const override { return base_->excluded(pull(X)); }
  double hessian_error(std::span<const double> X) const override { return base_->hessian_error(pull(X)); }

 private:
  Vec pull(std::span<const double> X) const {
    Vec d(X.begin(), X.end());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= t_[i];
    return R_.transpose() * std::span<const double>(d);
  }
  FieldPtr base_;
  Matrix R_;
  Vec t_;
};

class ShiftedField final : public ScalarField {
 public:
  ShiftedField(FieldPtr base, double c) : ScalarField(base->dims()), base_(std::move(base)), c_(c) {}
  double value(std::span<const double> X) const override { return base_->value(X) + c_; }
  Vec gradient(std::span<const double> X) const override { return base_->gradient(X); }
  SymMatrix hessian(std::span<const double> X) const override { return base_->hessian(X); }
  FieldTag tag() const override { return base_->tag(); }
  FieldInfo info() const override {
    FieldInfo f = base_->info();
    f.params.emplace_back("shift", c_);
    return f;
  }
  bool excluded(std::span<const double> X) const override { return base_->excluded(X); }
  double hessian_error(std::span<const double> X) const override { return base_->hessian_error(X); }

 private:
  FieldPtr base_;
  double c_;
};

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(what) + " must be positive");
}

}  // namespace

std::vector<SymMatrix> QuadraticFunction::hessians(std::span<const double>) const {
  std::vector<SymMatrix> out;
  out.reserve(q_.Q.size());
  for (const auto& Q : q_.Q) out.emplace_back(Q.matrix() * 2.0);
  return out;
}

Profile paraboloid_profile(int n, double a) {
  Profile p;
  p.name = "paraboloid";
  p.scale = a;
  p.value = [a](std::span<const double> x) { return a * (1.0 - dot(x, x)); };
  p.gradient = [a](std::span<const double> x) {
    Vec g(x.begin(), x.end());
    for (double& v : g) v *= -2.0 * a;
    return g;
  };
  p.hessian = [a, n](std::span<const double>) { return SymMatrix(Matrix::identity(n) * (-2.0 * a)); };
  return p;
}

Profile default_l1_profile(int n) { return paraboloid_profile(n, 1.0 / (4.0 * n)); }

Profile default_quadratic_profile(int n, double eps, double beta) {
  return paraboloid_profile(n, std::pow(eps, 2.0 * beta - 1.0) / (2.0 * n));
}

double default_c0(int n, double slope_norm) { return 1.0 / (4.0 * n * sq(1.0 + slope_norm * slope_norm)); }

ProfileCheck check_profile(const Profile& phi, double c0, const std::vector<Vec>& xs) {
  ProfileCheck out;
  out.pucci_max = -std::numeric_limits<double>::infinity();
  for (const Vec& x : xs) {
    const Vec ev = eigenvalues(phi.hessian(x));
    const double op = std::max(std::abs(ev.front()), std::abs(ev.back()));
    out.c11_norm = std::max({out.c11_norm, std::abs(phi.value(x)), norm(phi.gradient(x)), op});
    out.pucci_max = std::max(out.pucci_max, pucci_plus(phi.hessian(x), c0, 1.0));
  }
  out.admissible = !xs.empty() && out.c11_norm <= 1.0 && out.pucci_max < 0.0;
  return out;
}

FieldPtr family_l1(const AffineMap& l, double eps, const Profile& phi, double rho_min) {
  require_positive(eps, "eps");
  return std::make_shared<TubeField>("l1", QuadraticMap::from_affine(l), eps, phi, rho_min, 0.0);
}

FieldPtr family_l1(const AffineMap& l, double eps) { return family_l1(l, eps, default_l1_profile(l.n())); }

FieldPtr family_quadratic(const QuadraticMap& q, double eps, double beta, const Profile& phi, double rho_min) {
  require_positive(eps, "eps");
  if (!(beta > 0.5 && beta < 1.0)) throw InvalidArgument("beta must lie in (1/2, 1)");
  return std::make_shared<TubeField>("quadratic", q, eps, phi, rho_min, beta);
}

FieldPtr family_quadratic(const QuadraticMap& q, double eps, double beta) {
  require_positive(eps, "eps");
  return family_quadratic(q, eps, beta, default_quadratic_profile(q.n(), eps, beta));
}

FieldPtr family_l35_unchecked(VectorFunctionPtr h, const QuadraticMap& q, double eps, double eta) {
  if (!h) throw InvalidArgument("family_l35 needs h");
  if (h->n() != q.n() || h->m() != q.m()) throw InvalidArgument("family_l35: h and q dimensions differ");
  require_positive(eps, "eps");
  return std::make_shared<L35Field>(std::move(h), q, eps, eta);
}

FieldPtr family_l35(VectorFunctionPtr h, const QuadraticMap& q, double eps, double eta) {
  require_positive(eta, "eta");
  return family_l35_unchecked(std::move(h), q, eps, eta);
}

FieldPtr sphere_field(const Vec& X0, double sign, int n) {
  const int k = static_cast<int>(X0.size());
  if (n < 0) n = k - 1;
  return std::make_shared<SphereField>(Dims{n, k - n}, X0, sign);
}

FieldPtr linear_field(const Vec& c, int n) {
  const int k = static_cast<int>(c.size());
  return std::make_shared<LinearField>(Dims{n, k - n}, c);
}

FieldPtr raw_field(Dims d, std::string name, ValueFn value, GradientFn gradient, HessianFn hessian) {
  return std::make_shared<RawField>(d, std::move(name), std::move(value), std::move(gradient), std::move(hessian));
}

FieldPtr named_raw_field(Dims d, const std::string& name) {
  const int n = d.n;
  if (name == "sphere") return raw_field(d, name, [](std::span<const double> X) { return dot(X, X); });
  if (name == "neg-sphere") return raw_field(d, name, [](std::span<const double> X) { return -dot(X, X); });
  if (name == "saddle")
    return raw_field(d, name, [n](std::span<const double> X) {
      return dot(X.subspan(n), X.subspan(n)) - dot(X.first(n), X.first(n));
    });
  throw InvalidArgument("unknown raw field: " + name);
}

FieldPtr moved_field(FieldPtr base, const Matrix& R, const Vec& t) {
  return std::make_shared<MovedField>(std::move(base), R, t);
}

FieldPtr shifted_field(FieldPtr base, double c) { return std::make_shared<ShiftedField>(std::move(base), c); }

}  // namespace msl
