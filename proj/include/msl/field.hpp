#pragma once

// Ambient C^2 scalar fields H : R^{n+m} -> R, evaluated on the flat
// coordinate vector X = (x, z).

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msl/maps.hpp"

namespace msl {

enum class FieldTag { Analytic, FiniteDifference };

struct FieldInfo {
  std::string family;
  std::vector<std::pair<std::string, double>> params;
};

class ScalarField {
 public:
  explicit ScalarField(Dims d) : dims_(d) {}
  virtual ~ScalarField() = default;

  const Dims& dims() const { return dims_; }
  virtual double value(std::span<const double> X) const = 0;
  virtual Vec gradient(std::span<const double> X) const = 0;
  virtual SymMatrix hessian(std::span<const double> X) const = 0;
  virtual FieldTag tag() const { return FieldTag::Analytic; }
  virtual FieldInfo info() const = 0;
  // Declared singular set of the family (removed from certification).
  virtual bool excluded(std::span<const double>) const { return false; }
  // Bound on the Hessian error at X contributed by interpolated ingredients.
  virtual double hessian_error(std::span<const double>) const { return 0.0; }

 private:
  Dims dims_;
};

using FieldPtr = std::shared_ptr<const ScalarField>;

// C^2 scalar on R^n (the phi of the tube families).
struct Profile {
  std::string name;
  double scale = 0.0;
  std::function<double(std::span<const double>)> value;
  std::function<Vec(std::span<const double>)> gradient;
  std::function<SymMatrix(std::span<const double>)> hessian;
};

// a (1 - |x|^2).
Profile paraboloid_profile(int n, double a);
// (1 - |x|^2) / (4n).
Profile default_l1_profile(int n);
// eps^{2 beta - 1} (1 - |x|^2) / (2n).
Profile default_quadratic_profile(int n, double eps, double beta);

// 1 / (4 n (1 + |A|^2)^2).
double default_c0(int n, double slope_norm);

struct ProfileCheck {
  bool admissible = false;
  double c11_norm = 0.0;   // max over samples of max(|phi|, |D phi|, |D^2 phi|_op)
  double pucci_max = 0.0;  // max over samples of pucci_plus(D^2 phi, c0, 1)
};
// Checks |phi|_{C^{1,1}} <= 1 and pucci_plus(D^2 phi, c0, 1) < 0 at the given points.
ProfileCheck check_profile(const Profile& phi, double c0, const std::vector<Vec>& xs);

// R^n -> R^m with first and second derivatives.
class VectorFunction {
 public:
  virtual ~VectorFunction() = default;
  virtual int n() const = 0;
  virtual int m() const = 0;
  virtual void eval(std::span<const double> x, std::span<double> out) const = 0;
  virtual Gradient jacobian(std::span<const double> x) const = 0;  // n x m
  virtual std::vector<SymMatrix> hessians(std::span<const double> x) const = 0;
  // Uniform bound on the Hessian error of each component.
  virtual double hessian_error() const { return 0.0; }
  virtual std::string name() const = 0;
};

class QuadraticFunction final : public VectorFunction {
 public:
  explicit QuadraticFunction(QuadraticMap q) : q_(std::move(q)) {}
  int n() const override { return q_.n(); }
  int m() const override { return q_.m(); }
  void eval(std::span<const double> x, std::span<double> out) const override { q_.eval(x, out); }
  Gradient jacobian(std::span<const double> x) const override { return q_.jacobian(x); }
  std::vector<SymMatrix> hessians(std::span<const double> x) const override;
  std::string name() const override { return "quadratic"; }
  const QuadraticMap& map() const { return q_; }

 private:
  QuadraticMap q_;
};

using VectorFunctionPtr = std::shared_ptr<const VectorFunction>;

inline constexpr double kRhoMin = 0.1;

// H = |z - l(x)| - eps phi(x); excluded tube |z - l(x)| < rho_min eps.
FieldPtr family_l1(const AffineMap& l, double eps, const Profile& phi, double rho_min = kRhoMin);
FieldPtr family_l1(const AffineMap& l, double eps);

// H = |z - q(x)| - eps phi(x), beta in (1/2, 1).
FieldPtr family_quadratic(const QuadraticMap& q, double eps, double beta, const Profile& phi,
                          double rho_min = kRhoMin);
FieldPtr family_quadratic(const QuadraticMap& q, double eps, double beta);

// H = |f|^2 + eta |x|^2 with f = (z - q(x)) / eps - h(x). eta = 0 is allowed
// only through family_l35_unchecked (margin sweeps).
FieldPtr family_l35(VectorFunctionPtr h, const QuadraticMap& q, double eps, double eta);
FieldPtr family_l35_unchecked(VectorFunctionPtr h, const QuadraticMap& q, double eps, double eta);

// sign * |X - X0|^2.
FieldPtr sphere_field(const Vec& X0, double sign = 1.0, int n = -1);
// c . X.
FieldPtr linear_field(const Vec& c, int n);

using ValueFn = std::function<double(std::span<const double>)>;
using GradientFn = std::function<Vec(std::span<const double>)>;
using HessianFn = std::function<SymMatrix(std::span<const double>)>;

// Raw callback; derivatives by central differences when not supplied.
FieldPtr raw_field(Dims d, std::string name, ValueFn value, GradientFn gradient = {}, HessianFn hessian = {});
// Named raw callbacks for the CLI: "sphere", "neg-sphere", "saddle" (|z|^2 - |x|^2).
FieldPtr named_raw_field(Dims d, const std::string& name);

// X -> H(R^T (X - t)): a rigid motion applied to the level sets of H.
FieldPtr moved_field(FieldPtr base, const Matrix& R, const Vec& t);
// H + c.
FieldPtr shifted_field(FieldPtr base, double c);

}  // namespace msl
