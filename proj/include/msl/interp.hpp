#pragma once

// Tensor-product cubic (4-point Lagrange) interpolation of a lattice map,
// with first and second derivatives.

#include "msl/field.hpp"
#include "msl/grid.hpp"

namespace msl {

class GridInterpolant final : public VectorFunction {
 public:
  explicit GridInterpolant(GridMap u);

  int n() const override { return u_.dims().n; }
  int m() const override { return u_.dims().m; }
  // Throw BoundaryProximity when the 4^n stencil leaves the mask.
  void eval(std::span<const double> x, std::span<double> out) const override;
  Gradient jacobian(std::span<const double> x) const override;
  std::vector<SymMatrix> hessians(std::span<const double> x) const override;
  // 2 h^2 max|d_i^4 u| from axis fourth differences (entrywise bound).
  double hessian_error() const override { return hessian_error_; }
  std::string name() const override { return "grid-cubic"; }
  const GridMap& grid() const { return u_; }

 private:
  struct Stencil {
    std::size_t base = 0;
    double w[4][4];   // axis, node
    double dw[4][4];  // d/dx
    double d2w[4][4];
  };
  Stencil stencil(std::span<const double> x) const;
  template <class F>
  void visit(const Stencil& s, F&& f) const;

  GridMap u_;
  double hessian_error_ = 0.0;
};

}  // namespace msl
