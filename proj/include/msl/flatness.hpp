#pragma once

// Flatness measurements on lattice maps: oscillation, approximating fits,
// the Harnack decay statistic, improvement-of-flatness steps and density
// ratios.

#include <cstdint>
#include <string>
#include <vector>

#include "msl/grid.hpp"
#include "msl/maps.hpp"
#include "msl/solver.hpp"

namespace msl {

struct EnclosingBall {
  Vec center;
  double radius = 0.0;
};

// Exact smallest enclosing ball of points in R^m, m <= 3 (move-to-front
// recursion over the given order).
EnclosingBall smallest_enclosing_ball(const std::vector<Vec>& points);

// Radius of the smallest ball containing {u(x) : x in B_r ∩ lattice}.
double oscillation(const GridMap& u, double r);
// Same for u - l.
double oscillation(const GridMap& u, double r, const AffineMap& l);
double oscillation(const GridMap& u, double r, const QuadraticMap& q);

// sup over B_r ∩ lattice of |u - q|.
double sup_deviation(const GridMap& u, double r, const QuadraticMap& q);
double sup_deviation(const GridMap& u, double r, const AffineMap& l);

// Componentwise least squares over B_r ∩ lattice. Throws DegenerateSample.
AffineMap best_affine_fit(const GridMap& u, double r);
// Least squares over harmonic quadratics (trace-free Q). Throws NonHarmonicFit.
QuadraticMap best_harmonic_quadratic_fit(const GridMap& u, double r);

// 1 - oscillation(u - l, B_{1/2}) / eps; throws FlatnessViolated unless
// oscillation(u - l, B_1) <= eps.
double harnack_decay(const GridMap& u, const AffineMap& l, double eps);

struct AffineStep {
  AffineMap fit;
  double new_eps = 0.0;
  double ratio = 0.0;  // new_eps / (eps eta)
};
// Throws FlatnessViolated unless sup_{B_1} |u - l| <= eps.
AffineStep improve_flatness_step(const GridMap& u, const AffineMap& l, double eps, double eta);

struct QuadraticStep {
  QuadraticMap fit;
  double new_eps = 0.0;
  double ratio = 0.0;  // new_eps / (eps eta^2)
};
// Additionally requires q harmonic with quadratic coefficients <= eps^beta
// and eps <= eps0 (PreconditionUnmet otherwise).
QuadraticStep improve_flatness_quadratic(const GridMap& u, const QuadraticMap& q, double eps, double eta,
                                         double beta, double eps0 = 1.0);

// omega_n = |B_1^n|.
double unit_ball_volume(int n);

// Graph area inside the ambient ball B_r((x0, u(x0))) divided by omega_n r^n.
// Cells are subdivided (subcells per axis) with multilinear values for the
// inclusion test. Throws ScaleTooFine when r < 4h.
double density_ratio(const GridMap& u, std::span<const double> x0, double r, int subcells = 0);

struct MeasureRow {
  double C = 0.0;
  double measure_fraction = 0.0;    // |{w > 1 - C eta}| / |B_1|
  double inclusion_fraction = 0.0;  // share of {w > 1 - C eta} inside {|ut - xi| <= sqrt(8C eta)}
  double inclusion_radius = 0.0;
};

struct HarnackMeasureReport {
  Vec xi;
  double eta_small = 0.0;
  Vec x0;                  // near-extremal point in B_{1/2}
  double x0_distance = 0.0;
  std::vector<MeasureRow> rows;
};

// ut = (u - l) / eps, w = |ut + xi| / 2 on B_1 ∩ lattice. Throws
// PreconditionUnmet when no x0 in B_{1/2} has |ut(x0) - xi| <= eta_small and
// FlatnessViolated when |u - l| > eps somewhere on B_1.
HarnackMeasureReport harnack_measure_experiment(const GridMap& u, const AffineMap& l, double eps, const Vec& xi,
                                                double eta_small, const std::vector<double>& Cs);

// Dilation u_1(y) = (u(eta y) - offset) / eta re-solved on the same lattice,
// started from the cubic interpolation of u (which also supplies the
// boundary values). An empty offset means zero.
std::pair<GridMap, SolveReport> rescale_and_solve(const GridMap& u, double eta, const SolveParams& params,
                                                  const Vec& offset = {});

struct TraceRow {
  int k = 0;
  double r = 1.0;          // eta^k in original units
  double eps = 0.0;        // flatness at this scale (rescaled units)
  double osc = 0.0;        // oscillation(u_k - l_k, B_1)
  double new_eps = 0.0;    // sup over B_eta of |u_k - fit|
  double ratio = 0.0;
  double slope = 0.0;      // |A| of the fit in original units
  AffineMap fit;           // in rescaled units
  long solve_iterations = 0;
};

struct FlatnessTrace {
  double eta = 0.25;
  std::vector<TraceRow> rows;
};

FlatnessTrace flatness_trace(const GridMap& u0, const AffineMap& l0, double eps0, double eta, int steps,
                             const SolveParams& params);

}  // namespace msl
