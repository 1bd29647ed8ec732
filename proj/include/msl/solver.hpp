#pragma once

// Desk-scale solvers on the masked lattice: the Dirichlet problem for the
// minimal surface system (explicit steady-state flow), discrete harmonic
// extension, and the Lawson-Osserman cone.

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msl/grid.hpp"

namespace msl {

using BoundaryData = std::function<void(std::span<const double> x, std::span<double> out)>;

// Given keeps the interior values already stored in the map.
enum class InitialGuess { Harmonic, Zero, Given };

struct SolveParams {
  double tau = 0.0;  // 0 selects tau_max(h)
  double tol_res = 1e-8;
  long max_iter = 200000;
  int reestimate_every = 100;
  InitialGuess init = InitialGuess::Harmonic;
  // Record discrete_area every k iterations (0 disables).
  int area_check_every = 0;
};

enum class SolveStatus { Converged, NotConverged, Diverged };

std::string to_string(SolveStatus s);

struct SolveReport {
  long iterations = 0;
  double final_sup_residual = 0.0;
  bool converged = false;
  double tau = 0.0;
  double lambda_hat = 1.0;
  SolveStatus status = SolveStatus::NotConverged;
  std::vector<double> area_trace;
};

// tau_max = h^2 / (4 n Lambda_hat).
double tau_max(double h, int n, double lambda_hat);

// Iterates u <- u + tau R(u) on interior nodes, R the non-divergence
// residual. Boundary nodes of u are treated as Dirichlet data and never
// modified. Throws InvalidArgument when params.tau exceeds tau_max.
SolveReport solve_dirichlet(GridMap& u, const SolveParams& params = {});

std::pair<GridMap, SolveReport> solve_dirichlet(const Dims& dims, int N, const BoundaryData& g,
                                                const SolveParams& params = {});

struct LaplaceReport {
  int iterations = 0;
  double sup_residual = 0.0;
};

// Discrete harmonic extension of the values of g on the boundary of the
// region |x| <= radius (2n+1 point Laplacian, conjugate gradients). Nodes
// outside the region keep the values of g. Throws NotConverged.
GridMap solve_laplace(const GridMap& g, double tol = 1e-10, double radius = 1.0,
                      LaplaceReport* report = nullptr);

// (sqrt(5)/2) |x| eta(x/|x|) with eta the Hopf map, R^4 = C^2 -> R^3.
Vec lawson_osserman(std::span<const double> x);

// sup over B_r of |u - h| with h the discrete harmonic extension of u|dB_r.
double harmonic_replacement_gap(const GridMap& u, double r, double tol = 1e-12);

}  // namespace msl
