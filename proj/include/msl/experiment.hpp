#pragma once

// Seeded batch experiments over flat Dirichlet problems: Harnack decay,
// improvement of flatness (affine and quadratic), the measure statement
// behind the weak Harnack inequality, density ratios and the
// Lawson-Osserman refinement check.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "msl/flatness.hpp"
#include "msl/solver.hpp"

namespace msl {

struct ExperimentParams {
  double eps = 1e-2;     // flatness scale
  double eta = 0.25;     // rescaling factor in (0, 1)
  double theta = 0.0;    // measured Harnack gain (min over the batch, filled by runs)
  double mu = 0.1;       // measure fraction for the weak Harnack frontier
  double delta = 0.5;    // density slack: ratios must stay below 2 - delta
  double beta = 0.75;    // quadratic exponent in (1/2, 1)
  double c0 = 0.0;       // Pucci ellipticity; 0 selects 1/(4n(1+|A|^2)^2)
  double eps0 = 0.0;     // admissible flatness threshold; 0 bisects it from the quadratic family
  double slack = 0.2;    // discretization allowance on the ratio <= 1/2 predictions
  double slope = 0.5;    // entries of random affine slopes lie in [-slope, slope]
  int steps = 3;         // flatness trace length

  // Throws InvalidArgument when a field is outside its range.
  void validate() const;
};

// Boundary data l + eps w with w a seeded smooth map, |w| <= 1 on the mask
// boundary of the given lattice (max exactly 1).
struct FlatProblem {
  AffineMap l;
  QuadraticMap q;  // harmonic, quadratic coefficients <= eps^beta / 2 (quadratic variant)
  BoundaryData g;
};
FlatProblem flat_problem(const Dims& d, int N, std::uint64_t seed, const ExperimentParams& p, bool quadratic = false);

struct BoundCheck {
  std::string name;
  double value = 0.0;
  double lo = 0.0;  // -inf when one-sided
  double hi = 0.0;  // +inf when one-sided
  bool pass = false;
};

struct JobResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<std::pair<std::string, double>> metrics;
  std::optional<FlatnessTrace> trace;
  std::optional<HarnackMeasureReport> measure;

  double metric(const std::string& key) const;  // NaN when absent
};

struct ExperimentReport {
  std::string kind;
  Dims dims;
  int N = 0;
  ExperimentParams params;
  SolveParams solve;
  std::vector<std::uint64_t> seeds;
  std::vector<JobResult> jobs;
  std::vector<std::pair<std::string, double>> measured;
  std::vector<BoundCheck> bounds;
  bool out_of_regime = false;
  bool passed = false;
  double runtime_s = 0.0;  // wall clock; kept out of serialized reports
};

// Kinds: "flatness", "quadratic", "harnack-measure", "density", "lawson-osserman".
const std::vector<std::string>& experiment_kinds();

ExperimentReport run_experiment(const std::string& kind, const Dims& d, int N, const ExperimentParams& p,
                                const std::vector<std::uint64_t>& seeds, const SolveParams& solve = {},
                                int workers = 0);

// Largest eps in [1e-3, 1] for which the quadratic family with a saddle of
// coefficient eps^beta passes certification on its cylinder.
double quadratic_eps0(const Dims& d, double beta);

}  // namespace msl
