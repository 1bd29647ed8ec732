#pragma once

// Sampled certification of the comparison property and the discrete
// touching test for graphs.

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "msl/field.hpp"
#include "msl/grid.hpp"

namespace msl {

// min_tangential_laplacian(hessian(X), gradient(X), n).
double is_comparison_at(const ScalarField& H, std::span<const double> X, int n, double grad_tol = -1.0);

// {|x| <= x_radius, rho_lo <= |z - center(x)| <= rho_hi}.
struct CylinderRegion {
  QuadraticMap center;
  double x_radius = 0.75;
  double rho_lo = 0.0;
  double rho_hi = 1.0;
};

// {|X - center| <= radius} in R^{n+m}.
struct BallRegion {
  Vec center;
  double radius = 1.0;
};

struct SamplerSpec {
  std::variant<CylinderRegion, BallRegion> region;
  int x_points = 9;         // lattice points per x axis (cylinder)
  double z_divisor = 8.0;   // z lattice spacing = rho_hi / z_divisor (cylinder)
  int ball_points = 3;      // lattice points per axis (ball)
  int quasi = 1000;         // seeded quasi-random points
  std::uint64_t seed = 0;
};

// Lattice points first, then quasi-random points; order is deterministic.
struct SampleSet {
  std::vector<Vec> points;
  std::size_t lattice_count = 0;
  std::size_t quasi_count = 0;
  double x_spacing = 0.0;
  double z_spacing = 0.0;
};
SampleSet sample_region(const SamplerSpec& spec, const Dims& d);

enum class Verdict { Pass, Fail, Degenerate };
const char* to_string(Verdict v);

struct SampleRecord {
  Vec X;
  double margin = 0.0;
  double grad_norm = 0.0;
  double tol = 0.0;
};

struct ComparisonCertificate {
  Verdict verdict = Verdict::Degenerate;
  double min_margin = 0.0;
  std::vector<SampleRecord> worst;  // ascending margin
  std::size_t sample_count = 0;
  std::size_t retained_count = 0;
  std::size_t excluded_count = 0;   // tube + degenerate
  std::size_t tube_excluded = 0;
  std::size_t degenerate_excluded = 0;
  std::size_t lattice_count = 0;
  std::size_t quasi_count = 0;
  double x_spacing = 0.0;
  double z_spacing = 0.0;
  std::uint64_t seed = 0;
  FieldInfo field;
};

struct CertifyOptions {
  std::size_t keep_worst = 16;
  int workers = 0;  // 0: hardware concurrency
};

// margin_tol(X) = 1e-9 (1 + |hess|_F) + n * hessian_error(X). Pass iff every
// retained margin exceeds its tol; Fail iff some margin < -tol.
ComparisonCertificate certify_region(const ScalarField& H, const SamplerSpec& sampler, int n,
                                     const CertifyOptions& opt = {});
ComparisonCertificate certify_points(const ScalarField& H, const SampleSet& samples, int n,
                                     const CertifyOptions& opt = {});

struct TouchingOptions {
  double interior_h = 2.0;  // interior: lattice distance >= interior_h * h from the mask boundary
  double ball_h = 4.0;      // certification ball radius in units of h
  int quasi = 1000;
  std::uint64_t seed = 0;
  int workers = 0;
};

struct TouchingReport {
  double max_value = 0.0;
  AmbientPoint argmax;
  std::size_t argmax_node = 0;
  bool interior = false;
  bool side_ok = true;
  bool certified = false;
  bool violation = false;
  double boundary_max = 0.0;  // max of H over graph points that are not interior
  double excess = 0.0;        // max_value - boundary_max
  double local_min_margin = 0.0;
  FieldInfo field;
};

TouchingReport touching_check(const GridMap& u, const ScalarField& H, const TouchingOptions& opt = {});

struct ScreenOptions {
  TouchingOptions touching;
  int workers = 0;
};

// Fields cycle l1, l35, quadratic; parameters drawn from stream k of seed.
std::vector<TouchingReport> viscosity_screen(const GridMap& u, std::uint64_t seed, int count,
                                             const ScreenOptions& opt = {});
// The k-th field of the screen (exposed for reporting and tests).
FieldPtr screen_field(const GridMap& u, std::uint64_t seed, int k);

struct ThresholdResult {
  double eps_star = 0.0;  // largest eps found passing
  double eps_fail = 0.0;  // smallest eps found failing (0 if none)
  int evaluations = 0;
  bool bracketed = false;
};
// Log-scale bisection for the largest eps in [lo, hi] with passes(eps) true,
// assuming passes(lo) and monotone failure above a threshold.
ThresholdResult bisect_threshold(const std::function<bool(double)>& passes, double lo, double hi, int iters = 30);

}  // namespace msl
