#include "msl/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msl/errors.hpp"
#include "msl/flatness.hpp"
#include "msl/parallel.hpp"
#include "msl/rng.hpp"

namespace msl {

double is_comparison_at(const ScalarField& H, std::span<const double> X, int n, double grad_tol) {
  return min_tangential_laplacian(H.hessian(X), H.gradient(X), n, grad_tol);
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Degenerate: return "degenerate";
  }
  return "?";
}

namespace {

// Additive recurrence with the generalized golden ratio of dimension D.
class Kronecker {
 public:
  Kronecker(int D, std::uint64_t seed) : alpha_(D), x_(D) {
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (D + 1));
    CounterRng rng(seed, 0x5eed);
    for (int j = 0; j < D; ++j) {
      alpha_[j] = std::fmod(std::pow(1.0 / phi, j + 1), 1.0);
      x_[j] = rng.uniform();
    }
  }
  const Vec& next() {
    for (std::size_t j = 0; j < x_.size(); ++j) {
      x_[j] += alpha_[j];
      x_[j] -= std::floor(x_[j]);
    }
    return x_;
  }

 private:
  Vec alpha_;
  Vec x_;
};

constexpr double kSlack = 1e-12;

void cylinder_samples(const CylinderRegion& c, const SamplerSpec& spec, const Dims& d, SampleSet& out) {
  const int n = d.n, m = d.m;
  if (c.center.n() != n || c.center.m() != m) throw InvalidArgument("cylinder center has wrong dimensions");
  if (!(c.rho_hi > 0.0) || c.rho_lo < 0.0 || c.rho_lo > c.rho_hi || !(c.x_radius > 0.0))
    throw InvalidArgument("cylinder region bounds");
  const double rx = c.x_radius;
  const int px = std::max(1, spec.x_points);
  const double sx = px > 1 ? 2.0 * rx / (px - 1) : 0.0;
  const double sz = c.rho_hi / spec.z_divisor;
  const int K = static_cast<int>(std::floor(c.rho_hi / sz + 1e-9));
  out.x_spacing = sx;
  out.z_spacing = sz;

  std::vector<Vec> xs;
  {
    std::vector<int> ix(n, 0);
    while (true) {
      Vec x(n);
      for (int i = 0; i < n; ++i) x[i] = px > 1 ? -rx + ix[i] * sx : 0.0;
      if (dot(x, x) <= rx * rx * (1 + kSlack)) xs.push_back(x);
      int i = 0;
      while (i < n && ++ix[i] == px) ix[i++] = 0;
      if (i == n) break;
    }
  }
  std::vector<Vec> zs;
  {
    std::vector<int> iz(m, -K);
    while (true) {
      Vec z(m);
      for (int a = 0; a < m; ++a) z[a] = iz[a] * sz;
      const double r = norm(z);
      if (r >= c.rho_lo * (1 - kSlack) && r <= c.rho_hi * (1 + kSlack)) zs.push_back(z);
      int a = 0;
      while (a < m && ++iz[a] == K + 1) iz[a++] = -K;
      if (a == m) break;
    }
  }
  Vec q(m);
  for (const Vec& x : xs) {
    c.center.eval(x, q);
    for (const Vec& z : zs) {
      Vec X(x);
      for (int a = 0; a < m; ++a) X.push_back(q[a] + z[a]);
      out.points.push_back(std::move(X));
    }
  }
  out.lattice_count = out.points.size();

  Kronecker seq(n + m, spec.seed);
  const long cap = 1000L * std::max(1, spec.quasi);
  for (long t = 0; t < cap && static_cast<int>(out.quasi_count) < spec.quasi; ++t) {
    const Vec& s = seq.next();
    Vec X(n + m);
    for (int i = 0; i < n; ++i) X[i] = rx * (2 * s[i] - 1);
    if (dot(std::span<const double>(X).first(n), std::span<const double>(X).first(n)) > rx * rx) continue;
    Vec z(m);
    for (int a = 0; a < m; ++a) z[a] = c.rho_hi * (2 * s[n + a] - 1);
    const double r = norm(z);
    if (r < c.rho_lo || r > c.rho_hi) continue;
    c.center.eval(std::span<const double>(X).first(n), q);
    for (int a = 0; a < m; ++a) X[n + a] = q[a] + z[a];
    out.points.push_back(std::move(X));
    ++out.quasi_count;
  }
}

void ball_samples(const BallRegion& b, const SamplerSpec& spec, const Dims& d, SampleSet& out) {
  const int D = d.ambient();
  if (static_cast<int>(b.center.size()) != D) throw InvalidArgument("ball center has wrong dimension");
  if (!(b.radius > 0.0)) throw InvalidArgument("ball radius must be positive");
  const int p = std::max(1, spec.ball_points);
  const double s = p > 1 ? 2.0 * b.radius / (p - 1) : 0.0;
  out.x_spacing = out.z_spacing = s;
  std::vector<int> ix(D, 0);
  while (true) {
    Vec X(D);
    double r2 = 0.0;
    for (int i = 0; i < D; ++i) {
      const double off = p > 1 ? -b.radius + ix[i] * s : 0.0;
      X[i] = b.center[i] + off;
      r2 += off * off;
    }
    if (r2 <= b.radius * b.radius * (1 + kSlack)) out.points.push_back(std::move(X));
    int i = 0;
    while (i < D && ++ix[i] == p) ix[i++] = 0;
    if (i == D) break;
  }
  out.lattice_count = out.points.size();
  Kronecker seq(D, spec.seed);
  const long cap = 1000L * std::max(1, spec.quasi);
  for (long t = 0; t < cap && static_cast<int>(out.quasi_count) < spec.quasi; ++t) {
    const Vec& u = seq.next();
    Vec X(D);
    double r2 = 0.0;
    for (int i = 0; i < D; ++i) {
      const double off = b.radius * (2 * u[i] - 1);
      X[i] = b.center[i] + off;
      r2 += off * off;
    }
    if (r2 > b.radius * b.radius) continue;
    out.points.push_back(std::move(X));
    ++out.quasi_count;
  }
}

}  // namespace

SampleSet sample_region(const SamplerSpec& spec, const Dims& d) {
  SampleSet out;
  if (const auto* c = std::get_if<CylinderRegion>(&spec.region))
    cylinder_samples(*c, spec, d, out);
  else
    ball_samples(std::get<BallRegion>(spec.region), spec, d, out);
  return out;
}

ComparisonCertificate certify_points(const ScalarField& H, const SampleSet& samples, int n,
                                     const CertifyOptions& opt) {
  enum Status : unsigned char { Retained, Tube, Degenerate };
  const std::size_t count = samples.points.size();
  std::vector<Status> status(count, Retained);
  std::vector<SampleRecord> rec(count);
  parallel_for(count, opt.workers, [&](std::size_t i) {
    const Vec& X = samples.points[i];
    if (H.excluded(X)) {
      status[i] = Tube;
      return;
    }
    const SymMatrix hess = H.hessian(X);
    const Vec grad = H.gradient(X);
    rec[i].grad_norm = norm(grad);
    try {
      rec[i].margin = min_tangential_laplacian(hess, grad, n);
    } catch (const DegenerateGradient&) {
      status[i] = Degenerate;
      return;
    }
    rec[i].tol = 1e-9 * (1.0 + hess.frobenius()) + n * H.hessian_error(X);
  });

  ComparisonCertificate cert;
  cert.sample_count = count;
  cert.lattice_count = samples.lattice_count;
  cert.quasi_count = samples.quasi_count;
  cert.x_spacing = samples.x_spacing;
  cert.z_spacing = samples.z_spacing;
  cert.field = H.info();
  cert.min_margin = std::numeric_limits<double>::infinity();
  bool all_above = true, any_below = false;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < count; ++i) {
    if (status[i] == Tube) {
      ++cert.tube_excluded;
      continue;
    }
    if (status[i] == Degenerate) {
      ++cert.degenerate_excluded;
      continue;
    }
    ++cert.retained_count;
    kept.push_back(i);
    cert.min_margin = std::min(cert.min_margin, rec[i].margin);
    if (!(rec[i].margin > rec[i].tol)) all_above = false;
    if (rec[i].margin < -rec[i].tol) any_below = true;
  }
  cert.excluded_count = cert.tube_excluded + cert.degenerate_excluded;
  if (cert.retained_count == 0) throw EmptySampleSet("every sample point was excluded");
  cert.verdict = all_above ? Verdict::Pass : (any_below ? Verdict::Fail : Verdict::Degenerate);

  const std::size_t keep = std::min(opt.keep_worst, kept.size());
  std::partial_sort(kept.begin(), kept.begin() + keep, kept.end(), [&](std::size_t a, std::size_t b) {
    return rec[a].margin < rec[b].margin || (rec[a].margin == rec[b].margin && a < b);
  });
  for (std::size_t j = 0; j < keep; ++j) {
    SampleRecord r = rec[kept[j]];
    r.X = samples.points[kept[j]];
    cert.worst.push_back(std::move(r));
  }
  return cert;
}

ComparisonCertificate certify_region(const ScalarField& H, const SamplerSpec& sampler, int n,
                                     const CertifyOptions& opt) {
  ComparisonCertificate cert = certify_points(H, sample_region(sampler, H.dims()), n, opt);
  cert.seed = sampler.seed;
  return cert;
}

TouchingReport touching_check(const GridMap& u, const ScalarField& H, const TouchingOptions& opt) {
  const Dims& d = u.dims();
  if (!(H.dims() == d)) throw InvalidArgument("touching_check: field and map dimensions differ");
  const double h = u.h();
  const auto& members = u.unit_region().members;

  TouchingReport rep;
  rep.field = H.info();
  rep.max_value = -std::numeric_limits<double>::infinity();
  rep.boundary_max = -std::numeric_limits<double>::infinity();
  Vec X(d.ambient());
  const double lim = opt.interior_h * h * (1 - 1e-9);
  const int k = static_cast<int>(std::ceil(opt.interior_h - 1e-9));
  std::vector<int> off(d.n, -k), base(d.n);
  for (std::size_t idx : members) {
    u.coords(idx, std::span<double>(X).first(d.n));
    for (int a = 0; a < d.m; ++a) X[d.n + a] = u.value(idx, a);
    const double v = H.value(X);
    for (int i = 0; i < d.n; ++i) base[i] = u.axis_index(idx, i);
    bool near = false;
    std::fill(off.begin(), off.end(), -k);
    while (!near) {
      bool inside = true;
      std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(idx);
      double s = 0.0;
      for (int i = 0; i < d.n; ++i) {
        const int c = base[i] + off[i];
        if (c < 0 || c >= u.N()) inside = false;
        nb += off[i] * u.stride(i);
        s += double(off[i]) * off[i];
      }
      if (inside && std::sqrt(s) * h < lim && u.kind(static_cast<std::size_t>(nb)) == NodeKind::Boundary) near = true;
      int i = 0;
      while (i < d.n && ++off[i] > k) off[i++] = -k;
      if (i == d.n) break;
    }
    const bool interior = !near;
    if (!interior) rep.boundary_max = std::max(rep.boundary_max, v);
    if (v > rep.max_value) {
      rep.max_value = v;
      rep.argmax_node = idx;
      rep.argmax = AmbientPoint::split(X, d.n);
      rep.interior = interior;
    }
  }
  rep.excess = rep.max_value - rep.boundary_max;
  rep.side_ok = true;
  if (rep.interior) {
    SamplerSpec spec{BallRegion{rep.argmax.flat(), opt.ball_h * h}};
    spec.quasi = opt.quasi;
    spec.seed = opt.seed;
    CertifyOptions co;
    co.workers = opt.workers;
    try {
      const ComparisonCertificate c = certify_region(H, spec, d.n, co);
      rep.certified = c.verdict == Verdict::Pass;
      rep.local_min_margin = c.min_margin;
    } catch (const EmptySampleSet&) {
      rep.certified = false;
    }
  }
  rep.violation = rep.interior && rep.side_ok && rep.certified;
  return rep;
}

namespace {

struct ScreenAnchor {
  AffineMap l;
  QuadraticMap q;
  double scale_l = 0.0;
  double scale_q = 0.0;
};

ScreenAnchor make_anchor(const GridMap& u) {
  ScreenAnchor a;
  a.l = best_affine_fit(u, 1.0);
  a.scale_l = std::max(sup_deviation(u, 1.0, a.l), 1e-3);
  try {
    a.q = best_harmonic_quadratic_fit(u, 1.0);
  } catch (const NonHarmonicFit&) {
    a.q = QuadraticMap::from_affine(a.l);
  }
  a.scale_q = std::max(sup_deviation(u, 1.0, a.q), 1e-3);
  return a;
}

template <class M>
void perturb(M& map, CounterRng& rng, double s) {
  for (double& v : map.b) v += s * rng.uniform(-1, 1);
  for (int i = 0; i < map.A.rows(); ++i)
    for (int a = 0; a < map.A.cols(); ++a) map.A(i, a) += s * rng.uniform(-1, 1);
}

FieldPtr anchored_field(const GridMap& u, const ScreenAnchor& an, std::uint64_t seed, int k) {
  const Dims& d = u.dims();
  CounterRng rng(seed, static_cast<std::uint64_t>(k) + 1);
  switch (k % 3) {
    case 0: {
      AffineMap l = an.l;
      perturb(l, rng, 0.5 * an.scale_l);
      const double eps = std::max(sup_deviation(u, 1.0, l), 1e-6) * rng.uniform(1.05, 1.5);
      const Profile phi = paraboloid_profile(d.n, rng.uniform(0.5, 1.0) / (4.0 * d.n));
      return family_l1(l, eps, phi);
    }
    case 1: {
      AffineMap l = an.l;
      perturb(l, rng, 0.5 * an.scale_l);
      const double eps = std::max(sup_deviation(u, 1.0, l), 1e-6) * rng.uniform(1.05, 1.5);
      QuadraticMap h = QuadraticMap::zero(d);
      const double c = rng.uniform(0.0, 0.2);
      for (int a = 0; a < d.m; ++a) {
        Matrix Q(d.n, d.n);
        for (int i = 0; i < d.n; ++i)
          for (int j = i; j < d.n; ++j) Q(i, j) = Q(j, i) = c * rng.uniform(-1, 1);
        double tr = 0.0;
        for (int i = 0; i < d.n; ++i) tr += Q(i, i);
        for (int i = 0; i < d.n; ++i) Q(i, i) -= tr / d.n;
        h.Q[a] = SymMatrix(Q);
      }
      return family_l35(std::make_shared<QuadraticFunction>(h), QuadraticMap::from_affine(l), eps,
                        rng.uniform(0.2, 1.0));
    }
    default: {
      QuadraticMap q = an.q;
      perturb(q, rng, 0.5 * an.scale_q);
      const double beta = rng.uniform(0.55, 0.8);
      double eps = std::max(sup_deviation(u, 1.0, q), 1e-6) * rng.uniform(1.05, 1.5);
      eps = std::max(eps, std::pow(q.quadratic_bound(), 1.0 / beta));
      return family_quadratic(q, eps, beta);
    }
  }
}

}  // namespace

FieldPtr screen_field(const GridMap& u, std::uint64_t seed, int k) {
  return anchored_field(u, make_anchor(u), seed, k);
}

std::vector<TouchingReport> viscosity_screen(const GridMap& u, std::uint64_t seed, int count,
                                             const ScreenOptions& opt) {
  if (count < 1) throw InvalidArgument("viscosity_screen: count must be >= 1");
  const ScreenAnchor an = make_anchor(u);
  std::vector<TouchingReport> out(count);
  parallel_for(static_cast<std::size_t>(count), opt.workers, [&](std::size_t k) {
    const FieldPtr H = anchored_field(u, an, seed, static_cast<int>(k));
    TouchingOptions t = opt.touching;
    t.seed = seed ^ splitmix64_mix(k + 17);
    t.workers = 1;
    out[k] = touching_check(u, *H, t);
  });
  return out;
}

ThresholdResult bisect_threshold(const std::function<bool(double)>& passes, double lo, double hi, int iters) {
  ThresholdResult r;
  if (!(lo > 0.0 && hi > lo)) throw InvalidArgument("bisect_threshold: need 0 < lo < hi");
  ++r.evaluations;
  if (!passes(lo)) return r;
  ++r.evaluations;
  if (passes(hi)) {
    r.eps_star = hi;
    return r;
  }
  double a = lo, b = hi;
  for (int i = 0; i < iters; ++i) {
    const double mid = std::sqrt(a * b);
    ++r.evaluations;
    (passes(mid) ? a : b) = mid;
  }
  r.eps_star = a;
  r.eps_fail = b;
  r.bracketed = true;
  return r;
}

}  // namespace msl
