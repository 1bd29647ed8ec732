#include "msl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "msl/certify.hpp"
#include "msl/errors.hpp"
#include "msl/parallel.hpp"
#include "msl/residual.hpp"
#include "msl/rng.hpp"

namespace msl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SmoothTerm {
  double c0 = 0.0;
  Vec c1;
  Matrix c2;
  double s = 0.0;
  Vec k;
  double phase = 0.0;

  double operator()(std::span<const double> x) const {
    double v = c0, kx = phase;
    const int n = static_cast<int>(c1.size());
    for (int i = 0; i < n; ++i) {
      v += c1[i] * x[i];
      kx += k[i] * x[i];
      for (int j = 0; j < n; ++j) v += c2(i, j) * x[i] * x[j];
    }
    return v + s * std::sin(kx);
  }
};

SymMatrix traceless(CounterRng& rng, int n) {
  Matrix Q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) Q(i, j) = Q(j, i) = rng.uniform(-1, 1);
  double tr = 0.0;
  for (int i = 0; i < n; ++i) tr += Q(i, i);
  for (int i = 0; i < n; ++i) Q(i, i) -= tr / n;
  return SymMatrix(Q);
}

BoundCheck bound(std::string name, double value, double lo, double hi) {
  return {std::move(name), value, lo, hi, value >= lo && value <= hi};
}

double max_metric(const std::vector<JobResult>& jobs, const std::string& key) {
  double v = -kInf;
  for (const auto& j : jobs)
    if (j.ok) v = std::max(v, j.metric(key));
  return v;
}

double min_metric(const std::vector<JobResult>& jobs, const std::string& key) {
  double v = kInf;
  for (const auto& j : jobs)
    if (j.ok) v = std::min(v, j.metric(key));
  return v;
}

double mean_metric(const std::vector<JobResult>& jobs, const std::string& key) {
  double s = 0.0;
  int c = 0;
  for (const auto& j : jobs)
    if (j.ok) {
      s += j.metric(key);
      ++c;
    }
  return c ? s / c : std::numeric_limits<double>::quiet_NaN();
}

GridMap solved(const Dims& d, int N, const BoundaryData& g, const SolveParams& sp, JobResult& job) {
  auto [u, rep] = solve_dirichlet(d, N, g, sp);
  job.metrics.emplace_back("solve_iterations", static_cast<double>(rep.iterations));
  job.metrics.emplace_back("solve_residual", rep.final_sup_residual);
  if (!rep.converged) throw NotConverged("Dirichlet solve ended " + to_string(rep.status));
  return std::move(u);
}

void flatness_job(const Dims& d, int N, const ExperimentParams& p, const SolveParams& sp, JobResult& job) {
  const FlatProblem fp = flat_problem(d, N, job.seed, p);
  const GridMap u = solved(d, N, fp.g, sp, job);
  const double osc = oscillation(u, 1.0, fp.l);
  const double eps = std::max(p.eps, sup_deviation(u, 1.0, fp.l));
  const double eps_h = std::max(p.eps, osc);
  const double theta = harnack_decay(u, fp.l, eps_h);

  // Harmonic oracle: the same statistics for the discrete harmonic extension.
  GridMap g(d, N);
  g.fill_boundary(fp.g);
  const GridMap hext = solve_laplace(g, 1e-12 * (1.0 + p.eps));
  const double theta_h = harnack_decay(hext, fp.l, std::max(eps_h, oscillation(hext, 1.0, fp.l)));
  const AffineStep step = improve_flatness_step(u, fp.l, eps, p.eta);
  const AffineStep step_h =
      improve_flatness_step(hext, fp.l, std::max(eps, sup_deviation(hext, 1.0, fp.l)), p.eta);

  job.metrics.emplace_back("eps", eps);
  job.metrics.emplace_back("osc", osc);
  job.metrics.emplace_back("theta", theta);
  job.metrics.emplace_back("theta_harmonic", theta_h);
  job.metrics.emplace_back("ratio", step.ratio);
  job.metrics.emplace_back("ratio_harmonic", step_h.ratio);
  job.metrics.emplace_back("slope", step.fit.slope_norm());

  const FlatnessTrace tr = flatness_trace(u, fp.l, eps, p.eta, p.steps, sp);
  const double q = 0.5 * (1.0 + p.slack);
  double decay = 0.0, max_ratio = 0.0, slope_step = 0.0;
  for (std::size_t k = 0; k < tr.rows.size(); ++k) {
    const TraceRow& r = tr.rows[k];
    if (k > 0) decay = std::max(decay, r.eps / (eps * std::pow(q, static_cast<double>(k))));
    max_ratio = std::max(max_ratio, r.ratio);
    if (k > 0) slope_step = (tr.rows[k].fit.A - tr.rows[k - 1].fit.A).frobenius();
  }
  job.metrics.emplace_back("trace_max_ratio", max_ratio);
  job.metrics.emplace_back("trace_decay", decay);
  job.metrics.emplace_back("trace_last_slope_change", slope_step);
  job.trace = tr;
}

void quadratic_job(const Dims& d, int N, const ExperimentParams& p, double eps0, const SolveParams& sp,
                   JobResult& job) {
  const FlatProblem fp = flat_problem(d, N, job.seed, p, true);
  const GridMap u = solved(d, N, fp.g, sp, job);
  const double eps = std::max(p.eps, sup_deviation(u, 1.0, fp.q));
  const QuadraticStep step = improve_flatness_quadratic(u, fp.q, eps, p.eta, p.beta, eps0);
  job.metrics.emplace_back("eps", eps);
  job.metrics.emplace_back("ratio", step.ratio);
  job.metrics.emplace_back("q_bound", fp.q.quadratic_bound());
  job.metrics.emplace_back("fit_bound_1", step.fit.quadratic_bound());
  // Fits on nested balls B_{eta^k} of the same solution while the lattice resolves them.
  double worst = step.fit.quadratic_bound();
  for (int k = 2; k <= p.steps; ++k) {
    const double r = std::pow(p.eta, k);
    if (r < 4.0 * u.h()) break;
    try {
      const QuadraticMap fk = best_harmonic_quadratic_fit(u, r);
      job.metrics.emplace_back("fit_bound_" + std::to_string(k), fk.quadratic_bound());
      worst = std::max(worst, fk.quadratic_bound());
    } catch (const NonHarmonicFit&) {
      break;
    }
  }
  job.metrics.emplace_back("fit_bound_max", worst);
}

void measure_job(const Dims& d, int N, const ExperimentParams& p, const SolveParams& sp, JobResult& job) {
  const FlatProblem fp = flat_problem(d, N, job.seed, p);
  const GridMap u = solved(d, N, fp.g, sp, job);
  const double eps = std::max(p.eps, sup_deviation(u, 1.0, fp.l));
  // xi points at the largest value of (u - l)/eps over B_{1/2}.
  Vec best(d.m, 0.0), x(d.n), lv(d.m);
  double bn = -1.0;
  for (std::size_t idx : u.nodes_in_ball(0.5)) {
    u.coords(idx, x);
    fp.l.eval(x, lv);
    Vec t(d.m);
    for (int a = 0; a < d.m; ++a) t[a] = (u.value(idx, a) - lv[a]) / eps;
    if (norm(t) > bn) {
      bn = norm(t);
      best = t;
    }
  }
  if (!(bn > 0.0)) throw PreconditionUnmet("u - l vanishes on B_1/2");
  Vec xi = best;
  for (double& v : xi) v /= bn;
  const double eta_small = (1.0 - bn) * (1.0 + 1e-9) + 1e-12;
  const std::vector<double> Cs{0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  HarnackMeasureReport rep = harnack_measure_experiment(u, fp.l, eps, xi, eta_small, Cs);
  double frontier = kInf, inclusion = 1.0;
  for (const MeasureRow& row : rep.rows) {
    if (row.measure_fraction >= 1.0 - p.mu) frontier = std::min(frontier, row.C);
    inclusion = std::min(inclusion, row.inclusion_fraction);
  }
  job.metrics.emplace_back("eps", eps);
  job.metrics.emplace_back("eta_small", eta_small);
  job.metrics.emplace_back("frontier_C", frontier);
  job.metrics.emplace_back("inclusion_min", inclusion);
  job.measure = std::move(rep);
}

void density_job(const Dims& d, int N, const ExperimentParams& p, const SolveParams& sp, JobResult& job) {
  const FlatProblem fp = flat_problem(d, N, job.seed, p);
  GridMap flat(d, N);
  flat.fill([&](std::span<const double> x, std::span<double> out) { fp.l.eval(x, out); });
  const Vec origin(d.n, 0.0);
  const double r = 0.5;
  job.metrics.emplace_back("ratio_affine", density_ratio(flat, origin, r));
  const GridMap u = solved(d, N, fp.g, sp, job);
  job.metrics.emplace_back("ratio_solution", density_ratio(u, origin, r));
}

double lo_sup_residual(int N) {
  GridMap u(Dims{4, 3}, N);
  u.fill([](std::span<const double> x, std::span<double> out) {
    const Vec v = lawson_osserman(x);
    std::copy(v.begin(), v.end(), out.begin());
  });
  std::vector<std::size_t> nodes;
  for (std::size_t idx : u.unit_region().interior)
    if (norm(u.coords(idx)) >= 0.5 - 1e-12) nodes.push_back(idx);
  return sup_residual(u, nodes);
}

void lawson_osserman_job(int N, JobResult& job) {
  const double coarse = lo_sup_residual(N), fine = lo_sup_residual(2 * N - 1);
  GridMap u(Dims{4, 3}, N);
  double identity = 0.0;
  u.fill([&](std::span<const double> x, std::span<double> out) {
    const Vec v = lawson_osserman(x);
    std::copy(v.begin(), v.end(), out.begin());
    identity = std::max(identity, std::abs(norm(v) - 0.5 * std::sqrt(5.0) * norm(x)));
  });
  job.metrics.emplace_back("residual_coarse", coarse);
  job.metrics.emplace_back("residual_fine", fine);
  job.metrics.emplace_back("order", std::log2(coarse / fine));
  job.metrics.emplace_back("norm_identity_error", identity);
  job.metrics.emplace_back("density_origin", density_ratio(u, Vec(4, 0.0), 0.5));
}

}  // namespace

void ExperimentParams::validate() const {
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("eta must lie in (0, 1)");
  if (!(mu > 0.0 && mu < 1.0)) throw InvalidArgument("mu must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (!(beta > 0.5 && beta < 1.0)) throw InvalidArgument("beta must lie in (1/2, 1)");
  if (c0 < 0.0 || eps0 < 0.0 || slack < 0.0 || slope < 0.0) throw InvalidArgument("c0, eps0, slack, slope must be >= 0");
  if (steps < 1) throw InvalidArgument("steps must be >= 1");
}

double JobResult::metric(const std::string& key) const {
  for (const auto& [k, v] : metrics)
    if (k == key) return v;
  return std::numeric_limits<double>::quiet_NaN();
}

FlatProblem flat_problem(const Dims& d, int N, std::uint64_t seed, const ExperimentParams& p, bool quadratic) {
  d.validate();
  CounterRng rng(seed, 0xf1a7);
  FlatProblem fp;
  fp.l = AffineMap::zero(d);
  for (double& b : fp.l.b) b = rng.uniform(-0.5, 0.5);
  for (int i = 0; i < d.n; ++i)
    for (int a = 0; a < d.m; ++a) fp.l.A(i, a) = rng.uniform(-p.slope, p.slope);
  std::vector<SmoothTerm> w(d.m);
  for (SmoothTerm& t : w) {
    t.c0 = rng.uniform(-1, 1);
    t.c1 = Vec(d.n);
    for (double& v : t.c1) v = rng.uniform(-1, 1);
    t.c2 = Matrix(d.n, d.n);
    for (int i = 0; i < d.n; ++i)
      for (int j = 0; j < d.n; ++j) t.c2(i, j) = rng.uniform(-1, 1);
    t.s = rng.uniform(-1, 1);
    t.k = Vec(d.n);
    for (double& v : t.k) v = rng.uniform(-2, 2);
    t.phase = rng.uniform(0, 2 * std::numbers::pi);
  }
  GridMap probe(d, N);
  double wmax = 0.0;
  Vec x(d.n), wv(d.m);
  for (std::size_t idx : probe.unit_region().boundary) {
    probe.coords(idx, x);
    for (int a = 0; a < d.m; ++a) wv[a] = w[a](x);
    wmax = std::max(wmax, norm(wv));
  }
  fp.q = QuadraticMap::from_affine(fp.l);
  if (quadratic) {
    const double target = 0.5 * std::pow(p.eps, p.beta);
    double qb = 0.0;
    for (int a = 0; a < d.m; ++a) {
      fp.q.Q[a] = traceless(rng, d.n);
      for (int i = 0; i < d.n; ++i)
        for (int j = 0; j < d.n; ++j) qb = std::max(qb, std::abs(fp.q.Q[a](i, j)));
    }
    for (int a = 0; a < d.m; ++a) {
      Matrix Q = fp.q.Q[a].matrix();
      Q *= target / qb;
      fp.q.Q[a] = SymMatrix(Q);
    }
  }
  const double scale = p.eps / wmax;
  fp.g = [q = fp.q, w, scale](std::span<const double> x, std::span<double> out) {
    q.eval(x, out);
    for (std::size_t a = 0; a < w.size(); ++a) out[a] += scale * w[a](x);
  };
  return fp;
}

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"flatness", "quadratic", "harnack-measure", "density",
                                              "lawson-osserman"};
  return kinds;
}

double quadratic_eps0(const Dims& d, double beta) {
  auto saddle = [&](double e) {
    QuadraticMap q = QuadraticMap::zero(d);
    SymMatrix Q(d.n);
    Q.set(0, 0, std::pow(e, beta));
    Q.set(1, 1, -std::pow(e, beta));
    q.Q[0] = Q;
    return q;
  };
  const ThresholdResult r = bisect_threshold(
      [&](double e) {
        const QuadraticMap q = saddle(e);
        SamplerSpec s{CylinderRegion{q, 0.75, e / 10, e}};
        CertifyOptions co;
        co.workers = 1;
        return certify_region(*family_quadratic(q, e, beta), s, d.n, co).verdict == Verdict::Pass;
      },
      1e-3, 1.0, 14);
  return r.eps_star;
}

ExperimentReport run_experiment(const std::string& kind, const Dims& d, int N, const ExperimentParams& p,
                                const std::vector<std::uint64_t>& seeds, const SolveParams& solve, int workers) {
  const auto t0 = std::chrono::steady_clock::now();
  d.validate();
  p.validate();
  if (std::find(experiment_kinds().begin(), experiment_kinds().end(), kind) == experiment_kinds().end())
    throw InvalidArgument("unknown experiment kind '" + kind + "'");
  if (N < 5) throw InvalidArgument("grid N must be >= 5");
  if (kind == "lawson-osserman" && !(d == Dims{4, 3})) throw InvalidArgument("lawson-osserman needs n = 4, m = 3");
  if (seeds.empty() && kind != "lawson-osserman") throw InvalidArgument("at least one seed is required");

  ExperimentReport rep;
  rep.kind = kind;
  rep.dims = d;
  rep.N = N;
  rep.params = p;
  rep.solve = solve;
  rep.seeds = seeds;

  double eps0 = p.eps0;
  if (kind == "quadratic") {
    if (eps0 <= 0.0) eps0 = quadratic_eps0(d, p.beta);
    rep.params.eps0 = eps0;
    rep.out_of_regime = p.eps > eps0;
  }
  if (rep.params.c0 <= 0.0) rep.params.c0 = default_c0(d.n, p.slope * std::sqrt(double(d.n * d.m)));

  const std::size_t count = kind == "lawson-osserman" ? 1 : seeds.size();
  rep.jobs.resize(count);
  SolveParams sp = solve;
  parallel_for(count, workers, [&](std::size_t i) {
    JobResult& job = rep.jobs[i];
    job.seed = seeds.empty() ? 0 : seeds[i];
    try {
      if (kind == "flatness")
        flatness_job(d, N, p, sp, job);
      else if (kind == "quadratic")
        quadratic_job(d, N, p, eps0, sp, job);
      else if (kind == "harnack-measure")
        measure_job(d, N, p, sp, job);
      else if (kind == "density")
        density_job(d, N, p, sp, job);
      else
        lawson_osserman_job(N, job);
      job.ok = true;
    } catch (const std::exception& e) {
      job.ok = false;
      job.error = e.what();
    }
  });

  int failures = 0;
  for (const auto& j : rep.jobs) failures += !j.ok;
  rep.bounds.push_back(bound("job_failures", failures, 0, 0));
  const double pred = 0.5 * (1.0 + p.slack);

  if (kind == "flatness") {
    const double theta_min = min_metric(rep.jobs, "theta");
    rep.params.theta = theta_min;
    rep.measured = {{"theta_min", theta_min},
                    {"theta_mean", mean_metric(rep.jobs, "theta")},
                    {"theta_harmonic_min", min_metric(rep.jobs, "theta_harmonic")},
                    {"ratio_max", max_metric(rep.jobs, "ratio")},
                    {"ratio_mean", mean_metric(rep.jobs, "ratio")},
                    {"ratio_harmonic_max", max_metric(rep.jobs, "ratio_harmonic")},
                    {"trace_ratio_max", max_metric(rep.jobs, "trace_max_ratio")}};
    rep.bounds.push_back(bound("ratio_max", max_metric(rep.jobs, "ratio"), -kInf, pred));
    rep.bounds.push_back(bound("theta_min", theta_min, std::numeric_limits<double>::min(), kInf));
    rep.bounds.push_back(bound("trace_ratio_max", max_metric(rep.jobs, "trace_max_ratio"), -kInf, pred));
    rep.bounds.push_back(bound("trace_decay", max_metric(rep.jobs, "trace_decay"), -kInf, 1.0));
  } else if (kind == "quadratic") {
    rep.measured = {{"eps0", eps0},
                    {"ratio_max", max_metric(rep.jobs, "ratio")},
                    {"ratio_mean", mean_metric(rep.jobs, "ratio")},
                    {"fit_bound_max", max_metric(rep.jobs, "fit_bound_max")}};
    rep.bounds.push_back(bound("eps_within_eps0", p.eps, -kInf, eps0));
    rep.bounds.push_back(bound("ratio_max", max_metric(rep.jobs, "ratio"), -kInf, pred));
    rep.bounds.push_back(
        bound("fit_bound_max", max_metric(rep.jobs, "fit_bound_max"), -kInf, 2.0 * std::pow(p.eps, p.beta)));
  } else if (kind == "harnack-measure") {
    rep.measured = {{"frontier_C_max", max_metric(rep.jobs, "frontier_C")},
                    {"frontier_C_mean", mean_metric(rep.jobs, "frontier_C")},
                    {"eta_small_max", max_metric(rep.jobs, "eta_small")}};
    rep.bounds.push_back(bound("inclusion_min", min_metric(rep.jobs, "inclusion_min"), 1.0, 1.0));
  } else if (kind == "density") {
    const double lo = min_metric(rep.jobs, "ratio_affine"), hi = max_metric(rep.jobs, "ratio_affine");
    rep.measured = {{"ratio_affine_min", lo},
                    {"ratio_affine_max", hi},
                    {"ratio_solution_max", max_metric(rep.jobs, "ratio_solution")}};
    rep.bounds.push_back(bound("ratio_affine_min", lo, 0.95, kInf));
    rep.bounds.push_back(bound("ratio_affine_max", hi, -kInf, 1.05));
    rep.bounds.push_back(bound("ratio_solution_max", max_metric(rep.jobs, "ratio_solution"), -kInf, 2.0 - p.delta));
  } else {
    const JobResult& j = rep.jobs[0];
    rep.measured = {{"order", j.metric("order")}, {"density_origin", j.metric("density_origin")}};
    rep.bounds.push_back(bound("order", j.metric("order"), 1.8, 2.2));
    rep.bounds.push_back(bound("norm_identity_error", j.metric("norm_identity_error"), -kInf, 1e-12));
    rep.bounds.push_back(bound("density_origin", j.metric("density_origin"), 1.0 + 1e-12, kInf));
  }
  rep.passed = !rep.out_of_regime;
  for (const auto& b : rep.bounds) rep.passed = rep.passed && b.pass;
  rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace msl
