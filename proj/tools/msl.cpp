// msl: solve, certify, screen, experiment and validate from the command line.
//
// Exit codes: 0 success/pass, 1 usage error, 2 nonconvergence, 3 failure.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "msl/certify.hpp"
#include "msl/errors.hpp"
#include "msl/experiment.hpp"
#include "msl/field.hpp"
#include "msl/io.hpp"
#include "msl/residual.hpp"
#include "msl/solver.hpp"

using namespace msl;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kNotConverged = 2, kFailure = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Key {
  const char* name;
  const char* def;  // nullptr: required
  const char* help;
};

const std::vector<Key> kCommon{
    {"n", "2", "domain dimension"},
    {"m", "2", "codimension"},
    {"grid_n", "0", "lattice points per axis (0: 41 for n <= 3, 21 for n = 4)"},
    {"seed", "1", "64-bit seed"},
};

const std::vector<Key> kSolveKeys{
    {"boundary", "flat", "affine | flat | quadratic | lawson-osserman"},
    {"eps", "0.01", "flatness of the boundary data"},
    {"slope", "0.5", "affine slope entries lie in [-slope, slope]"},
    {"beta", "0.75", "quadratic exponent"},
    {"tau", "0", "step size (0: tau_max)"},
    {"tol_res", "1e-8", "residual tolerance"},
    {"max_iter", "200000", "iteration cap"},
    {"init", "harmonic", "harmonic | zero"},
};

const std::vector<Key> kCertifyKeys{
    {"family", "l1", "l1 | l35 | quadratic | raw:sphere | raw:neg-sphere | raw:saddle"},
    {"eps", nullptr, "flatness scale (required)"},
    {"eta", "0.5", "l35 weight of |x|^2"},
    {"beta", "0.75", "quadratic exponent"},
    {"slope", "0.5", "operator norm of the affine slope (l1)"},
    {"x_points", "9", "lattice points per x axis"},
    {"z_divisor", "8", "z lattice spacing = rho_hi / z_divisor"},
    {"quasi", "1000", "seeded quasi-random points"},
    {"radius", "1", "ball radius for raw fields"},
    {"bisect_hi", "0", "> 0: bisect the largest passing eps in [1e-3, bisect_hi]"},
    {"bisect_iters", "16", "bisection steps"},
};

const std::vector<Key> kScreenKeys{
    {"map", "solved", "affine | solved | bumped"},
    {"count", "100", "number of seeded fields"},
    {"bump", "0.01", "height of the bump added to the solved map"},
    {"eps", "0.01", "flatness of the boundary data"},
    {"slope", "0.5", "affine slope entries lie in [-slope, slope]"},
    {"tol_res", "1e-8", "residual tolerance"},
    {"max_iter", "200000", "iteration cap"},
};

const std::vector<Key> kExperimentKeys{
    {"kind", "flatness", "flatness | quadratic | harnack-measure | density | lawson-osserman"},
    {"seeds", "10", "batch size; seeds run from seed to seed + seeds - 1"},
    {"eps", "0.01", "flatness scale"},
    {"eta", "0.25", "rescaling factor"},
    {"mu", "0.1", "measure fraction"},
    {"delta", "0.5", "density slack"},
    {"beta", "0.75", "quadratic exponent"},
    {"c0", "0", "Pucci ellipticity (0: default)"},
    {"eps0", "0", "flatness threshold (0: bisected)"},
    {"slack", "0.2", "allowance on the ratio predictions"},
    {"slope", "0.5", "affine slope entries lie in [-slope, slope]"},
    {"steps", "3", "trace length"},
    {"tol_res", "1e-8", "residual tolerance"},
    {"max_iter", "200000", "iteration cap"},
};

// Flag values and config-file values merged over the defaults.
class Settings {
 public:
  Settings(std::vector<Key> keys, Config flags, const std::string& config_path) : keys_(std::move(keys)) {
    Config file;
    if (!config_path.empty()) {
      try {
        file = read_config_file(config_path);
      } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
      }
    }
    for (const auto& [k, v] : file)
      if (!known(k)) throw UsageError("unknown config key '" + k + "'");
    for (const Key& k : keys_) {
      if (flags.count(k.name))
        cfg_[k.name] = flags[k.name];
      else if (file.count(k.name))
        cfg_[k.name] = file[k.name];
      else if (k.def)
        cfg_[k.name] = k.def;
      else
        throw UsageError(std::string("missing required value: --") + dashed(k.name));
    }
  }

  static std::string dashed(std::string s) {
    for (char& c : s)
      if (c == '_') c = '-';
    return s;
  }

  const std::string& str(const std::string& k) const { return cfg_.at(k); }

  double real(const std::string& k) const {
    const std::string& s = str(k);
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos == s.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(k + ": expected a number, got '" + s + "'");
  }

  long integer(const std::string& k) const {
    const std::string& s = str(k);
    try {
      std::size_t pos = 0;
      const long v = std::stol(s, &pos);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(k + ": expected an integer, got '" + s + "'");
  }

  std::uint64_t seed() const {
    const std::string& s = str("seed");
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(s, &pos);
      if (pos == s.size() && s[0] != '-') return v;
    } catch (const std::exception&) {
    }
    throw UsageError("seed: expected an unsigned integer, got '" + s + "'");
  }

  Dims dims() const {
    const Dims d{static_cast<int>(integer("n")), static_cast<int>(integer("m"))};
    try {
      d.validate();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    return d;
  }

  // Resolves grid_n = 0 so the embedded config records the lattice used.
  int grid_n() {
    long N = integer("grid_n");
    if (N == 0) N = GridMap::default_points(dims().n);
    if (N < 5 || N > 401) throw UsageError("grid_n must lie in [5, 401]");
    cfg_["grid_n"] = std::to_string(N);
    return static_cast<int>(N);
  }

  const Config& config() const { return cfg_; }

 private:
  bool known(const std::string& k) const {
    for (const Key& key : keys_)
      if (k == key.name) return true;
    return false;
  }

  std::vector<Key> keys_;
  Config cfg_;
};

struct Context {
  fs::path out_dir;
  int workers = 0;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::vector<std::string> log;

  fs::path path(const std::string& name) const { return out_dir / name; }
};

void finish_log(const Context& ctx, const std::string& sub, int code) {
  std::ofstream os(ctx.path("run.log"));
  os << "subcommand " << sub << '\n';
  for (const std::string& line : ctx.log) os << line << '\n';
  const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
  os << "runtime_s " << t << '\n' << "exit " << code << '\n';
}

SolveParams solve_params(const Settings& s, bool full) {
  SolveParams p;
  p.tol_res = s.real("tol_res");
  p.max_iter = s.integer("max_iter");
  if (full) {
    p.tau = s.real("tau");
    const std::string& init = s.str("init");
    if (init == "harmonic")
      p.init = InitialGuess::Harmonic;
    else if (init == "zero")
      p.init = InitialGuess::Zero;
    else
      throw UsageError("init must be harmonic or zero");
  }
  if (!(p.tol_res > 0.0) || p.max_iter < 0 || p.tau < 0.0) throw UsageError("tol_res > 0, max_iter >= 0, tau >= 0 required");
  return p;
}

ExperimentParams flat_params(const Settings& s) {
  ExperimentParams p;
  p.eps = s.real("eps");
  p.slope = s.real("slope");
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return p;
}

QuadraticMap saddle(const Dims& d, double c) {
  QuadraticMap q = QuadraticMap::zero(d);
  SymMatrix Q(d.n);
  Q.set(0, 0, c);
  Q.set(1, 1, -c);
  q.Q[0] = Q;
  return q;
}

// ---------------------------------------------------------------- solve

int cmd_solve(Settings& s, Context& ctx) {
  const Dims d = s.dims();
  const int N = s.grid_n();
  const std::string boundary = s.str("boundary");
  ExperimentParams fpp = flat_params(s);
  fpp.beta = s.real("beta");
  if (!(fpp.beta > 0.5 && fpp.beta < 1.0)) throw UsageError("beta must lie in (1/2, 1)");
  const SolveParams sp = solve_params(s, true);

  BoundaryData g;
  std::optional<AffineMap> affine;
  if (boundary == "affine" || boundary == "flat" || boundary == "quadratic") {
    const FlatProblem fp = flat_problem(d, N, s.seed(), fpp, boundary == "quadratic");
    if (boundary == "affine") {
      affine = fp.l;
      g = [l = fp.l](std::span<const double> x, std::span<double> out) { l.eval(x, out); };
    } else {
      g = fp.g;
    }
  } else if (boundary == "lawson-osserman") {
    if (!(d == Dims{4, 3})) throw UsageError("lawson-osserman boundary needs n = 4, m = 3");
    g = [](std::span<const double> x, std::span<double> out) {
      const Vec v = lawson_osserman(x);
      std::copy(v.begin(), v.end(), out.begin());
    };
  } else {
    throw UsageError("unknown boundary '" + boundary + "'");
  }

  GridMap u(d, N);
  u.fill_boundary(g);
  const SolveReport rep = solve_dirichlet(u, sp);
  Json body{{"params", to_json(sp)}, {"report", to_json(rep)}};
  body["interior_sup_residual"] = sup_residual(u, u.unit_region().interior);
  if (affine) body["sup_deviation_from_affine"] = sup_deviation(u, 1.0, *affine);
  body["grid_files"] = Json{{"binary", "grid.bin"}, {"csv", "grid.csv"}};
  write_json(ctx.path("solve.json"), envelope("solve", s.config(), body));
  write_grid_binary(ctx.path("grid.bin"), u, s.config());
  write_grid_csv(ctx.path("grid.csv"), u, s.config());
  ctx.log.push_back("status " + to_string(rep.status) + " iterations " + std::to_string(rep.iterations));
  return rep.converged ? kOk : kNotConverged;
}

// ---------------------------------------------------------------- certify

struct CertifySetup {
  FieldPtr field;
  SamplerSpec sampler;
};

CertifySetup certify_setup(const Settings& s, const Dims& d, int N, double eps) {
  const std::string family = s.str("family");
  SamplerSpec spec{CylinderRegion{}};
  spec.x_points = static_cast<int>(s.integer("x_points"));
  spec.z_divisor = s.real("z_divisor");
  spec.quasi = static_cast<int>(s.integer("quasi"));
  spec.seed = s.seed();
  if (spec.x_points < 2 || spec.z_divisor <= 0.0 || spec.quasi < 0)
    throw UsageError("x_points >= 2, z_divisor > 0, quasi >= 0 required");
  const double beta = s.real("beta");

  if (family == "l1") {
    ExperimentParams p;
    AffineMap l = flat_problem(d, N, s.seed(), p).l;
    const double slope = s.real("slope");
    if (slope < 0.0) throw UsageError("slope must be >= 0");
    const double norm0 = l.slope_norm();
    if (norm0 > 0.0) l.A *= slope / norm0;
    spec.region = CylinderRegion{QuadraticMap::from_affine(l), 0.75, eps / 10, eps};
    return {family_l1(l, eps), spec};
  }
  if (family == "l35") {
    spec.region = CylinderRegion{QuadraticMap::zero(d), 0.75, 0.0, eps};
    return {family_l35(std::make_shared<QuadraticFunction>(saddle(d, 1.0)), QuadraticMap::zero(d), eps, s.real("eta")),
            spec};
  }
  if (family == "quadratic") {
    if (!(beta > 0.5 && beta < 1.0)) throw UsageError("beta must lie in (1/2, 1)");
    const QuadraticMap q = saddle(d, std::pow(eps, beta));
    spec.region = CylinderRegion{q, 0.75, eps / 10, eps};
    return {family_quadratic(q, eps, beta), spec};
  }
  if (family.rfind("raw:", 0) == 0) {
    const double radius = s.real("radius");
    if (!(radius > 0.0)) throw UsageError("radius must be positive");
    spec.region = BallRegion{Vec(d.ambient(), 0.0), radius};
    return {named_raw_field(d, family.substr(4)), spec};
  }
  throw UsageError("unknown family '" + family + "'");
}

int cmd_certify(Settings& s, Context& ctx) {
  const Dims d = s.dims();
  const int N = s.grid_n();
  const double eps = s.real("eps");
  if (!(eps > 0.0)) throw UsageError("eps must be positive");
  CertifyOptions co;
  co.workers = ctx.workers;

  CertifySetup setup;
  try {
    setup = certify_setup(s, d, N, eps);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const ComparisonCertificate cert = certify_region(*setup.field, setup.sampler, d.n, co);
  Json body{{"certificate", to_json(cert)}};

  const double hi = s.real("bisect_hi");
  if (hi > 0.0) {
    const int iters = static_cast<int>(s.integer("bisect_iters"));
    if (hi <= 1e-3 || iters < 1) throw UsageError("bisect_hi > 1e-3 and bisect_iters >= 1 required");
    const ThresholdResult t = bisect_threshold(
        [&](double e) {
          const CertifySetup c = certify_setup(s, d, N, e);
          return certify_region(*c.field, c.sampler, d.n, co).verdict == Verdict::Pass;
        },
        1e-3, hi, iters);
    body["threshold"] = to_json(t);
    ctx.log.push_back("eps_star " + std::to_string(t.eps_star));
  }
  write_json(ctx.path("certificate.json"), envelope("certify", s.config(), body));
  ctx.log.push_back(std::string("verdict ") + to_string(cert.verdict));
  return cert.verdict == Verdict::Pass ? kOk : kFailure;
}

// ---------------------------------------------------------------- screen

int cmd_screen(Settings& s, Context& ctx) {
  const Dims d = s.dims();
  const int N = s.grid_n();
  const std::string map = s.str("map");
  const long count = s.integer("count");
  if (count < 1) throw UsageError("count must be >= 1");
  const FlatProblem fp = flat_problem(d, N, s.seed(), flat_params(s));
  const SolveParams sp = solve_params(s, false);

  GridMap u(d, N);
  Json body = Json::object();
  if (map == "affine") {
    u.fill([&](std::span<const double> x, std::span<double> out) { fp.l.eval(x, out); });
  } else if (map == "solved" || map == "bumped") {
    u.fill_boundary(fp.g);
    const SolveReport rep = solve_dirichlet(u, sp);
    body["solve"] = to_json(rep);
    if (!rep.converged) {
      write_json(ctx.path("screen.json"), envelope("screen", s.config(), body));
      return kNotConverged;
    }
    if (map == "bumped") {
      const double bump = s.real("bump");
      Vec x(d.n);
      for (std::size_t idx : u.unit_region().members) {
        u.coords(idx, x);
        const double r2 = dot(x, x);
        if (r2 < 0.25) u.value(idx, 0) += bump * std::pow(1.0 - r2 / 0.25, 3);
      }
    }
  } else {
    throw UsageError("unknown map '" + map + "'");
  }

  ScreenOptions so;
  so.workers = ctx.workers;
  const auto reports = viscosity_screen(u, s.seed(), static_cast<int>(count), so);
  Json list = Json::array();
  long violations = 0;
  for (const TouchingReport& r : reports) {
    list.push_back(to_json(r));
    violations += r.violation;
  }
  body["violations"] = violations;
  body["fields"] = list;
  write_json(ctx.path("screen.json"), envelope("screen", s.config(), body));
  ctx.log.push_back("violations " + std::to_string(violations));
  return violations == 0 ? kOk : kFailure;
}

// ---------------------------------------------------------------- experiment

int cmd_experiment(Settings& s, Context& ctx) {
  const Dims d = s.dims();
  const int N = s.grid_n();
  ExperimentParams p;
  p.eps = s.real("eps");
  p.eta = s.real("eta");
  p.mu = s.real("mu");
  p.delta = s.real("delta");
  p.beta = s.real("beta");
  p.c0 = s.real("c0");
  p.eps0 = s.real("eps0");
  p.slack = s.real("slack");
  p.slope = s.real("slope");
  p.steps = static_cast<int>(s.integer("steps"));
  const long count = s.integer("seeds");
  if (count < 1 || count > 100000) throw UsageError("seeds must lie in [1, 100000]");
  std::vector<std::uint64_t> seeds;
  for (long i = 0; i < count; ++i) seeds.push_back(s.seed() + static_cast<std::uint64_t>(i));
  const SolveParams sp = solve_params(s, false);

  ExperimentReport rep;
  try {
    rep = run_experiment(s.str("kind"), d, N, p, seeds, sp, ctx.workers);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  Json body = to_json(rep);
  bool traces = false;
  for (const JobResult& j : rep.jobs) traces = traces || j.trace.has_value();
  if (traces) {
    body["trace_files"] = Json{{"csv", "trace.csv"}, {"gnuplot", "trace.gp"}};
    write_trace_csv(ctx.path("trace.csv"), rep, s.config());
    write_gnuplot_template(ctx.path("trace.gp"), "trace.csv", s.config());
  }
  write_json(ctx.path("experiment.json"), envelope("experiment", s.config(), body));
  int failed = 0;
  for (const JobResult& j : rep.jobs) failed += !j.ok;
  ctx.log.push_back("jobs " + std::to_string(rep.jobs.size()) + " failed " + std::to_string(failed));
  ctx.log.push_back("experiment_runtime_s " + std::to_string(rep.runtime_s));
  if (rep.out_of_regime) ctx.log.push_back("out of regime: eps exceeds eps0");
  return rep.passed ? kOk : kFailure;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const std::vector<std::string>& files) {
  if (files.empty()) throw UsageError("validate needs at least one file");
  bool all = true;
  for (const std::string& f : files) {
    ValidationResult r;
    try {
      r = validate_output(f);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    std::cout << f << ": " << (r.ok ? "valid" : "INVALID") << " (" << r.message << ")\n";
    all = all && r.ok;
  }
  return all ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimal surface system lab (format " + std::string(kFormatVersion) + ")", "msl"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kFormatVersion));

  struct Sub {
    std::string name;
    std::vector<Key> keys;
    CLI::App* app = nullptr;
    Config flags;
    std::string config_path;
    std::string out_dir = "out";
    int workers = 0;
  };
  auto join = [](std::vector<Key> a, const std::vector<Key>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  std::vector<Sub> subs(4);
  subs[0].name = "solve";
  subs[0].keys = join(kCommon, kSolveKeys);
  subs[1].name = "certify";
  subs[1].keys = join(kCommon, kCertifyKeys);
  subs[2].name = "screen";
  subs[2].keys = join(kCommon, kScreenKeys);
  subs[3].name = "experiment";
  subs[3].keys = join(kCommon, kExperimentKeys);
  const std::vector<std::string> descriptions{"Solve the Dirichlet problem for the minimal surface system",
                                              "Certify a comparison field on its sampling region",
                                              "Viscosity touching screen against seeded comparison fields",
                                              "Run a seeded experiment batch"};
  for (std::size_t i = 0; i < subs.size(); ++i) {
    Sub& sub = subs[i];
    sub.app = app.add_subcommand(sub.name, descriptions[i]);
    for (const Key& k : sub.keys) {
      std::string help = k.help;
      if (k.def) help += std::string(" [") + k.def + "]";
      const std::string key = k.name;
      sub.app->add_option_function<std::string>(
          "--" + Settings::dashed(key), [&sub, key](const std::string& v) { sub.flags[key] = v; }, help);
    }
    sub.app->add_option("--config", sub.config_path, "key=value file; flags override it");
    sub.app->add_option("--out-dir", sub.out_dir, "output directory [out]");
    sub.app->add_option("--workers", sub.workers, "worker threads (0: hardware concurrency)");
  }
  std::vector<std::string> files;
  CLI::App* validate = app.add_subcommand("validate", "Check format string and embedded config of outputs");
  validate->add_option("files", files, "outputs to check (.json, .csv, .gp, .bin)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    if (chosen == validate) return cmd_validate(files);
    for (Sub& sub : subs) {
      if (sub.app != chosen) continue;
      if (sub.workers < 0) throw UsageError("workers must be >= 0");
      Settings settings(sub.keys, sub.flags, sub.config_path);
      Context ctx;
      ctx.out_dir = sub.out_dir;
      ctx.workers = sub.workers;
      std::error_code ec;
      fs::create_directories(ctx.out_dir, ec);
      if (ec) throw UsageError("cannot create " + ctx.out_dir.string() + ": " + ec.message());
      int code = kOk;
      if (sub.name == "solve")
        code = cmd_solve(settings, ctx);
      else if (sub.name == "certify")
        code = cmd_certify(settings, ctx);
      else if (sub.name == "screen")
        code = cmd_screen(settings, ctx);
      else
        code = cmd_experiment(settings, ctx);
      finish_log(ctx, sub.name, code);
      return code;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << chosen->help();
    return kUsage;
  } catch (const NotConverged& e) {
    std::cerr << "not converged: " << e.what() << '\n';
    return kNotConverged;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n\n" << chosen->help();
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
