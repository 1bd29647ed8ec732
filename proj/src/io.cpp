#include "msl/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "msl/errors.hpp"

namespace msl {

namespace {

constexpr char kMagic[8] = {'m', 's', 'l', '-', 'v', '1', '\0', '\0'};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* to_string(InitialGuess g) {
  switch (g) {
    case InitialGuess::Harmonic: return "harmonic";
    case InitialGuess::Zero: return "zero";
    case InitialGuess::Given: return "given";
  }
  return "?";
}

Json pairs(const std::vector<std::pair<std::string, double>>& v) {
  Json j = Json::object();
  for (const auto& [k, x] : v) j[k] = x;
  return j;
}

Json config_json(const Config& cfg) {
  Json j = Json::object();
  for (const auto& [k, v] : cfg) j[k] = v;
  return j;
}

void put_u32(std::ostream& os, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) os.put(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put_f64(std::ostream& os, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) os.put(static_cast<char>((bits >> (8 * b)) & 0xff));
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char buf[4];
  if (!is.read(reinterpret_cast<char*>(buf), 4)) throw InvalidArgument("grid file truncated");
  std::uint32_t v = 0;
  for (int b = 3; b >= 0; --b) v = (v << 8) | buf[b];
  return v;
}

double get_f64(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) throw InvalidArgument("grid file truncated");
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | buf[b];
  return std::bit_cast<double>(v);
}

void write_header(std::ostream& os, const Config& cfg) {
  os << "# format=" << kFormatVersion << "\n# config\n";
  for (const auto& [k, v] : cfg) os << "# " << k << '=' << v << '\n';
  os << "# end config\n";
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw InvalidArgument("cannot write " + path.string());
  return os;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ValidationResult validate_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != std::string("# format=") + kFormatVersion)
    return {false, "missing format line"};
  if (!std::getline(is, line) || line != "# config") return {false, "missing config block"};
  int keys = 0;
  while (std::getline(is, line)) {
    if (line == "# end config") return keys > 0 ? ValidationResult{true, "ok"} : ValidationResult{false, "empty config"};
    if (line.rfind("# ", 0) != 0 || line.find('=') == std::string::npos) return {false, "malformed config line"};
    ++keys;
  }
  return {false, "unterminated config block"};
}

}  // namespace

Config parse_config(const std::string& text) {
  Config cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq)), value = trim(t.substr(eq + 1));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(lineno) + ": empty key");
    if (!cfg.emplace(key, value).second) throw InvalidArgument("config line " + std::to_string(lineno) + ": duplicate key " + key);
  }
  return cfg;
}

Config read_config_file(const std::filesystem::path& path) { return parse_config(slurp(path)); }

std::string config_text(const Config& cfg) {
  std::string s;
  for (const auto& [k, v] : cfg) s += k + '=' + v + '\n';
  return s;
}

Json to_json(const Dims& d) { return Json{{"n", d.n}, {"m", d.m}}; }

Json to_json(const Matrix& a) {
  Json rows = Json::array();
  for (int r = 0; r < a.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
    rows.push_back(row);
  }
  return rows;
}

Json to_json(const AffineMap& l) { return Json{{"b", l.b}, {"A", to_json(l.A)}}; }

Json to_json(const QuadraticMap& q) {
  Json Q = Json::array();
  for (const SymMatrix& s : q.Q) Q.push_back(to_json(s.matrix()));
  return Json{{"b", q.b}, {"A", to_json(q.A)}, {"Q", Q}};
}

Json to_json(const FieldInfo& f) { return Json{{"family", f.family}, {"params", pairs(f.params)}}; }

Json to_json(const SolveParams& p) {
  return Json{{"tau", p.tau},
              {"tol_res", p.tol_res},
              {"max_iter", p.max_iter},
              {"reestimate_every", p.reestimate_every},
              {"init", to_string(p.init)}};
}

Json to_json(const SolveReport& r) {
  Json j{{"status", to_string(r.status)},
         {"converged", r.converged},
         {"iterations", r.iterations},
         {"final_sup_residual", r.final_sup_residual},
         {"tau", r.tau},
         {"lambda_hat", r.lambda_hat}};
  if (!r.area_trace.empty()) j["area_trace"] = r.area_trace;
  return j;
}

Json to_json(const ComparisonCertificate& c) {
  Json worst = Json::array();
  for (const SampleRecord& s : c.worst)
    worst.push_back(Json{{"X", s.X}, {"margin", s.margin}, {"grad_norm", s.grad_norm}, {"tol", s.tol}});
  return Json{{"verdict", to_string(c.verdict)},
              {"min_margin", c.min_margin},
              {"field", to_json(c.field)},
              {"seed", c.seed},
              {"sample_count", c.sample_count},
              {"retained_count", c.retained_count},
              {"excluded_count", c.excluded_count},
              {"tube_excluded", c.tube_excluded},
              {"degenerate_excluded", c.degenerate_excluded},
              {"lattice_count", c.lattice_count},
              {"quasi_count", c.quasi_count},
              {"x_spacing", c.x_spacing},
              {"z_spacing", c.z_spacing},
              {"worst", worst}};
}

Json to_json(const TouchingReport& r) {
  return Json{{"field", to_json(r.field)},
              {"max_value", r.max_value},
              {"argmax", Json{{"x", r.argmax.x}, {"z", r.argmax.z}}},
              {"argmax_node", r.argmax_node},
              {"interior", r.interior},
              {"side_ok", r.side_ok},
              {"certified", r.certified},
              {"violation", r.violation},
              {"boundary_max", r.boundary_max},
              {"excess", r.excess},
              {"local_min_margin", r.local_min_margin}};
}

Json to_json(const ThresholdResult& t) {
  return Json{{"eps_star", t.eps_star},
              {"eps_fail", t.eps_fail},
              {"evaluations", t.evaluations},
              {"bracketed", t.bracketed}};
}

Json to_json(const FlatnessTrace& t) {
  Json rows = Json::array();
  for (const TraceRow& r : t.rows)
    rows.push_back(Json{{"k", r.k},
                        {"r", r.r},
                        {"eps", r.eps},
                        {"osc", r.osc},
                        {"new_eps", r.new_eps},
                        {"ratio", r.ratio},
                        {"slope", r.slope},
                        {"solve_iterations", r.solve_iterations},
                        {"fit", to_json(r.fit)}});
  return Json{{"eta", t.eta}, {"rows", rows}};
}

Json to_json(const HarnackMeasureReport& r) {
  Json rows = Json::array();
  for (const MeasureRow& m : r.rows)
    rows.push_back(Json{{"C", m.C},
                        {"measure_fraction", m.measure_fraction},
                        {"inclusion_fraction", m.inclusion_fraction},
                        {"inclusion_radius", m.inclusion_radius}});
  return Json{{"xi", r.xi}, {"eta_small", r.eta_small}, {"x0", r.x0}, {"x0_distance", r.x0_distance}, {"rows", rows}};
}

Json to_json(const ExperimentParams& p) {
  return Json{{"eps", p.eps},     {"eta", p.eta},     {"theta", p.theta}, {"mu", p.mu},
              {"delta", p.delta}, {"beta", p.beta},   {"c0", p.c0},       {"eps0", p.eps0},
              {"slack", p.slack}, {"slope", p.slope}, {"steps", p.steps}};
}

Json to_json(const ExperimentReport& r) {
  Json bounds = Json::array();
  for (const BoundCheck& b : r.bounds)
    bounds.push_back(Json{{"name", b.name}, {"value", b.value}, {"lo", b.lo}, {"hi", b.hi}, {"pass", b.pass}});
  Json jobs = Json::array();
  for (const JobResult& jr : r.jobs) {
    Json j{{"seed", jr.seed}, {"ok", jr.ok}};
    if (!jr.ok) j["error"] = jr.error;
    j["metrics"] = pairs(jr.metrics);
    if (jr.trace) j["trace"] = to_json(*jr.trace);
    if (jr.measure) j["measure"] = to_json(*jr.measure);
    jobs.push_back(j);
  }
  return Json{{"experiment", r.kind},
              {"dims", to_json(r.dims)},
              {"N", r.N},
              {"params", to_json(r.params)},
              {"solve", to_json(r.solve)},
              {"seeds", r.seeds},
              {"passed", r.passed},
              {"out_of_regime", r.out_of_regime},
              {"measured", pairs(r.measured)},
              {"bounds", bounds},
              {"jobs", jobs}};
}

Json envelope(const std::string& kind, const Config& cfg, const Json& body) {
  Json j{{"format", kFormatVersion}, {"kind", kind}, {"config", config_json(cfg)}};
  for (const auto& [k, v] : body.items()) j[k] = v;
  return j;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
}

void write_grid_binary(const std::filesystem::path& path, const GridMap& u, const Config& cfg) {
  auto os = open_out(path, true);
  os.write(kMagic, sizeof kMagic);
  put_u32(os, static_cast<std::uint32_t>(u.dims().n));
  put_u32(os, static_cast<std::uint32_t>(u.dims().m));
  put_u32(os, static_cast<std::uint32_t>(u.N()));
  put_u32(os, static_cast<std::uint32_t>(GridMap::kBallMaskId));
  for (double v : u.raw()) put_f64(os, v);
  const std::string text = config_text(cfg);
  put_u32(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
}

GridFile read_grid_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot read " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw InvalidArgument("not an msl-v1 grid file");
  const int n = static_cast<int>(get_u32(is)), m = static_cast<int>(get_u32(is)), N = static_cast<int>(get_u32(is));
  const int mask = static_cast<int>(get_u32(is));
  const Dims d{n, m};
  d.validate();
  if (N < 3 || N > 4096) throw InvalidArgument("grid file: bad N");
  if (mask != GridMap::kBallMaskId) throw InvalidArgument("grid file: unknown mask id");
  GridFile f{GridMap(d, N), mask, {}};
  for (double& v : f.grid.raw()) v = get_f64(is);
  const std::uint32_t len = get_u32(is);
  std::string text(len, '\0');
  if (!is.read(text.data(), len)) throw InvalidArgument("grid file truncated");
  if (is.peek() != std::char_traits<char>::eof()) throw InvalidArgument("grid file has trailing bytes");
  f.config = parse_config(text);
  return f;
}

void write_grid_csv(const std::filesystem::path& path, const GridMap& u, const Config& cfg) {
  auto os = open_out(path);
  write_header(os, cfg);
  const Dims& d = u.dims();
  for (int i = 0; i < d.n; ++i) os << (i ? "," : "") << "x" << i + 1;
  for (int a = 0; a < d.m; ++a) os << ",u" << a + 1;
  os << ",kind\n";
  Vec x(d.n);
  for (std::size_t idx : u.unit_region().members) {
    u.coords(idx, x);
    for (int i = 0; i < d.n; ++i) os << (i ? "," : "") << num(x[i]);
    for (int a = 0; a < d.m; ++a) os << ',' << num(u.value(idx, a));
    os << ',' << (u.kind(idx) == NodeKind::Interior ? "interior" : "boundary") << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const ExperimentReport& r, const Config& cfg) {
  auto os = open_out(path);
  write_header(os, cfg);
  const Dims& d = r.dims;
  os << "seed,k,r_k,eps,osc,new_eps,ratio,slope";
  for (int a = 0; a < d.m; ++a) os << ",b_" << a + 1;
  for (int i = 0; i < d.n; ++i)
    for (int a = 0; a < d.m; ++a) os << ",A_" << i + 1 << '_' << a + 1;
  os << '\n';
  for (const JobResult& j : r.jobs) {
    if (!j.trace) continue;
    for (const TraceRow& t : j.trace->rows) {
      os << j.seed << ',' << t.k << ',' << num(t.r) << ',' << num(t.eps) << ',' << num(t.osc) << ',' << num(t.new_eps)
         << ',' << num(t.ratio) << ',' << num(t.slope);
      for (int a = 0; a < d.m; ++a) os << ',' << num(t.fit.b[a]);
      for (int i = 0; i < d.n; ++i)
        for (int a = 0; a < d.m; ++a) os << ',' << num(t.fit.A(i, a));
      os << '\n';
    }
  }
}

void write_gnuplot_template(const std::filesystem::path& path, const std::string& csv_name, const Config& cfg) {
  auto os = open_out(path);
  write_header(os, cfg);
  os << "set datafile separator ','\n"
        "set datafile commentschars '#'\n"
        "set key autotitle columnhead\n"
        "set logscale y\n"
        "set xlabel 'k'\n"
        "set multiplot layout 1,2\n"
        "set ylabel 'eps_k'\n"
        "plot '"
     << csv_name
     << "' using 2:4 with linespoints title 'eps_k'\n"
        "unset logscale y\n"
        "set ylabel 'ratio'\n"
        "plot '"
     << csv_name
     << "' using 2:7 with points title 'ratio', 0.5 with lines title '1/2'\n"
        "unset multiplot\n";
}

ValidationResult validate_output(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".json") {
    Json j;
    try {
      j = Json::parse(slurp(path));
    } catch (const Json::parse_error& e) {
      return {false, std::string("invalid JSON: ") + e.what()};
    }
    if (!j.is_object()) return {false, "top level is not an object"};
    if (!j.contains("format") || j["format"] != kFormatVersion) return {false, "missing or wrong format string"};
    if (!j.contains("config") || !j["config"].is_object() || j["config"].empty()) return {false, "missing config"};
    if (!j.contains("kind") || !j["kind"].is_string()) return {false, "missing kind"};
    return {true, "ok"};
  }
  if (ext == ".csv" || ext == ".gp") return validate_text(slurp(path));
  if (ext == ".bin") {
    try {
      const GridFile f = read_grid_binary(path);
      if (f.config.empty()) return {false, "missing config"};
    } catch (const InvalidArgument& e) {
      return {false, e.what()};
    }
    return {true, "ok"};
  }
  throw InvalidArgument("validate: unsupported file type '" + ext + "'");
}

}  // namespace msl
