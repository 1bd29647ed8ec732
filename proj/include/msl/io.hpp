#pragma once

// Versioned output formats: JSON reports, CSV grids and traces, gnuplot
// templates, binary grids, key=value run configs, and self-validation.

#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"
#include "msl/certify.hpp"
#include "msl/experiment.hpp"
#include "msl/grid.hpp"
#include "msl/solver.hpp"

namespace msl {

inline constexpr const char* kFormatVersion = "msl-v1";

using Json = nlohmann::ordered_json;
// Flat key=value run configuration, kept sorted so serialization is stable.
using Config = std::map<std::string, std::string>;

// Lines are key=value; blank lines and lines starting with '#' are skipped.
// Throws InvalidArgument on malformed lines or duplicate keys.
Config parse_config(const std::string& text);
Config read_config_file(const std::filesystem::path& path);
std::string config_text(const Config& cfg);

Json to_json(const Dims& d);
Json to_json(const Matrix& a);
Json to_json(const AffineMap& l);
Json to_json(const QuadraticMap& q);
Json to_json(const FieldInfo& f);
Json to_json(const SolveParams& p);
Json to_json(const SolveReport& r);
Json to_json(const ComparisonCertificate& c);
Json to_json(const TouchingReport& r);
Json to_json(const ThresholdResult& t);
Json to_json(const FlatnessTrace& t);
Json to_json(const HarnackMeasureReport& r);
Json to_json(const ExperimentParams& p);
Json to_json(const ExperimentReport& r);

// {"format": "msl-v1", "kind": kind, "config": cfg, ...body}.
Json envelope(const std::string& kind, const Config& cfg, const Json& body);
// Two-space indented dump plus a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);

// Layout: 8-byte magic "msl-v1\0\0"; int32 n, m, N, mask id; N^n * m
// doubles in lattice order (all little-endian); uint32 length and the
// config text.
void write_grid_binary(const std::filesystem::path& path, const GridMap& u, const Config& cfg);
struct GridFile {
  GridMap grid;
  int mask_id = 0;
  Config config;
};
GridFile read_grid_binary(const std::filesystem::path& path);

// Comment header (format line, one line per config key), then one row per
// mask node: x_1..x_n, u_1..u_m, kind.
void write_grid_csv(const std::filesystem::path& path, const GridMap& u, const Config& cfg);
// Columns: seed, k, r_k, eps, osc, new_eps, ratio, slope, b_a, A_i_a.
void write_trace_csv(const std::filesystem::path& path, const ExperimentReport& r, const Config& cfg);
void write_gnuplot_template(const std::filesystem::path& path, const std::string& csv_name, const Config& cfg);

struct ValidationResult {
  bool ok = false;
  std::string message;
};
// Checks the format string and the embedded config of a .json, .csv, .gp or
// .bin output. Throws InvalidArgument for other extensions or unreadable files.
ValidationResult validate_output(const std::filesystem::path& path);

}  // namespace msl
