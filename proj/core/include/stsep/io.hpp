#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stsep/geometry.hpp"
#include "stsep/permutation.hpp"
#include "stsep/recon.hpp"

namespace stsep {

inline constexpr const char* kVersion = "0.1.0";

// Shortest decimal string that parses back to exactly v.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Pattern CSV: header exactly "x,y,t", one event per line, finite
// decimal coordinates. Malformed lines report their line number.
std::vector<PointST> read_points_csv(const std::string& path);
PointPattern read_pattern_csv(const std::string& path, const Window& w);
void write_pattern_csv(const PointPattern& p, const std::string& path);

// Window file: "rect xmin xmax ymin ymax tmin tmax" on one line, or a
// "poly tmin tmax" line followed by one "x y" vertex per line.
Window read_window(const std::string& path);
void write_window(const Window& w, const std::string& path);

// Reconstruction weights and bounds as "key = value" lines; keys are
// exactly w_k, w_dk, w_delta, t_k, r_k, t_d, r_d, k_max, max_iter,
// max_consecutive_rejects. Blank lines and #-comments are skipped,
// unknown keys are errors. Unset keys keep the values in `base`.
ReconConfig read_recon_config(const std::string& path,
                              const ReconConfig& base = {});
void write_recon_config(const ReconConfig& cfg, const std::string& path);

// Test-result JSON. Re-serializing a parsed result reproduces the file
// byte for byte (sorted keys, shortest-round-trip numbers).
std::string result_to_json(const MonteCarloTestResult& r);
MonteCarloTestResult result_from_json(const std::string& text);
void write_result(const MonteCarloTestResult& r, const std::string& path);
MonteCarloTestResult read_result(const std::string& path);

// Long-format export of a grid function: header "x,y,t,value", one row
// per cell; values laid out (nx*ny) x nt like IntensityField grids.
void write_grid_csv(const Grid3& grid, const Eigen::MatrixXd& values,
                    const std::string& path);

// FNV-1a (64-bit) content digests for the run manifest.
std::uint64_t fnv1a64(const void* data, std::size_t n);
std::string digest_hex(std::uint64_t h);
std::string digest_string(const std::string& s);
std::string digest_file(const std::string& path);

struct RunManifest {
  std::string command_line;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> input_digests;
  std::string version = kVersion;
  double wall_seconds = 0.0;  // informational; not part of any digest
};

std::string manifest_to_json(const RunManifest& m);
void write_manifest(const RunManifest& m, const std::string& path);

}  // namespace stsep
