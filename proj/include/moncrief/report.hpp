#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "moncrief/config.hpp"
#include "moncrief/teich.hpp"

namespace moncrief {

/// Collects tagged checks and tables for one command; serialized as report.json.
class RunReport {
 public:
  RunReport(std::string command, const RunConfig& config);

  /// Records value against tolerance; `pass` decides, the pair is informational.
  void check(const std::string& name, double value, double tolerance, bool pass);
  /// Pass iff value <= tolerance (NaN fails).
  void check_below(const std::string& name, double value, double tolerance);
  /// Pass iff value >= threshold.
  void check_above(const std::string& name, double value, double threshold);

  nlohmann::json& section(const std::string& name) { return root_[name]; }
  void timing(const std::string& name, double seconds) { root_["timings"][name] = seconds; }
  void fail(const std::string& message);  // solver or runtime failure, keeps partial data

  [[nodiscard]] bool all_pass() const;
  [[nodiscard]] bool failed() const { return !error_.empty(); }
  [[nodiscard]] const nlohmann::json& checks() const { return root_["checks"]; }
  [[nodiscard]] nlohmann::json to_json() const;

 private:
  nlohmann::json root_;
  std::string error_;
};

/// New directory under `out` named by config hash and UTC timestamp; never reuses one.
std::filesystem::path make_run_dir(const std::filesystem::path& out, const std::string& hash);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// node, x, y, u, B, lambda, R, residual at interior nodes.
void write_fields_csv(const std::filesystem::path& path, const SurfaceGrid& grid, const ScalarField& u,
                      const DerivedGeometry& geometry, const ScalarField& residual);

/// One row per scale: ray, scale, supnorm, energy, areaG, minB, maxB.
void write_scan_csv(const std::filesystem::path& path, const std::vector<ScanTable>& rays);

/// Identifies a grid by spacing and node layout.
std::string grid_hash(const LatticeGrid& grid);

nlohmann::json gamma_to_json(const LatticeGrid& grid, const GammaMetric& gamma);
/// Throws ConfigError when the grid hash or sizes disagree.
GammaMetric gamma_from_json(const SurfaceGrid& grid, const nlohmann::json& j);

nlohmann::json tt_to_json(const TTField& z, Eigen::Index interiorCount);

}  // namespace moncrief
