#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace moncrief {

/// Everything a run needs; defaults give the baseline instance.
struct RunConfig {
  // grid and series
  double h = 0.01;
  int wordBudget = 6;
  int L = 8;
  // Newton
  double tol = 1e-10;
  int maxIter = 50;
  double dampingFloor = 1e-4;
  // input tensor
  std::array<double, 6> coefficients{};
  std::string coefficientFile;  // overrides `coefficients` when set
  bool normalize = false;       // rescale coefficients so that ||z|| = 1
  std::vector<double> schedule{1.0};
  // geometry
  double injRho = 0;  // 0 selects the Bolza value
  // mms
  double mmsRadius = 0.3;
  std::vector<double> mmsSpacings{0.02, 0.01, 0.005};
  // round trip
  int randomDirections = 10;
  double roundTripNorm = 1.0;
  bool roundTripRefine = false;
  // scan
  std::vector<double> scanScales{0.5, 1, 2, 4, 8};
  int scanRays = 4;
  // run
  std::string outDir = "runs";
  std::uint64_t seed = 12345;
};

/// Reads an INI file (sections grid, solver, tt, continuation, geometry, mms,
/// roundtrip, scan, run) or, for a .json path, the same keys as nested objects.
/// Throws ConfigError naming the path or key.
RunConfig load_config(const std::string& path);

/// Rejects out-of-range values; throws ConfigError.
void validate(const RunConfig& c);

/// Canonical JSON (sorted keys); its dump is byte-stable.
nlohmann::json to_json(const RunConfig& c);
RunConfig config_from_json(const nlohmann::json& j);

/// 64-bit FNV-1a of the canonical dump, as 16 hex digits.
std::string config_hash(const RunConfig& c);

/// Parses "a, b, c" into doubles; throws ConfigError on junk.
std::vector<double> parse_list(const std::string& text, const std::string& key);

}  // namespace moncrief
