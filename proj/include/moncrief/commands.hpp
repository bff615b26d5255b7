#pragma once

#include <array>
#include <filesystem>
#include <random>
#include <string>

#include "moncrief/report.hpp"

namespace moncrief {

enum ExitCode : int {
  kExitOk = 0,
  kExitChecksFailed = 1,
  kExitConfig = 2,
  kExitSolver = 3,
  kExitOrderRegression = 4,
};

struct CommandResult {
  int exitCode = kExitOk;
  nlohmann::json report;
  std::filesystem::path runDir;  // empty when nothing was written
};

/// Observed orders below this make `mms` exit with kExitOrderRegression.
inline constexpr double kOrderRegression = 1.5;
inline constexpr double kOrderTarget = 1.8;

CommandResult cmd_solve(const RunConfig& config, bool writeFiles = true);
CommandResult cmd_mms(const RunConfig& config, bool writeFiles = true);
CommandResult cmd_roundtrip(const RunConfig& config, bool writeFiles = true);
CommandResult cmd_scan(const RunConfig& config, bool writeFiles = true);
CommandResult cmd_gen_group(const RunConfig& config, bool writeFiles = true);

/// Six standard normal coefficients.
std::array<double, 6> random_coefficients(std::mt19937_64& rng);

/// Basis combination rescaled so that its sup norm equals `norm`.
TTField normalized_tt(const SurfaceGrid& grid, const std::array<TTField, 6>& basis, std::array<double, 6> c, double norm);

}  // namespace moncrief
