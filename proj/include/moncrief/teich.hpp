#pragma once

#include <optional>
#include <string>
#include <vector>

#include "moncrief/geometry.hpp"

namespace moncrief {

/// A point of Teichmuller space as its curvature -1/2 metric sampled in the chart.
struct GammaMetric {
  SymTensorField gamma;      // interior nodes
  SymTensorField gammaFull;  // all nodes; empty for imported metrics until extended
  std::string provenance;    // "forward" or an import tag
  double maxCurvatureError = 0;  // max |K(gamma) + 1/2| at interior nodes
};

/// s z with every cached representation scaled.
TTField scaled_tt(const TTField& z, double s);

struct PsiResult {
  GammaMetric gamma;
  DerivedGeometry geometry;
  MoncriefSolution solution;
};

/// Forward map: solve for u, build g and lambda, return gamma = e^{2 lambda} g.
PsiResult psi(const SurfaceGrid& grid, const TTField& z, double amplitude = 1.0, const SolverOptions& opts = {},
              const std::optional<ScalarField>& u0 = std::nullopt);

/// Builds gamma on all nodes by Gamma-extension and measures its curvature.
GammaMetric import_gamma(const SurfaceGrid& grid, const SymTensorField& gammaInterior, std::string provenance);

struct InverseIntermediate {
  ScalarField energyDensity;   // e(gamma, rho) = gamma^{ab} rho_ab / 2
  ScalarField jacobianRatio;   // mu_rho / mu_gamma
  SymTensorField khat;         // -(rho - e gamma) / 2
  ScalarField lambdaInv;       // e^{-2 lambda} = e + mu_rho / mu_gamma
  SymTensorField gRecovered;
  SymTensorField xiRecovered;
  BField BRecovered;
  ScalarField uRecovered;
  SymTensorField zRecovered;   // interior nodes
  SymTensorField zRecoveredFull;
  double maxPositivityResidual = 0;  // | e^2 - 2 |khat|_gamma^2 - (mu_rho / mu_gamma)^2 |
  double maxKNormG = 0;              // max |k|_g^2 with k = khat + g / 2; below one on the admissible branch
  double maxBranchResidual = 0;      // | |k|_g^2 - B / (B + 1) |
  double harmonicity = 0;            // max |V|_rho of the recovered g
  double linearResidual = 0;         // max |Delta u - u + B|
  int linearIterations = 0;
};

/// Harmonicity above this level is reported as a warning only.
inline constexpr double kHarmonicityWarning = 1e-2;

struct InverseOptions {
  /// Second-order 3x3 stencils for the linear solve and the Hessian, an
  /// independent discretization from the forward solver's.
  bool compactStencils = false;
};

/// Inverse map by tensor algebra and one linear elliptic solve.
/// Throws DomainError for an indefinite gamma.
InverseIntermediate psi_inverse(const SurfaceGrid& grid, const GammaMetric& gamma, const InverseOptions& opts = {});

/// Max over interior nodes of the rho-normalized componentwise distance.
double metric_distance(const LatticeGrid& grid, const SymTensorField& a, const SymTensorField& b);

struct RoundTripReport {
  double zNorm = 0;
  double relativeError = 0;  // max |z_rec - z|_rho / ||z||
  double absoluteError = 0;
  double lambdaMismatch = 0;  // forward lambda against the inverse route
  double bMismatch = 0;
  TTReport recoveredTT;
  InverseIntermediate inverse;
};

RoundTripReport round_trip(const SurfaceGrid& grid, const TTField& z, double amplitude = 1.0,
                           const SolverOptions& opts = {}, const InverseOptions& inv = {});
RoundTripReport round_trip(const SurfaceGrid& grid, const TTField& z, double amplitude, const PsiResult& forward,
                           const InverseOptions& inv = {});

struct ScanRow {
  double scale = 0;
  double supNorm = 0;
  double energy = 0;
  double areaG = 0;
  double minB = 0;
  double maxB = 0;
};

struct ScanTable {
  std::vector<ScanRow> rows;
  double areaRho = 0;
  bool increasing = false;
  double lowerSlope = 0;      // C1 in E >= C1 ||z|| - C2, fitted on the top half
  double lowerIntercept = 0;  // C2
  double upperSlope = 0;      // slope of E <= C3 ||z|| + C4 over the same rows
  double upperIntercept = 0;
  double minRatio = 0;        // min E / ||z|| over the top half
  double maxRatio = 0;
  double largestScale = 0;    // last scale reached
  std::string failure;        // solver message when the ray stopped early
  [[nodiscard]] bool proper() const { return increasing && lowerSlope > 0 && minRatio > 0 && failure.empty(); }
};

/// Energy along the ray s * z for ascending scales, with warm starts.
ScanTable properness_scan(const SurfaceGrid& grid, const TTField& z, const std::vector<double>& scales,
                          const SolverOptions& opts = {});

}  // namespace moncrief
