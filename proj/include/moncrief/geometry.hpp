#pragma once

#include <complex>
#include <vector>

#include "moncrief/solver.hpp"

namespace moncrief {

/// B = sqrt(1 + 2 |xi|^2) with its smallest value and where it occurs.
struct BField {
  ScalarField values;
  double min = 0;
  double max = 0;
  Eigen::Index argmin = 0;
};

/// g_ab, its inverse and the density ratio mu_g / mu_rho at interior nodes;
/// gFull covers all nodes (ghost values rebuilt from the extended xi, which
/// keeps them positive definite however anisotropic g is).
struct MetricData {
  SymTensorField g;
  SymTensorField inverse;
  ScalarField muRatio;
  SymTensorField gFull;
};

struct AreaEnergy {
  double areaG = 0;
  double areaRho = 0;
  double energy = 0;             // areaG - areaRho
  double integralU = 0;          // int u dmu_rho
  double identityResidual = 0;   // |areaG - areaRho - integralU|
};

/// |dw|^2 and |dbar w|^2 of Id : (Sigma, g) -> (Sigma, rho), and e(g, rho).
struct EnergyDensities {
  ScalarField holomorphic;
  ScalarField antiholomorphic;
  ScalarField total;
};

struct LambdaSolution {
  ScalarField lambda;
  int iterations = 0;
  double residual = 0;  // max |Delta_g lambda - (e^{2 lambda} - mu_rho / mu_g) / 2|
};

struct LambdaOptions {
  double tol = 1e-10;
  int maxIter = 30;
};

/// Pointwise identities tying xi, B and g together.
struct MetricIdentityReport {
  double maxTrace = 0;             // |rho^{ab} xi_ab|
  double maxDensity = 0;           // relative error of mu_g = (1 + B) mu_rho
  double maxReconstruction = 0;    // relative error of the rho reconstruction from g and xi
  double minEigenvalueG = 0;       // smallest eigenvalue of g against rho
  double minEigenvalueTwoGMinusRho = 0;
};

struct HarmonicityReport {
  Vector v1, v2;     // V^c at interior nodes
  double maxNorm = 0;  // max |V|_rho
};

/// Hopf differential in a pointwise g-conformal frame.
struct HopfData {
  std::vector<Complex> phi;
  Vector normSquared;  // |phi|_g^2
};

struct BIdentityReport {
  Eigen::Index subgridNodes = 0;     // nodes with B > 1.05
  bool vacuous = true;
  double maxEquationResidual = 0;    // B-equation on the subgrid
  double maxGradLogB = 0;            // sup |grad_g log B|
  double maxHopfResidual = 0;        // | |phi|_g^2 - (B - 1) / (4 (B + 1)) |
  double maxDensityProduct = 0;      // | |dw|^2 |dbar w|^2 - |phi|_g^2 |
  double growthExponent = 0;         // log(max B) / (1 + ||z||)
};

struct DiameterEstimate {
  double lower = 0;  // largest eccentricity found by repeated sweeps
  double upper = 0;  // twice the eccentricity of the first source
};

/// Everything derived from a solution u for an input tensor amplitude * z.
struct DerivedGeometry {
  SymTensorField xi;
  BField B;
  MetricData metric;
  LambdaSolution lambda;
  SymTensorField gamma;      // e^{2 lambda} g at interior nodes
  SymTensorField gammaFull;  // on all nodes
  AreaEnergy area;
  EnergyDensities densities;
  HopfData hopf;
  MetricIdentityReport identities;
  double zNorm = 0;
};

/// xi_ab = z_ab - u_;ab + rho_ab Delta_rho u / 2 at interior nodes.
SymTensorField compute_xi(const LatticeGrid& grid, const SymTensorField& zInterior, const Vector& uFull);
SymTensorField compute_xi(const SurfaceGrid& grid, const TTField& z, const ScalarField& u, double amplitude = 1.0);

/// |xi|_rho^2 for a trace-free tensor.
inline double xi_norm2(double e2f, double x11, double x12) { return 2 * (x11 * x11 + x12 * x12) / (e2f * e2f); }

BField compute_B(const LatticeGrid& grid, const SymTensorField& xi);

/// (1 + B) g^{ab} = -2 xi^{ab} + B rho^{ab}, inverted node by node.
MetricData compute_g(const LatticeGrid& grid, const SymTensorField& xi, const BField& B);
/// As above, and fills gFull from the Gamma-extension of xi.
MetricData compute_g(const SurfaceGrid& grid, const SymTensorField& xi, const BField& B);

MetricIdentityReport metric_identities(const LatticeGrid& grid, const SymTensorField& xi, const BField& B,
                                       const MetricData& metric);

AreaEnergy area_energy(const SurfaceGrid& grid, const ScalarField& u, const BField& B);

EnergyDensities energy_densities(const LatticeGrid& grid, const MetricData& metric);

/// Gauss curvature of a metric given on all nodes (Brioschi formula).
Vector gauss_curvature(const LatticeGrid& grid, const SymTensorField& full);

/// Scalar curvature R(g) = 2 K(g) at interior nodes, g given on all nodes.
ScalarField curvature_g(const LatticeGrid& grid, const SymTensorField& gFull);

/// Delta_g in divergence form, rows = interior nodes, columns = all nodes.
SparseMatrix laplace_beltrami(const LatticeGrid& grid, const SymTensorField& gFull);

/// Newton solve of Delta_g lambda = (e^{2 lambda} - mu_rho / mu_g) / 2.
/// Throws NonConvergenceError when the tolerance is not reached.
LambdaSolution solve_lambda(const SurfaceGrid& grid, const MetricData& metric, const LambdaOptions& opts = {});

/// e^{2 lambda} g, node by node (both on the same node set).
SymTensorField conformal_rescale(const SymTensorField& g, const Vector& lambda);

/// V^c = g^{ab} (Gamma(g)^c_ab - Gamma(rho)^c_ab), both connections from
/// centred differences of the sampled metrics.
HarmonicityReport harmonicity_residual(const SurfaceGrid& grid, const SymTensorField& gFull);

HopfData hopf_differential(const LatticeGrid& grid, const MetricData& metric);

BIdentityReport b_identities(const SurfaceGrid& grid, const MetricData& metric, const BField& B,
                             const EnergyDensities& densities, const HopfData& hopf, double zNorm);

/// Graph distances over lattice edges weighted by g, ghosts tied to their images.
DiameterEstimate graph_diameter(const SurfaceGrid& grid, const SymTensorField& gFull, int sweeps = 4);

/// Upper bound 4 sqrt 2 / (pi inj) (2 + ||z||) A(rho) on the diameter of g.
double diameter_bound(double injRho, double zNorm, double areaRho);

DerivedGeometry derive_geometry(const SurfaceGrid& grid, const TTField& z, double amplitude,
                                const MoncriefSolution& solution, const LambdaOptions& opts = {});

}  // namespace moncrief
