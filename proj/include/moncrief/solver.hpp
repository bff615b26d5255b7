#pragma once

#include <Eigen/SparseLU>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "moncrief/qdiff.hpp"

namespace moncrief {

struct SolverOptions {
  double tol = 1e-10;           // on max |F| in the chart
  int maxIter = 50;
  double dampingFloor = 1e-4;   // smallest backtracking step
  double linearTol = 1e-12;     // relative residual of each linear solve
  /// Raise tol to the round-off level of the discrete operator,
  /// 2 eps |u|_inf 8 / h^2, which exceeds 1e-10 on fine grids.
  bool roundoffFloor = true;
};

/// Tolerance actually used by newton_solve for an iterate of size uMax.
double effective_tolerance(const SolverOptions& opts, double h, double uMax);

/// The equation on the unknown nodes of a lattice: values on all nodes are
/// extension * u + offset (ghost interpolation or Dirichlet data).
struct EquationData {
  const LatticeGrid* grid = nullptr;
  const SparseMatrix* extension = nullptr;
  Vector offset;   // all nodes
  Vector z11;      // trace-free source tensor at unknown nodes
  Vector z12;
  Vector source;   // subtracted from F; empty for the plain equation
  double zNorm = 0;

  [[nodiscard]] Vector full(const Vector& u) const;
};

EquationData surface_equation(const SurfaceGrid& grid, const TTField& z, double amplitude = 1.0);

/// Linearization data at the unknown nodes. F_s multiplies du_12 once, so
/// ellipticity reads F_r F_t - F_s^2 / 4 > 0.
struct NewtonWorkspace {
  Vector X, Y, radicand;  // radicand = e^{4f} + X^2 + Y^2
  Vector Fr, Fs, Ft, Fp, Fq, Fu;
  SparseMatrix jacobian;        // with respect to the unknowns
  SparseMatrix preconditioner;  // same coefficients on the compact stencils
  Vector residual;
  double minFr = 0, minFt = 0, maxFr = 0, maxFt = 0, maxAbsFs = 0, minDiscriminant = 0;
};

/// Solves J x = b by GMRES preconditioned with an LU of the compact-stencil
/// Jacobian; the symbolic analysis is reused while the pattern is unchanged.
class CompactSolver {
 public:
  CompactSolver();
  ~CompactSolver();
  CompactSolver(const CompactSolver&) = delete;
  CompactSolver& operator=(const CompactSolver&) = delete;

  Vector solve(const NewtonWorkspace& w, const Vector& rhs, double relTol);
  Vector solve(const SparseMatrix& A, const SparseMatrix& P, const Vector& rhs, double relTol);
  [[nodiscard]] int last_iterations() const { return lastIterations_; }

 private:
  using Lu = Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor>, Eigen::COLAMDOrdering<int>>;
  std::unique_ptr<Lu> lu_;
  bool analyzed_ = false;
  Eigen::Index pattern_ = -1;
  int lastIterations_ = 0;
};

struct MoncriefSolution {
  ScalarField u;
  double amplitude = 1.0;
  int iterations = 0;
  double finalResidual = 0;
  std::vector<double> history;  // max |F| before each step and at the end
  double zNorm = 0;
  double minU = 0, maxU = 0;
  double minFr = 0, minFt = 0, maxAbsFs = 0, minDiscriminant = 0;
};

/// Newton did not reach the tolerance; carries the best iterate.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, MoncriefSolution best)
      : std::runtime_error(what), best_(std::move(best)) {}
  [[nodiscard]] const MoncriefSolution& best() const { return best_; }
  [[nodiscard]] const std::vector<double>& history() const { return best_.history; }

 private:
  MoncriefSolution best_;
};

/// F = (u_11 + u_22) - e^{2f} u + sqrt(e^{4f} + X^2 + Y^2) - source at unknown nodes.
Vector residual(const EquationData& eq, const Vector& u);
ScalarField residual(const SurfaceGrid& grid, const TTField& z, const ScalarField& u);

/// Throws EllipticityError when a coefficient leaves the elliptic range.
NewtonWorkspace linearize(const EquationData& eq, const Vector& u);
NewtonWorkspace linearize(const SurfaceGrid& grid, const TTField& z, const ScalarField& u);

MoncriefSolution newton_solve(const EquationData& eq, const std::optional<Vector>& u0, const SolverOptions& opts = {});
MoncriefSolution newton_solve(const SurfaceGrid& grid, const TTField& z, const std::optional<ScalarField>& u0 = std::nullopt,
                              const SolverOptions& opts = {});

/// Default start 1 + ||z|| / (2 sqrt 2), the midpoint of the a priori bracket.
inline double default_initial_value(double zNorm) { return 1.0 + zNorm / (2.0 * std::sqrt(2.0)); }

struct ContinuationResult {
  std::vector<MoncriefSolution> solutions;  // one per requested amplitude
  int totalIterations = 0;
  int bisections = 0;
};

/// Solves for a z over ascending amplitudes with warm starts; a failed step is
/// bisected. Throws ConvergenceError naming the failing amplitude.
ContinuationResult continuation_solve(const SurfaceGrid& grid, const TTField& z, const std::vector<double>& amplitudes,
                                      const SolverOptions& opts = {});

struct BoundsCase {
  const MoncriefSolution* solution = nullptr;
  std::array<double, 6> coefficients{};  // TT input as basis coefficients (scaled)
  double zNorm = 0;
};

struct BoundViolation {
  std::string bound;  // "i", "ii", "iii" or "iv"
  double excess = 0;  // lhs - rhs - slack (> 0 is a violation)
};

struct BoundsReport {
  int pairsChecked = 0;
  int parallelPairs = 0;
  double worstExcess[4] = {-1e300, -1e300, -1e300, -1e300};  // max over checks of lhs - rhs - slack
  double minU = 0;
  std::vector<BoundViolation> violations;
  [[nodiscard]] bool pass() const { return violations.empty(); }
};

/// Checks the four sup-norm bounds over all cases and pairs, with slack
/// 1e-3 (1 + ||z||). Differences of TT inputs are rebuilt from the basis.
/// `constant` multiplies the tensor norms in (i), (ii) and (iv).
BoundsReport check_bounds(const SurfaceGrid& grid, const std::array<TTField, 6>& basis,
                          const std::vector<BoundsCase>& cases, double constant = 1.0 / std::sqrt(2.0));

// ---------------------------------------------------------------------------
// Manufactured solutions on a patch.

struct MmsLevel {
  double h = 0;
  int nodes = 0;
  double laplacianError = 0;
  double hessianError = 0;
  double solveError = 0;
  int iterations = 0;
};

struct MmsStudy {
  std::vector<MmsLevel> levels;
  double laplacianOrder = 0;  // fitted over all levels, NaN with one level
  double hessianOrder = 0;
  double solveOrder = 0;
};

/// u* = 1 + 0.1 sin(3x + 1) cos(2y + 1/2) against phi = c0 + c1 z with an added source.
MmsStudy run_mms(double radius, const std::vector<double>& spacings, Complex c0 = {0.3, -0.2}, Complex c1 = {0.4, 0.1},
                 const SolverOptions& opts = {});

/// Least-squares slope of log(error) against log(h).
double observed_order(const std::vector<double>& h, const std::vector<double>& err);

}  // namespace moncrief
