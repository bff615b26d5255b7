#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "moncrief/hyperbolic.hpp"

namespace moncrief {

template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Vector = VectorT<double>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Real samples on the unknown nodes of a grid. Rejects non-finite entries.
template <typename Scalar = double>
class ScalarFieldT {
 public:
  ScalarFieldT() = default;
  explicit ScalarFieldT(VectorT<Scalar> values) : values_(std::move(values)) {
    if (!values_.allFinite()) throw DomainError("scalar field has non-finite entries");
  }
  static ScalarFieldT constant(Eigen::Index n, Scalar c) { return ScalarFieldT(VectorT<Scalar>::Constant(n, c)); }

  [[nodiscard]] const VectorT<Scalar>& values() const { return values_; }
  [[nodiscard]] Eigen::Index size() const { return values_.size(); }
  Scalar operator[](Eigen::Index i) const { return values_[i]; }

 private:
  VectorT<Scalar> values_;
};

/// Coordinate components of a symmetric 2-tensor; t21 is t12 by construction.
template <typename Scalar = double>
struct SymTensorFieldT {
  VectorT<Scalar> t11;
  VectorT<Scalar> t12;
  VectorT<Scalar> t22;

  static SymTensorFieldT zero(Eigen::Index n) {
    return {VectorT<Scalar>::Zero(n), VectorT<Scalar>::Zero(n), VectorT<Scalar>::Zero(n)};
  }
  [[nodiscard]] Eigen::Index size() const { return t11.size(); }
};

using ScalarField = ScalarFieldT<double>;
using SymTensorField = SymTensorFieldT<double>;

/// Centred difference operators, rows = unknown nodes, columns = all nodes.
struct StencilOps {
  SparseMatrix d1, d2, d11, d12, d22;
};

/// Per-node first and second chart derivatives.
struct Derivatives {
  Vector d1, d2, d11, d12, d22;
};

/// Cartesian lattice (i h, j h) in the disk chart. The first `unknownCount`
/// nodes carry unknowns and at least a full 3x3 neighbourhood; the rest are
/// passive (ghost or Dirichlet) nodes.
struct LatticeGrid {
  enum class NodeClass { Interior, Ghost, Boundary };

  double h = 0;
  std::vector<Complex> nodes;
  std::vector<std::array<int, 2>> latticeIndex;
  std::vector<NodeClass> nodeClass;
  std::vector<ConformalData> rho;
  /// stencil[k][(di + 1) * 3 + (dj + 1)] is the node at lattice offset (di, dj).
  std::vector<std::array<int, 9>> stencil;
  Eigen::Index unknownCount = 0;
  /// Fourth-order differences where the full 5x5 block exists, second order elsewhere.
  StencilOps ops;
  Eigen::Index fourthOrderRows = 0;
  /// Second-order 3x3 differences; cheap to factor, used to precondition.
  StencilOps compact;

  [[nodiscard]] Eigen::Index node_count() const { return static_cast<Eigen::Index>(nodes.size()); }
  [[nodiscard]] Vector rho_factor() const;  // e^{2f} over all nodes
  [[nodiscard]] Vector rho_factor_unknowns() const;
  /// Index of the node at lattice (i, j), or -1.
  [[nodiscard]] int find(int i, int j) const;

  // lattice lookup table
  int lookupOffset = 0;
  int lookupWidth = 0;
  std::vector<int> lookup;

  void finalize_stencils();
};

struct GhostStencilEntry {
  int node = 0;          // interior node index
  double weight = 0;     // interpolation weight
  Complex factor{1.0};   // derivative of the deck map at the node: the sample sits at gamma(node)
};

struct GhostLink {
  DiskPoint reduced;  // image of the ghost node in the closed octagon
  MobiusMap deck;     // deck.apply(ghost) == reduced
  std::vector<GhostStencilEntry> stencil;
};

/// Fundamental-domain grid with deck-transformation ghost links.
struct SurfaceGrid : LatticeGrid {
  FuchsianGroup group;
  std::vector<GhostLink> ghostLinks;  // one per ghost node, in node order
  SparseMatrix ghostMatrix;           // ghost values = ghostMatrix * interior values
  SparseMatrix extension;             // [I; ghostMatrix]
  Vector quadratureWeights;           // all nodes, includes e^{2f}
  int wordBudget = 3;

  // interpolation cloud: interior nodes and their images under neighbouring tiles
  std::vector<Complex> cloudPoint;
  std::vector<int> cloudNode;
  std::vector<Complex> cloudFactor;
  double cloudCell = 0;
  int cloudOffset = 0;
  int cloudWidth = 0;
  std::vector<std::vector<int>> cloudBuckets;

  [[nodiscard]] Eigen::Index interior_count() const { return unknownCount; }
  [[nodiscard]] Eigen::Index ghost_count() const { return node_count() - unknownCount; }

  /// Values on all nodes from values on interior nodes.
  [[nodiscard]] Vector extend(const Vector& interior) const;
  [[nodiscard]] Vector extend(const ScalarField& u) const { return extend(u.values()); }
  /// Fills ghost values of a Gamma-invariant symmetric tensor given on interior nodes.
  [[nodiscard]] SymTensorField extend_tensor(const SymTensorField& interior) const;

  /// Indices of the nearest cloud samples to z (at most `count`).
  [[nodiscard]] std::vector<int> nearest_cloud(Complex z, int count) const;
  /// Largest sum of |weights| over the ghost stencils.
  [[nodiscard]] double max_lebesgue_constant() const;
};

/// Dirichlet patch |z| <= radius with no group machinery.
struct PatchGrid : LatticeGrid {
  double radius = 0;
};

/// Least-squares degree of the ghost and point interpolation.
inline constexpr int kInterpolationDegree = 5;
inline constexpr int kInterpolationPoints = 40;

/// Builds the grid; throws OutOfCollarError naming a ghost that cannot be reduced.
SurfaceGrid build_grid(const FuchsianGroup& group, double h, int wordBudget = 6);

PatchGrid build_mms_patch(double radius, double h);

/// Chart derivatives at the unknown nodes from values on all nodes.
Derivatives chart_derivatives(const LatticeGrid& grid, const Vector& full);
Derivatives chart_derivatives(const LatticeGrid& grid, const Vector& full, const StencilOps& ops);

/// Delta_rho u = e^{-2f}(u_11 + u_22) at unknown nodes.
Vector laplacian_rho(const LatticeGrid& grid, const Vector& full);
ScalarField laplacian_rho(const SurfaceGrid& grid, const ScalarField& u);

/// Covariant Hessian of rho in the chart at unknown nodes.
SymTensorField hessian_rho(const LatticeGrid& grid, const Vector& full);
SymTensorField hessian_rho(const LatticeGrid& grid, const Vector& full, const StencilOps& ops);
SymTensorField hessian_rho(const SurfaceGrid& grid, const ScalarField& u);

/// Integral of u against mu_rho (ghost cells included through the extension).
double integrate_rho(const SurfaceGrid& grid, const ScalarField& u);
double integrate_rho_full(const SurfaceGrid& grid, const Vector& full);

/// Interpolates a Gamma-invariant field at z (reduced into the octagon first).
double interpolate(const SurfaceGrid& grid, const ScalarField& u, const DiskPoint& z);

/// Least-squares weights reproducing polynomials of the given degree at `at`.
Vector polynomial_weights(const std::vector<Complex>& points, Complex at, double scale, int degree);

}  // namespace moncrief
