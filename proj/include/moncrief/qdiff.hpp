#pragma once

#include <array>
#include <memory>
#include <vector>

#include "moncrief/grid.hpp"

namespace moncrief {

/// Monomial seeds of the three basis series. Odd seeds give identically zero
/// series on this surface (every quadratic differential is even under z -> -z).
inline constexpr std::array<int, 3> kSeedExponents = {0, 2, 4};

/// Taylor data of Theta_m(z) = sum_{|w| <= L} (gamma_w z)^m gamma_w'(z)^2 about 0.
/// Only exponents n = m + 8 j occur (rotation symmetry of the octagon).
struct SeriesExpansion {
  int seed = 0;
  int L = 0;
  double radius = 0;          // expansion valid for |z| <= radius
  std::vector<Complex> body;  // word lengths < L, coefficient of z^{m + 8 j}
  std::vector<Complex> tail;  // word length exactly L
  int maxTerms = 0;           // longest per-element expansion used

  [[nodiscard]] Complex value(Complex z) const;       // body + tail
  [[nodiscard]] Complex tail_value(Complex z) const;  // Theta_L - Theta_{L-1}
  [[nodiscard]] Complex derivative(Complex z) const;
};

/// Shared, lazily built series data for one truncation length.
class PoincareSeries {
 public:
  static constexpr double kExpansionRadius = 0.92;

  PoincareSeries(const FuchsianGroup& group, int L);

  [[nodiscard]] int length() const { return L_; }
  [[nodiscard]] const GroupBall& ball() const { return ball_; }
  [[nodiscard]] const SeriesExpansion& expansion(int seed) const;

  /// Theta_m(z); direct summation beyond the expansion radius.
  [[nodiscard]] Complex value(int seed, Complex z) const;
  /// Contribution of word length exactly L at z.
  [[nodiscard]] Complex tail(int seed, Complex z) const;
  /// Direct ordered summation over the ball; reference path.
  [[nodiscard]] Complex direct(int seed, Complex z, bool tailOnly = false) const;

  /// Process-wide cache keyed by L (the group is the Bolza group).
  static std::shared_ptr<const PoincareSeries> cached(const FuchsianGroup& group, int L);

 private:
  int L_;
  GroupBall ball_;
  std::vector<SeriesExpansion> expansions_;
};

/// Theta_m(z) truncated at word length L, seed H_m(z) = z^m.
Complex poincare_series(const FuchsianGroup& group, int m, int L, const DiskPoint& z);

struct AutomorphyReport {
  double maxResidual = 0;  // max |Theta(g z) g'(z)^2 - Theta(z)|
  double maxTail = 0;      // max |Theta_L - Theta_{L-1}| over the same points and their images
  int samples = 0;
};

/// Compares Theta with its pullback under each side pairing, at points along the
/// paired side (both ends stay inside the series expansion disk), for every seed.
AutomorphyReport automorphy_check(const FuchsianGroup& group, int L, int pointsPerSide = 5);

/// Trace-free, divergence-free symmetric tensor from sum_k (c_{2k} + i c_{2k+1}) Theta_{m_k}.
struct TTField {
  std::array<double, 6> coefficients{};
  int L = 0;
  std::vector<Complex> phi;  // quadratic differential on all grid nodes
  SymTensorField tensor;     // z11 = 2 Re phi, z12 = -2 Im phi, z22 = -z11; all nodes
  double supNorm = 0;        // max over interior nodes of |z|_rho
  double tailEstimate = 0;   // max over interior nodes of |z_L - z_{L-1}|_rho

  [[nodiscard]] SymTensorField interior(Eigen::Index n) const;
};

/// |z|_rho for a trace-free tensor: e^{-2f} sqrt(2 (z11^2 + z12^2)).
inline double tt_norm(double e2f, double z11, double z12) {
  return std::sqrt(2.0 * (z11 * z11 + z12 * z12)) / e2f;
}

TTField assemble_tt(const SurfaceGrid& grid, const FuchsianGroup& group, const std::array<double, 6>& c, int L);

/// Sum of basis fields without re-evaluating the series.
TTField combine_tt(const SurfaceGrid& grid, const std::array<TTField, 6>& basis, const std::array<double, 6>& c);

/// The six real basis fields (unit coefficient vectors).
std::array<TTField, 6> tt_basis(const SurfaceGrid& grid, const FuchsianGroup& group, int L);

struct TTReport {
  double maxTrace = 0;       // max |rho^{ab} z_ab|
  double maxDivergence = 0;  // max rho-norm of rho^{bc} z_{ab;c} over interior nodes
  double supNorm = 0;
  [[nodiscard]] double relative_divergence() const { return supNorm > 0 ? maxDivergence / supNorm : maxDivergence; }
};

/// Trace and divergence of a symmetric tensor given on all grid nodes.
TTReport verify_tt(const LatticeGrid& grid, const SymTensorField& full);
inline TTReport verify_tt(const LatticeGrid& grid, const TTField& z) { return verify_tt(grid, z.tensor); }

/// L^2(mu_rho) Gram matrix of the basis fields.
Eigen::Matrix<double, 6, 6> tt_gram_matrix(const SurfaceGrid& grid, const std::array<TTField, 6>& basis);

}  // namespace moncrief
