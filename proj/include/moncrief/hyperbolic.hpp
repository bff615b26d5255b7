#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "moncrief/errors.hpp"

namespace moncrief {

using Complex = std::complex<double>;

/// A point of the open unit disk. Construction rejects |z| >= 1.
template <typename Scalar = double>
class DiskPointT {
 public:
  using Value = std::complex<Scalar>;

  DiskPointT() = default;
  explicit DiskPointT(Value z) : z_(z) {
    if (!(std::norm(z) < Scalar(1))) {
      throw DomainError("point outside the open unit disk: |z| = " + std::to_string(double(std::abs(z))));
    }
  }
  DiskPointT(Scalar re, Scalar im) : DiskPointT(Value(re, im)) {}

  [[nodiscard]] Value value() const { return z_; }
  [[nodiscard]] Scalar re() const { return z_.real(); }
  [[nodiscard]] Scalar im() const { return z_.imag(); }

 private:
  Value z_{};
};

using DiskPoint = DiskPointT<double>;

/// Disk automorphism z -> (a z + b) / (conj(b) z + conj(a)), normalized so |a|^2 - |b|^2 = 1.
template <typename Scalar = double>
struct MobiusMapT {
  using Value = std::complex<Scalar>;

  Value a{1};
  Value b{0};

  static MobiusMapT identity() { return {}; }

  /// Hyperbolic translation along the diameter at angle `theta`, moving 0 a
  /// (curvature -1) distance `length` towards exp(i theta).
  static MobiusMapT translation(Scalar theta, Scalar length) {
    return {Value(std::cosh(length / 2)), std::sinh(length / 2) * std::polar(Scalar(1), theta)};
  }

  static MobiusMapT rotation(Scalar angle) { return {std::polar(Scalar(1), angle / 2), Value(0)}; }

  [[nodiscard]] Value apply(Value z) const { return (a * z + b) / (std::conj(b) * z + std::conj(a)); }

  [[nodiscard]] Value derivative(Value z) const {
    const Value d = std::conj(b) * z + std::conj(a);
    return Scalar(1) / (d * d);
  }

  [[nodiscard]] MobiusMapT inverse() const { return {std::conj(a), -b}; }

  [[nodiscard]] Scalar determinant() const { return std::norm(a) - std::norm(b); }

  /// Representative of {M, -M} with Re a > 0 (Im a > 0 on the imaginary axis).
  [[nodiscard]] MobiusMapT canonical() const {
    if (a.real() < 0 || (a.real() == 0 && a.imag() < 0)) return {-a, -b};
    return *this;
  }

  /// Image of the origin.
  [[nodiscard]] Value origin_image() const { return b / std::conj(a); }
};

template <typename Scalar>
MobiusMapT<Scalar> operator*(const MobiusMapT<Scalar>& m, const MobiusMapT<Scalar>& n) {
  return {m.a * n.a + m.b * std::conj(n.b), m.a * n.b + m.b * std::conj(n.a)};
}

using MobiusMap = MobiusMapT<double>;

/// Max-entry distance between canonical matrix representatives.
double matrix_distance(const MobiusMap& m, const MobiusMap& n);

DiskPoint mobius_apply(const MobiusMap& m, const DiskPoint& z);
Complex mobius_derivative(const MobiusMap& m, const DiskPoint& z);

/// Distance of the curvature -1/2 metric 8|dz|^2/(1-|z|^2)^2.
double rho_distance(Complex z1, Complex z2);

/// Distance of the standard curvature -1 metric 4|dz|^2/(1-|z|^2)^2.
double unit_curvature_distance(Complex z1, Complex z2);

// ---------------------------------------------------------------------------
// The reference metric rho = e^{2f} (dx^2 + dy^2), e^{2f} = 8 / (1 - |z|^2)^2.

struct ConformalData {
  double e2f = 0;  // e^{2f}
  double f1 = 0;   // df/dx
  double f2 = 0;   // df/dy
  double f11 = 0;
  double f12 = 0;
  double f22 = 0;
};

ConformalData rho_conformal(Complex z);

inline double rho_conformal_factor(Complex z) {
  const double s = 1.0 - std::norm(z);
  return 8.0 / (s * s);
}

/// Gauss curvature -e^{-2f}(f_11 + f_22) from the analytic derivatives.
double rho_gauss_curvature(Complex z);

/// Injectivity radius of the Bolza surface in the rho normalization.
inline double default_inj_rho() { return std::sqrt(2.0) * std::acosh(1.0 + std::sqrt(2.0)); }

// ---------------------------------------------------------------------------
// Regular octagon with interior angles pi/4, centred at 0, vertex 0 on the
// positive real axis. Side k joins vertex k and vertex k+1.

struct Octagon {
  double vertexRadius = 0;    // Euclidean radius of the vertices
  double midpointRadius = 0;  // Euclidean radius of the side midpoints
  double inradius = 0;        // curvature -1 distance from 0 to a side
  double circumradius = 0;    // curvature -1 distance from 0 to a vertex
  std::array<Complex, 8> vertices{};
  std::array<Complex, 8> sideCenters{};  // centres of the side circles
  double sideRadius = 0;

  static Octagon regular();

  /// Largest signed violation over sides: > 0 means outside.
  [[nodiscard]] double outside_measure(Complex z) const;
  [[nodiscard]] bool contains(Complex z, double tol = 1e-13) const { return outside_measure(z) <= tol; }
  /// Index of the side whose circle most deeply contains z, or -1 if inside.
  [[nodiscard]] int violated_side(Complex z) const;
  /// Point on side k at parameter t in [0, 1] (geodesic arc from vertex k to k+1).
  [[nodiscard]] Complex side_point(int k, double t) const;
  /// Interior angle at vertex k between the two adjacent sides.
  [[nodiscard]] double interior_angle(int k) const;
};

// ---------------------------------------------------------------------------

/// Bolza surface group: side pairing g_k translates along the direction of the
/// midpoint of side k, mapping side k+4 onto side k; g_{k+4} = g_k^{-1}.
struct FuchsianGroup {
  Octagon octagon;
  std::array<MobiusMap, 8> generators;
  std::array<int, 8> relationWord{};
  /// elementCache[l] holds the distinct elements of word length exactly l.
  std::vector<std::vector<MobiusMap>> elementCache;

  [[nodiscard]] static int inverse_index(int k) { return (k + 4) % 8; }
  /// Maximum word length held in the cache.
  [[nodiscard]] int cached_length() const { return static_cast<int>(elementCache.size()) - 1; }
  [[nodiscard]] double relation_residual() const;
  /// Every cached element, identity first, by word length.
  [[nodiscard]] std::vector<MobiusMap> cached_elements() const;
};

/// Builds the group and its element cache up to `cacheLength`.
FuchsianGroup build_bolza_group(int cacheLength = 4);

/// Distinct elements of word length <= maxWordLen, identity first, ordered by
/// word length and then by generation order.
std::vector<MobiusMap> enumerate_group(const FuchsianGroup& group, int maxWordLen);

/// Orbit representatives of the ball under conjugation by the order-8 rotation
/// of the octagon. spheres[l] holds the representatives of word length l; every
/// non-identity orbit has exactly 8 members.
struct GroupBall {
  int maxWordLen = 0;
  std::vector<std::vector<MobiusMap>> spheres;

  [[nodiscard]] std::size_t element_count() const;
  /// The 8 conjugates R^j m R^{-j}, j = 0..7 (only the identity for spheres[0]).
  static std::array<MobiusMap, 8> orbit(const MobiusMap& m);
};

GroupBall build_group_ball(const FuchsianGroup& group, int maxWordLen);

struct Reduction {
  DiskPoint point;
  MobiusMap map;  // map.apply(original) == point
  int wordLength = 0;
};

/// Moves z into the closed octagon with side pairings; throws OutOfCollarError
/// when more than `wordBudget` letters are needed.
Reduction reduce_to_domain(const FuchsianGroup& group, const DiskPoint& z, int wordBudget = 3);

/// Elements whose translate of the octagon shares at least a vertex with it
/// (including the identity).
std::vector<MobiusMap> neighbor_tiles(const FuchsianGroup& group);

}  // namespace moncrief
