#include "doctest.h"
#include "moncrief/hyperbolic.hpp"

#include <numbers>

using namespace moncrief;
using std::numbers::pi;

TEST_CASE("disk points outside the open disk are rejected") {
  CHECK_THROWS_AS(DiskPoint(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(DiskPoint(Complex(0.8, 0.8)), DomainError);
  CHECK_NOTHROW(DiskPoint(0.5, -0.5));
}

TEST_CASE("mobius maps compose and invert") {
  const MobiusMap m = MobiusMap::translation(0.3, 1.1) * MobiusMap::rotation(0.7);
  CHECK(m.determinant() == doctest::Approx(1.0).epsilon(1e-14));
  const Complex z(0.2, -0.4);
  CHECK(std::abs(m.inverse().apply(m.apply(z)) - z) < 1e-14);
  CHECK(matrix_distance(m * m.inverse(), MobiusMap::identity()) < 1e-14);
  // derivative against a centred difference
  const double e = 1e-6;
  const Complex fd = (m.apply(z + e) - m.apply(z - e)) / (2 * e);
  CHECK(std::abs(fd - m.derivative(z)) < 1e-8);
  CHECK(std::abs(mobius_apply(m, DiskPoint(z)).value() - m.apply(z)) < 1e-15);
}

TEST_CASE("translations move the origin the requested distance") {
  const MobiusMap t = MobiusMap::translation(1.2, 0.9);
  CHECK(unit_curvature_distance(0, t.origin_image()) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(rho_distance(0, t.origin_image()) == doctest::Approx(std::sqrt(2.0) * 0.9).epsilon(1e-12));
}

TEST_CASE("distances are invariant under disk automorphisms") {
  const MobiusMap m = MobiusMap::translation(-0.4, 0.8);
  const Complex a(0.1, 0.3), b(-0.5, 0.2);
  CHECK(rho_distance(m.apply(a), m.apply(b)) == doctest::Approx(rho_distance(a, b)).epsilon(1e-12));
}

TEST_CASE("reference metric has curvature -1/2") {
  for (Complex z : {Complex(0, 0), Complex(0.3, 0.4), Complex(-0.7, 0.1)}) {
    CHECK(rho_gauss_curvature(z) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(rho_conformal(z).e2f == doctest::Approx(rho_conformal_factor(z)));
  }
}

TEST_CASE("regular octagon has angles pi/4") {
  const Octagon o = Octagon::regular();
  for (int k = 0; k < 8; ++k) {
    CHECK(o.interior_angle(k) == doctest::Approx(pi / 4).epsilon(1e-12));
    CHECK(std::abs(o.side_point(k, 0) - o.vertices[k]) < 1e-12);
    CHECK(std::abs(o.side_point(k, 1) - o.vertices[(k + 1) % 8]) < 1e-12);
    CHECK(std::abs(o.outside_measure(o.side_point(k, 0.37))) < 1e-12);
  }
  CHECK(o.contains(0));
  CHECK_FALSE(o.contains(0.95));
  CHECK(o.violated_side(0) == -1);
}

TEST_CASE("side pairings satisfy the surface relation") {
  const FuchsianGroup g = build_bolza_group(3);
  CHECK(g.relation_residual() < 1e-10);
  for (int k = 0; k < 8; ++k) {
    const MobiusMap& gk = g.generators[k];
    CHECK(matrix_distance(gk * g.generators[FuchsianGroup::inverse_index(k)], MobiusMap::identity()) < 1e-12);
    // side k+4 lands on side k
    const Complex w = gk.apply(g.octagon.side_point((k + 4) % 8, 0.3));
    CHECK(std::abs(g.octagon.outside_measure(w)) < 1e-12);
  }
}

TEST_CASE("group enumeration has the free-group-like first shells") {
  const FuchsianGroup g = build_bolza_group(3);
  CHECK(g.elementCache[0].size() == 1);
  CHECK(g.elementCache[1].size() == 8);
  CHECK(g.elementCache[2].size() == 56);
  const auto all = enumerate_group(g, 2);
  CHECK(all.size() == 65);
  double closest = 1e300;
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j) closest = std::min(closest, matrix_distance(all[i], all[j]));
  CHECK(closest > 1e-3);
}

TEST_CASE("group ball orbits have eight members") {
  const FuchsianGroup g = build_bolza_group(3);
  const GroupBall ball = build_group_ball(g, 3);
  std::size_t total = 1;
  for (int l = 1; l <= 3; ++l) total += 8 * ball.spheres[l].size();
  CHECK(ball.element_count() == total);
  CHECK(ball.element_count() == enumerate_group(g, 3).size());
}

TEST_CASE("points reduce into the octagon") {
  const FuchsianGroup g = build_bolza_group(3);
  const MobiusMap w = g.generators[1] * g.generators[2];
  const Complex z0(0.1, 0.05);
  const Reduction r = reduce_to_domain(g, DiskPoint(w.apply(z0)), 4);
  CHECK(g.octagon.contains(r.point.value(), 1e-12));
  CHECK(std::abs(r.map.apply(w.apply(z0)) - r.point.value()) < 1e-12);
  CHECK(std::abs(r.point.value() - z0) < 1e-10);
  CHECK(r.wordLength == 2);
  CHECK_THROWS_AS(reduce_to_domain(g, DiskPoint(w.apply(z0)), 1), OutOfCollarError);
}

TEST_CASE("neighbouring tiles share a vertex with the octagon") {
  // the tile opposite a vertex needs words of length 4
  const FuchsianGroup g = build_bolza_group(4);
  const auto tiles = neighbor_tiles(g);
  // around each of the 8 vertices 8 tiles meet; all vertices are one orbit
  CHECK(tiles.size() == 49);
  CHECK(default_inj_rho() == doctest::Approx(std::sqrt(2.0) * std::acosh(1 + std::sqrt(2.0))));
}
