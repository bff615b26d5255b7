#include "doctest.h"
#include "moncrief/solver.hpp"

#include <random>

using namespace moncrief;

namespace {

const FuchsianGroup& group() {
  static const FuchsianGroup g = build_bolza_group(4);
  return g;
}

const SurfaceGrid& coarse() {
  static const SurfaceGrid g = build_grid(group(), 0.04);
  return g;
}

const std::array<TTField, 6>& basis() {
  static const std::array<TTField, 6> b = tt_basis(coarse(), group(), 6);
  return b;
}

TTField unit_direction(std::array<double, 6> c, double norm = 1.0) {
  const double s = combine_tt(coarse(), basis(), c).supNorm;
  for (double& v : c) v *= norm / s;
  return combine_tt(coarse(), basis(), c);
}

const std::array<double, 6> kDir{0.5, -0.3, 1.2, 0.7, -0.9, 0.4};

}  // namespace

TEST_CASE("zero input has the solution one") {
  const TTField z0 = combine_tt(coarse(), basis(), {});
  const ScalarField one = ScalarField::constant(coarse().interior_count(), 1.0);
  CHECK(residual(coarse(), z0, one).values().cwiseAbs().maxCoeff() < 1e-10);  // chart units, e^{2f} reaches ~50
  const MoncriefSolution s = newton_solve(coarse(), z0, ScalarField::constant(coarse().interior_count(), 1.3));
  CHECK((s.u.values().array() - 1).abs().maxCoeff() < 1e-10);
  CHECK(s.history.size() == static_cast<std::size_t>(s.iterations + 1));
}

TEST_CASE("newton converges quadratically and stays elliptic") {
  const TTField z = unit_direction(kDir);
  const MoncriefSolution s = newton_solve(coarse(), z);
  CHECK(s.finalResidual <= effective_tolerance({}, coarse().h, s.maxU));
  CHECK(s.minFr > 0);
  CHECK(s.minDiscriminant > 0);
  CHECK(s.iterations <= 10);
  // a late step squares the residual, roughly
  const auto& hst = s.history;
  REQUIRE(hst.size() >= 4);
  const std::size_t k = hst.size() - 3;
  CHECK(hst[k + 1] < 10 * hst[k] * hst[k] + 1e-9);
  CHECK(s.minU >= 1 - 1e-3);
}

TEST_CASE("jacobian matches finite differences") {
  const TTField z = unit_direction(kDir, 2.0);
  const EquationData eq = surface_equation(coarse(), z);
  const Eigen::Index n = coarse().interior_count();
  const Vector u = Vector::Constant(n, 1.5) + 0.1 * coarse().rho_factor_unknowns().cwiseInverse();
  const NewtonWorkspace w = linearize(eq, u);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(rng);
  const Vector F0 = residual(eq, u);
  const Vector Jv = w.jacobian * v;
  double prev = 0;
  for (double eps : {1e-3, 1e-4, 1e-5}) {
    const double err = (residual(eq, u + eps * v) - F0 - eps * Jv).cwiseAbs().maxCoeff();
    if (prev > 0) CHECK(prev / err > 50);  // second order remainder
    prev = err;
  }
}

TEST_CASE("compact solver inverts the jacobian") {
  const TTField z = unit_direction(kDir);
  const EquationData eq = surface_equation(coarse(), z);
  const NewtonWorkspace w = linearize(eq, Vector::Constant(coarse().interior_count(), 1.2));
  const Vector b = Vector::LinSpaced(coarse().interior_count(), -1, 1);
  CompactSolver solver;
  const Vector x = solver.solve(w, b, 1e-12);
  CHECK((w.jacobian * x - b).norm() <= 1e-10 * b.norm());
  CHECK(solver.last_iterations() > 0);
}

TEST_CASE("continuation reaches every amplitude") {
  const TTField z = unit_direction(kDir);
  const ContinuationResult cr = continuation_solve(coarse(), z, {1, 2, 4});
  REQUIRE(cr.solutions.size() == 3);
  for (std::size_t i = 1; i < 3; ++i) CHECK(cr.solutions[i].maxU > cr.solutions[i - 1].maxU);
  CHECK(cr.solutions[2].amplitude == 4);
  CHECK(cr.solutions[2].zNorm == doctest::Approx(4 * z.supNorm));
}

TEST_CASE("a starved newton run reports its best iterate") {
  const TTField z = unit_direction(kDir, 3.0);
  SolverOptions o;
  o.maxIter = 1;
  try {
    newton_solve(coarse(), z, std::nullopt, o);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.best().u.size() == coarse().interior_count());
    CHECK(e.history().size() >= 1);
  }
}

TEST_CASE("sup-norm bounds hold with the loose constant") {
  std::vector<MoncriefSolution> sols;
  std::vector<std::array<double, 6>> coefs;
  for (const auto& c : {kDir, std::array<double, 6>{1, 0, 0, 0, 0, 0}}) {
    const TTField z = unit_direction(c);
    for (double a : {0.5, 1.0}) {
      std::array<double, 6> k = z.coefficients;
      for (double& v : k) v *= a;
      sols.push_back(newton_solve(coarse(), combine_tt(coarse(), basis(), k)));
      coefs.push_back(k);
    }
  }
  std::vector<BoundsCase> cases;
  for (std::size_t i = 0; i < sols.size(); ++i) cases.push_back({&sols[i], coefs[i], sols[i].zNorm});
  const BoundsReport r = check_bounds(coarse(), basis(), cases, std::sqrt(2.0));
  CHECK(r.pairsChecked == 6);
  CHECK(r.parallelPairs == 2);
  CHECK(r.pass());
  CHECK(r.minU >= 1 - 1e-3);
}

TEST_CASE("observed order fits a power law") {
  CHECK(observed_order({0.1, 0.05, 0.025}, {3e-2, 7.5e-3, 1.875e-3}) == doctest::Approx(2.0));
  CHECK(std::isnan(observed_order({0.1}, {1.0})));
}

TEST_CASE("round-off floor only raises the tolerance") {
  SolverOptions o;
  CHECK(effective_tolerance(o, 0.1, 1.0) == doctest::Approx(o.tol));
  CHECK(effective_tolerance(o, 1e-4, 10.0) > o.tol);
  o.roundoffFloor = false;
  CHECK(effective_tolerance(o, 1e-4, 10.0) == o.tol);
}

TEST_CASE("manufactured solution converges at second order") {
  const MmsStudy st = run_mms(0.3, {0.04, 0.02});
  REQUIRE(st.levels.size() == 2);
  CHECK(st.solveOrder > 1.8);
  CHECK(st.laplacianOrder > 1.8);
  CHECK(st.hessianOrder > 1.8);
  CHECK(st.levels[1].solveError < st.levels[0].solveError);
}
