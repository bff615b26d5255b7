#include "moncrief/geometry.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace moncrief {

namespace {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using Triplet = Eigen::Triplet<double>;

// offsets into LatticeGrid::stencil, index (di + 1) * 3 + (dj + 1)
constexpr int kSW = 0, kW = 1, kNW = 2, kS = 3, kC = 4, kN = 5, kSE = 6, kE = 7, kNE = 8;

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

struct Sym2 {
  double a11, a12, a22;
  [[nodiscard]] double det() const { return a11 * a22 - a12 * a12; }
  [[nodiscard]] Sym2 inverse() const {
    const double d = det();
    if (!(d > 0) || !std::isfinite(d)) throw InternalError("singular 2x2 metric");
    return {a22 / d, -a12 / d, a11 / d};
  }
  [[nodiscard]] double min_eigenvalue() const {
    const double m = 0.5 * (a11 + a22);
    const double r = std::hypot(0.5 * (a11 - a22), a12);
    return m - r;
  }
};

Sym2 at(const SymTensorField& t, Eigen::Index k) { return {t.t11[k], t.t12[k], t.t22[k]}; }

// Centred first derivatives of the three components of a tensor on all nodes.
struct TensorGradient {
  Vector d1_11, d1_12, d1_22, d2_11, d2_12, d2_22;
};

TensorGradient tensor_gradient(const LatticeGrid& grid, const SymTensorField& full) {
  const StencilOps& o = grid.ops;
  return {o.d1 * full.t11, o.d1 * full.t12, o.d1 * full.t22, o.d2 * full.t11, o.d2 * full.t12, o.d2 * full.t22};
}

// Contracted Christoffel symbols g^{ab} Gamma^c_ab at interior nodes.
void contracted_christoffel(const LatticeGrid& grid, const SymTensorField& full, Vector& v1, Vector& v2) {
  const TensorGradient d = tensor_gradient(grid, full);
  const Eigen::Index n = grid.unknownCount;
  v1.resize(n);
  v2.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Sym2 gi = at(full, k).inverse();
    // first-kind symbols [ab, c] = (d_a g_bc + d_b g_ac - d_c g_ab) / 2
    const double g11_1 = d.d1_11[k], g11_2 = d.d2_11[k];
    const double g12_1 = d.d1_12[k], g12_2 = d.d2_12[k];
    const double g22_1 = d.d1_22[k], g22_2 = d.d2_22[k];
    const double c11_1 = 0.5 * g11_1;
    const double c11_2 = g12_1 - 0.5 * g11_2;
    const double c12_1 = 0.5 * g11_2;
    const double c12_2 = 0.5 * g22_1;
    const double c22_1 = g12_2 - 0.5 * g22_1;
    const double c22_2 = 0.5 * g22_2;
    // contract with g^{ab}: w_c = g^{ab} [ab, c]
    const double w1 = gi.a11 * c11_1 + 2 * gi.a12 * c12_1 + gi.a22 * c22_1;
    const double w2 = gi.a11 * c11_2 + 2 * gi.a12 * c12_2 + gi.a22 * c22_2;
    v1[k] = gi.a11 * w1 + gi.a12 * w2;
    v2[k] = gi.a12 * w1 + gi.a22 * w2;
  }
}

// rho goes through the same ghost interpolation as g, so g = c rho gives V = 0 exactly
SymTensorField rho_tensor_full(const SurfaceGrid& grid) {
  const Vector e = grid.rho_factor_unknowns();
  return grid.extend_tensor({e, Vector::Zero(e.size()), e});
}

}  // namespace

SymTensorField compute_xi(const LatticeGrid& grid, const SymTensorField& zInterior, const Vector& uFull) {
  const SymTensorField H = hessian_rho(grid, uFull);
  const Eigen::Index n = grid.unknownCount;
  SymTensorField xi = SymTensorField::zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double rhoLap = 0.5 * (H.t11[k] + H.t22[k]);  // rho_11 Delta_rho u / 2
    xi.t11[k] = zInterior.t11[k] - H.t11[k] + rhoLap;
    xi.t22[k] = zInterior.t22[k] - H.t22[k] + rhoLap;
    xi.t12[k] = zInterior.t12[k] - H.t12[k];
  }
  return xi;
}

SymTensorField compute_xi(const SurfaceGrid& grid, const TTField& z, const ScalarField& u, double amplitude) {
  SymTensorField zi = z.interior(grid.unknownCount);
  zi.t11 *= amplitude;
  zi.t12 *= amplitude;
  zi.t22 *= amplitude;
  return compute_xi(grid, zi, grid.extend(u));
}

BField compute_B(const LatticeGrid& grid, const SymTensorField& xi) {
  const Eigen::Index n = xi.size();
  Vector b(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double e2f = grid.rho[k].e2f;
    // |xi|^2 for a general symmetric tensor; the trace part vanishes up to round-off
    const double n2 = (xi.t11[k] * xi.t11[k] + 2 * xi.t12[k] * xi.t12[k] + xi.t22[k] * xi.t22[k]) / (e2f * e2f);
    b[k] = std::sqrt(1 + 2 * n2);
  }
  BField out;
  out.values = ScalarField(b);
  if (n > 0) {
    out.min = b.minCoeff(&out.argmin);
    out.max = b.maxCoeff();
  }
  return out;
}

namespace {

// g^{ab} from (1 + B) g^{ab} = -2 xi^{ab} + B rho^{ab} and its inverse
void metric_at(double e2f, double x11, double x12, double x22, double b, Sym2& inv, Sym2& g) {
  if (!(b >= 1 - 1e-12)) throw InternalError("B below one");
  const double em2 = 1 / e2f;
  const double em4 = em2 * em2;
  inv = {(-2 * em4 * x11 + b * em2) / (1 + b), -2 * em4 * x12 / (1 + b), (-2 * em4 * x22 + b * em2) / (1 + b)};
  g = inv.inverse();
}

}  // namespace

MetricData compute_g(const LatticeGrid& grid, const SymTensorField& xi, const BField& B) {
  const Eigen::Index n = xi.size();
  MetricData m{SymTensorField::zero(n), SymTensorField::zero(n), {}, {}};
  Vector ratio(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double e2f = grid.rho[k].e2f;
    Sym2 inv{}, g{};
    metric_at(e2f, xi.t11[k], xi.t12[k], xi.t22[k], B.values[k], inv, g);
    m.inverse.t11[k] = inv.a11;
    m.inverse.t12[k] = inv.a12;
    m.inverse.t22[k] = inv.a22;
    m.g.t11[k] = g.a11;
    m.g.t12[k] = g.a12;
    m.g.t22[k] = g.a22;
    ratio[k] = std::sqrt(g.det()) / e2f;
  }
  m.muRatio = ScalarField(ratio);
  return m;
}

MetricData compute_g(const SurfaceGrid& grid, const SymTensorField& xi, const BField& B) {
  MetricData m = compute_g(static_cast<const LatticeGrid&>(grid), xi, B);
  const SymTensorField xf = grid.extend_tensor(xi);
  const Eigen::Index all = grid.node_count();
  m.gFull = SymTensorField::zero(all);
  m.gFull.t11.head(grid.unknownCount) = m.g.t11;
  m.gFull.t12.head(grid.unknownCount) = m.g.t12;
  m.gFull.t22.head(grid.unknownCount) = m.g.t22;
  for (Eigen::Index k = grid.unknownCount; k < all; ++k) {
    const double e2f = grid.rho[k].e2f;
    const double b = std::sqrt(1 + 2 * (xf.t11[k] * xf.t11[k] + 2 * xf.t12[k] * xf.t12[k] + xf.t22[k] * xf.t22[k]) /
                                       (e2f * e2f));
    Sym2 inv{}, g{};
    metric_at(e2f, xf.t11[k], xf.t12[k], xf.t22[k], b, inv, g);
    m.gFull.t11[k] = g.a11;
    m.gFull.t12[k] = g.a12;
    m.gFull.t22[k] = g.a22;
  }
  return m;
}

MetricIdentityReport metric_identities(const LatticeGrid& grid, const SymTensorField& xi, const BField& B,
                                       const MetricData& metric) {
  MetricIdentityReport r;
  r.minEigenvalueG = r.minEigenvalueTwoGMinusRho = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < xi.size(); ++k) {
    const double e2f = grid.rho[k].e2f;
    const double b = B.values[k];
    r.maxTrace = std::max(r.maxTrace, std::abs(xi.t11[k] + xi.t22[k]) / e2f);
    r.maxDensity = std::max(r.maxDensity, std::abs(metric.muRatio[k] - (1 + b)) / (1 + b));
    // rho_ab = B/(1+B) g_ab - 2/(1+B) xi_a^c g_cb with xi_a^c = e^{-2f} xi_ac
    const Sym2 g = at(metric.g, k);
    const double x11 = xi.t11[k] / e2f, x12 = xi.t12[k] / e2f, x22 = xi.t22[k] / e2f;
    const double r11 = b / (1 + b) * g.a11 - 2 / (1 + b) * (x11 * g.a11 + x12 * g.a12);
    const double r12 = b / (1 + b) * g.a12 - 2 / (1 + b) * (x11 * g.a12 + x12 * g.a22);
    const double r21 = b / (1 + b) * g.a12 - 2 / (1 + b) * (x12 * g.a11 + x22 * g.a12);
    const double r22 = b / (1 + b) * g.a22 - 2 / (1 + b) * (x12 * g.a12 + x22 * g.a22);
    const double err = std::max({std::abs(r11 - e2f), std::abs(r12), std::abs(r21), std::abs(r22 - e2f)}) / e2f;
    r.maxReconstruction = std::max(r.maxReconstruction, err);
    r.minEigenvalueG = std::min(r.minEigenvalueG, Sym2{g.a11 / e2f, g.a12 / e2f, g.a22 / e2f}.min_eigenvalue());
    const Sym2 d{(2 * g.a11 - e2f) / e2f, 2 * g.a12 / e2f, (2 * g.a22 - e2f) / e2f};
    r.minEigenvalueTwoGMinusRho = std::min(r.minEigenvalueTwoGMinusRho, d.min_eigenvalue());
  }
  return r;
}

AreaEnergy area_energy(const SurfaceGrid& grid, const ScalarField& u, const BField& B) {
  AreaEnergy a;
  const Vector ones = Vector::Ones(grid.unknownCount);
  a.areaRho = integrate_rho(grid, ScalarField(ones));
  a.areaG = integrate_rho(grid, ScalarField((ones + B.values.values()).eval()));
  a.energy = a.areaG - a.areaRho;
  a.integralU = integrate_rho(grid, u);
  a.identityResidual = std::abs(a.energy - a.integralU);
  return a;
}

EnergyDensities energy_densities(const LatticeGrid& grid, const MetricData& metric) {
  const Eigen::Index n = metric.g.size();
  Vector e(n), hol(n), anti(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    e[k] = 0.5 * grid.rho[k].e2f * (metric.inverse.t11[k] + metric.inverse.t22[k]);
    const double jac = 1 / metric.muRatio[k];
    hol[k] = 0.5 * (e[k] + jac);
    anti[k] = 0.5 * (e[k] - jac);
  }
  return {ScalarField(hol), ScalarField(anti), ScalarField(e)};
}

Vector gauss_curvature(const LatticeGrid& grid, const SymTensorField& full) {
  const StencilOps& o = grid.ops;
  const Vector& E = full.t11;
  const Vector& F = full.t12;
  const Vector& G = full.t22;
  const Vector Eu = o.d1 * E, Ev = o.d2 * E, Fu = o.d1 * F, Fv = o.d2 * F, Gu = o.d1 * G, Gv = o.d2 * G;
  const Vector Evv = o.d22 * E, Guu = o.d11 * G, Fuv = o.d12 * F;
  const Eigen::Index n = grid.unknownCount;
  Vector K(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Matrix3d a, b;
    a << -0.5 * Evv[k] + Fuv[k] - 0.5 * Guu[k], 0.5 * Eu[k], Fu[k] - 0.5 * Ev[k],  //
        Fv[k] - 0.5 * Gu[k], E[k], F[k],                                           //
        0.5 * Gv[k], F[k], G[k];
    b << 0, 0.5 * Ev[k], 0.5 * Gu[k],  //
        0.5 * Ev[k], E[k], F[k],       //
        0.5 * Gu[k], F[k], G[k];
    const double det = E[k] * G[k] - F[k] * F[k];
    K[k] = (a.determinant() - b.determinant()) / (det * det);
  }
  return K;
}

ScalarField curvature_g(const LatticeGrid& grid, const SymTensorField& gFull) {
  return ScalarField((2 * gauss_curvature(grid, gFull)).eval());
}

SparseMatrix laplace_beltrami(const LatticeGrid& grid, const SymTensorField& gFull) {
  const Eigen::Index all = grid.node_count();
  // A^{ab} = mu g^{ab} on all nodes
  Vector A11(all), A12(all), A22(all), mu(all);
  for (Eigen::Index k = 0; k < all; ++k) {
    const Sym2 g = at(gFull, k);
    const Sym2 inv = g.inverse();
    mu[k] = std::sqrt(g.det());
    A11[k] = mu[k] * inv.a11;
    A12[k] = mu[k] * inv.a12;
    A22[k] = mu[k] * inv.a22;
  }
  const double h2 = grid.h * grid.h;
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(grid.unknownCount) * 13);
  for (Eigen::Index k = 0; k < grid.unknownCount; ++k) {
    const auto& s = grid.stencil[k];
    const auto r = static_cast<int>(k);
    const double w = 1 / (mu[k] * h2);
    const double aE = 0.5 * (A11[k] + A11[s[kE]]);
    const double aW = 0.5 * (A11[k] + A11[s[kW]]);
    const double aN = 0.5 * (A22[k] + A22[s[kN]]);
    const double aS = 0.5 * (A22[k] + A22[s[kS]]);
    t.emplace_back(r, s[kE], w * aE);
    t.emplace_back(r, s[kW], w * aW);
    t.emplace_back(r, s[kN], w * aN);
    t.emplace_back(r, s[kS], w * aS);
    t.emplace_back(r, s[kC], -w * (aE + aW + aN + aS));
    // d_1(A12 d_2 u) + d_2(A12 d_1 u), centred
    const double q = 0.25 * w;
    const double bE = A12[s[kE]], bW = A12[s[kW]], bN = A12[s[kN]], bS = A12[s[kS]];
    t.emplace_back(r, s[kNE], q * (bE + bN));
    t.emplace_back(r, s[kSE], q * (-bE - bS));
    t.emplace_back(r, s[kNW], q * (-bW - bN));
    t.emplace_back(r, s[kSW], q * (bW + bS));
  }
  SparseMatrix L(grid.unknownCount, all);
  L.setFromTriplets(t.begin(), t.end());
  return L;
}

LambdaSolution solve_lambda(const SurfaceGrid& grid, const MetricData& metric, const LambdaOptions& opts) {
  const Eigen::Index n = grid.unknownCount;
  const SparseMatrix L = laplace_beltrami(grid, metric.gFull);
  const SparseMatrix A = L * grid.extension;
  const Vector jac = metric.muRatio.values().cwiseInverse();
  // constant-B guess makes the right side vanish pointwise
  Vector lam = (-0.5 * metric.muRatio.values().array().log()).matrix();
  const auto residual = [&](const Vector& x) -> Vector {
    return A * x - 0.5 * ((2 * x).array().exp().matrix() - jac);
  };
  Vector F = residual(lam);
  double norm = max_abs(F);
  // round-off of the operator itself
  const double floor = 2 * std::numeric_limits<double>::epsilon() * 8 / (grid.h * grid.h) *
                       std::max(1.0, max_abs(lam)) * (metric.muRatio.values().cwiseInverse().maxCoeff());
  const double tol = std::max(opts.tol, floor);
  LambdaSolution out;
  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
  while (norm > tol && out.iterations < opts.maxIter) {
    ColMatrix J = A;
    for (Eigen::Index k = 0; k < n; ++k) J.coeffRef(k, k) -= std::exp(2 * lam[k]);
    J.makeCompressed();
    if (!analyzed) {
      lu.analyzePattern(J);
      analyzed = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success) throw LinearSolveError("conformal factor factorization failed");
    const Vector delta = lu.solve(-F);
    double step = 1;
    bool accepted = false;
    while (step >= 1e-4) {
      const Vector trial = lam + step * delta;
      const Vector Ft = residual(trial);
      if (max_abs(Ft) < norm) {
        lam = trial;
        F = Ft;
        norm = max_abs(Ft);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++out.iterations;
    if (!accepted) break;
  }
  if (norm > tol) {
    throw NonConvergenceError("conformal factor equation stalled at residual " + std::to_string(norm));
  }
  out.lambda = ScalarField(lam);
  out.residual = norm;
  return out;
}

SymTensorField conformal_rescale(const SymTensorField& g, const Vector& lambda) {
  const Vector s = (2 * lambda).array().exp().matrix();
  return {s.cwiseProduct(g.t11), s.cwiseProduct(g.t12), s.cwiseProduct(g.t22)};
}

HarmonicityReport harmonicity_residual(const SurfaceGrid& grid, const SymTensorField& g) {
  HarmonicityReport r;
  Vector g1, g2;
  contracted_christoffel(grid, g, g1, g2);
  const SymTensorField rho = rho_tensor_full(grid);
  // Gamma(rho) contracted with g^{ab}: recompute the first-kind symbols of rho
  const TensorGradient d = tensor_gradient(grid, rho);
  const Eigen::Index n = grid.unknownCount;
  r.v1.resize(n);
  r.v2.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Sym2 gi = at(g, k).inverse();
    const double e2f = rho.t11[k];
    const double ri = 1 / e2f;
    // rho = e^{2f} delta: [ab, c] from the sampled e^{2f}
    const double c11_1 = 0.5 * d.d1_11[k], c11_2 = -0.5 * d.d2_11[k];
    const double c12_1 = 0.5 * d.d2_11[k], c12_2 = 0.5 * d.d1_22[k];
    const double c22_1 = -0.5 * d.d1_22[k], c22_2 = 0.5 * d.d2_22[k];
    const double w1 = gi.a11 * c11_1 + 2 * gi.a12 * c12_1 + gi.a22 * c22_1;
    const double w2 = gi.a11 * c11_2 + 2 * gi.a12 * c12_2 + gi.a22 * c22_2;
    r.v1[k] = g1[k] - ri * w1;
    r.v2[k] = g2[k] - ri * w2;
    r.maxNorm = std::max(r.maxNorm, std::sqrt(e2f) * std::hypot(r.v1[k], r.v2[k]));
  }
  return r;
}

HopfData hopf_differential(const LatticeGrid& grid, const MetricData& metric) {
  const Eigen::Index n = metric.g.size();
  HopfData out;
  out.phi.resize(static_cast<std::size_t>(n));
  out.normSquared.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    // in coordinates w = (g / sigma)^{1/2} x the metric g is sigma |dw|^2 and
    // rho becomes e^{2f} sigma g^{-1}
    const double sigma = std::sqrt(at(metric.g, k).det());
    const double s = grid.rho[k].e2f * sigma;
    const double r11 = s * metric.inverse.t11[k], r12 = s * metric.inverse.t12[k], r22 = s * metric.inverse.t22[k];
    const Complex phi(0.25 * (r11 - r22), -0.5 * r12);
    out.phi[static_cast<std::size_t>(k)] = phi;
    out.normSquared[k] = std::norm(phi) / (sigma * sigma);
  }
  return out;
}

BIdentityReport b_identities(const SurfaceGrid& grid, const MetricData& metric, const BField& B,
                             const EnergyDensities& densities, const HopfData& hopf, double zNorm) {
  BIdentityReport r;
  const Eigen::Index n = grid.unknownCount;
  const Vector bFull = grid.extend(B.values);
  const SparseMatrix L = laplace_beltrami(grid, metric.gFull);
  const Vector lapB = L * bFull;
  const Vector b1 = grid.ops.d1 * bFull;
  const Vector b2 = grid.ops.d2 * bFull;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double b = B.values[k];
    const Sym2 gi = at(metric.inverse, k);
    const double grad2 = gi.a11 * b1[k] * b1[k] + 2 * gi.a12 * b1[k] * b2[k] + gi.a22 * b2[k] * b2[k];
    r.maxGradLogB = std::max(r.maxGradLogB, std::sqrt(std::max(grad2, 0.0)) / b);
    const double expected = 0.25 * (b - 1) / (b + 1);
    r.maxHopfResidual = std::max(r.maxHopfResidual, std::abs(hopf.normSquared[k] - expected));
    r.maxDensityProduct =
        std::max(r.maxDensityProduct, std::abs(densities.holomorphic[k] * densities.antiholomorphic[k] - hopf.normSquared[k]));
    if (b > 1.05) {
      ++r.subgridNodes;
      const double res = lapB[k] - (2 * b / (b * b - 1) * grad2 - (b - 1));
      r.maxEquationResidual = std::max(r.maxEquationResidual, std::abs(res));
    }
  }
  r.vacuous = r.subgridNodes == 0;
  r.growthExponent = std::log(std::max(B.max, 1.0)) / (1 + zNorm);
  return r;
}

DiameterEstimate graph_diameter(const SurfaceGrid& grid, const SymTensorField& gFull, int sweeps) {
  const Eigen::Index all = grid.node_count();
  std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(all));
  const auto length = [&](Eigen::Index a, Eigen::Index b, Complex d) {
    const double m11 = 0.5 * (gFull.t11[a] + gFull.t11[b]);
    const double m12 = 0.5 * (gFull.t12[a] + gFull.t12[b]);
    const double m22 = 0.5 * (gFull.t22[a] + gFull.t22[b]);
    return std::sqrt(m11 * d.real() * d.real() + 2 * m12 * d.real() * d.imag() + m22 * d.imag() * d.imag());
  };
  const auto link = [&](Eigen::Index a, Eigen::Index b, double w) {
    adj[static_cast<std::size_t>(a)].emplace_back(static_cast<int>(b), w);
    adj[static_cast<std::size_t>(b)].emplace_back(static_cast<int>(a), w);
  };
  for (Eigen::Index k = 0; k < grid.unknownCount; ++k) {
    for (int s : {kE, kN, kNE, kSE}) {
      const int m = grid.stencil[k][s];
      link(k, m, length(k, m, grid.nodes[m] - grid.nodes[k]));
    }
    // links to passive nodes westwards are not covered by a neighbour's eastward links
    for (int s : {kW, kS, kNW, kSW}) {
      const int m = grid.stencil[k][s];
      if (m >= grid.unknownCount) link(k, m, length(k, m, grid.nodes[m] - grid.nodes[k]));
    }
  }
  // tie each ghost to the interior node nearest its reduced image
  for (std::size_t q = 0; q < grid.ghostLinks.size(); ++q) {
    const Complex p = grid.ghostLinks[q].reduced.value();
    const int i0 = static_cast<int>(std::lround(p.real() / grid.h));
    const int j0 = static_cast<int>(std::lround(p.imag() / grid.h));
    int best = -1;
    double bestDist = std::numeric_limits<double>::infinity();
    for (int di = -2; di <= 2; ++di) {
      for (int dj = -2; dj <= 2; ++dj) {
        const int m = grid.find(i0 + di, j0 + dj);
        if (m < 0 || m >= grid.unknownCount) continue;
        const double dist = std::abs(grid.nodes[m] - p);
        if (dist < bestDist) {
          bestDist = dist;
          best = m;
        }
      }
    }
    if (best < 0) continue;
    const Complex d = grid.nodes[best] - p;
    const double w = std::sqrt(gFull.t11[best] * d.real() * d.real() + 2 * gFull.t12[best] * d.real() * d.imag() +
                               gFull.t22[best] * d.imag() * d.imag());
    link(grid.unknownCount + static_cast<Eigen::Index>(q), best, w);
  }
  // eccentricity measured over interior nodes
  const auto dijkstra = [&](int source, int& far) {
    std::vector<double> dist(static_cast<std::size_t>(all), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[static_cast<std::size_t>(source)] = 0;
    pq.emplace(0.0, source);
    while (!pq.empty()) {
      const auto [d, v] = pq.top();
      pq.pop();
      if (d > dist[static_cast<std::size_t>(v)]) continue;
      for (const auto& [m, w] : adj[static_cast<std::size_t>(v)]) {
        if (d + w < dist[static_cast<std::size_t>(m)]) {
          dist[static_cast<std::size_t>(m)] = d + w;
          pq.emplace(d + w, m);
        }
      }
    }
    double ecc = 0;
    far = source;
    for (Eigen::Index k = 0; k < grid.unknownCount; ++k) {
      if (dist[static_cast<std::size_t>(k)] > ecc) {
        ecc = dist[static_cast<std::size_t>(k)];
        far = static_cast<int>(k);
      }
    }
    return ecc;
  };
  DiameterEstimate out;
  int source = 0;
  for (int s = 0; s < std::max(1, sweeps); ++s) {
    int far = 0;
    const double ecc = dijkstra(source, far);
    if (s == 0) out.upper = 2 * ecc;
    out.lower = std::max(out.lower, ecc);
    source = far;
  }
  return out;
}

double diameter_bound(double injRho, double zNorm, double areaRho) {
  return 4 * std::numbers::sqrt2 / (std::numbers::pi * injRho) * (2 + zNorm) * areaRho;
}

DerivedGeometry derive_geometry(const SurfaceGrid& grid, const TTField& z, double amplitude,
                                const MoncriefSolution& solution, const LambdaOptions& opts) {
  DerivedGeometry d;
  d.zNorm = std::abs(amplitude) * z.supNorm;
  d.xi = compute_xi(grid, z, solution.u, amplitude);
  d.B = compute_B(grid, d.xi);
  d.metric = compute_g(grid, d.xi, d.B);
  d.identities = metric_identities(grid, d.xi, d.B, d.metric);
  d.lambda = solve_lambda(grid, d.metric, opts);
  d.gamma = conformal_rescale(d.metric.g, d.lambda.lambda.values());
  d.gammaFull = conformal_rescale(d.metric.gFull, grid.extend(d.lambda.lambda));
  d.area = area_energy(grid, solution.u, d.B);
  d.densities = energy_densities(grid, d.metric);
  d.hopf = hopf_differential(grid, d.metric);
  return d;
}

}  // namespace moncrief
