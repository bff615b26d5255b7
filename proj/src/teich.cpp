#include "moncrief/teich.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace moncrief {

namespace {

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// |k|^2 = tr(G^{-1} K G^{-1} K) for symmetric G^{-1} = (i11, i12, i22)
double norm2(double i11, double i12, double i22, double k11, double k12, double k22) {
  const double m11 = i11 * k11 + i12 * k12, m12 = i11 * k12 + i12 * k22;
  const double m21 = i12 * k11 + i22 * k12, m22 = i12 * k12 + i22 * k22;
  return m11 * m11 + 2 * m12 * m21 + m22 * m22;
}

double curvature_error(const LatticeGrid& grid, const SymTensorField& full) {
  const Vector K = gauss_curvature(grid, full);
  return (K.array() + 0.5).abs().maxCoeff();
}

// Direct solve first; cold starts far from u = 1 fall back to continuation.
MoncriefSolution forward_solve(const SurfaceGrid& grid, const TTField& z, double amplitude, const SolverOptions& opts,
                               const std::optional<ScalarField>& u0) {
  std::optional<Vector> start;
  if (u0) start = u0->values();
  try {
    MoncriefSolution s = newton_solve(surface_equation(grid, z, amplitude), start, opts);
    s.amplitude = amplitude;
    return s;
  } catch (const ConvergenceError&) {
  } catch (const EllipticityError&) {
  }
  std::vector<double> schedule;
  for (double a = std::abs(amplitude); a > 0.25; a /= 2) schedule.push_back(a);
  std::reverse(schedule.begin(), schedule.end());
  const double sign = amplitude < 0 ? -1 : 1;
  const TTField zs = sign < 0 ? scaled_tt(z, -1) : z;
  ContinuationResult c = continuation_solve(grid, zs, schedule, opts);
  MoncriefSolution s = std::move(c.solutions.back());
  s.amplitude = amplitude;
  return s;
}

}  // namespace

TTField scaled_tt(const TTField& z, double s) {
  TTField out = z;
  for (auto& c : out.coefficients) c *= s;
  for (auto& p : out.phi) p *= s;
  out.tensor.t11 *= s;
  out.tensor.t12 *= s;
  out.tensor.t22 *= s;
  out.supNorm *= std::abs(s);
  out.tailEstimate *= std::abs(s);
  return out;
}

PsiResult psi(const SurfaceGrid& grid, const TTField& z, double amplitude, const SolverOptions& opts,
              const std::optional<ScalarField>& u0) {
  PsiResult r;
  r.solution = forward_solve(grid, z, amplitude, opts, u0);
  r.geometry = derive_geometry(grid, z, amplitude, r.solution);
  r.gamma.gamma = r.geometry.gamma;
  r.gamma.gammaFull = r.geometry.gammaFull;
  r.gamma.provenance = "forward";
  r.gamma.maxCurvatureError = curvature_error(grid, r.gamma.gammaFull);
  return r;
}

GammaMetric import_gamma(const SurfaceGrid& grid, const SymTensorField& gammaInterior, std::string provenance) {
  if (gammaInterior.size() != grid.unknownCount) throw DomainError("metric size does not match the grid");
  GammaMetric m;
  m.gamma = gammaInterior;
  m.gammaFull = grid.extend_tensor(gammaInterior);
  m.provenance = std::move(provenance);
  m.maxCurvatureError = curvature_error(grid, m.gammaFull);
  return m;
}

InverseIntermediate psi_inverse(const SurfaceGrid& grid, const GammaMetric& gm, const InverseOptions& opts) {
  const SymTensorField& gamma = gm.gamma;
  const Eigen::Index n = grid.unknownCount;
  if (gamma.size() != n) throw DomainError("metric size does not match the grid");
  InverseIntermediate r;
  Vector e(n), jac(n), s(n), kNormG(n);
  r.khat = SymTensorField::zero(n);
  r.gRecovered = SymTensorField::zero(n);
  r.xiRecovered = SymTensorField::zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double e2f = grid.rho[k].e2f;
    const double a = gamma.t11[k], b = gamma.t12[k], c = gamma.t22[k];
    const double det = a * c - b * b;
    if (!(a > 0 && det > 0)) {
      throw DomainError("metric is not positive definite at node " + std::to_string(k));
    }
    const double i11 = c / det, i12 = -b / det, i22 = a / det;
    e[k] = 0.5 * e2f * (i11 + i22);
    const double muGamma = std::sqrt(det);
    jac[k] = e2f / muGamma;
    // trace-free part of rho against gamma
    const double k11 = -0.5 * (e2f - e[k] * a);
    const double k12 = 0.5 * e[k] * b;
    const double k22 = -0.5 * (e2f - e[k] * c);
    r.khat.t11[k] = k11;
    r.khat.t12[k] = k12;
    r.khat.t22[k] = k22;
    const double kg = norm2(i11, i12, i22, k11, k12, k22);
    r.maxPositivityResidual =
        std::max(r.maxPositivityResidual, std::abs(e[k] * e[k] - 2 * kg - jac[k] * jac[k]));
    s[k] = e[k] + jac[k];
    const double g11 = s[k] * a, g12 = s[k] * b, g22 = s[k] * c;
    r.gRecovered.t11[k] = g11;
    r.gRecovered.t12[k] = g12;
    r.gRecovered.t22[k] = g22;
    // xi_a^c = (mu_g / mu_rho) g^{bc} khat_ab, lowered with rho
    const double ratio = s[k] * muGamma / e2f;
    const double gi11 = i11 / s[k], gi12 = i12 / s[k], gi22 = i22 / s[k];
    const double m11 = ratio * (k11 * gi11 + k12 * gi12);
    const double m12 = ratio * (k11 * gi12 + k12 * gi22);
    const double m21 = ratio * (k12 * gi11 + k22 * gi12);
    const double m22 = ratio * (k12 * gi12 + k22 * gi22);
    r.xiRecovered.t11[k] = e2f * 0.5 * (m11 - m22);
    r.xiRecovered.t12[k] = e2f * 0.5 * (m12 + m21);
    r.xiRecovered.t22[k] = -r.xiRecovered.t11[k];
    // k = khat + g / 2, so |k|_g^2 = |khat|_g^2 + 1/2
    kNormG[k] = kg / (s[k] * s[k]) + 0.5;
    r.maxKNormG = std::max(r.maxKNormG, kNormG[k]);
  }
  r.energyDensity = ScalarField(e);
  r.jacobianRatio = ScalarField(jac);
  r.lambdaInv = ScalarField(s);
  r.BRecovered = compute_B(grid, r.xiRecovered);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double b = r.BRecovered.values[k];
    r.maxBranchResidual = std::max(r.maxBranchResidual, std::abs(kNormG[k] - b / (b + 1)));
  }

  // Delta_rho u - u + B = 0, scaled by e^{2f}
  const Vector e2f = grid.rho_factor_unknowns();
  const auto assemble = [&](const StencilOps& ops) {
    SparseMatrix A = (ops.d11 + ops.d22) * grid.extension;
    for (Eigen::Index k = 0; k < n; ++k) A.coeffRef(k, k) -= e2f[k];
    A.makeCompressed();
    return A;
  };
  const StencilOps& ops = opts.compactStencils ? grid.compact : grid.ops;
  const SparseMatrix A = assemble(ops);
  const SparseMatrix P = assemble(grid.compact);
  const Vector rhs = -e2f.cwiseProduct(r.BRecovered.values.values());
  CompactSolver linear;
  const Vector u = linear.solve(A, P, rhs, 1e-12);
  r.linearIterations = linear.last_iterations();
  r.uRecovered = ScalarField(u);
  r.linearResidual = max_abs((A * u - rhs).cwiseQuotient(e2f));

  const SymTensorField H = hessian_rho(grid, grid.extend(u), ops);
  r.zRecovered = SymTensorField::zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    r.zRecovered.t11[k] = r.xiRecovered.t11[k] + 0.5 * (H.t11[k] - H.t22[k]);
    r.zRecovered.t12[k] = r.xiRecovered.t12[k] + H.t12[k];
    r.zRecovered.t22[k] = -r.zRecovered.t11[k];
  }
  r.zRecoveredFull = grid.extend_tensor(r.zRecovered);

  const MetricData g = compute_g(grid, r.xiRecovered, r.BRecovered);
  r.harmonicity = harmonicity_residual(grid, g.gFull).maxNorm;
  return r;
}

double metric_distance(const LatticeGrid& grid, const SymTensorField& a, const SymTensorField& b) {
  double d = 0;
  const Eigen::Index n = std::min(a.size(), b.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    const double e2f = grid.rho[k].e2f;
    d = std::max({d, std::abs(a.t11[k] - b.t11[k]) / e2f, std::abs(a.t12[k] - b.t12[k]) / e2f,
                  std::abs(a.t22[k] - b.t22[k]) / e2f});
  }
  return d;
}

RoundTripReport round_trip(const SurfaceGrid& grid, const TTField& z, double amplitude, const PsiResult& forward,
                           const InverseOptions& inv) {
  RoundTripReport r;
  r.inverse = psi_inverse(grid, forward.gamma, inv);
  r.zNorm = std::abs(amplitude) * z.supNorm;
  const Eigen::Index n = grid.unknownCount;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double e2f = grid.rho[k].e2f;
    const double d11 = r.inverse.zRecovered.t11[k] - amplitude * z.tensor.t11[k];
    const double d12 = r.inverse.zRecovered.t12[k] - amplitude * z.tensor.t12[k];
    r.absoluteError = std::max(r.absoluteError, tt_norm(e2f, d11, d12));
  }
  r.relativeError = r.zNorm > 0 ? r.absoluteError / r.zNorm : r.absoluteError;
  // e^{-2 lambda} on the inverse route
  const Vector lamInv = (-0.5 * r.inverse.lambdaInv.values().array().log()).matrix();
  r.lambdaMismatch = max_abs(lamInv - forward.geometry.lambda.lambda.values());
  r.bMismatch = max_abs(r.inverse.BRecovered.values.values() - forward.geometry.B.values.values());
  r.recoveredTT = verify_tt(grid, r.inverse.zRecoveredFull);
  return r;
}

RoundTripReport round_trip(const SurfaceGrid& grid, const TTField& z, double amplitude, const SolverOptions& opts,
                           const InverseOptions& inv) {
  return round_trip(grid, z, amplitude, psi(grid, z, amplitude, opts), inv);
}

ScanTable properness_scan(const SurfaceGrid& grid, const TTField& z, const std::vector<double>& scales,
                          const SolverOptions& opts) {
  if (scales.empty()) throw DomainError("scan needs at least one scale");
  for (std::size_t i = 1; i < scales.size(); ++i) {
    if (!(scales[i] > scales[i - 1])) throw DomainError("scan scales must be strictly ascending");
  }
  if (!(z.supNorm > 0)) throw DomainError("scan direction is zero");
  ScanTable t;
  t.areaRho = integrate_rho_full(grid, Vector::Ones(grid.node_count()));
  std::vector<double> positive;
  for (double s : scales) {
    if (s > 0) positive.push_back(s);
  }
  std::vector<MoncriefSolution> sols;
  try {
    sols = continuation_solve(grid, z, positive, opts).solutions;
  } catch (const ConvergenceError& err) {
    t.failure = err.what();
  } catch (const EllipticityError& err) {
    t.failure = err.what();
  }
  std::size_t next = 0;
  for (double s : scales) {
    ScanRow row;
    row.scale = s;
    row.supNorm = s * z.supNorm;
    BField B;
    if (s == 0) {
      // u = 1 solves the trivial instance exactly
      const ScalarField one = ScalarField::constant(grid.unknownCount, 1.0);
      B = compute_B(grid, SymTensorField::zero(grid.unknownCount));
      const AreaEnergy a = area_energy(grid, one, B);
      row.energy = a.energy;
      row.areaG = a.areaG;
    } else {
      if (next >= sols.size()) break;
      const MoncriefSolution& sol = sols[next++];
      B = compute_B(grid, compute_xi(grid, z, sol.u, s));
      const AreaEnergy a = area_energy(grid, sol.u, B);
      row.energy = a.energy;
      row.areaG = a.areaG;
    }
    row.minB = B.min;
    row.maxB = B.max;
    t.rows.push_back(row);
    t.largestScale = s;
  }
  t.increasing = true;
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    if (!(t.rows[i].energy > t.rows[i - 1].energy)) t.increasing = false;
  }
  // affine envelopes on the top half
  const std::size_t m = t.rows.size();
  const std::size_t first = m / 2;
  if (m - first >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double cnt = static_cast<double>(m - first);
    t.minRatio = std::numeric_limits<double>::infinity();
    t.maxRatio = 0;
    for (std::size_t i = first; i < m; ++i) {
      const double x = t.rows[i].supNorm, y = t.rows[i].energy;
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      if (x > 0) {
        t.minRatio = std::min(t.minRatio, y / x);
        t.maxRatio = std::max(t.maxRatio, y / x);
      }
    }
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    t.lowerSlope = t.upperSlope = slope;
    double lo = -std::numeric_limits<double>::infinity(), hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = first; i < m; ++i) {
      const double x = t.rows[i].supNorm, y = t.rows[i].energy;
      lo = std::max(lo, slope * x - y);
      hi = std::max(hi, y - slope * x);
    }
    t.lowerIntercept = lo;
    t.upperIntercept = hi;
  }
  return t;
}

}  // namespace moncrief
