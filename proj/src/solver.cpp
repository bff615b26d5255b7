#include "moncrief/solver.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>

namespace moncrief {

namespace {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

struct Pointwise {
  Vector X, Y, S;
};

Pointwise pointwise(const EquationData& eq, const Derivatives& d) {
  const LatticeGrid& g = *eq.grid;
  const Eigen::Index n = g.unknownCount;
  Pointwise p{Vector(n), Vector(n), Vector(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const ConformalData& c = g.rho[k];
    // H11 - H22 = u11 - u22 - 2 f1 u1 + 2 f2 u2, H12 = u12 - f1 u2 - f2 u1
    const double diff = d.d11[k] - d.d22[k] - 2 * c.f1 * d.d1[k] + 2 * c.f2 * d.d2[k];
    const double h12 = d.d12[k] - c.f1 * d.d2[k] - c.f2 * d.d1[k];
    p.X[k] = 2 * eq.z11[k] - diff;
    p.Y[k] = 2 * eq.z12[k] - 2 * h12;
    p.S[k] = std::sqrt(c.e2f * c.e2f + p.X[k] * p.X[k] + p.Y[k] * p.Y[k]);
  }
  return p;
}

Vector residual_from(const EquationData& eq, const Vector& u, const Derivatives& d, const Pointwise& p) {
  const LatticeGrid& g = *eq.grid;
  Vector F(g.unknownCount);
  for (Eigen::Index k = 0; k < g.unknownCount; ++k) F[k] = d.d11[k] + d.d22[k] - g.rho[k].e2f * u[k] + p.S[k];
  if (eq.source.size() > 0) F -= eq.source;
  return F;
}

}  // namespace

CompactSolver::CompactSolver() : lu_(std::make_unique<Lu>()) {}
CompactSolver::~CompactSolver() = default;

Vector CompactSolver::solve(const NewtonWorkspace& w, const Vector& rhs, double relTol) {
  return solve(w.jacobian, w.preconditioner, rhs, relTol);
}

Vector CompactSolver::solve(const SparseMatrix& A, const SparseMatrix& P, const Vector& rhs, double relTol) {
  ColMatrix pc = P;
  pc.makeCompressed();
  if (!analyzed_ || pc.nonZeros() != pattern_) {
    lu_->analyzePattern(pc);
    analyzed_ = true;
    pattern_ = pc.nonZeros();
  }
  lu_->factorize(pc);
  if (lu_->info() != Eigen::Success) throw LinearSolveError("sparse LU factorization failed: " + lu_->lastErrorMessage());
  // right-preconditioned GMRES(30) on A with the compact LU
  const double target = relTol * std::max(rhs.norm(), 1e-300);
  Vector x = Vector::Zero(rhs.size());
  Vector r = rhs;
  constexpr int kRestart = 30;
  lastIterations_ = 0;
  for (int cycle = 0; cycle < 20 && r.norm() > target; ++cycle) {
    const double beta = r.norm();
    Eigen::MatrixXd V(rhs.size(), kRestart + 1);
    Eigen::MatrixXd Z(rhs.size(), kRestart);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(kRestart + 1, kRestart);
    V.col(0) = r / beta;
    int m = 0;
    Eigen::VectorXd y;
    for (; m < kRestart; ++m) {
      Z.col(m) = lu_->solve(V.col(m));
      Vector q = A * Z.col(m);
      for (int i = 0; i <= m; ++i) {
        H(i, m) = V.col(i).dot(q);
        q -= H(i, m) * V.col(i);
      }
      H(m + 1, m) = q.norm();
      ++lastIterations_;
      Eigen::VectorXd e = Eigen::VectorXd::Zero(m + 2);
      e[0] = beta;
      y = H.topLeftCorner(m + 2, m + 1).colPivHouseholderQr().solve(e);
      const double res = (e - H.topLeftCorner(m + 2, m + 1) * y).norm();
      if (H(m + 1, m) <= 1e-300 || res <= target) {
        ++m;
        break;
      }
      V.col(m + 1) = q / H(m + 1, m);
    }
    x += Z.leftCols(m) * y.head(m);
    r = rhs - A * x;
  }
  if (!(r.norm() <= 10 * target)) {
    throw LinearSolveError("preconditioned GMRES stalled at relative residual " + std::to_string(r.norm() / rhs.norm()));
  }
  return x;
}

namespace {

void fill_stats(MoncriefSolution& s, const NewtonWorkspace& w) {
  s.minFr = w.minFr;
  s.minFt = w.minFt;
  s.maxAbsFs = w.maxAbsFs;
  s.minDiscriminant = w.minDiscriminant;
}

}  // namespace

Vector EquationData::full(const Vector& u) const {
  Vector out = (*extension) * u;
  if (offset.size() > 0) out += offset;
  return out;
}

EquationData surface_equation(const SurfaceGrid& grid, const TTField& z, double amplitude) {
  if (z.tensor.size() != grid.node_count()) throw DomainError("TT field does not match the grid");
  EquationData eq;
  eq.grid = &grid;
  eq.extension = &grid.extension;
  eq.z11 = amplitude * z.tensor.t11.head(grid.unknownCount);
  eq.z12 = amplitude * z.tensor.t12.head(grid.unknownCount);
  eq.zNorm = std::abs(amplitude) * z.supNorm;
  return eq;
}

Vector residual(const EquationData& eq, const Vector& u) {
  const Vector full = eq.full(u);
  const Derivatives d = chart_derivatives(*eq.grid, full);
  return residual_from(eq, u, d, pointwise(eq, d));
}

ScalarField residual(const SurfaceGrid& grid, const TTField& z, const ScalarField& u) {
  return ScalarField(residual(surface_equation(grid, z), u.values()));
}

NewtonWorkspace linearize(const EquationData& eq, const Vector& u) {
  const LatticeGrid& g = *eq.grid;
  const Eigen::Index n = g.unknownCount;
  const Vector full = eq.full(u);
  const Derivatives d = chart_derivatives(g, full);
  const Pointwise p = pointwise(eq, d);
  NewtonWorkspace w;
  w.X = p.X;
  w.Y = p.Y;
  w.radicand = p.S.cwiseAbs2();
  w.residual = residual_from(eq, u, d, p);
  w.Fr.resize(n);
  w.Ft.resize(n);
  w.Fs.resize(n);
  w.Fp.resize(n);
  w.Fq.resize(n);
  w.Fu.resize(n);
  w.minFr = w.minFt = w.minDiscriminant = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) {
    const ConformalData& c = g.rho[k];
    const double xs = p.X[k] / p.S[k];
    const double ys = p.Y[k] / p.S[k];
    w.Fr[k] = 1 - xs;
    w.Ft[k] = 1 + xs;
    w.Fs[k] = -2 * ys;
    w.Fp[k] = 2 * (c.f1 * xs + c.f2 * ys);
    w.Fq[k] = 2 * (-c.f2 * xs + c.f1 * ys);
    w.Fu[k] = -c.e2f;
    const double disc = w.Fr[k] * w.Ft[k] - 0.25 * w.Fs[k] * w.Fs[k];
    if (!(w.Fr[k] > 0) || !(w.Ft[k] > 0) || !(disc > 0) || !(w.Fr[k] <= 2) || !(w.Ft[k] <= 2)) {
      throw EllipticityError("linearization not elliptic at node " + std::to_string(k) + " (x = " +
                             std::to_string(g.nodes[k].real()) + ", y = " + std::to_string(g.nodes[k].imag()) + ")");
    }
    w.minFr = std::min(w.minFr, w.Fr[k]);
    w.minFt = std::min(w.minFt, w.Ft[k]);
    w.maxFr = std::max(w.maxFr, w.Fr[k]);
    w.maxFt = std::max(w.maxFt, w.Ft[k]);
    w.maxAbsFs = std::max(w.maxAbsFs, std::abs(w.Fs[k]));
    w.minDiscriminant = std::min(w.minDiscriminant, disc);
  }
  SparseMatrix jf = w.Fr.asDiagonal() * g.ops.d11;
  jf += w.Ft.asDiagonal() * g.ops.d22;
  jf += w.Fs.asDiagonal() * g.ops.d12;
  jf += w.Fp.asDiagonal() * g.ops.d1;
  jf += w.Fq.asDiagonal() * g.ops.d2;
  SparseMatrix j = jf * (*eq.extension);
  for (Eigen::Index k = 0; k < n; ++k) j.coeffRef(k, k) += w.Fu[k];
  w.jacobian = std::move(j);
  SparseMatrix pc = w.Fr.asDiagonal() * g.compact.d11;
  pc += w.Ft.asDiagonal() * g.compact.d22;
  pc += w.Fs.asDiagonal() * g.compact.d12;
  pc += w.Fp.asDiagonal() * g.compact.d1;
  pc += w.Fq.asDiagonal() * g.compact.d2;
  SparseMatrix p2 = pc * (*eq.extension);
  for (Eigen::Index k = 0; k < n; ++k) p2.coeffRef(k, k) += w.Fu[k];
  w.preconditioner = std::move(p2);
  return w;
}

NewtonWorkspace linearize(const SurfaceGrid& grid, const TTField& z, const ScalarField& u) {
  return linearize(surface_equation(grid, z), u.values());
}

double effective_tolerance(const SolverOptions& opts, double h, double uMax) {
  if (!opts.roundoffFloor || !(h > 0)) return opts.tol;
  const double floor = 2 * std::numeric_limits<double>::epsilon() * std::max(1.0, uMax) * 8 / (h * h);
  return std::max(opts.tol, floor);
}

MoncriefSolution newton_solve(const EquationData& eq, const std::optional<Vector>& u0, const SolverOptions& opts) {
  if (!(opts.tol > 0)) throw DomainError("solver tolerance must be positive");
  const Eigen::Index n = eq.grid->unknownCount;
  Vector u = u0 ? *u0 : Vector::Constant(n, default_initial_value(eq.zNorm));
  if (u.size() != n) throw DomainError("initial guess does not match the grid");

  MoncriefSolution sol;
  sol.zNorm = eq.zNorm;
  Vector F = residual(eq, u);
  double norm = max_abs(F);
  sol.history.push_back(norm);

  const auto finish = [&](MoncriefSolution& s, const Vector& uu, double res) {
    s.u = ScalarField(uu);
    s.finalResidual = res;
    s.minU = uu.minCoeff();
    s.maxU = uu.maxCoeff();
  };

  const auto tol = [&] { return effective_tolerance(opts, eq.grid->h, max_abs(u)); };
  CompactSolver linear;
  for (int it = 0; it < opts.maxIter && norm > tol(); ++it) {
    NewtonWorkspace w = linearize(eq, u);
    fill_stats(sol, w);
    const Vector delta = linear.solve(w, -F, opts.linearTol);

    double step = 1.0;
    bool accepted = false;
    while (step >= opts.dampingFloor) {
      const Vector trial = u + step * delta;
      const Vector Ft = residual(eq, trial);
      const double tn = max_abs(Ft);
      if (std::isfinite(tn) && tn < norm) {
        u = trial;
        F = Ft;
        norm = tn;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++sol.iterations;
    sol.history.push_back(norm);
    if (!accepted) {
      finish(sol, u, norm);
      throw ConvergenceError("Newton stalled at residual " + std::to_string(norm), sol);
    }
  }
  finish(sol, u, norm);
  if (norm > tol()) {
    throw ConvergenceError("Newton reached " + std::to_string(opts.maxIter) + " iterations at residual " +
                               std::to_string(norm),
                           sol);
  }
  if (sol.iterations == 0) {
    // record the ellipticity data of the accepted point
    fill_stats(sol, linearize(eq, u));
  }
  return sol;
}

MoncriefSolution newton_solve(const SurfaceGrid& grid, const TTField& z, const std::optional<ScalarField>& u0,
                              const SolverOptions& opts) {
  std::optional<Vector> start;
  if (u0) start = u0->values();
  return newton_solve(surface_equation(grid, z), start, opts);
}

ContinuationResult continuation_solve(const SurfaceGrid& grid, const TTField& z, const std::vector<double>& amplitudes,
                                      const SolverOptions& opts) {
  for (std::size_t i = 1; i < amplitudes.size(); ++i) {
    if (!(amplitudes[i] > amplitudes[i - 1])) throw DomainError("continuation amplitudes must be strictly ascending");
  }
  ContinuationResult out;
  double prevA = 0;
  Vector prevU;
  const auto predictor = [&](double a) -> std::optional<Vector> {
    if (prevU.size() == 0 || prevA <= 0) return std::nullopt;
    return Vector((Vector::Ones(prevU.size()) + (a / prevA) * (prevU - Vector::Ones(prevU.size()))).eval());
  };
  for (double target : amplitudes) {
    double a = target;
    int depth = 0;
    while (true) {
      try {
        MoncriefSolution s = newton_solve(surface_equation(grid, z, a), predictor(a), opts);
        s.amplitude = a;
        out.totalIterations += s.iterations;
        prevA = a;
        prevU = s.u.values();
        if (a == target) {
          out.solutions.push_back(std::move(s));
          break;
        }
        a = target;  // intermediate step done, retry the target
      } catch (const ConvergenceError& e) {
        if (++depth > 20) {
          MoncriefSolution best = e.best();
          best.amplitude = a;
          throw ConvergenceError("continuation failed at amplitude " + std::to_string(a) + ": " + e.what(), best);
        }
        a = 0.5 * (prevA + a);
        ++out.bisections;
      }
    }
  }
  return out;
}

BoundsReport check_bounds(const SurfaceGrid& grid, const std::array<TTField, 6>& basis,
                          const std::vector<BoundsCase>& cases, double constant) {
  BoundsReport r;
  r.minU = std::numeric_limits<double>::infinity();
  const auto record = [&](int idx, const char* name, double excess) {
    r.worstExcess[idx] = std::max(r.worstExcess[idx], excess);
    if (excess > 0) r.violations.push_back({name, excess});
  };
  const auto combo_norm = [&](const std::array<double, 6>& a, double sa, const std::array<double, 6>& b, double sb) {
    std::array<double, 6> c{};
    for (int i = 0; i < 6; ++i) c[i] = sa * a[i] - sb * b[i];
    return combine_tt(grid, basis, c).supNorm;
  };
  for (const BoundsCase& c : cases) {
    const Vector& u = c.solution->u.values();
    const double slack = 1e-3 * (1 + c.zNorm);
    r.minU = std::min(r.minU, u.minCoeff());
    record(1, "ii", std::max(1.0 - u.minCoeff(), u.maxCoeff() - (1 + constant * c.zNorm)) - slack);
  }
  for (std::size_t i = 0; i < cases.size(); ++i) {
    for (std::size_t j = i + 1; j < cases.size(); ++j) {
      const BoundsCase& A = cases[i];
      const BoundsCase& B = cases[j];
      const Vector& u1 = A.solution->u.values();
      const Vector& u2 = B.solution->u.values();
      const double slack = 1e-3 * (1 + std::max(A.zNorm, B.zNorm));
      ++r.pairsChecked;
      record(0, "i", max_abs(u1 - u2) - constant * combo_norm(A.coefficients, 1, B.coefficients, 1) - slack);
      if (A.zNorm <= 0 || B.zNorm <= 0) continue;
      const double a1 = A.zNorm;
      const double a2 = B.zNorm;
      const double lhs = max_abs(u1 / a1 - u2 / a2);
      // parallel inputs: B = t A with t > 0
      double t = 0;
      int ref = -1;
      for (int q = 0; q < 6; ++q)
        if (std::abs(A.coefficients[q]) > std::abs(ref >= 0 ? A.coefficients[ref] : 0.0)) ref = q;
      bool parallel = ref >= 0;
      if (parallel) {
        t = B.coefficients[ref] / A.coefficients[ref];
        for (int q = 0; q < 6; ++q) {
          parallel = parallel && std::abs(B.coefficients[q] - t * A.coefficients[q]) <= 1e-12 * (1 + std::abs(B.coefficients[q]));
        }
        parallel = parallel && t > 0;
      }
      if (parallel) {
        ++r.parallelPairs;
        record(2, "iii", lhs - std::abs(1 / a1 - 1 / a2) - slack);
      }
      const double mixed = combo_norm(A.coefficients, 1 / a1, B.coefficients, 1 / a2);
      record(3, "iv", lhs - std::abs(1 / a1 - 1 / a2) - constant * mixed - slack);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

double observed_order(const std::vector<double>& h, const std::vector<double>& err) {
  const std::size_t n = std::min(h.size(), err.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(h[i]);
    const double y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

struct Exact {
  double u, u1, u2, u11, u12, u22;
};

// u* = 1 + 0.1 sin(3x + 1) cos(2y + 1/2); not a polynomial, so no stencil is exact
Exact bump(Complex z) {
  const double x = z.real(), y = z.imag();
  const double s = std::sin(3 * x + 1), c = std::cos(3 * x + 1);
  const double cy = std::cos(2 * y + 0.5), sy = std::sin(2 * y + 0.5);
  return {1 + 0.1 * s * cy, 0.3 * c * cy, -0.2 * s * sy, -0.9 * s * cy, -0.6 * c * sy, -0.4 * s * cy};
}

// smooth test function for the linear operators
Exact wave(Complex z) {
  const double x = z.real(), y = z.imag();
  const double s = std::sin(3 * x + 1), c = std::cos(3 * x + 1);
  const double cy = std::cos(2 * y), sy = std::sin(2 * y);
  return {s * cy + x * x * y,
          3 * c * cy + 2 * x * y,
          -2 * s * sy + x * x,
          -9 * s * cy + 2 * y,
          -6 * c * sy + 2 * x,
          -4 * s * cy};
}

double exact_residual(const Exact& e, const ConformalData& c, double z11, double z12) {
  const double diff = e.u11 - e.u22 - 2 * c.f1 * e.u1 + 2 * c.f2 * e.u2;
  const double h12 = e.u12 - c.f1 * e.u2 - c.f2 * e.u1;
  const double X = 2 * z11 - diff;
  const double Y = 2 * z12 - 2 * h12;
  return e.u11 + e.u22 - c.e2f * e.u + std::sqrt(c.e2f * c.e2f + X * X + Y * Y);
}

}  // namespace

MmsStudy run_mms(double radius, const std::vector<double>& spacings, Complex c0, Complex c1, const SolverOptions& opts) {
  MmsStudy study;
  std::vector<double> hs, eL, eH, eS;
  for (double h : spacings) {
    const PatchGrid g = build_mms_patch(radius, h);
    const Eigen::Index n = g.unknownCount;
    const Eigen::Index total = g.node_count();
    MmsLevel lv;
    lv.h = h;
    lv.nodes = static_cast<int>(total);

    // linear operators against a smooth function
    Vector w(total);
    for (Eigen::Index k = 0; k < total; ++k) w[k] = wave(g.nodes[k]).u;
    const Vector lap = laplacian_rho(g, w);
    const SymTensorField hess = hessian_rho(g, w);
    for (Eigen::Index k = 0; k < n; ++k) {
      const Exact e = wave(g.nodes[k]);
      const ConformalData& c = g.rho[k];
      lv.laplacianError = std::max(lv.laplacianError, std::abs(lap[k] - (e.u11 + e.u22) / c.e2f));
      const double h11 = e.u11 - (c.f1 * e.u1 - c.f2 * e.u2);
      const double h22 = e.u22 - (c.f2 * e.u2 - c.f1 * e.u1);
      const double h12 = e.u12 - (c.f1 * e.u2 + c.f2 * e.u1);
      lv.hessianError = std::max({lv.hessianError, std::abs(hess.t11[k] - h11), std::abs(hess.t12[k] - h12),
                                  std::abs(hess.t22[k] - h22)});
    }

    // nonlinear solve with Dirichlet data and a source making u* exact
    SparseMatrix ext(total, n);
    std::vector<Eigen::Triplet<double>> t;
    for (Eigen::Index k = 0; k < n; ++k) t.emplace_back(static_cast<int>(k), static_cast<int>(k), 1.0);
    ext.setFromTriplets(t.begin(), t.end());
    EquationData eq;
    eq.grid = &g;
    eq.extension = &ext;
    eq.offset = Vector::Zero(total);
    for (Eigen::Index k = n; k < total; ++k) eq.offset[k] = bump(g.nodes[k]).u;
    eq.z11.resize(n);
    eq.z12.resize(n);
    eq.source.resize(n);
    Vector exact(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const Complex phi = c0 + c1 * g.nodes[k];
      eq.z11[k] = 2 * phi.real();
      eq.z12[k] = -2 * phi.imag();
      const Exact e = bump(g.nodes[k]);
      exact[k] = e.u;
      eq.source[k] = exact_residual(e, g.rho[k], eq.z11[k], eq.z12[k]);
    }
    const MoncriefSolution s = newton_solve(eq, Vector::Ones(n), opts);
    lv.solveError = max_abs(s.u.values() - exact);
    lv.iterations = s.iterations;

    hs.push_back(h);
    eL.push_back(lv.laplacianError);
    eH.push_back(lv.hessianError);
    eS.push_back(lv.solveError);
    study.levels.push_back(lv);
  }
  study.laplacianOrder = observed_order(hs, eL);
  study.hessianOrder = observed_order(hs, eH);
  study.solveOrder = observed_order(hs, eS);
  return study;
}

}  // namespace moncrief
