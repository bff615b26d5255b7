#include "moncrief/grid.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <limits>
#include <numeric>

namespace moncrief {

namespace {

using Triplet = Eigen::Triplet<double>;

void setup_lookup(LatticeGrid& g, int reach) {
  g.lookupOffset = reach;
  g.lookupWidth = 2 * reach + 1;
  g.lookup.assign(static_cast<std::size_t>(g.lookupWidth) * g.lookupWidth, -1);
}

int& lookup_slot(LatticeGrid& g, int i, int j) {
  return g.lookup[static_cast<std::size_t>(i + g.lookupOffset) * g.lookupWidth + (j + g.lookupOffset)];
}

void add_node(LatticeGrid& g, int i, int j, LatticeGrid::NodeClass cls) {
  const Complex z(i * g.h, j * g.h);
  lookup_slot(g, i, j) = static_cast<int>(g.nodes.size());
  g.nodes.push_back(z);
  g.latticeIndex.push_back({i, j});
  g.nodeClass.push_back(cls);
  g.rho.push_back(rho_conformal(z));
}

// Monomials x^p y^q, p + q <= degree, in graded order; index 0 is the constant.
std::vector<std::array<int, 2>> monomials(int degree) {
  std::vector<std::array<int, 2>> out;
  for (int d = 0; d <= degree; ++d)
    for (int q = 0; q <= d; ++q) out.push_back({d - q, q});
  return out;
}

}  // namespace

Vector LatticeGrid::rho_factor() const {
  Vector v(node_count());
  for (Eigen::Index k = 0; k < node_count(); ++k) v[k] = rho[k].e2f;
  return v;
}

Vector LatticeGrid::rho_factor_unknowns() const { return rho_factor().head(unknownCount); }

int LatticeGrid::find(int i, int j) const {
  const int a = i + lookupOffset;
  const int b = j + lookupOffset;
  if (a < 0 || b < 0 || a >= lookupWidth || b >= lookupWidth) return -1;
  return lookup[static_cast<std::size_t>(a) * lookupWidth + b];
}

void LatticeGrid::finalize_stencils() {
  stencil.resize(unknownCount);
  for (Eigen::Index k = 0; k < unknownCount; ++k) {
    const auto [i, j] = latticeIndex[k];
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        const int n = find(i + di, j + dj);
        if (n < 0) {
          throw InternalError("stencil neighbour missing at lattice node (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
        }
        stencil[k][(di + 1) * 3 + (dj + 1)] = n;
      }
    }
  }
  // fourth-order weights on the 5-point line; the 3-point ones where the
  // +-2 neighbours are missing (Dirichlet patches)
  constexpr std::array<double, 5> kFirst4 = {1.0 / 12, -8.0 / 12, 0, 8.0 / 12, -1.0 / 12};
  constexpr std::array<double, 5> kSecond4 = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};
  constexpr std::array<double, 5> kFirst2 = {0, -0.5, 0, 0.5, 0};
  constexpr std::array<double, 5> kSecond2 = {0, 1, -2, 1, 0};
  const double invh = 1.0 / h;
  const double invh2 = 1.0 / (h * h);
  std::vector<Triplet> t1, t2, t11, t12, t22;
  std::vector<Triplet> c1, c2, c11, c12, c22;
  fourthOrderRows = 0;
  for (Eigen::Index k = 0; k < unknownCount; ++k) {
    const auto r = static_cast<int>(k);
    const auto [i, j] = latticeIndex[k];
    std::array<std::array<int, 5>, 5> block{};
    bool wide = true;
    for (int a = -2; a <= 2; ++a) {
      for (int b = -2; b <= 2; ++b) {
        block[a + 2][b + 2] = find(i + a, j + b);
        wide = wide && block[a + 2][b + 2] >= 0;
      }
    }
    if (wide) ++fourthOrderRows;
    // compact operators from the 3x3 neighbourhood, stencil index (di + 1) * 3 + (dj + 1)
    const auto& nb = stencil[k];
    for (int a = 1; a < 4; ++a) {
      const int xLine = nb[(a - 1) * 3 + 1];
      const int yLine = nb[3 + (a - 1)];
      if (kFirst2[a] != 0) {
        c1.emplace_back(r, xLine, kFirst2[a] * invh);
        c2.emplace_back(r, yLine, kFirst2[a] * invh);
      }
      c11.emplace_back(r, xLine, kSecond2[a] * invh2);
      c22.emplace_back(r, yLine, kSecond2[a] * invh2);
      for (int b = 1; b < 4; ++b) {
        if (kFirst2[a] != 0 && kFirst2[b] != 0) c12.emplace_back(r, nb[(a - 1) * 3 + (b - 1)], kFirst2[a] * kFirst2[b] * invh2);
      }
    }
    const auto& first = wide ? kFirst4 : kFirst2;
    const auto& second = wide ? kSecond4 : kSecond2;
    for (int a = 0; a < 5; ++a) {
      if (first[a] != 0) {
        t1.emplace_back(r, block[a][2], first[a] * invh);
        t2.emplace_back(r, block[2][a], first[a] * invh);
      }
      if (second[a] != 0) {
        t11.emplace_back(r, block[a][2], second[a] * invh2);
        t22.emplace_back(r, block[2][a], second[a] * invh2);
      }
      for (int b = 0; b < 5; ++b) {
        if (first[a] != 0 && first[b] != 0) t12.emplace_back(r, block[a][b], first[a] * first[b] * invh2);
      }
    }
  }
  const auto make = [&](const std::vector<Triplet>& t) {
    SparseMatrix m(unknownCount, node_count());
    m.setFromTriplets(t.begin(), t.end());
    return m;
  };
  ops = {make(t1), make(t2), make(t11), make(t12), make(t22)};
  compact = {make(c1), make(c2), make(c11), make(c12), make(c22)};
}

// ---------------------------------------------------------------------------

Vector polynomial_weights(const std::vector<Complex>& points, Complex at, double scale, int degree) {
  const auto mons = monomials(degree);
  const auto n = static_cast<Eigen::Index>(points.size());
  const auto m = static_cast<Eigen::Index>(mons.size());
  if (n < m) throw InternalError("too few samples for the interpolation degree");
  Eigen::MatrixXd v(n, m);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Complex d = (points[r] - at) / scale;
    Eigen::VectorXd px(degree + 1), py(degree + 1);
    px[0] = py[0] = 1;
    for (int p = 1; p <= degree; ++p) {
      px[p] = px[p - 1] * d.real();
      py[p] = py[p - 1] * d.imag();
    }
    for (Eigen::Index c = 0; c < m; ++c) v(r, c) = px[mons[c][0]] * py[mons[c][1]];
  }
  // The weights return the fitted constant term: row 0 of the pseudo-inverse.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(v, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  if (s[m - 1] < 1e-12 * s[0]) throw InternalError("degenerate interpolation cloud");
  const Eigen::RowVectorXd row0 = svd.matrixV().row(0);
  Eigen::VectorXd scaled = row0.transpose().cwiseQuotient(s);
  return svd.matrixU() * scaled;
}

// ---------------------------------------------------------------------------

SurfaceGrid build_grid(const FuchsianGroup& group, double h, int wordBudget) {
  if (!(h > 0) || h > 0.1) throw DomainError("grid spacing must lie in (0, 0.1]");
  SurfaceGrid g;
  g.h = h;
  g.group = group;
  g.wordBudget = wordBudget;
  const Octagon& oct = group.octagon;
  const int reach = static_cast<int>(std::ceil(1.0 / h)) + 2;
  setup_lookup(g, reach);

  const int span = static_cast<int>(std::ceil((oct.vertexRadius + 3 * h) / h));
  const auto inside = [&](Complex z) { return std::norm(z) < 1.0 && oct.outside_measure(z) <= 0.0; };

  // interior nodes, row-major in (i, j)
  for (int i = -span; i <= span; ++i)
    for (int j = -span; j <= span; ++j)
      if (inside(Complex(i * h, j * h))) add_node(g, i, j, LatticeGrid::NodeClass::Interior);
  g.unknownCount = g.node_count();

  // cells of area h^2 centred on nodes, sampled 4x4 when cut by the boundary
  const auto cell_inside_fraction = [&](Complex z, bool& cut) {
    const double depth = -oct.outside_measure(z);
    cut = std::abs(depth) <= 0.75 * h;
    if (!cut) return depth > 0 ? 1.0 : 0.0;
    return -1.0;
  };

  // ghosts: lattice nodes within two steps of interior nodes and cells overlapping the octagon
  std::vector<std::array<int, 2>> ghostCandidates;
  for (Eigen::Index k = 0; k < g.unknownCount; ++k) {
    const auto [i, j] = g.latticeIndex[k];
    for (int di = -2; di <= 2; ++di)
      for (int dj = -2; dj <= 2; ++dj)
        if (g.find(i + di, j + dj) < 0) ghostCandidates.push_back({i + di, j + dj});
  }
  const auto cell_overlaps = [&](int i, int j) {
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        if (inside(Complex((i + (a + 0.5) / 4 - 0.5) * h, (j + (b + 0.5) / 4 - 0.5) * h))) return true;
    return false;
  };
  for (int i = -span; i <= span; ++i) {
    for (int j = -span; j <= span; ++j) {
      if (g.find(i, j) >= 0) continue;
      bool cut = false;
      cell_inside_fraction(Complex(i * h, j * h), cut);
      if (cut && cell_overlaps(i, j)) ghostCandidates.push_back({i, j});
    }
  }
  std::sort(ghostCandidates.begin(), ghostCandidates.end());
  ghostCandidates.erase(std::unique(ghostCandidates.begin(), ghostCandidates.end()), ghostCandidates.end());
  for (const auto& [i, j] : ghostCandidates) add_node(g, i, j, LatticeGrid::NodeClass::Ghost);

  g.finalize_stencils();

  // quadrature weights
  g.quadratureWeights = Vector::Zero(g.node_count());
  for (Eigen::Index k = 0; k < g.node_count(); ++k) {
    const Complex z = g.nodes[k];
    bool cut = false;
    const double full = cell_inside_fraction(z, cut);
    if (!cut) {
      g.quadratureWeights[k] = full * g.rho[k].e2f * h * h;
      continue;
    }
    double acc = 0;
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        const Complex s = z + Complex(((a + 0.5) / 4 - 0.5) * h, ((b + 0.5) / 4 - 0.5) * h);
        if (inside(s)) acc += rho_conformal_factor(s);
      }
    }
    g.quadratureWeights[k] = acc * h * h / 16;
  }

  // interpolation cloud: interior nodes plus neighbouring-tile images close to the octagon
  const double band = 10 * h;
  for (Eigen::Index k = 0; k < g.unknownCount; ++k) {
    g.cloudPoint.push_back(g.nodes[k]);
    g.cloudNode.push_back(static_cast<int>(k));
    g.cloudFactor.emplace_back(1.0);
  }
  for (const MobiusMap& tile : neighbor_tiles(group)) {
    if (matrix_distance(tile, MobiusMap::identity()) < 1e-12) continue;
    for (Eigen::Index k = 0; k < g.unknownCount; ++k) {
      if (oct.outside_measure(g.nodes[k]) < -band) continue;  // images of deep nodes land far away
      const Complex w = tile.apply(g.nodes[k]);
      const double out = oct.outside_measure(w);
      if (out > band) continue;
      g.cloudPoint.push_back(w);
      g.cloudNode.push_back(static_cast<int>(k));
      g.cloudFactor.push_back(tile.derivative(g.nodes[k]));
    }
  }
  g.cloudCell = 2 * h;
  g.cloudOffset = static_cast<int>(std::ceil(1.0 / g.cloudCell)) + 1;
  g.cloudWidth = 2 * g.cloudOffset + 1;
  g.cloudBuckets.assign(static_cast<std::size_t>(g.cloudWidth) * g.cloudWidth, {});
  for (std::size_t c = 0; c < g.cloudPoint.size(); ++c) {
    const int bx = static_cast<int>(std::floor(g.cloudPoint[c].real() / g.cloudCell)) + g.cloudOffset;
    const int by = static_cast<int>(std::floor(g.cloudPoint[c].imag() / g.cloudCell)) + g.cloudOffset;
    g.cloudBuckets[static_cast<std::size_t>(bx) * g.cloudWidth + by].push_back(static_cast<int>(c));
  }

  // ghost links
  std::vector<Triplet> gt;
  const Eigen::Index nGhost = g.node_count() - g.unknownCount;
  g.ghostLinks.reserve(nGhost);
  for (Eigen::Index q = 0; q < nGhost; ++q) {
    const Complex z = g.nodes[g.unknownCount + q];
    Reduction red = reduce_to_domain(group, DiskPoint(z), wordBudget);
    GhostLink link{red.point, red.map, {}};
    const std::vector<int> near = g.nearest_cloud(z, kInterpolationPoints);
    std::vector<Complex> pts;
    pts.reserve(near.size());
    for (int c : near) pts.push_back(g.cloudPoint[c]);
    const Vector w = polynomial_weights(pts, z, h, kInterpolationDegree);
    for (std::size_t e = 0; e < near.size(); ++e) {
      const int c = near[e];
      link.stencil.push_back({g.cloudNode[c], w[static_cast<Eigen::Index>(e)], g.cloudFactor[c]});
      gt.emplace_back(static_cast<int>(q), g.cloudNode[c], w[static_cast<Eigen::Index>(e)]);
    }
    g.ghostLinks.push_back(std::move(link));
  }
  g.ghostMatrix = SparseMatrix(nGhost, g.unknownCount);
  g.ghostMatrix.setFromTriplets(gt.begin(), gt.end());

  std::vector<Triplet> et;
  for (Eigen::Index k = 0; k < g.unknownCount; ++k) et.emplace_back(static_cast<int>(k), static_cast<int>(k), 1.0);
  for (int r = 0; r < g.ghostMatrix.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(g.ghostMatrix, r); it; ++it)
      et.emplace_back(static_cast<int>(g.unknownCount) + r, static_cast<int>(it.col()), it.value());
  g.extension = SparseMatrix(g.node_count(), g.unknownCount);
  g.extension.setFromTriplets(et.begin(), et.end());
  return g;
}

std::vector<int> SurfaceGrid::nearest_cloud(Complex z, int count) const {
  const int bx = static_cast<int>(std::floor(z.real() / cloudCell)) + cloudOffset;
  const int by = static_cast<int>(std::floor(z.imag() / cloudCell)) + cloudOffset;
  std::vector<std::pair<double, int>> found;
  for (int ring = 2;; ++ring) {
    found.clear();
    for (int a = bx - ring; a <= bx + ring; ++a) {
      for (int b = by - ring; b <= by + ring; ++b) {
        if (a < 0 || b < 0 || a >= cloudWidth || b >= cloudWidth) continue;
        for (int c : cloudBuckets[static_cast<std::size_t>(a) * cloudWidth + b]) {
          found.emplace_back(std::abs(cloudPoint[c] - z), c);
        }
      }
    }
    // every sample within (ring - 1) cells of z has been seen
    const double safe = (ring - 1) * cloudCell;
    std::sort(found.begin(), found.end());
    if (static_cast<int>(found.size()) >= count && found[count - 1].first <= safe) break;
    if (ring > 40) throw OutOfCollarError("interpolation cloud does not cover the point");
  }
  std::vector<int> out;
  for (int e = 0; e < count; ++e) out.push_back(found[e].second);
  std::sort(out.begin(), out.end());
  return out;
}

double SurfaceGrid::max_lebesgue_constant() const {
  double worst = 0;
  for (const GhostLink& l : ghostLinks) {
    double s = 0;
    for (const auto& e : l.stencil) s += std::abs(e.weight);
    worst = std::max(worst, s);
  }
  return worst;
}

Vector SurfaceGrid::extend(const Vector& interior) const {
  if (interior.size() != unknownCount) throw DomainError("field size does not match the grid");
  Vector full(node_count());
  full.head(unknownCount) = interior;
  full.tail(node_count() - unknownCount) = ghostMatrix * interior;
  return full;
}

SymTensorField SurfaceGrid::extend_tensor(const SymTensorField& in) const {
  if (in.size() != unknownCount) throw DomainError("tensor size does not match the grid");
  SymTensorField out = SymTensorField::zero(node_count());
  out.t11.head(unknownCount) = in.t11;
  out.t12.head(unknownCount) = in.t12;
  out.t22.head(unknownCount) = in.t22;
  // T = q dz^2 + conj(q) dzbar^2 + s |dz|^2; invariance gives q(gamma n) = q(n)/gamma'(n)^2
  // and s(gamma n) = s(n)/|gamma'(n)|^2. Both are interpolated relative to e^{2f},
  // whose steep growth towards the circle would otherwise dominate the error.
  for (std::size_t g = 0; g < ghostLinks.size(); ++g) {
    Complex q(0);
    double s = 0;
    for (const auto& e : ghostLinks[g].stencil) {
      const double e2f = rho[e.node].e2f;
      const Complex qn((in.t11[e.node] - in.t22[e.node]) / 4, -in.t12[e.node] / 2);
      const double sn = (in.t11[e.node] + in.t22[e.node]) / 2;
      q += e.weight * (qn / e2f) * (std::conj(e.factor) / e.factor);
      s += e.weight * sn / e2f;
    }
    const auto k = static_cast<Eigen::Index>(unknownCount + g);
    q *= rho[k].e2f;
    s *= rho[k].e2f;
    out.t11[k] = 2 * q.real() + s;
    out.t22[k] = -2 * q.real() + s;
    out.t12[k] = -2 * q.imag();
  }
  return out;
}

// ---------------------------------------------------------------------------

PatchGrid build_mms_patch(double radius, double h) {
  if (!(radius > 0) || radius > 0.5) throw DomainError("patch radius must lie in (0, 0.5]");
  if (!(h > 0) || h >= radius) throw DomainError("patch spacing must lie in (0, radius)");
  PatchGrid g;
  g.h = h;
  g.radius = radius;
  const int span = static_cast<int>(std::ceil(radius / h)) + 1;
  setup_lookup(g, span + 1);
  std::vector<std::array<int, 2>> all;
  for (int i = -span; i <= span; ++i)
    for (int j = -span; j <= span; ++j)
      if (std::hypot(i * h, j * h) <= radius) all.push_back({i, j});
  const auto member = [&](int i, int j) { return std::hypot(i * h, j * h) <= radius; };
  std::vector<std::array<int, 2>> boundary;
  for (const auto& [i, j] : all) {
    // two Dirichlet layers so every unknown gets the fourth-order block
    bool full = true;
    for (int di = -2; di <= 2; ++di)
      for (int dj = -2; dj <= 2; ++dj) full = full && member(i + di, j + dj);
    if (full) {
      add_node(g, i, j, LatticeGrid::NodeClass::Interior);
    } else {
      boundary.push_back({i, j});
    }
  }
  g.unknownCount = g.node_count();
  for (const auto& [i, j] : boundary) add_node(g, i, j, LatticeGrid::NodeClass::Boundary);
  g.finalize_stencils();
  return g;
}

// ---------------------------------------------------------------------------

Derivatives chart_derivatives(const LatticeGrid& grid, const Vector& full, const StencilOps& ops) {
  if (full.size() != grid.node_count()) throw DomainError("field size does not match the grid");
  return {ops.d1 * full, ops.d2 * full, ops.d11 * full, ops.d12 * full, ops.d22 * full};
}

Derivatives chart_derivatives(const LatticeGrid& grid, const Vector& full) {
  return chart_derivatives(grid, full, grid.ops);
}

Vector laplacian_rho(const LatticeGrid& grid, const Vector& full) {
  const Vector lap = grid.ops.d11 * full + grid.ops.d22 * full;
  return lap.cwiseQuotient(grid.rho_factor_unknowns());
}

ScalarField laplacian_rho(const SurfaceGrid& grid, const ScalarField& u) {
  return ScalarField(laplacian_rho(grid, grid.extend(u)));
}

SymTensorField hessian_rho(const LatticeGrid& grid, const Vector& full) { return hessian_rho(grid, full, grid.ops); }

SymTensorField hessian_rho(const LatticeGrid& grid, const Vector& full, const StencilOps& ops) {
  const Derivatives d = chart_derivatives(grid, full, ops);
  SymTensorField out = SymTensorField::zero(grid.unknownCount);
  for (Eigen::Index k = 0; k < grid.unknownCount; ++k) {
    const double f1 = grid.rho[k].f1;
    const double f2 = grid.rho[k].f2;
    out.t11[k] = d.d11[k] - (f1 * d.d1[k] - f2 * d.d2[k]);
    out.t22[k] = d.d22[k] - (f2 * d.d2[k] - f1 * d.d1[k]);
    out.t12[k] = d.d12[k] - (f1 * d.d2[k] + f2 * d.d1[k]);
  }
  return out;
}

SymTensorField hessian_rho(const SurfaceGrid& grid, const ScalarField& u) { return hessian_rho(grid, grid.extend(u)); }

double integrate_rho_full(const SurfaceGrid& grid, const Vector& full) { return grid.quadratureWeights.dot(full); }

double integrate_rho(const SurfaceGrid& grid, const ScalarField& u) { return integrate_rho_full(grid, grid.extend(u)); }

double interpolate(const SurfaceGrid& grid, const ScalarField& u, const DiskPoint& z) {
  const Reduction red = reduce_to_domain(grid.group, z, grid.wordBudget);
  const Complex p = red.point.value();
  const int i = static_cast<int>(std::lround(p.real() / grid.h));
  const int j = static_cast<int>(std::lround(p.imag() / grid.h));
  const int hit = grid.find(i, j);
  if (hit >= 0 && hit < grid.unknownCount && std::abs(grid.nodes[hit] - p) <= 1e-14) return u[hit];
  const std::vector<int> near = grid.nearest_cloud(p, kInterpolationPoints);
  std::vector<Complex> pts;
  for (int c : near) pts.push_back(grid.cloudPoint[c]);
  const Vector w = polynomial_weights(pts, p, grid.h, kInterpolationDegree);
  double acc = 0;
  for (std::size_t e = 0; e < near.size(); ++e) acc += w[static_cast<Eigen::Index>(e)] * u[grid.cloudNode[near[e]]];
  return acc;
}

}  // namespace moncrief
