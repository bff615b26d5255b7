#include "moncrief/qdiff.hpp"

#include <map>
#include <mutex>

namespace moncrief {

namespace {

constexpr double kTermFloor = 1e-18;
constexpr int kMaxTerms = 4000;

int seed_slot(int seed) {
  for (int s = 0; s < 3; ++s)
    if (kSeedExponents[s] == seed) return s;
  throw DomainError("unsupported series seed " + std::to_string(seed));
}

Complex horner(const std::vector<Complex>& c, Complex z, int seed) {
  const Complex z8 = std::pow(z, 8);
  Complex acc(0);
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * z8 + *it;
  return acc * std::pow(z, seed);
}

// One element's contribution (gamma z)^m gamma'(z)^2.
Complex element_term(const MobiusMap& g, Complex z, int m) {
  const Complex den = std::conj(g.b) * z + std::conj(g.a);
  const Complex num = g.a * z + g.b;
  const Complex inv = 1.0 / den;
  Complex t = inv * inv;
  t *= t;
  for (int i = 0; i < m; ++i) t *= num * inv;
  return t;
}

// C(n + k - 1, k - 1) for n < kMaxTerms + 16.
const std::vector<double>& binomial_table(int k) {
  static const std::array<std::vector<double>, 9> tables = [] {
    std::array<std::vector<double>, 9> t;
    for (int kk = 1; kk <= 8; ++kk) {
      t[kk].resize(kMaxTerms + 16);
      for (int n = 0; n < kMaxTerms + 16; ++n) {
        double c = 1;
        for (int q = 1; q < kk; ++q) c = c * (n + q) / q;
        t[kk][n] = c;
      }
    }
    return t;
  }();
  return tables[k];
}

// Adds mult * (coefficients of z^{m+8j}) of (a z + b)^m / (conj(b) z + conj(a))^{m+4},
// using (1 + w z)^{-k} = sum_n C(n+k-1, k-1) (-w)^n z^n with w = conj(b)/conj(a).
int accumulate_element(const MobiusMap& g, int m, double r, double mult, std::vector<Complex>& out) {
  const int k = m + 4;
  const Complex abar = std::conj(g.a);
  const Complex negW = -std::conj(g.b) / abar;
  const Complex scale = mult * std::pow(abar, -k);
  const double absW = std::abs(negW);

  std::array<Complex, 5> poly{};   // (a z + b)^m
  std::array<Complex, 5> wpow{};   // (-w)^i
  wpow[0] = 1;
  for (int i = 1; i <= m; ++i) wpow[i] = wpow[i - 1] * negW;
  for (int i = 0; i <= m; ++i) {
    double binom = 1;
    for (int t = 0; t < i; ++t) binom = binom * (m - t) / (t + 1);
    poly[i] = binom * std::pow(g.a, i) * std::pow(g.b, m - i);
  }
  const std::vector<double>& binom = binomial_table(k);
  const auto choose = [&binom](int n) { return binom[n]; };
  const double envelope = std::abs(scale) * std::pow(std::abs(g.a) + std::abs(g.b), m);
  const Complex w8 = std::pow(negW, 8);
  const double r8 = std::pow(absW * r, 8);
  Complex w8j(1);   // (-w)^{8j}
  double mag8j = 1;  // (|w| r)^{8j}
  int last = m;
  for (int j = 0; j * 8 < kMaxTerms; ++j) {
    const int e = m + 8 * j;
    Complex hsum(0);
    for (int i = 0; i <= m; ++i) {
      const int n = e - i;  // exponent in (1 + w z)^{-k}
      hsum += poly[i] * choose(n) * w8j * wpow[m - i];
    }
    if (static_cast<int>(out.size()) <= j) out.resize(j + 1, Complex(0));
    out[j] += scale * hsum;
    last = e;
    if (absW == 0) break;
    // geometric bound on the dropped terms once past the peak of C(n+k-1,k-1) x^n
    const int nn = e + 8;
    const double growth = choose(nn + 8) / choose(nn) * r8;
    const double bound = envelope * choose(nn) * mag8j * r8 * std::pow(r, m);
    if (growth < 1 && bound / (1 - growth) < kTermFloor) break;
    w8j *= w8;
    mag8j *= r8;
  }
  return last;
}

}  // namespace

Complex SeriesExpansion::value(Complex z) const { return horner(body, z, seed) + horner(tail, z, seed); }

Complex SeriesExpansion::tail_value(Complex z) const { return horner(tail, z, seed); }

Complex SeriesExpansion::derivative(Complex z) const {
  Complex acc(0);
  const auto add = [&](const std::vector<Complex>& c) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      const int e = seed + 8 * static_cast<int>(j);
      if (e > 0) acc += double(e) * c[j] * std::pow(z, e - 1);
    }
  };
  add(body);
  add(tail);
  return acc;
}

PoincareSeries::PoincareSeries(const FuchsianGroup& group, int L) : L_(L), ball_(build_group_ball(group, L)) {
  if (L < 0) throw DomainError("truncation length must be non-negative");
  expansions_.resize(3);
  for (int s = 0; s < 3; ++s) {
    SeriesExpansion& ex = expansions_[s];
    ex.seed = kSeedExponents[s];
    ex.L = L;
    ex.radius = kExpansionRadius;
    for (int l = 0; l <= L; ++l) {
      const double mult = l == 0 ? 1.0 : 8.0;
      std::vector<Complex>& target = (l == L) ? ex.tail : ex.body;
      for (const MobiusMap& g : ball_.spheres[l]) {
        ex.maxTerms = std::max(ex.maxTerms, accumulate_element(g, ex.seed, kExpansionRadius, mult, target));
      }
    }
  }
}

const SeriesExpansion& PoincareSeries::expansion(int seed) const { return expansions_[seed_slot(seed)]; }

Complex PoincareSeries::direct(int seed, Complex z, bool tailOnly) const {
  seed_slot(seed);
  Complex acc(0);
  for (int l = tailOnly ? L_ : 0; l <= L_; ++l) {
    for (const MobiusMap& rep : ball_.spheres[l]) {
      if (l == 0) {
        acc += element_term(rep, z, seed);
        continue;
      }
      for (const MobiusMap& g : GroupBall::orbit(rep)) acc += element_term(g, z, seed);
    }
  }
  return acc;
}

Complex PoincareSeries::value(int seed, Complex z) const {
  const SeriesExpansion& ex = expansion(seed);
  if (std::abs(z) <= ex.radius) return ex.value(z);
  return direct(seed, z);
}

Complex PoincareSeries::tail(int seed, Complex z) const {
  const SeriesExpansion& ex = expansion(seed);
  if (std::abs(z) <= ex.radius) return ex.tail_value(z);
  return direct(seed, z, true);
}

std::shared_ptr<const PoincareSeries> PoincareSeries::cached(const FuchsianGroup& group, int L) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const PoincareSeries>> store;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = store.find(L);
  if (it != store.end()) return it->second;
  auto series = std::make_shared<const PoincareSeries>(group, L);
  store.emplace(L, series);
  return series;
}

Complex poincare_series(const FuchsianGroup& group, int m, int L, const DiskPoint& z) {
  return PoincareSeries::cached(group, L)->value(m, z.value());
}

AutomorphyReport automorphy_check(const FuchsianGroup& group, int L, int pointsPerSide) {
  const auto series = PoincareSeries::cached(group, L);
  AutomorphyReport r;
  for (int k = 0; k < 8; ++k) {
    // g_k carries side k+4 onto side k
    const MobiusMap& g = group.generators[k];
    const int source = FuchsianGroup::inverse_index(k);
    for (int p = 0; p < pointsPerSide; ++p) {
      const double t = (p + 1.0) / (pointsPerSide + 1.0);
      const Complex z = 0.97 * group.octagon.side_point(source, t);
      const Complex w = g.apply(z);
      const Complex d = g.derivative(z);
      for (int seed : {0, 2, 4}) {
        const Complex pulled = series->value(seed, w) * d * d;
        r.maxResidual = std::max(r.maxResidual, std::abs(pulled - series->value(seed, z)));
        r.maxTail = std::max({r.maxTail, std::abs(series->tail(seed, z)), std::abs(series->tail(seed, w) * d * d)});
        ++r.samples;
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

SymTensorField TTField::interior(Eigen::Index n) const {
  return {tensor.t11.head(n), tensor.t12.head(n), tensor.t22.head(n)};
}

namespace {

void fill_tensor(const SurfaceGrid& grid, TTField& t, const std::vector<Complex>& tailPhi) {
  const Eigen::Index n = grid.node_count();
  t.tensor = SymTensorField::zero(n);
  t.supNorm = 0;
  t.tailEstimate = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    t.tensor.t11[k] = 2 * t.phi[k].real();
    t.tensor.t12[k] = -2 * t.phi[k].imag();
    t.tensor.t22[k] = -t.tensor.t11[k];
    if (k < grid.unknownCount) {
      t.supNorm = std::max(t.supNorm, tt_norm(grid.rho[k].e2f, t.tensor.t11[k], t.tensor.t12[k]));
      if (!tailPhi.empty()) {
        t.tailEstimate = std::max(t.tailEstimate, 2 * std::sqrt(2.0) * std::abs(tailPhi[k]) / grid.rho[k].e2f);
      }
    }
  }
}

}  // namespace

TTField assemble_tt(const SurfaceGrid& grid, const FuchsianGroup& group, const std::array<double, 6>& c, int L) {
  const auto series = PoincareSeries::cached(group, L);
  TTField t;
  t.coefficients = c;
  t.L = L;
  const Eigen::Index n = grid.node_count();
  t.phi.assign(n, Complex(0));
  std::vector<Complex> tailPhi(n, Complex(0));
  for (int s = 0; s < 3; ++s) {
    const Complex coef(c[2 * s], c[2 * s + 1]);
    if (coef == Complex(0)) continue;
    for (Eigen::Index k = 0; k < n; ++k) {
      t.phi[k] += coef * series->value(kSeedExponents[s], grid.nodes[k]);
      tailPhi[k] += coef * series->tail(kSeedExponents[s], grid.nodes[k]);
    }
  }
  fill_tensor(grid, t, tailPhi);
  return t;
}

std::array<TTField, 6> tt_basis(const SurfaceGrid& grid, const FuchsianGroup& group, int L) {
  std::array<TTField, 6> out;
  for (int i = 0; i < 6; ++i) {
    std::array<double, 6> e{};
    e[i] = 1.0;
    out[i] = assemble_tt(grid, group, e, L);
  }
  return out;
}

TTField combine_tt(const SurfaceGrid& grid, const std::array<TTField, 6>& basis, const std::array<double, 6>& c) {
  TTField t;
  t.coefficients = c;
  t.L = basis[0].L;
  t.phi.assign(grid.node_count(), Complex(0));
  double tail = 0;
  for (int i = 0; i < 6; ++i) {
    if (c[i] == 0) continue;
    for (Eigen::Index k = 0; k < grid.node_count(); ++k) t.phi[k] += c[i] * basis[i].phi[k];
    tail += std::abs(c[i]) * basis[i].tailEstimate;
  }
  fill_tensor(grid, t, {});
  t.tailEstimate = tail;  // triangle-inequality bound
  return t;
}

TTReport verify_tt(const LatticeGrid& grid, const SymTensorField& full) {
  if (full.size() != grid.node_count()) throw DomainError("tensor size does not match the grid");
  TTReport r;
  const Vector d1t11 = grid.ops.d1 * full.t11;
  const Vector d2t12 = grid.ops.d2 * full.t12;
  const Vector d1t12 = grid.ops.d1 * full.t12;
  const Vector d2t22 = grid.ops.d2 * full.t22;
  for (Eigen::Index k = 0; k < grid.unknownCount; ++k) {
    const ConformalData& c = grid.rho[k];
    const double tr = full.t11[k] + full.t22[k];
    r.maxTrace = std::max(r.maxTrace, std::abs(tr) / c.e2f);
    // rho^{bc} T_{ab;c} = e^{-2f} (d_b T_ab - f_a tr T) in a conformal chart
    const double v1 = (d1t11[k] + d2t12[k] - c.f1 * tr) / c.e2f;
    const double v2 = (d1t12[k] + d2t22[k] - c.f2 * tr) / c.e2f;
    r.maxDivergence = std::max(r.maxDivergence, std::sqrt((v1 * v1 + v2 * v2) / c.e2f));
    const double n2 = full.t11[k] * full.t11[k] + 2 * full.t12[k] * full.t12[k] + full.t22[k] * full.t22[k];
    r.supNorm = std::max(r.supNorm, std::sqrt(n2) / c.e2f);
  }
  return r;
}

Eigen::Matrix<double, 6, 6> tt_gram_matrix(const SurfaceGrid& grid, const std::array<TTField, 6>& basis) {
  Eigen::Matrix<double, 6, 6> gram;
  for (int i = 0; i < 6; ++i) {
    for (int j = i; j < 6; ++j) {
      double acc = 0;
      for (Eigen::Index k = 0; k < grid.node_count(); ++k) {
        const double e4f = grid.rho[k].e2f * grid.rho[k].e2f;
        const auto& a = basis[i].tensor;
        const auto& b = basis[j].tensor;
        const double dot = a.t11[k] * b.t11[k] + 2 * a.t12[k] * b.t12[k] + a.t22[k] * b.t22[k];
        acc += grid.quadratureWeights[k] * dot / e4f;
      }
      gram(i, j) = gram(j, i) = acc;
    }
  }
  return gram;
}

}  // namespace moncrief
