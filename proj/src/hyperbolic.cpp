#include "moncrief/hyperbolic.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <unordered_map>

namespace moncrief {

namespace {

constexpr double kPi = std::numbers::pi;

double max_entry(const MobiusMap& m, const MobiusMap& n, double sign) {
  return std::max(std::abs(m.a - sign * n.a), std::abs(m.b - sign * n.b));
}

// Spatial index over the origin images of group elements. Distinct elements of
// a torsion-free cocompact group move 0 to points at pseudo-hyperbolic distance
// tanh(inradius) or more from each other, so an element is identified by its
// image of 0 alone; cells scale with 1 - |p|^2 to stay uniform in the hyperbolic
// metric.
class OriginIndex {
 public:
  static constexpr double kCellFactor = 0.05;
  static constexpr double kEdge = 1e-7;

  void insert(const MobiusMap& m, int id) {
    const Key k = key_of(m.origin_image(), std::norm(m.a));
    auto [it, fresh] = head_.try_emplace(k.packed, id);
    if (!fresh) {
      next_.resize(std::max<std::size_t>(next_.size(), id + 1), -1);
      next_[id] = it->second;
      it->second = id;
    } else {
      next_.resize(std::max<std::size_t>(next_.size(), id + 1), -1);
      next_[id] = -1;
    }
  }

  /// Id of a stored element whose image of 0 matches m's, or -1.
  template <typename Lookup>
  int find(const MobiusMap& m, const Lookup& point_of) const {
    const Complex p = m.origin_image();
    const double a2 = std::norm(m.a);
    const double lv = std::log2(a2);
    const int level = static_cast<int>(std::floor(lv));
    const double lf = lv - level;
    for (int dl : {0, -1, 1}) {
      if (dl == -1 && lf > kEdge) continue;
      if (dl == 1 && lf < 1 - kEdge) continue;
      const int lev = level + dl;
      const double cell = kCellFactor * std::ldexp(1.0, -lev);
      const double fx = p.real() / cell;
      const double fy = p.imag() / cell;
      const auto ix = static_cast<std::int64_t>(std::floor(fx));
      const auto iy = static_cast<std::int64_t>(std::floor(fy));
      const double rx = fx - double(ix);
      const double ry = fy - double(iy);
      for (int dx : {0, -1, 1}) {
        if (dx == -1 && rx > kEdge) continue;
        if (dx == 1 && rx < 1 - kEdge) continue;
        for (int dy : {0, -1, 1}) {
          if (dy == -1 && ry > kEdge) continue;
          if (dy == 1 && ry < 1 - kEdge) continue;
          auto it = head_.find(pack(lev, ix + dx, iy + dy));
          if (it == head_.end()) continue;
          for (int id = it->second; id >= 0; id = next_[id]) {
            const Complex q = point_of(id);
            const double sep = std::abs((p - q) / (1.0 - std::conj(q) * p));
            if (sep < 0.5) return id;
          }
        }
      }
    }
    return -1;
  }

  void clear() {
    head_.clear();
    next_.clear();
  }

 private:
  struct Key {
    std::uint64_t packed;
  };

  static std::uint64_t pack(int level, std::int64_t ix, std::int64_t iy) {
    const auto ul = static_cast<std::uint64_t>(level & 0xff);
    const auto ux = static_cast<std::uint64_t>(ix) & 0xfffffffULL;
    const auto uy = static_cast<std::uint64_t>(iy) & 0xfffffffULL;
    return (ul << 56) | (ux << 28) | uy;
  }

  static Key key_of(Complex p, double a2) {
    const int level = static_cast<int>(std::floor(std::log2(a2)));
    const double cell = kCellFactor * std::ldexp(1.0, -level);
    return {pack(level, static_cast<std::int64_t>(std::floor(p.real() / cell)),
                 static_cast<std::int64_t>(std::floor(p.imag() / cell)))};
  }

  std::unordered_map<std::uint64_t, int> head_;
  std::vector<int> next_;
};

// Orbit representative under conjugation by the pi/4 rotation: a is fixed and
// b picks up the phase exp(i j pi/4); the representative has arg b in a sector
// offset away from the symmetry axes of the octagon.
constexpr double kSectorOffset = 0.37;

struct RepChoice {
  MobiusMap rep;
  MobiusMap alternate;
  bool ambiguous = false;
};

MobiusMap rotate_b(const MobiusMap& m, int j) { return {m.a, m.b * std::polar(1.0, j * kPi / 4)}; }

RepChoice representative(const MobiusMap& m) {
  if (m.b == Complex(0)) return {m, m, false};
  const double t = (std::arg(m.b) - kSectorOffset) / (kPi / 4);
  const double fl = std::floor(t);
  const int j = -static_cast<int>(fl);
  const double frac = t - fl;
  RepChoice out{rotate_b(m, j), {}, false};
  if (frac < 1e-9) {
    out.alternate = rotate_b(m, j + 1);
    out.ambiguous = true;
  } else if (frac > 1 - 1e-9) {
    out.alternate = rotate_b(m, j - 1);
    out.ambiguous = true;
  }
  return out;
}

}  // namespace

double matrix_distance(const MobiusMap& m, const MobiusMap& n) {
  return std::min(max_entry(m, n, 1.0), max_entry(m, n, -1.0));
}

DiskPoint mobius_apply(const MobiusMap& m, const DiskPoint& z) {
  Complex w = m.apply(z.value());
  // Isometries keep the open disk invariant; clamp round-off at the rim.
  const double r2 = std::norm(w);
  if (r2 >= 1.0) w *= (1.0 - 1e-16) / std::sqrt(r2);
  return DiskPoint(w);
}

Complex mobius_derivative(const MobiusMap& m, const DiskPoint& z) { return m.derivative(z.value()); }

double unit_curvature_distance(Complex z1, Complex z2) {
  const double s = std::abs((z1 - z2) / (1.0 - std::conj(z2) * z1));
  return 2.0 * std::atanh(s);
}

double rho_distance(Complex z1, Complex z2) { return std::sqrt(2.0) * unit_curvature_distance(z1, z2); }

ConformalData rho_conformal(Complex z) {
  const double x = z.real();
  const double y = z.imag();
  const double s = 1.0 - x * x - y * y;
  if (!(s > 0)) throw DomainError("conformal factor requested outside the unit disk");
  ConformalData d;
  d.e2f = 8.0 / (s * s);
  d.f1 = 2.0 * x / s;
  d.f2 = 2.0 * y / s;
  d.f11 = 2.0 / s + 4.0 * x * x / (s * s);
  d.f12 = 4.0 * x * y / (s * s);
  d.f22 = 2.0 / s + 4.0 * y * y / (s * s);
  return d;
}

double rho_gauss_curvature(Complex z) {
  const ConformalData d = rho_conformal(z);
  return -(d.f11 + d.f22) / d.e2f;
}

// ---------------------------------------------------------------------------

Octagon Octagon::regular() {
  Octagon o;
  // Regular n-gon with interior angle alpha: cosh(inradius) = cos(alpha/2)/sin(pi/n),
  // cosh(circumradius) = cot(pi/n) cot(alpha/2). Here n = 8, alpha = pi/4.
  const double cot8 = 1.0 / std::tan(kPi / 8);
  o.inradius = std::acosh(cot8);
  o.circumradius = std::acosh(cot8 * cot8);
  o.vertexRadius = std::tanh(o.circumradius / 2);
  o.midpointRadius = std::tanh(o.inradius / 2);
  const double rm = o.midpointRadius;
  const double centre = (1 + rm * rm) / (2 * rm);
  o.sideRadius = (1 - rm * rm) / (2 * rm);
  for (int k = 0; k < 8; ++k) {
    o.vertices[k] = std::polar(o.vertexRadius, k * kPi / 4);
    o.sideCenters[k] = std::polar(centre, (k + 0.5) * kPi / 4);
  }
  return o;
}

double Octagon::outside_measure(Complex z) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (const Complex& c : sideCenters) worst = std::max(worst, sideRadius - std::abs(z - c));
  return worst;
}

int Octagon::violated_side(Complex z) const {
  int side = -1;
  double worst = 0;
  for (int k = 0; k < 8; ++k) {
    const double v = sideRadius - std::abs(z - sideCenters[k]);
    if (v > worst) {
      worst = v;
      side = k;
    }
  }
  return side;
}

Complex Octagon::side_point(int k, double t) const {
  const Complex v = vertices[((k % 8) + 8) % 8];
  const Complex w = vertices[(((k + 1) % 8) + 8) % 8];
  const MobiusMap to0{Complex(1), -v};  // unnormalized, fine for apply
  const MobiusMap norm0{to0.a / std::sqrt(to0.determinant()), to0.b / std::sqrt(to0.determinant())};
  const Complex tw = norm0.apply(w);
  const double len = std::atanh(std::abs(tw));
  const Complex p = std::tanh(t * len) * tw / std::abs(tw);
  return norm0.inverse().apply(p);
}

double Octagon::interior_angle(int k) const {
  const Complex v = vertices[((k % 8) + 8) % 8];
  const Complex prev = vertices[(((k - 1) % 8) + 8) % 8];
  const Complex next = vertices[(((k + 1) % 8) + 8) % 8];
  // The map z -> (z - v)/(1 - conj(v) z) is conformal with positive real
  // derivative at v and straightens geodesics through v.
  const auto move = [v](Complex z) { return (z - v) / (1.0 - std::conj(v) * z); };
  return std::abs(std::arg(move(prev) / move(next)));
}

// ---------------------------------------------------------------------------

double FuchsianGroup::relation_residual() const {
  MobiusMap prod = MobiusMap::identity();
  for (int k : relationWord) prod = prod * generators[k];
  return matrix_distance(prod, MobiusMap::identity());
}

std::vector<MobiusMap> FuchsianGroup::cached_elements() const {
  std::vector<MobiusMap> out;
  for (const auto& sphere : elementCache) out.insert(out.end(), sphere.begin(), sphere.end());
  return out;
}

namespace {

std::vector<std::vector<MobiusMap>> enumerate_spheres(const std::array<MobiusMap, 8>& gens, int maxWordLen) {
  std::vector<std::vector<MobiusMap>> spheres;
  spheres.push_back({MobiusMap::identity()});
  OriginIndex prevIndex;  // sphere l - 1
  OriginIndex curIndex;   // sphere l
  curIndex.insert(MobiusMap::identity(), 0);
  for (int l = 0; l < maxWordLen; ++l) {
    const auto& cur = spheres[l];
    const std::vector<MobiusMap>* prev = l > 0 ? &spheres[l - 1] : nullptr;
    std::vector<MobiusMap> next;
    OriginIndex nextIndex;
    const auto prevPoint = [prev](int id) { return (*prev)[id].origin_image(); };
    const auto nextPoint = [&next](int id) { return next[id].origin_image(); };
    for (const MobiusMap& m : cur) {
      for (const MobiusMap& g : gens) {
        const MobiusMap cand = (m * g).canonical();
        // Word length parity is well defined (even relator), so a product of
        // length l + 1 is either in sphere l - 1 or sphere l + 1.
        if (prev != nullptr && prevIndex.find(cand, prevPoint) >= 0) continue;
        if (nextIndex.find(cand, nextPoint) >= 0) continue;
        nextIndex.insert(cand, static_cast<int>(next.size()));
        next.push_back(cand);
      }
    }
    prevIndex = std::move(curIndex);
    curIndex = std::move(nextIndex);
    spheres.push_back(std::move(next));
  }
  return spheres;
}

}  // namespace

FuchsianGroup build_bolza_group(int cacheLength) {
  FuchsianGroup g;
  g.octagon = Octagon::regular();
  for (int k = 0; k < 8; ++k) {
    g.generators[k] = MobiusMap::translation((k + 0.5) * kPi / 4, 2 * g.octagon.inradius);
  }
  g.relationWord = {0, 3, 6, 1, 4, 7, 2, 5};
  const double res = g.relation_residual();
  if (!(res <= 1e-10)) {
    throw InternalError("surface group relation fails: residual " + std::to_string(res));
  }
  g.elementCache = enumerate_spheres(g.generators, std::max(cacheLength, 0));
  return g;
}

std::vector<MobiusMap> enumerate_group(const FuchsianGroup& group, int maxWordLen) {
  if (maxWordLen < 0) throw DomainError("maxWordLen must be non-negative");
  std::vector<std::vector<MobiusMap>> spheres;
  if (maxWordLen <= group.cached_length()) {
    spheres.assign(group.elementCache.begin(), group.elementCache.begin() + maxWordLen + 1);
  } else {
    spheres = enumerate_spheres(group.generators, maxWordLen);
  }
  std::vector<MobiusMap> out;
  for (const auto& s : spheres) out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::size_t GroupBall::element_count() const {
  std::size_t n = spheres.empty() ? 0 : spheres[0].size();
  for (std::size_t l = 1; l < spheres.size(); ++l) n += 8 * spheres[l].size();
  return n;
}

std::array<MobiusMap, 8> GroupBall::orbit(const MobiusMap& m) {
  std::array<MobiusMap, 8> out;
  for (int j = 0; j < 8; ++j) out[j] = rotate_b(m, j);
  return out;
}

GroupBall build_group_ball(const FuchsianGroup& group, int maxWordLen) {
  if (maxWordLen < 0) throw DomainError("maxWordLen must be non-negative");
  GroupBall ball;
  ball.maxWordLen = maxWordLen;
  ball.spheres.push_back({MobiusMap::identity()});
  if (maxWordLen == 0) return ball;
  ball.spheres.push_back({representative(group.generators[0]).rep});

  OriginIndex prevIndex;
  prevIndex.insert(MobiusMap::identity(), 0);
  OriginIndex curIndex;
  curIndex.insert(ball.spheres[1][0], 0);

  for (int l = 1; l < maxWordLen; ++l) {
    const auto& cur = ball.spheres[l];
    const auto& prev = ball.spheres[l - 1];
    std::vector<MobiusMap> next;
    next.reserve(cur.size() * 7);
    OriginIndex nextIndex;
    const auto prevPoint = [&prev](int id) { return prev[id].origin_image(); };
    const auto nextPoint = [&next](int id) { return next[id].origin_image(); };
    const auto seen = [&](const MobiusMap& r) {
      return prevIndex.find(r, prevPoint) >= 0 || nextIndex.find(r, nextPoint) >= 0;
    };
    for (const MobiusMap& m : cur) {
      // Conjugating m g_k by the rotation gives (conjugate of m) g_{k+j}, so the
      // representatives times all generators reach every orbit of the next sphere.
      for (const MobiusMap& g : group.generators) {
        const RepChoice rc = representative((m * g).canonical());
        if (seen(rc.rep) || (rc.ambiguous && seen(rc.alternate))) continue;
        nextIndex.insert(rc.rep, static_cast<int>(next.size()));
        next.push_back(rc.rep);
      }
    }
    prevIndex = std::move(curIndex);
    curIndex = std::move(nextIndex);
    ball.spheres.push_back(std::move(next));
  }
  return ball;
}

Reduction reduce_to_domain(const FuchsianGroup& group, const DiskPoint& z, int wordBudget) {
  constexpr double kInsideTol = 1e-12;
  Complex w = z.value();
  MobiusMap total = MobiusMap::identity();
  int letters = 0;
  while (group.octagon.outside_measure(w) > kInsideTol) {
    if (letters >= wordBudget) {
      throw OutOfCollarError("point " + std::to_string(z.re()) + (z.im() < 0 ? "" : "+") + std::to_string(z.im()) +
                             "i not reducible within " + std::to_string(wordBudget) + " side pairings");
    }
    int best = -1;
    double bestR = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 8; ++k) {
      if (group.octagon.sideRadius - std::abs(w - group.octagon.sideCenters[k]) <= kInsideTol) continue;
      const double r = std::abs(group.generators[FuchsianGroup::inverse_index(k)].apply(w));
      if (r < bestR) {
        bestR = r;
        best = k;
      }
    }
    const MobiusMap& step = group.generators[FuchsianGroup::inverse_index(best)];
    w = step.apply(w);
    total = (step * total).canonical();
    ++letters;
  }
  return {DiskPoint(w), total, letters};
}

std::vector<MobiusMap> neighbor_tiles(const FuchsianGroup& group) {
  const double reach = 2 * group.octagon.circumradius + 1e-6;
  std::vector<MobiusMap> out;
  for (const MobiusMap& m : group.cached_elements()) {
    if (unit_curvature_distance(0, m.origin_image()) <= reach) out.push_back(m);
  }
  return out;
}

}  // namespace moncrief
