#pragma once

/// Closed-form catalog of factor manifolds (flat tori, round 2-spheres) and
/// their Riemannian products: charts, metrics, Levi-Civita Christoffel
/// symbols, and quadrature grids.
///
/// Chart conventions. A flat torus of dimension n uses coordinates
/// x^i in [0, L_i). A round sphere of radius r uses (theta, phi) with the
/// metric r^2 (d theta^2 + sin^2 theta d phi^2); points handed to pointwise
/// operations must keep theta inside (margin, pi - margin). Finite-difference
/// stencils only need to stay inside the open chart (0, pi). Quadrature
/// nodes are placed in cos(theta) and never touch the poles.

#include "offhol/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace offhol {

/// Thrown for points outside a chart or its pole-exclusion margin.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct FlatTorus {
  std::vector<double> periods;
};

struct RoundSphere2 {
  double radius = 1.0;
};

class FactorManifold {
 public:
  using Kind = std::variant<FlatTorus, RoundSphere2>;

  FactorManifold(Kind kind, std::string name) : kind_(std::move(kind)), name_(std::move(name)) {
    if (auto* t = std::get_if<FlatTorus>(&kind_)) {
      if (t->periods.empty()) throw ArgumentError("FlatTorus: dimension must be at least 1");
      for (double L : t->periods)
        if (!(L > 0.0) || !std::isfinite(L)) throw ArgumentError("FlatTorus: periods must be positive");
    } else {
      const double r = std::get<RoundSphere2>(kind_).radius;
      if (!(r > 0.0) || !std::isfinite(r)) throw ArgumentError("RoundSphere2: radius must be positive");
    }
  }

  static FactorManifold torus(std::vector<double> periods, std::string name = "") {
    if (name.empty()) name = "T" + std::to_string(periods.size());
    return FactorManifold(FlatTorus{std::move(periods)}, std::move(name));
  }
  static FactorManifold torus(Index dim, double period = 2.0 * std::numbers::pi) {
    return torus(std::vector<double>(dim, period));
  }
  static FactorManifold sphere(double radius = 1.0, std::string name = "S2") {
    return FactorManifold(RoundSphere2{radius}, std::move(name));
  }

  const Kind& kind() const { return kind_; }
  const std::string& name() const { return name_; }
  bool is_sphere() const { return std::holds_alternative<RoundSphere2>(kind_); }
  bool is_torus() const { return std::holds_alternative<FlatTorus>(kind_); }
  const FlatTorus& as_torus() const { return std::get<FlatTorus>(kind_); }
  const RoundSphere2& as_sphere() const { return std::get<RoundSphere2>(kind_); }

  Index dim() const { return is_torus() ? as_torus().periods.size() : 2; }

  /// Period of coordinate a, or nullopt for the non-periodic sphere theta.
  std::optional<double> period(Index a) const {
    if (is_torus()) return as_torus().periods.at(a);
    if (a == 1) return 2.0 * std::numbers::pi;
    return std::nullopt;
  }

  double volume() const {
    if (is_torus()) {
      double v = 1.0;
      for (double L : as_torus().periods) v *= L;
      return v;
    }
    const double r = as_sphere().radius;
    return 4.0 * std::numbers::pi * r * r;
  }

  /// Natural length unit of coordinate a; finite-difference steps scale by it.
  double coordinate_scale(Index a) const {
    if (is_torus()) return as_torus().periods.at(a) / (2.0 * std::numbers::pi);
    return 1.0;
  }

  friend bool operator==(const FactorManifold& a, const FactorManifold& b) {
    if (a.name_ != b.name_ || a.kind_.index() != b.kind_.index()) return false;
    if (a.is_torus()) return a.as_torus().periods == b.as_torus().periods;
    return a.as_sphere().radius == b.as_sphere().radius;
  }

 private:
  Kind kind_;
  std::string name_;
};

inline constexpr double kDefaultPoleMargin = 0.15;

class ProductManifold {
 public:
  ProductManifold(FactorManifold f1, FactorManifold f2, double pole_margin = kDefaultPoleMargin)
      : factor1_(std::move(f1)), factor2_(std::move(f2)), pole_margin_(pole_margin) {
    if (!(pole_margin_ > 0.0) || pole_margin_ >= std::numbers::pi / 2)
      throw ArgumentError("ProductManifold: pole margin must lie in (0, pi/2)");
  }

  const FactorManifold& factor1() const { return factor1_; }
  const FactorManifold& factor2() const { return factor2_; }
  const FactorManifold& factor(int which) const { return which == 1 ? factor1_ : factor2_; }
  Index n1() const { return factor1_.dim(); }
  Index n2() const { return factor2_.dim(); }
  Index dim() const { return n1() + n2(); }
  Index split() const { return n1(); }
  double pole_margin() const { return pole_margin_; }

  /// Which factor owns global coordinate a, and its local index there.
  std::pair<int, Index> locate(Index a) const { return a < n1() ? std::pair{1, a} : std::pair{2, a - n1()}; }

  double coordinate_scale(Index a) const {
    auto [f, local] = locate(a);
    return factor(f).coordinate_scale(local);
  }

  std::string name() const { return factor1_.name() + "x" + factor2_.name(); }

  friend bool operator==(const ProductManifold& a, const ProductManifold& b) {
    return a.factor1_ == b.factor1_ && a.factor2_ == b.factor2_ && a.pole_margin_ == b.pole_margin_;
  }

 private:
  FactorManifold factor1_;
  FactorManifold factor2_;
  double pole_margin_;
};

struct ChartPoint {
  std::vector<double> coords;

  double operator[](Index i) const { return coords[i]; }
  Index size() const { return coords.size(); }

  ChartPoint shifted(Index axis, double delta) const {
    ChartPoint q = *this;
    q.coords.at(axis) += delta;
    return q;
  }
};

// ---------------------------------------------------------------------------
// Factor-level closed forms. `x` holds the factor's local coordinates.

namespace detail {

inline void check_factor_point(const FactorManifold& f, std::span<const double> x, double margin) {
  if (x.size() != f.dim())
    throw ArgumentError("chart point has " + std::to_string(x.size()) + " coordinates, factor " + f.name() +
                        " needs " + std::to_string(f.dim()));
  for (double v : x)
    if (!std::isfinite(v)) throw DomainError("chart point has a non-finite coordinate");
  if (f.is_sphere()) {
    const double theta = x[0];
    if (!(theta > margin && theta < std::numbers::pi - margin))
      throw DomainError("theta = " + std::to_string(theta) + " outside sphere chart (" + std::to_string(margin) +
                        ", pi - " + std::to_string(margin) + ")");
  }
}

}  // namespace detail

inline DenseTensor factor_metric(const FactorManifold& f, std::span<const double> x) {
  if (f.is_torus()) return DenseTensor::identity(f.dim());
  const double r = f.as_sphere().radius, s = std::sin(x[0]);
  DenseTensor g({2, 2});
  g(0, 0) = r * r;
  g(1, 1) = r * r * s * s;
  return g;
}

/// d g_{ij} / d x^a.
inline DenseTensor factor_metric_derivative(const FactorManifold& f, std::span<const double> x, Index a) {
  DenseTensor dg({f.dim(), f.dim()});
  if (f.is_sphere() && a == 0) {
    const double r = f.as_sphere().radius;
    dg(1, 1) = 2.0 * r * r * std::sin(x[0]) * std::cos(x[0]);
  }
  return dg;
}

/// Gamma^l_{ij} with l first.
inline DenseTensor factor_christoffel(const FactorManifold& f, std::span<const double> x) {
  const Index n = f.dim();
  DenseTensor G({n, n, n});
  if (f.is_sphere()) {
    const double s = std::sin(x[0]), c = std::cos(x[0]);
    G(0, 1, 1) = -s * c;
    G(1, 0, 1) = c / s;
    G(1, 1, 0) = c / s;
  }
  return G;
}

inline DenseTensor factor_christoffel_derivative(const FactorManifold& f, std::span<const double> x, Index a) {
  const Index n = f.dim();
  DenseTensor dG({n, n, n});
  if (f.is_sphere() && a == 0) {
    const double s = std::sin(x[0]);
    dG(0, 1, 1) = -std::cos(2.0 * x[0]);
    dG(1, 0, 1) = -1.0 / (s * s);
    dG(1, 1, 0) = -1.0 / (s * s);
  }
  return dG;
}

// ---------------------------------------------------------------------------
// Product-level operations.

namespace detail {

inline std::span<const double> local_coords(const ProductManifold& M, const ChartPoint& p, int which) {
  std::span<const double> all(p.coords);
  return which == 1 ? all.subspan(0, M.n1()) : all.subspan(M.n1(), M.n2());
}

inline void require_dim(const ProductManifold& M, const ChartPoint& p) {
  if (p.size() != M.dim())
    throw ArgumentError("chart point has " + std::to_string(p.size()) + " coordinates, manifold " + M.name() +
                        " needs " + std::to_string(M.dim()));
}

/// Places factor blocks on the diagonal of an n x n (or n x n x n) array.
inline void place_block2(DenseTensor& out, const DenseTensor& block, Index offset) {
  for (Index i = 0; i < block.extent(0); ++i)
    for (Index j = 0; j < block.extent(1); ++j) out(offset + i, offset + j) = block(i, j);
}

inline void place_block3(DenseTensor& out, const DenseTensor& block, Index offset) {
  const Index m = block.extent(0);
  for (Index l = 0; l < m; ++l)
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) out(offset + l, offset + i, offset + j) = block(l, i, j);
}

/// Metric without the pole-margin check (used at quadrature nodes).
inline DenseTensor metric_unchecked(const ProductManifold& M, const ChartPoint& p) {
  DenseTensor g({M.dim(), M.dim()});
  place_block2(g, factor_metric(M.factor1(), local_coords(M, p, 1)), 0);
  place_block2(g, factor_metric(M.factor2(), local_coords(M, p, 2)), M.n1());
  return g;
}

inline DenseTensor christoffel_unchecked(const ProductManifold& M, const ChartPoint& p) {
  DenseTensor G({M.dim(), M.dim(), M.dim()});
  place_block3(G, factor_christoffel(M.factor1(), local_coords(M, p, 1)), 0);
  place_block3(G, factor_christoffel(M.factor2(), local_coords(M, p, 2)), M.n1());
  return G;
}

}  // namespace detail

/// Throws DomainError unless p respects the pole-exclusion margin.
inline void require_in_chart(const ProductManifold& M, const ChartPoint& p) {
  detail::require_dim(M, p);
  detail::check_factor_point(M.factor1(), detail::local_coords(M, p, 1), M.pole_margin());
  detail::check_factor_point(M.factor2(), detail::local_coords(M, p, 2), M.pole_margin());
}

/// Throws DomainError unless p lies in the open chart (margin 0).
inline void require_in_open_chart(const ProductManifold& M, const ChartPoint& p) {
  detail::require_dim(M, p);
  detail::check_factor_point(M.factor1(), detail::local_coords(M, p, 1), 0.0);
  detail::check_factor_point(M.factor2(), detail::local_coords(M, p, 2), 0.0);
}

/// Throws DomainError unless every point p +- h_a e_a stays in the open chart.
inline void require_stencil(const ProductManifold& M, const ChartPoint& p, std::span<const double> steps) {
  for (Index a = 0; a < M.dim(); ++a) {
    require_in_open_chart(M, p.shifted(a, steps[a]));
    require_in_open_chart(M, p.shifted(a, -steps[a]));
  }
}

/// Per-coordinate finite-difference steps h * coordinate_scale(a).
inline std::vector<double> fd_steps(const ProductManifold& M, double h) {
  if (!(h > 0.0)) throw ArgumentError("finite-difference step must be positive");
  std::vector<double> s(M.dim());
  for (Index a = 0; a < M.dim(); ++a) s[a] = h * M.coordinate_scale(a);
  return s;
}

/// Reduces periodic coordinates into [0, period).
inline ChartPoint canonicalize(const ProductManifold& M, ChartPoint p) {
  detail::require_dim(M, p);
  for (Index a = 0; a < M.dim(); ++a) {
    auto [f, local] = M.locate(a);
    if (auto L = M.factor(f).period(local)) {
      double v = std::fmod(p.coords[a], *L);
      if (v < 0.0) v += *L;
      if (v >= *L) v = 0.0;
      p.coords[a] = v;
    }
  }
  return p;
}

/// Block-diagonal product metric g_1 (+) g_2 at p.
inline DenseTensor metric_at(const ProductManifold& M, const ChartPoint& p) {
  require_in_chart(M, p);
  return detail::metric_unchecked(M, p);
}

inline DenseTensor metric_derivative_at(const ProductManifold& M, const ChartPoint& p, Index a) {
  require_in_open_chart(M, p);
  DenseTensor dg({M.dim(), M.dim()});
  auto [f, local] = M.locate(a);
  const Index off = f == 1 ? 0 : M.n1();
  detail::place_block2(dg, factor_metric_derivative(M.factor(f), detail::local_coords(M, p, f), local), off);
  return dg;
}

/// Closed-form Levi-Civita symbols Gamma^l_{ij} (l first).
inline DenseTensor christoffel_lc(const ProductManifold& M, const ChartPoint& p) {
  require_in_chart(M, p);
  return detail::christoffel_unchecked(M, p);
}

inline DenseTensor christoffel_lc_derivative(const ProductManifold& M, const ChartPoint& p, Index a) {
  require_in_open_chart(M, p);
  DenseTensor dG({M.dim(), M.dim(), M.dim()});
  auto [f, local] = M.locate(a);
  const Index off = f == 1 ? 0 : M.n1();
  detail::place_block3(dG, factor_christoffel_derivative(M.factor(f), detail::local_coords(M, p, f), local), off);
  return dG;
}

/// Levi-Civita symbols from central differences of the metric; an oracle for
/// christoffel_lc that never touches its closed forms.
inline DenseTensor christoffel_fd(const ProductManifold& M, const ChartPoint& p, double h) {
  require_in_chart(M, p);
  const auto steps = fd_steps(M, h);
  require_stencil(M, p, steps);
  const Index n = M.dim();
  std::vector<DenseTensor> dg;
  dg.reserve(n);
  for (Index a = 0; a < n; ++a) {
    DenseTensor plus = detail::metric_unchecked(M, p.shifted(a, steps[a]));
    DenseTensor minus = detail::metric_unchecked(M, p.shifted(a, -steps[a]));
    dg.push_back((plus - minus) * (0.5 / steps[a]));
  }
  const DenseTensor ginv = inverse(detail::metric_unchecked(M, p));
  DenseTensor G({n, n, n});
  for (Index l = 0; l < n; ++l)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        double s = 0.0;
        for (Index m = 0; m < n; ++m)
          s += ginv(l, m) * (dg[i](m, j) + dg[j](m, i) - dg[m](i, j));
        G(l, i, j) = 0.5 * s;
      }
  return G;
}

// ---------------------------------------------------------------------------
// Quadrature.

struct QuadratureNode {
  ChartPoint point;
  double weight;
};

/// Per-factor resolution. A torus uses the first entry for every coordinate
/// (or one entry per coordinate); a sphere uses (n_theta, n_phi), with a
/// single entry meaning n_phi = 2 n_theta.
using FactorResolution = std::vector<int>;

struct QuadratureResolution {
  FactorResolution factor1;
  FactorResolution factor2;
};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw ArgumentError("gauss_legendre: need at least one node");
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/// Nodes on one factor with weights that include the Riemannian volume
/// density, so the weights sum to the factor volume.
inline std::vector<QuadratureNode> factor_quadrature(const FactorManifold& f, const FactorResolution& res) {
  if (res.empty()) throw ArgumentError("quadrature resolution is empty for factor " + f.name());
  for (int r : res)
    if (r < 4) throw ArgumentError("quadrature resolution must be at least 4");
  std::vector<QuadratureNode> nodes;
  if (f.is_torus()) {
    const auto& L = f.as_torus().periods;
    const Index n = L.size();
    std::vector<int> counts(n);
    for (Index a = 0; a < n; ++a) counts[a] = res.size() == n ? res[a] : res[0];
    std::vector<int> idx(n, 0);
    double w = 1.0;
    for (Index a = 0; a < n; ++a) w *= L[a] / counts[a];
    while (true) {
      ChartPoint p{std::vector<double>(n)};
      for (Index a = 0; a < n; ++a) p.coords[a] = L[a] * idx[a] / counts[a];
      nodes.push_back({std::move(p), w});
      Index a = n;
      while (a-- > 0) {
        if (++idx[a] < counts[a]) break;
        idx[a] = 0;
      }
      if (a == static_cast<Index>(-1)) break;
    }
    return nodes;
  }
  const double r = f.as_sphere().radius;
  const int nt = res[0];
  const int np = res.size() > 1 ? res[1] : 2 * res[0];
  auto [x, w] = gauss_legendre(nt);
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < np; ++j)
      nodes.push_back({ChartPoint{{std::acos(x[i]), 2.0 * std::numbers::pi * j / np}},
                       r * r * w[i] * 2.0 * std::numbers::pi / np});
  return nodes;
}

/// Tensor-product grid on M; weights sum to vol(M).
inline std::vector<QuadratureNode> quadrature_grid(const ProductManifold& M, const QuadratureResolution& res) {
  const auto q1 = factor_quadrature(M.factor1(), res.factor1);
  const auto q2 = factor_quadrature(M.factor2(), res.factor2);
  std::vector<QuadratureNode> nodes;
  nodes.reserve(q1.size() * q2.size());
  for (const auto& a : q1)
    for (const auto& b : q2) {
      ChartPoint p{a.point.coords};
      p.coords.insert(p.coords.end(), b.point.coords.begin(), b.point.coords.end());
      nodes.push_back({std::move(p), a.weight * b.weight});
    }
  return nodes;
}

/// Default resolution used by reports: 16 nodes per torus coordinate,
/// 16 x 32 on a sphere.
inline FactorResolution default_resolution(const FactorManifold& f) {
  return f.is_torus() ? FactorResolution{16} : FactorResolution{16, 32};
}

inline QuadratureResolution default_resolution(const ProductManifold& M) {
  return {default_resolution(M.factor1()), default_resolution(M.factor2())};
}

// ---------------------------------------------------------------------------
// Seeded sampling, uniform in chart coordinates within the margins.

class PointSampler {
 public:
  PointSampler(const ProductManifold& M, std::uint64_t seed) : M_(M), rng_(seed) {}

  ChartPoint next() {
    ChartPoint p{std::vector<double>(M_.dim())};
    for (Index a = 0; a < M_.dim(); ++a) {
      auto [f, local] = M_.locate(a);
      const double u = uniform();
      if (auto L = M_.factor(f).period(local)) {
        p.coords[a] = u * *L;
      } else {
        const double m = M_.pole_margin();
        // strictly inside the margin band; u in [0,1)
        p.coords[a] = m + (std::numbers::pi - 2.0 * m) * (0.5 + (u - 0.5) * (1.0 - 1e-9));
      }
    }
    return p;
  }

  std::vector<ChartPoint> take(Index count) {
    std::vector<ChartPoint> pts;
    pts.reserve(count);
    for (Index i = 0; i < count; ++i) pts.push_back(next());
    return pts;
  }

  /// Uniform double in [0, 1) built from the top 53 bits.
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::mt19937_64& engine() { return rng_; }

 private:
  ProductManifold M_;
  std::mt19937_64 rng_;
};

inline std::vector<ChartPoint> sample_points(const ProductManifold& M, Index count, std::uint64_t seed) {
  return PointSampler(M, seed).take(count);
}

}  // namespace offhol
