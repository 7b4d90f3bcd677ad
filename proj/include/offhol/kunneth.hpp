#pragma once

/// Kunneth bookkeeping for degree-3 classes on a two-factor product.
///
/// A class is stored as coefficient blocks against the orthonormal product
/// harmonic basis {a_i ^ b_j}, one block per bidegree (p, q), p + q = 3.
/// Each bidegree block is an order-2 tensor, so the minimal number of simple
/// terms in it is exactly its matrix rank.

#include "offhol/forms.hpp"
#include "offhol/geometry.hpp"
#include "offhol/tensor.hpp"

#include <optional>
#include <string>
#include <vector>

namespace offhol {

struct KunnethClass {
  DenseTensor C30;  ///< b3(M1) x b0(M2)
  DenseTensor C21;  ///< b2(M1) x b1(M2)
  DenseTensor C12;  ///< b1(M1) x b2(M2)
  DenseTensor C03;  ///< b0(M1) x b3(M2)
  std::string basis_ref = "catalog-orthonormal";

  /// Bidegree (p, 3 - p) block, p in 0..3.
  const DenseTensor& block(int p) const {
    switch (p) {
      case 3: return C30;
      case 2: return C21;
      case 1: return C12;
      case 0: return C03;
    }
    throw ArgumentError("KunnethClass: bidegree out of range");
  }
  DenseTensor& block(int p) { return const_cast<DenseTensor&>(std::as_const(*this).block(p)); }

  /// All-zero class with block shapes from the factors' Betti numbers.
  static KunnethClass zero(const ProductManifold& M) {
    KunnethClass c;
    for (int p = 0; p <= 3; ++p)
      c.block(p) = DenseTensor({betti(M.factor1(), p), betti(M.factor2(), 3 - p)});
    return c;
  }

  double max_abs() const {
    double m = 0.0;
    for (int p = 0; p <= 3; ++p) m = std::max(m, block(p).max_abs());
    return m;
  }
};

/// Throws ArgumentError unless every block matches the factors' Betti numbers.
inline void validate_class(const ProductManifold& M, const KunnethClass& cls) {
  static const char* names[] = {"C03", "C12", "C21", "C30"};
  for (int p = 0; p <= 3; ++p) {
    const std::vector<Index> want = {betti(M.factor1(), p), betti(M.factor2(), 3 - p)};
    if (cls.block(p).shape() != want)
      throw ArgumentError(std::string("KunnethClass: block ") + names[p] + " has shape " +
                          detail::shape_string(cls.block(p).shape()) + ", Betti numbers of " + M.name() +
                          " require " + detail::shape_string(want));
  }
}

inline double max_abs_diff(const KunnethClass& a, const KunnethClass& b) {
  double m = 0.0;
  for (int p = 0; p <= 3; ++p) m = std::max(m, max_abs_diff(a.block(p), b.block(p)));
  return m;
}

/// The mixed blocks (C21, C12), after validating the class against M.
inline std::pair<DenseTensor, DenseTensor> mixed_projections(const ProductManifold& M, const KunnethClass& cls) {
  validate_class(M, cls);
  return {cls.C21, cls.C12};
}

/// sum over bidegrees of C_{ij} a_i ^ b_j: the harmonic representative of
/// the class for the product metric of M.
inline FormField harmonic_representative(const ProductManifold& M, const KunnethClass& cls) {
  validate_class(M, cls);
  FormField F(M, 3);
  for (int p = 0; p <= 3; ++p) {
    const DenseTensor& C = cls.block(p);
    if (C.size() == 0) continue;
    const auto b1 = harmonic_basis(M.factor1(), p);
    const auto b2 = harmonic_basis(M.factor2(), 3 - p);
    for (Index i = 0; i < b1.size(); ++i)
      for (Index j = 0; j < b2.size(); ++j)
        if (C(i, j) != 0.0) F.add(C(i, j), b1[i], b2[j]);
  }
  return F;
}

struct MixedRankReport {
  Index r21 = 0;
  Index r12 = 0;
  Index total = 0;
  std::vector<double> singular_values_21;
  std::vector<double> singular_values_12;
  Index component_count = 0;
  bool is_mixed = false;
  double tolerance = kDefaultRankTol;
};

/// Mixed tensor rank r21 + r12, plus the basis-dependent count of nonzero
/// mixed coefficients. `floor_scale` anchors the relative cut when the class
/// came from quadrature and may carry round-off (pass the L2 norm of the
/// projected form).
inline MixedRankReport mixed_rank(const KunnethClass& cls, double tol = kDefaultRankTol, double floor_scale = 0.0) {
  MixedRankReport r;
  r.tolerance = tol;
  const auto s21 = numerical_rank(cls.C21, tol, floor_scale);
  const auto s12 = numerical_rank(cls.C12, tol, floor_scale);
  r.r21 = s21.rank;
  r.r12 = s12.rank;
  r.total = r.r21 + r.r12;
  r.singular_values_21 = s21.singular_values;
  r.singular_values_12 = s12.singular_values;
  const double max_entry = std::max({cls.C21.max_abs(), cls.C12.max_abs(), floor_scale});
  if (max_entry > 0.0) {
    for (const DenseTensor* C : {&cls.C21, &cls.C12})
      for (double v : C->data())
        if (std::abs(v) > tol * max_entry) ++r.component_count;
  }
  r.is_mixed = r.total > 0;
  return r;
}

struct ProjectionResult {
  KunnethClass cls;
  double l2_norm = 0.0;  ///< |F|_{L2} on the same grid
};

/// L2 projection of a closed 3-form onto the orthonormal product harmonic
/// basis. The field is any callable ChartPoint -> AntisymmetricForm.
template <typename Field>
ProjectionResult project_form_to_class(const Field& F, const ProductManifold& M,
                                       std::span<const QuadratureNode> grid) {
  if (grid.empty()) throw ArgumentError("project_form_to_class: empty quadrature grid");
  for (const auto& node : grid)
    if (node.point.size() != M.dim())
      throw ArgumentError("project_form_to_class: grid does not belong to " + M.name());

  struct Target {
    int p;
    Index i, j;
    FormMonomial mono;
    CompensatedSum sum;
  };
  std::vector<Target> targets;
  for (int p = 0; p <= 3; ++p) {
    const auto b1 = harmonic_basis(M.factor1(), p);
    const auto b2 = harmonic_basis(M.factor2(), 3 - p);
    for (Index i = 0; i < b1.size(); ++i)
      for (Index j = 0; j < b2.size(); ++j) targets.push_back({p, i, j, {1.0, b1[i], b2[j]}, {}});
  }

  CompensatedSum norm2;
  for (const auto& node : grid) {
    const DenseTensor ginv = inverse(detail::metric_unchecked(M, node.point));
    const AntisymmetricForm f = F(node.point);
    if (f.degree() != 3 || f.dim() != M.dim()) throw ArgumentError("project_form_to_class: field must be a 3-form on " + M.name());
    const AntisymmetricForm up = detail::raise_all(f, ginv);
    auto inner_up = [&](const AntisymmetricForm& a) {
      double s = 0.0;
      for (Index i = 0; i < up.entries().size(); ++i) s += a.entries().data()[i] * up.entries().data()[i];
      return s / 6.0;  // 1/3!
    };
    norm2.add(node.weight * inner_up(f));
    for (auto& t : targets) t.sum.add(node.weight * inner_up(detail::monomial_value(M, t.mono, node.point)));
  }

  ProjectionResult out{KunnethClass::zero(M), std::sqrt(std::max(0.0, norm2.value()))};
  for (const auto& t : targets) out.cls.block(t.p)(t.i, t.j) = t.sum.value();
  return out;
}

// ---------------------------------------------------------------------------
// Metric sweeps.

/// Catalog metric overrides. Unset fields keep the reference value.
struct MetricParams {
  std::optional<double> sphere_radius;
  std::optional<std::vector<double>> torus_periods;  ///< all torus coordinates, factor order
  double period_scale = 1.0;

  std::string label() const {
    std::string s;
    if (sphere_radius) s += "radius=" + std::to_string(*sphere_radius) + " ";
    if (torus_periods) {
      s += "periods=";
      for (Index i = 0; i < torus_periods->size(); ++i) s += (i ? "," : "") + std::to_string((*torus_periods)[i]);
      s += " ";
    }
    s += "period_scale=" + std::to_string(period_scale);
    return s;
  }
};

inline ProductManifold apply_metric(const ProductManifold& M, const MetricParams& params) {
  if (!(params.period_scale > 0.0)) throw ArgumentError("MetricParams: period_scale must be positive");
  Index torus_cursor = 0;
  auto adjust = [&](const FactorManifold& f) {
    if (f.is_sphere()) return FactorManifold::sphere(params.sphere_radius.value_or(f.as_sphere().radius), f.name());
    std::vector<double> periods = f.as_torus().periods;
    for (double& L : periods) {
      if (params.torus_periods) {
        if (torus_cursor >= params.torus_periods->size())
          throw ArgumentError("MetricParams: too few torus periods for " + M.name());
        L = (*params.torus_periods)[torus_cursor];
      }
      ++torus_cursor;
      L *= params.period_scale;
    }
    return FactorManifold::torus(std::move(periods), f.name());
  };
  FactorManifold f1 = adjust(M.factor1());
  FactorManifold f2 = adjust(M.factor2());
  if (params.torus_periods && torus_cursor != params.torus_periods->size())
    throw ArgumentError("MetricParams: too many torus periods for " + M.name());
  return ProductManifold(std::move(f1), std::move(f2), M.pole_margin());
}

/// Re-expresses a class given in the orthonormal basis of `from` in the
/// orthonormal basis of `to`, holding the periods (the de Rham class) fixed.
inline KunnethClass transport_class(const ProductManifold& from, const ProductManifold& to, const KunnethClass& cls) {
  validate_class(from, cls);
  KunnethClass out = KunnethClass::zero(to);
  for (int p = 0; p <= 3; ++p) {
    const auto a1 = harmonic_basis(from.factor1(), p), a2 = harmonic_basis(from.factor2(), 3 - p);
    const auto b1 = harmonic_basis(to.factor1(), p), b2 = harmonic_basis(to.factor2(), 3 - p);
    for (Index i = 0; i < a1.size(); ++i)
      for (Index j = 0; j < a2.size(); ++j)
        out.block(p)(i, j) = cls.block(p)(i, j) * (a1[i].period * a2[j].period) / (b1[i].period * b2[j].period);
  }
  return out;
}

struct SweepEntry {
  MetricParams params;
  ProductManifold manifold;
  KunnethClass projected;
  MixedRankReport report;
  bool rank_stable = true;  ///< same total at tol/10 and tol*10
};

/// For each metric: rebuild the harmonic representative of the same de Rham
/// class, project it back onto the new orthonormal basis by quadrature, and
/// rank the result.
inline std::vector<SweepEntry> metric_independence_sweep(const ProductManifold& reference, const KunnethClass& cls,
                                                         std::span<const MetricParams> metric_params,
                                                         double tol = kDefaultRankTol,
                                                         std::optional<QuadratureResolution> resolution = {}) {
  if (metric_params.empty()) throw ArgumentError("metric_independence_sweep: no metric parameters");
  std::vector<SweepEntry> out;
  for (const auto& params : metric_params) {
    ProductManifold M = apply_metric(reference, params);
    const KunnethClass moved = transport_class(reference, M, cls);
    const FormField omega = harmonic_representative(M, moved);
    const auto grid = quadrature_grid(M, resolution.value_or(default_resolution(M)));
    auto proj = project_form_to_class(omega, M, grid);
    SweepEntry e{params, M, proj.cls, mixed_rank(proj.cls, tol, proj.l2_norm), true};
    e.rank_stable = mixed_rank(proj.cls, tol / 10.0, proj.l2_norm).total == e.report.total &&
                    mixed_rank(proj.cls, tol * 10.0, proj.l2_norm).total == e.report.total;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace offhol
