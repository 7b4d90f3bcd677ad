#pragma once

/// Metric connection with totally skew torsion, nabla = nabla^LC + K with
/// K_{XYZ} = T_{XYZ} / 2, its curvature at a chart point, and the identity
/// checks that certify the implementation.
///
/// Index conventions (all arrays l-first):
///   Gamma(l, i, j) = Gamma^l_{ij},  nabla_{e_i} e_j = Gamma^l_{ij} e_l
///   Tvec(l, i, j)  = T^l_{ij} = g^{lm} T_{ijm},  T(X,Y,Z) = g(T(X,Y), Z)
///   R(l, k, i, j)  = R^l_{kij},  R(e_i, e_j) e_k = R^l_{kij} e_l
///
/// Curvature is assembled from the total coefficients,
///   R^l_{kij} = d_i Gamma^l_{jk} - d_j Gamma^l_{ik}
///             + Gamma^l_{im} Gamma^m_{jk} - Gamma^l_{jm} Gamma^m_{ik},
/// and the split R^C = R^LC + (1/2)(nabla T terms) + (1/4) Q_T is only used
/// as a cross-check (qt_residual).

#include "offhol/forms.hpp"
#include "offhol/geometry.hpp"
#include "offhol/kunneth.hpp"
#include "offhol/tensor.hpp"

#include <optional>

namespace offhol {

struct TorsionSpec {
  FormField form;

  const ProductManifold& manifold() const { return form.manifold(); }
};

inline TorsionSpec zero_torsion(const ProductManifold& M) { return {FormField(M, 3)}; }

/// Harmonic representative of the class plus an optional exact perturbation.
inline TorsionSpec torsion_from_class(const ProductManifold& M, const KunnethClass& cls,
                                      std::optional<FormPerturbation> perturbation = {}) {
  FormField F = harmonic_representative(M, cls);
  if (perturbation) F.set_perturbation(std::move(*perturbation));
  return {std::move(F)};
}

inline TorsionSpec scaled(const TorsionSpec& T, double lambda) { return {T.form.scaled(lambda)}; }

/// How the torsion enters the connection. `symmetrized` is a negative
/// control: K_{ijm} = |T_{ijm}| / 2 is symmetric, so the connection is no
/// longer metric.
enum class Contorsion { skew, symmetrized };

struct CurvatureOptions {
  double h = 1e-4;  ///< finite-difference step, scaled per coordinate
  DerivativeMode mode = DerivativeMode::analytic;
  Contorsion contorsion = Contorsion::skew;
};

struct ConnectionCoeffs {
  ChartPoint point;
  DenseTensor gamma_total;  ///< Gamma^l_{ij}
};

namespace detail {

/// T^l_{ij} from the lowered form values: g^{lm} T_{ijm}, stored (l, i, j).
inline DenseTensor raise_torsion(const DenseTensor& ginv, const AntisymmetricForm& T) {
  const Index n = T.dim();
  DenseTensor out({n, n, n});
  for (Index l = 0; l < n; ++l)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        double s = 0.0;
        for (Index m = 0; m < n; ++m) s += ginv(l, m) * T(i, j, m);
        out(l, i, j) = s;
      }
  return out;
}

inline DenseTensor contorsion_lowered(const AntisymmetricForm& T, Contorsion mode) {
  DenseTensor K = T.entries() * 0.5;
  if (mode == Contorsion::symmetrized)
    for (double& v : K.data()) v = std::abs(v);
  return K;
}

/// K^l_{ij} = g^{lm} K_{ijm}.
inline DenseTensor contorsion_raised(const DenseTensor& ginv, const AntisymmetricForm& T, Contorsion mode) {
  const DenseTensor K = contorsion_lowered(T, mode);
  const Index n = T.dim();
  DenseTensor out({n, n, n});
  for (Index l = 0; l < n; ++l)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        double s = 0.0;
        for (Index m = 0; m < n; ++m) s += ginv(l, m) * K(i, j, m);
        out(l, i, j) = s;
      }
  return out;
}

inline void require_torsion_on(const ProductManifold& M, const TorsionSpec& T) {
  if (!(T.manifold() == M)) throw ArgumentError("torsion lives on a different manifold");
  if (T.form.degree() != 3) throw ArgumentError("torsion must be a 3-form");
}

inline DenseTensor gamma_unchecked(const ProductManifold& M, const TorsionSpec& T, const ChartPoint& p,
                                   Contorsion mode) {
  const DenseTensor ginv = inverse(metric_unchecked(M, p));
  return christoffel_unchecked(M, p) + contorsion_raised(ginv, T.form(p), mode);
}

/// d_a Gamma^l_{ij} for every a.
inline std::vector<DenseTensor> gamma_partials(const ProductManifold& M, const TorsionSpec& T, const ChartPoint& p,
                                               const CurvatureOptions& opt) {
  const Index n = M.dim();
  const auto steps = fd_steps(M, opt.h);
  std::vector<DenseTensor> dG;
  dG.reserve(n);
  if (opt.mode == DerivativeMode::finite_difference) {
    require_stencil(M, p, steps);
    for (Index a = 0; a < n; ++a) {
      const DenseTensor plus = gamma_unchecked(M, T, p.shifted(a, steps[a]), opt.contorsion);
      const DenseTensor minus = gamma_unchecked(M, T, p.shifted(a, -steps[a]), opt.contorsion);
      dG.push_back((plus - minus) * (0.5 / steps[a]));
    }
    return dG;
  }
  const DenseTensor g = metric_unchecked(M, p);
  const DenseTensor ginv = inverse(g);
  const AntisymmetricForm Tp = T.form(p);
  for (Index a = 0; a < n; ++a) {
    // d(g^{-1}) = -g^{-1} (dg) g^{-1}
    const DenseTensor dginv = matmul(matmul(ginv, metric_derivative_at(M, p, a)), ginv) * -1.0;
    AntisymmetricForm dT = T.form.partial(p, a, opt.h);
    DenseTensor dK;
    if (opt.contorsion == Contorsion::symmetrized) {
      // d|x| = sign(x) dx
      DenseTensor s = dT.entries() * 0.5;
      for (Index q = 0; q < s.size(); ++q) s.data()[q] *= Tp.entries().data()[q] >= 0.0 ? 1.0 : -1.0;
      dK = s;
    } else {
      dK = dT.entries() * 0.5;
    }
    const DenseTensor K = contorsion_lowered(Tp, opt.contorsion);
    DenseTensor dKr({n, n, n});
    for (Index l = 0; l < n; ++l)
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
          double s = 0.0;
          for (Index m = 0; m < n; ++m) s += dginv(l, m) * K(i, j, m) + ginv(l, m) * dK(i, j, m);
          dKr(l, i, j) = s;
        }
    dG.push_back(christoffel_lc_derivative(M, p, a) + dKr);
  }
  return dG;
}

}  // namespace detail

/// Gamma = Gamma^LC + K at p, K^l_{ij} = (1/2) T^l_{ij}.
inline ConnectionCoeffs connection_coeffs(const ProductManifold& M, const TorsionSpec& T, const ChartPoint& p,
                                          Contorsion mode = Contorsion::skew) {
  detail::require_torsion_on(M, T);
  require_in_chart(M, p);
  return {p, detail::gamma_unchecked(M, T, p, mode)};
}

/// Torsion of arbitrary coefficients: Gamma^l_{ij} - Gamma^l_{ji}.
inline DenseTensor torsion_of(const DenseTensor& gamma) {
  const Index n = gamma.extent(0);
  DenseTensor out({n, n, n});
  for (Index l = 0; l < n; ++l)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) out(l, i, j) = gamma(l, i, j) - gamma(l, j, i);
  return out;
}

/// T^l_{ij} of the torsion spec at p.
inline DenseTensor torsion_vector_valued(const ProductManifold& M, const TorsionSpec& T, const ChartPoint& p) {
  detail::require_torsion_on(M, T);
  require_in_chart(M, p);
  return detail::raise_torsion(inverse(metric_at(M, p)), T.form(p));
}

struct CurvatureAtPoint {
  ChartPoint point;
  DenseTensor R;  ///< R^l_{kij}, shape n^4
  double h = 0.0;
  DerivativeMode mode = DerivativeMode::analytic;

  Index dim() const { return R.extent(0); }

  /// The endomorphism R(e_i, e_j) as a matrix (l, k).
  DenseTensor endomorphism(Index i, Index j) const {
    const Index n = dim();
    DenseTensor E({n, n});
    for (Index l = 0; l < n; ++l)
      for (Index k = 0; k < n; ++k) E(l, k) = R(l, k, i, j);
    return E;
  }
};

/// R from coefficients and their partials (dG[a] = d_a Gamma).
inline DenseTensor curvature_from_coefficients(const DenseTensor& G, std::span<const DenseTensor> dG) {
  const Index n = G.extent(0);
  DenseTensor R({n, n, n, n});
  for (Index l = 0; l < n; ++l)
    for (Index k = 0; k < n; ++k)
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
          double s = dG[i](l, j, k) - dG[j](l, i, k);
          for (Index m = 0; m < n; ++m) s += G(l, i, m) * G(m, j, k) - G(l, j, m) * G(m, i, k);
          R(l, k, i, j) = s;
        }
  return R;
}

inline CurvatureAtPoint curvature_at(const ProductManifold& M, const TorsionSpec& T, const ChartPoint& p,
                                     const CurvatureOptions& opt = {}) {
  detail::require_torsion_on(M, T);
  require_in_chart(M, p);
  const DenseTensor G = detail::gamma_unchecked(M, T, p, opt.contorsion);
  const auto dG = detail::gamma_partials(M, T, p, opt);
  return {p, curvature_from_coefficients(G, dG), opt.h, opt.mode};
}

namespace detail {

/// Partials of the lowered torsion components, by opt.mode.
inline std::vector<AntisymmetricForm> torsion_partials(const ProductManifold& M, const TorsionSpec& T,
                                                       const ChartPoint& p, const CurvatureOptions& opt) {
  const auto steps = fd_steps(M, opt.h);
  if (opt.mode == DerivativeMode::finite_difference) {
    require_stencil(M, p, steps);
    return central_partials(T.form, p, steps);
  }
  std::vector<AntisymmetricForm> out;
  for (Index a = 0; a < M.dim(); ++a) out.push_back(T.form.partial(p, a, opt.h));
  return out;
}

}  // namespace detail

/// (nabla^LC_i T)_{jkm}, stored (i, j, k, m).
inline DenseTensor levi_civita_derivative_of_torsion(const ProductManifold& M, const TorsionSpec& T,
                                                     const ChartPoint& p, const CurvatureOptions& opt = {}) {
  detail::require_torsion_on(M, T);
  require_in_chart(M, p);
  const Index n = M.dim();
  const DenseTensor G = christoffel_lc(M, p);
  const AntisymmetricForm Tp = T.form(p);
  const auto dT = detail::torsion_partials(M, T, p, opt);
  DenseTensor out({n, n, n, n});
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k)
        for (Index m = 0; m < n; ++m) {
          double s = dT[i](j, k, m);
          for (Index q = 0; q < n; ++q)
            s -= G(q, i, j) * Tp(q, k, m) + G(q, i, k) * Tp(j, q, m) + G(q, i, m) * Tp(j, k, q);
          out(i, j, k, m) = s;
        }
  return out;
}

/// The (nabla T)-linear part of the curvature split, as an R-shaped array:
/// g^{lm} [ (nabla_i T)_{jkm} - (nabla_j T)_{ikm} ].
inline DenseTensor torsion_derivative_term(const ProductManifold& M, const TorsionSpec& T, const ChartPoint& p,
                                           const CurvatureOptions& opt = {}) {
  const Index n = M.dim();
  const DenseTensor DT = levi_civita_derivative_of_torsion(M, T, p, opt);
  const DenseTensor ginv = inverse(metric_at(M, p));
  DenseTensor A({n, n, n, n});
  for (Index l = 0; l < n; ++l)
    for (Index k = 0; k < n; ++k)
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
          double s = 0.0;
          for (Index m = 0; m < n; ++m) s += ginv(l, m) * (DT(i, j, k, m) - DT(j, i, k, m));
          A(l, k, i, j) = s;
        }
  return A;
}

/// Q_T defined operationally: 4 (R^C - R^LC - (1/2) nabla^LC T terms).
/// Vanishes for T = 0 and is quadratic in T.
inline DenseTensor qt_residual(const ProductManifold& M, const TorsionSpec& T, const ChartPoint& p,
                               const CurvatureOptions& opt = {}) {
  const DenseTensor RC = curvature_at(M, T, p, opt).R;
  const DenseTensor RLC = curvature_at(M, zero_torsion(M), p, opt).R;
  const DenseTensor A = torsion_derivative_term(M, T, p, opt);
  return (RC - RLC - A * 0.5) * 4.0;
}

/// max |d_i g_{jk} - Gamma^m_{ij} g_{mk} - Gamma^m_{ik} g_{jm}|.
inline double metricity_residual(const ProductManifold& M, const ConnectionCoeffs& C, const CurvatureOptions& opt = {}) {
  const ChartPoint& p = C.point;
  const Index n = M.dim();
  const DenseTensor g = metric_at(M, p);
  // Finite-difference mode uses the fourth-order central stencil so the
  // truncation error sits well below the 1e-8 metricity threshold.
  const auto steps = fd_steps(M, opt.h);
  if (opt.mode == DerivativeMode::finite_difference) require_stencil(M, p, fd_steps(M, 2.0 * opt.h));
  auto g_at = [&](Index i, double t) { return detail::metric_unchecked(M, p.shifted(i, t)); };
  double worst = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double s1 = steps[i];
    const DenseTensor dg = opt.mode == DerivativeMode::analytic
                               ? metric_derivative_at(M, p, i)
                               : (g_at(i, s1) * 8.0 - g_at(i, -s1) * 8.0 - g_at(i, 2 * s1) + g_at(i, -2 * s1)) *
                                     (1.0 / (12.0 * s1));
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k) {
        double s = dg(j, k);
        for (Index m = 0; m < n; ++m) s -= C.gamma_total(m, i, j) * g(m, k) + C.gamma_total(m, i, k) * g(j, m);
        worst = std::max(worst, std::abs(s));
      }
  }
  return worst;
}

inline double metricity_check(const ProductManifold& M, const TorsionSpec& T, const ChartPoint& p,
                              const CurvatureOptions& opt = {}) {
  return metricity_residual(M, connection_coeffs(M, T, p, opt.contorsion), opt);
}

/// max |g_{lm} R^m_{kij} + g_{km} R^m_{lij}|: zero iff every curvature
/// endomorphism lies in so(T_pM, g).
inline double curvature_skewness(const ProductManifold& M, const CurvatureAtPoint& R) {
  const DenseTensor g = metric_at(M, R.point);
  const Index n = M.dim();
  double worst = 0.0;
  for (Index l = 0; l < n; ++l)
    for (Index k = 0; k < n; ++k)
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
          double s = 0.0;
          for (Index m = 0; m < n; ++m) s += g(l, m) * R.R(m, k, i, j) + g(k, m) * R.R(m, l, i, j);
          worst = std::max(worst, std::abs(s));
        }
  return worst;
}

/// max |R^l_{kij} + R^l_{kji}|.
inline double curvature_antisymmetry(const CurvatureAtPoint& R) {
  const Index n = R.dim();
  double worst = 0.0;
  for (Index l = 0; l < n; ++l)
    for (Index k = 0; k < n; ++k)
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) worst = std::max(worst, std::abs(R.R(l, k, i, j) + R.R(l, k, j, i)));
  return worst;
}

/// Residual of the first Bianchi identity with torsion,
///   sum_cyc(X,Y,Z) [ R(X,Y)Z - T(T(X,Y),Z) - (nabla_X T)(Y,Z) ] = 0,
/// over all coordinate triples, nabla the full connection.
inline double bianchi_cyclic_check(const ProductManifold& M, const TorsionSpec& T, const ChartPoint& p,
                                   const CurvatureOptions& opt = {}) {
  const Index n = M.dim();
  const CurvatureAtPoint curv = curvature_at(M, T, p, opt);
  const DenseTensor G = detail::gamma_unchecked(M, T, p, opt.contorsion);
  const DenseTensor g = metric_at(M, p);
  const DenseTensor ginv = inverse(g);
  const AntisymmetricForm Tp = T.form(p);
  const DenseTensor Tv = detail::raise_torsion(ginv, Tp);
  const auto dTlow = detail::torsion_partials(M, T, p, opt);

  // nabla_i T^l_{jk} = d_i T^l_{jk} + G^l_{im} T^m_{jk} - G^m_{ij} T^l_{mk} - G^m_{ik} T^l_{jm}
  DenseTensor DT({n, n, n, n});  // (i, l, j, k)
  for (Index i = 0; i < n; ++i) {
    const DenseTensor dginv = matmul(matmul(ginv, metric_derivative_at(M, p, i)), ginv) * -1.0;
    for (Index l = 0; l < n; ++l)
      for (Index j = 0; j < n; ++j)
        for (Index k = 0; k < n; ++k) {
          double s = 0.0;
          for (Index m = 0; m < n; ++m) {
            s += dginv(l, m) * Tp(j, k, m) + ginv(l, m) * dTlow[i](j, k, m);
            s += G(l, i, m) * Tv(m, j, k) - G(m, i, j) * Tv(l, m, k) - G(m, i, k) * Tv(l, j, m);
          }
          DT(i, l, j, k) = s;
        }
  }

  auto term = [&](Index l, Index i, Index j, Index k) {
    double tt = 0.0;
    for (Index m = 0; m < n; ++m) tt += Tv(m, i, j) * Tv(l, m, k);
    return curv.R(l, k, i, j) - tt - DT(i, l, j, k);
  };
  double worst = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k)
        for (Index l = 0; l < n; ++l)
          worst = std::max(worst, std::abs(term(l, i, j, k) + term(l, j, k, i) + term(l, k, i, j)));
  return worst;
}

/// Largest |R^l_{kij}| over index tuples that are not all in one factor.
inline double max_mixed_component(const DenseTensor& R, Index split) {
  const Index n = R.extent(0);
  double worst = 0.0;
  for (Index l = 0; l < n; ++l)
    for (Index k = 0; k < n; ++k)
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
          const bool a = l < split, b = k < split, c = i < split, d = j < split;
          if (a == b && b == c && c == d) continue;
          worst = std::max(worst, std::abs(R(l, k, i, j)));
        }
  return worst;
}

/// Largest |R^l_{kij}| with l and k in different factors (the part of each
/// endomorphism exchanging V1 and V2).
inline double max_off_block_component(const DenseTensor& R, Index split) {
  const Index n = R.extent(0);
  double worst = 0.0;
  for (Index l = 0; l < n; ++l)
    for (Index k = 0; k < n; ++k) {
      if ((l < split) == (k < split)) continue;
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) worst = std::max(worst, std::abs(R(l, k, i, j)));
    }
  return worst;
}

}  // namespace offhol
