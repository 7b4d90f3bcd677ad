#pragma once

/// Off-diagonal part of curvature with respect to the product splitting
/// T_pM = V1 + V2, the dimension of the off-diagonal holonomy subspace, and
/// parallel transport around coordinate loops.
///
/// The off-diagonal subspace admits two readings and both are computed:
///  - endomorphism: span of the operators R_off(e_i, e_j), i < j, inside
///    End(T_pM); bounded by n1 * n2 for g-skew operators.
///  - vector: span of the vectors R_off(e_i, e_j) e_k inside T_pM.
/// Reports always say which one ran.

#include "offhol/connection.hpp"
#include "offhol/geometry.hpp"
#include "offhol/tensor.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace offhol {

struct SplitProjectors {
  DenseTensor P1;
  DenseTensor P2;
  Index split = 0;

  static SplitProjectors from_split(Index n, Index split) {
    if (split > n) throw ArgumentError("SplitProjectors: split index exceeds dimension");
    SplitProjectors s{DenseTensor({n, n}), DenseTensor({n, n}), split};
    for (Index i = 0; i < n; ++i) (i < split ? s.P1 : s.P2)(i, i) = 1.0;
    return s;
  }

  static SplitProjectors of(const ProductManifold& M) { return from_split(M.dim(), M.split()); }

  Index dim() const { return P1.extent(0); }
};

/// P1 E P2 + P2 E P1 for a single endomorphism.
inline DenseTensor off_diagonal_part(const DenseTensor& E, const SplitProjectors& s) {
  return matmul(matmul(s.P1, E), s.P2) + matmul(matmul(s.P2, E), s.P1);
}

/// R with every endomorphism R(e_i, e_j) replaced by its off-diagonal block part.
inline DenseTensor r_off(const DenseTensor& R, const SplitProjectors& s) {
  if (R.order() != 4 || R.extent(0) != s.dim())
    throw ArgumentError("r_off: curvature shape " + detail::shape_string(R.shape()) + " does not match split of dim " +
                        std::to_string(s.dim()));
  const Index n = s.dim();
  DenseTensor out(R.shape());
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      DenseTensor E({n, n});
      for (Index l = 0; l < n; ++l)
        for (Index k = 0; k < n; ++k) E(l, k) = R(l, k, i, j);
      const DenseTensor off = off_diagonal_part(E, s);
      for (Index l = 0; l < n; ++l)
        for (Index k = 0; k < n; ++k) out(l, k, i, j) = off(l, k);
    }
  return out;
}

inline DenseTensor r_off(const CurvatureAtPoint& R, const SplitProjectors& s) { return r_off(R.R, s); }

enum class SpanVariant { endomorphism, vector };

inline std::string to_string(SpanVariant v) { return v == SpanVariant::endomorphism ? "endomorphism" : "vector"; }

struct OffDiagReport {
  ChartPoint point;
  SpanVariant variant = SpanVariant::endomorphism;
  Index dimension = 0;
  std::vector<double> singular_values;
  double tolerance = kDefaultRankTol;
  double threshold = 0.0;  ///< absolute singular-value cut applied
  Index generators_sampled = 0;
};

/// Generators of the off-diagonal subspace for the chosen reading.
inline std::vector<DenseTensor> off_generators(const DenseTensor& R, const SplitProjectors& s, SpanVariant variant) {
  const DenseTensor off = r_off(R, s);
  const Index n = s.dim();
  std::vector<DenseTensor> gens;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      if (variant == SpanVariant::endomorphism) {
        DenseTensor E({n, n});
        for (Index l = 0; l < n; ++l)
          for (Index k = 0; k < n; ++k) E(l, k) = off(l, k, i, j);
        gens.push_back(std::move(E));
      } else {
        for (Index k = 0; k < n; ++k) {
          DenseTensor v({n});
          for (Index l = 0; l < n; ++l) v(l) = off(l, k, i, j);
          gens.push_back(std::move(v));
        }
      }
    }
  return gens;
}

/// Span dimension of the off-diagonal generators. The singular-value cut is
/// tol relative to max(largest off singular value, |R|_F), so round-off in a
/// vanishing off-diagonal part is not counted while T -> lambda T rescaling
/// leaves the count unchanged.
inline OffDiagReport off_span_from_curvature(const CurvatureAtPoint& R, const SplitProjectors& s, double tol,
                                             SpanVariant variant) {
  const auto gens = off_generators(R.R, s, variant);
  const auto rank = span_dimension(gens, tol, R.R.frobenius_norm());
  return {R.point, variant, rank.rank, rank.singular_values, tol, rank.threshold, gens.size()};
}

inline OffDiagReport off_span_dimension(const ProductManifold& M, const TorsionSpec& T, const ChartPoint& p,
                                        double tol = kDefaultRankTol,
                                        SpanVariant variant = SpanVariant::endomorphism,
                                        const CurvatureOptions& opt = {}) {
  return off_span_from_curvature(curvature_at(M, T, p, opt), SplitProjectors::of(M), tol, variant);
}

// ---------------------------------------------------------------------------
// Loop holonomy.

namespace detail {

/// Matrix A_a(q) with (A_a)^l_k = Gamma^l_{ak}(q).
inline Eigen::MatrixXd connection_matrix(const ProductManifold& M, const TorsionSpec& T, const ChartPoint& q,
                                         Index a) {
  const DenseTensor G = connection_coeffs(M, T, q).gamma_total;
  const Index n = M.dim();
  Eigen::MatrixXd A(n, n);
  for (Index l = 0; l < n; ++l)
    for (Index k = 0; k < n; ++k) A(l, k) = G(l, a, k);
  return A;
}

/// Transport along start + t * length * e_axis, t in [0, 1]:
/// dV/dt = -length * Gamma_axis(gamma(t)) V, classical RK4.
inline Eigen::MatrixXd transport_edge(const ProductManifold& M, const TorsionSpec& T, const ChartPoint& start,
                                     Index axis, double length, int steps, const Eigen::MatrixXd& V0) {
  Eigen::MatrixXd V = V0;
  const double dt = 1.0 / steps;
  auto rhs = [&](double t, const Eigen::MatrixXd& X) -> Eigen::MatrixXd {
    return -length * connection_matrix(M, T, start.shifted(axis, t * length), axis) * X;
  };
  for (int s = 0; s < steps; ++s) {
    const double t = s * dt;
    const Eigen::MatrixXd k1 = rhs(t, V);
    const Eigen::MatrixXd k2 = rhs(t + 0.5 * dt, V + 0.5 * dt * k1);
    const Eigen::MatrixXd k3 = rhs(t + 0.5 * dt, V + 0.5 * dt * k2);
    const Eigen::MatrixXd k4 = rhs(t + dt, V + dt * k3);
    V += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return V;
}

}  // namespace detail

/// Parallel transport of nabla^C around the coordinate square with corner p
/// and sides s e_i, s e_j (traversed p -> p + s e_i -> p + s e_i + s e_j ->
/// p + s e_j -> p). The returned H maps a vector at p to its transport.
/// For small s, H = I - s^2 R(e_i, e_j) + O(s^3).
inline DenseTensor loop_holonomy(const ProductManifold& M, const TorsionSpec& T, const ChartPoint& p, Index i,
                                 Index j, double s, int steps = 64) {
  detail::require_torsion_on(M, T);
  if (i >= M.dim() || j >= M.dim() || i == j) throw ArgumentError("loop_holonomy: need two distinct axes");
  if (steps < 1) throw ArgumentError("loop_holonomy: steps must be positive");
  const ChartPoint c0 = p, c1 = p.shifted(i, s), c2 = c1.shifted(j, s), c3 = p.shifted(j, s);
  for (const auto* c : {&c0, &c1, &c2, &c3}) require_in_chart(M, *c);
  const Index n = M.dim();
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  H = detail::transport_edge(M, T, c0, i, s, steps, H);
  H = detail::transport_edge(M, T, c1, j, s, steps, H);
  H = detail::transport_edge(M, T, c2, i, -s, steps, H);
  H = detail::transport_edge(M, T, c3, j, -s, steps, H);
  return from_eigen(H);
}

/// max |H^T g H - g| at p.
inline double holonomy_orthogonality_defect(const ProductManifold& M, const ChartPoint& p, const DenseTensor& H) {
  const DenseTensor g = metric_at(M, p);
  return max_abs_diff(matmul(matmul(transpose(H), g), H), g);
}

}  // namespace offhol
