#include "offhol/holonomy.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace offhol;
using std::numbers::pi;

namespace {

ProductManifold t3() { return {FactorManifold::torus(2), FactorManifold::torus(1)}; }
ProductManifold s2t2(double r = 1.0) { return {FactorManifold::sphere(r), FactorManifold::torus(2)}; }

TorsionSpec t3_torsion(double c = 1.0) {
  const auto M = t3();
  KunnethClass cls = KunnethClass::zero(M);
  cls.C21(0, 0) = 1.0;
  return scaled(torsion_from_class(M, cls), c * std::sqrt(8 * pi * pi * pi));
}

TorsionSpec s2t2_torsion(const ProductManifold& M, double c1, double c2, bool perturb = false) {
  KunnethClass cls = KunnethClass::zero(M);
  cls.C21(0, 0) = c1;
  cls.C21(0, 1) = c2;
  std::optional<FormPerturbation> p;
  if (perturb) p = make_exact_perturbation(M, {0.5, 1, 2, 1, 0});
  return torsion_from_class(M, cls, p);
}

// Rotate the frame inside each factor: R'^l_{kij} = (Q^-1)^l_a R^a_{bcd} Q^b_k Q^c_i Q^d_j
DenseTensor rotate_frame(const DenseTensor& R, const Eigen::MatrixXd& Q) {
  const Index n = R.extent(0);
  const Eigen::MatrixXd Qi = Q.inverse();
  DenseTensor out({n, n, n, n});
  for (Index l = 0; l < n; ++l)
    for (Index k = 0; k < n; ++k)
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
          double s = 0.0;
          for (Index a = 0; a < n; ++a)
            for (Index b = 0; b < n; ++b)
              for (Index c = 0; c < n; ++c)
                for (Index d = 0; d < n; ++d) {
                  const double q = Qi(l, a) * Q(b, k) * Q(c, i) * Q(d, j);
                  if (q != 0.0) s += q * R(a, b, c, d);
                }
          out(l, k, i, j) = s;
        }
  return out;
}

Eigen::MatrixXd block_rotation(std::mt19937_64& rng, Index n1, Index n2) {
  std::normal_distribution<double> g;
  auto orth = [&](Index m) {
    Eigen::MatrixXd a(m, m);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) a(i, j) = g(rng);
    return Eigen::MatrixXd(Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ());
  };
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n1 + n2, n1 + n2);
  Q.topLeftCorner(n1, n1) = orth(n1);
  Q.bottomRightCorner(n2, n2) = orth(n2);
  return Q;
}

}  // namespace

TEST(ROff, BlockDiagonalCurvatureHasNoOffPart) {
  const auto M = s2t2();
  const auto s = SplitProjectors::of(M);
  for (const auto& p : sample_points(M, 10, 1))
    EXPECT_LT(r_off(curvature_at(M, zero_torsion(M), p), s).max_abs(), 1e-12);
}

TEST(ROff, FlatT3OffPartOfRotationGenerator) {
  const auto M = t3();
  const double c = 2.0;
  const auto R = curvature_at(M, t3_torsion(c), ChartPoint{{1, 2, 3}});
  const auto off = r_off(R, SplitProjectors::of(M));
  // R(e_x, e_z) rotates the (x, z) plane: entirely off-block
  DenseTensor want({3, 3});
  want(0, 2) = -c * c / 4;
  want(2, 0) = c * c / 4;
  for (Index l = 0; l < 3; ++l)
    for (Index k = 0; k < 3; ++k) EXPECT_NEAR(off(l, k, 0, 2), want(l, k), 1e-12);
  // R(e_x, e_y) rotates the (x, y) plane: entirely diagonal
  for (Index l = 0; l < 3; ++l)
    for (Index k = 0; k < 3; ++k) EXPECT_EQ(off(l, k, 0, 1), 0.0);
}

TEST(ROff, Idempotent) {
  const auto M = s2t2();
  const auto s = SplitProjectors::of(M);
  const auto R = curvature_at(M, s2t2_torsion(M, 1, 1, true), ChartPoint{{1.0, 0.3, 0.5, 0.7}});
  const auto once = r_off(R, s);
  EXPECT_EQ(max_abs_diff(r_off(once, s), once), 0.0);
  EXPECT_THROW(r_off(R.R, SplitProjectors::from_split(3, 2)), ArgumentError);
}

TEST(OffSpan, LeviCivitaBaselineIsZero) {
  const auto M = s2t2();
  for (const auto& p : sample_points(M, 10, 2))
    for (auto v : {SpanVariant::endomorphism, SpanVariant::vector})
      EXPECT_EQ(off_span_dimension(M, zero_torsion(M), p, kDefaultRankTol, v).dimension, 0u);
}

TEST(OffSpan, FlatT3Dimensions) {
  const auto M = t3();
  for (const auto& p : sample_points(M, 20, 3)) {
    const auto e = off_span_dimension(M, t3_torsion(), p, kDefaultRankTol, SpanVariant::endomorphism);
    const auto v = off_span_dimension(M, t3_torsion(), p, kDefaultRankTol, SpanVariant::vector);
    EXPECT_EQ(e.dimension, 2u);
    EXPECT_EQ(v.dimension, 3u);
    EXPECT_EQ(e.generators_sampled, 3u);
    EXPECT_EQ(v.generators_sampled, 9u);
  }
}

TEST(OffSpan, S2T2MeasuredDimensions) {
  const auto M = s2t2();
  for (auto [c1, c2] : {std::pair{1.0, 0.0}, {1.0, 1.0}})
    for (const auto& p : sample_points(M, 10, 4)) {
      const auto e = off_span_dimension(M, s2t2_torsion(M, c1, c2), p);
      EXPECT_GE(e.dimension, 1u);
      EXPECT_LE(e.dimension, M.n1() * M.n2());
    }
}

TEST(OffSpan, PerturbationReachesFullOffBlock) {
  const auto M = s2t2();
  for (const auto& p : sample_points(M, 10, 5)) {
    const auto e = off_span_dimension(M, s2t2_torsion(M, 1, 1, true), p);
    EXPECT_EQ(e.dimension, 4u);
  }
}

TEST(OffSpan, GeneratorsAreOffBlockAndSkew) {
  const auto M = s2t2(1.4);
  const auto s = SplitProjectors::of(M);
  const auto T = s2t2_torsion(M, 0.6, -1.2, true);
  for (const auto& p : sample_points(M, 10, 6)) {
    const auto R = curvature_at(M, T, p);
    const auto g = metric_at(M, p);
    for (const auto& G : off_generators(R.R, s, SpanVariant::endomorphism)) {
      EXPECT_EQ(matmul(matmul(s.P1, G), s.P1).max_abs(), 0.0);
      EXPECT_EQ(matmul(matmul(s.P2, G), s.P2).max_abs(), 0.0);
      const auto gG = matmul(g, G);
      EXPECT_LT((gG + transpose(gG)).max_abs(), 1e-6);
    }
  }
}

TEST(OffSpan, InvariantUnderTorsionScaling) {
  const auto M = s2t2();
  for (bool perturb : {false, true}) {
    const auto T = s2t2_torsion(M, 1, 1, perturb);
    for (const auto& p : sample_points(M, 10, 7)) {
      const Index base = off_span_dimension(M, T, p).dimension;
      for (double lambda : {0.1, 10.0}) EXPECT_EQ(off_span_dimension(M, scaled(T, lambda), p).dimension, base);
    }
  }
}

TEST(OffSpan, InvariantUnderFrameRotations) {
  std::mt19937_64 rng(31);
  const auto M = s2t2();
  const auto s = SplitProjectors::of(M);
  for (bool perturb : {false, true}) {
    const auto T = s2t2_torsion(M, 1, 1, perturb);
    // equator: the coordinate frame is orthonormal, so block rotations are isometries
    const ChartPoint p{{pi / 2, 0.4, 1.0, 2.0}};
    const auto R = curvature_at(M, T, p);
    for (auto v : {SpanVariant::endomorphism, SpanVariant::vector}) {
      const Index base = off_span_from_curvature(R, s, kDefaultRankTol, v).dimension;
      for (int trial = 0; trial < 5; ++trial) {
        CurvatureAtPoint rotated = R;
        rotated.R = rotate_frame(R.R, block_rotation(rng, 2, 2));
        EXPECT_EQ(off_span_from_curvature(rotated, s, kDefaultRankTol, v).dimension, base);
      }
    }
  }
}

TEST(OffSpan, PositiveDimensionHasMixedWitness) {
  const auto M = s2t2();
  const auto T = s2t2_torsion(M, 1, 1, true);
  for (const auto& p : sample_points(M, 10, 8)) {
    const auto R = curvature_at(M, T, p);
    const auto rep = off_span_from_curvature(R, SplitProjectors::of(M), kDefaultRankTol, SpanVariant::endomorphism);
    if (rep.dimension > 0) EXPECT_GT(max_mixed_component(R.R, M.split()), kDefaultRankTol);
  }
}

TEST(LoopHolonomy, FlatWithoutTorsionIsIdentity) {
  const auto M = t3();
  const auto H = loop_holonomy(M, zero_torsion(M), ChartPoint{{1, 2, 3}}, 0, 2, 0.3);
  EXPECT_LT(max_abs_diff(H, DenseTensor::identity(3)), 1e-10);
}

TEST(LoopHolonomy, ConvergesToCurvature) {
  const auto M = t3();
  const auto T = t3_torsion(1.0);
  const ChartPoint p{{0.5, 1.5, 2.5}};
  const auto R = curvature_at(M, T, p);
  for (auto [i, j] : {std::pair<Index, Index>{0, 1}, {0, 2}, {1, 2}}) {
    std::vector<double> s = {0.1, 0.05, 0.025}, err;
    for (double side : s) {
      const auto H = loop_holonomy(M, T, p, i, j, side);
      err.push_back(max_abs_diff((DenseTensor::identity(3) - H) * (1.0 / (side * side)), R.endomorphism(i, j)));
    }
    const double slope1 = std::log(err[0] / err[1]) / std::log(2.0);
    const double slope2 = std::log(err[1] / err[2]) / std::log(2.0);
    EXPECT_GE(slope1, 1.0 - 1e-3);
    EXPECT_GE(slope2, 1.0 - 1e-3);
  }
}

TEST(LoopHolonomy, MetricConnectionTransportIsOrthogonal) {
  const auto M = s2t2();
  const auto T = s2t2_torsion(M, 1, 1, true);
  for (const auto& p : sample_points(M, 3, 9)) {
    const auto H = loop_holonomy(M, T, p, 0, 2, 0.05);
    EXPECT_LT(holonomy_orthogonality_defect(M, p, H), 1e-8);
  }
  EXPECT_THROW(loop_holonomy(M, T, ChartPoint{{1, 1, 1, 1}}, 1, 1, 0.1), ArgumentError);
}
