#include "offhol/connection.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace offhol;
using std::numbers::pi;

namespace {

ProductManifold t3() { return {FactorManifold::torus(2), FactorManifold::torus(1)}; }
ProductManifold s2t2(double r = 1.0) { return {FactorManifold::sphere(r), FactorManifold::torus(2)}; }

KunnethClass class21(const ProductManifold& M, std::vector<double> row) {
  KunnethClass c = KunnethClass::zero(M);
  for (Index j = 0; j < row.size(); ++j) c.C21(0, j) = row[j];
  return c;
}

TorsionSpec perturbed(const ProductManifold& M) {
  return torsion_from_class(M, class21(M, {1.0, 1.0}), make_exact_perturbation(M, {0.5, 1, 2, 1, 0}));
}

double eps3(Index i, Index j, Index k) {
  if (i == j || j == k || i == k) return 0.0;
  return ((j + 3 - i) % 3 == 1) ? 1.0 : -1.0;
}

// (L_a)_{bc} = -eps_{abc}
DenseTensor L(Index a) {
  DenseTensor m({3, 3});
  for (Index b = 0; b < 3; ++b)
    for (Index c = 0; c < 3; ++c) m(b, c) = -eps3(a, b, c);
  return m;
}

double fit_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST(TorsionFromClass, T3IsConstantMultipleOfVolume) {
  const auto M = t3();
  const auto T = torsion_from_class(M, class21(M, {1.0}));
  const double c = 1.0 / std::sqrt(8 * pi * pi * pi);
  for (const auto& p : sample_points(M, 10, 1)) {
    const auto w = T.form(p);
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 3; ++j)
        for (Index k = 0; k < 3; ++k) EXPECT_NEAR(w(i, j, k), c * eps3(i, j, k), 1e-16);
  }
}

TEST(TorsionFromClass, S2T2IsVolWedgeCombination) {
  const auto M = s2t2(1.3);
  const auto T = torsion_from_class(M, class21(M, {0.7, -1.1}));
  for (const auto& p : sample_points(M, 10, 2)) {
    const double vol = 1.3 * 1.3 * std::sin(p[0]) / (std::sqrt(4 * pi) * 1.3);
    const auto w = T.form(p);
    EXPECT_NEAR(w(0, 1, 2), 0.7 * vol / (2 * pi), 1e-15);
    EXPECT_NEAR(w(0, 1, 3), -1.1 * vol / (2 * pi), 1e-15);
    EXPECT_EQ(w(0, 2, 3), 0.0);
    EXPECT_EQ(w(1, 2, 3), 0.0);
  }
}

TEST(TorsionFromClass, ZeroClassGivesLeviCivita) {
  const auto M = s2t2();
  const auto T = torsion_from_class(M, KunnethClass::zero(M));
  for (const auto& p : sample_points(M, 10, 3)) {
    EXPECT_EQ(T.form(p).max_abs(), 0.0);
    EXPECT_EQ(max_abs_diff(connection_coeffs(M, T, p).gamma_total, christoffel_lc(M, p)), 0.0);
  }
}

TEST(ConnectionCoeffs, FlatT3HalfEpsilon) {
  const auto M = t3();
  const double c = 3.0;
  const auto T = scaled(torsion_from_class(M, class21(M, {1.0})), c * std::sqrt(8 * pi * pi * pi));
  for (const auto& p : sample_points(M, 5, 4)) {
    const auto G = connection_coeffs(M, T, p).gamma_total;
    for (Index l = 0; l < 3; ++l)
      for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 3; ++j) EXPECT_NEAR(G(l, i, j), 0.5 * c * eps3(l, i, j), 1e-14);
  }
}

TEST(ConnectionCoeffs, AntisymmetrizedPartIsTorsion) {
  const auto M = s2t2(0.9);
  const auto T = perturbed(M);
  for (const auto& p : sample_points(M, 20, 5)) {
    const auto G = connection_coeffs(M, T, p).gamma_total;
    EXPECT_LT(max_abs_diff(torsion_of(G), torsion_vector_valued(M, T, p)), 1e-14);
    // the symmetric part is Levi-Civita
    const auto L = christoffel_lc(M, p);
    for (Index l = 0; l < 4; ++l)
      for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 4; ++j) EXPECT_NEAR(0.5 * (G(l, i, j) + G(l, j, i)), L(l, i, j), 1e-14);
  }
}

TEST(Curvature, FlatT3WithoutTorsionVanishes) {
  const auto M = t3();
  for (const auto& p : sample_points(M, 5, 6)) EXPECT_LT(curvature_at(M, zero_torsion(M), p).R.max_abs(), 1e-10);
}

TEST(Curvature, FlatT3CommutatorOracle) {
  const auto M = t3();
  const double c = 0.8;
  const auto T = scaled(torsion_from_class(M, class21(M, {1.0})), c * std::sqrt(8 * pi * pi * pi));
  // Gamma_i as matrices: (Gamma_i)^l_k = (c/2) eps_{lik}
  std::vector<Eigen::Matrix3d> Gm(3);
  for (Index i = 0; i < 3; ++i)
    for (Index l = 0; l < 3; ++l)
      for (Index k = 0; k < 3; ++k) Gm[i](l, k) = 0.5 * c * eps3(l, i, k);
  for (auto mode : {DerivativeMode::analytic, DerivativeMode::finite_difference}) {
    CurvatureOptions opt;
    opt.mode = mode;
    for (const auto& p : sample_points(M, 5, 7)) {
      const auto R = curvature_at(M, T, p, opt);
      for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 3; ++j) {
          const Eigen::Matrix3d comm = Gm[i] * Gm[j] - Gm[j] * Gm[i];
          EXPECT_LT((to_eigen(R.endomorphism(i, j)) - comm).cwiseAbs().maxCoeff(), 1e-12);
        }
      // cyclic pairs give (c^2 / 4) times a rotation generator
      EXPECT_LT(max_abs_diff(R.endomorphism(0, 1), L(2) * (c * c / 4)), 1e-12);
      EXPECT_LT(max_abs_diff(R.endomorphism(1, 2), L(0) * (c * c / 4)), 1e-12);
      EXPECT_LT(max_abs_diff(R.endomorphism(2, 0), L(1) * (c * c / 4)), 1e-12);
    }
  }
}

TEST(Curvature, AnalyticAndFiniteDifferenceAgreeToSecondOrder) {
  const auto M = s2t2();
  const auto T = perturbed(M);
  const ChartPoint p{{1.0, 0.5, 1.3, 0.4}};
  const auto exact = curvature_at(M, T, p).R;
  CurvatureOptions fd;
  fd.mode = DerivativeMode::finite_difference;
  fd.h = 2e-3;
  const double a = max_abs_diff(curvature_at(M, T, p, fd).R, exact);
  fd.h = 1e-3;
  const double b = max_abs_diff(curvature_at(M, T, p, fd).R, exact);
  EXPECT_GT(a, 1e-9);
  EXPECT_NEAR(a / b, 4.0, 0.2);
}

TEST(Curvature, GSkewAndAntisymmetric) {
  for (const auto& M : {s2t2(), s2t2(2.0)}) {
    const auto T = perturbed(M);
    for (const auto& p : sample_points(M, 20, 8)) {
      const auto R = curvature_at(M, T, p);
      EXPECT_LT(curvature_skewness(M, R), 1e-6);
      EXPECT_EQ(curvature_antisymmetry(R), 0.0);
    }
  }
}

TEST(Curvature, RejectsTorsionFromOtherManifold) {
  const auto T = torsion_from_class(s2t2(), class21(s2t2(), {1.0, 0.0}));
  EXPECT_THROW(curvature_at(s2t2(2.0), T, ChartPoint{{1, 1, 1, 1}}), ArgumentError);
}

TEST(QtResidual, VanishesWithoutTorsion) {
  const auto M = s2t2();
  for (const auto& p : sample_points(M, 10, 9)) EXPECT_LT(qt_residual(M, zero_torsion(M), p).max_abs(), 1e-10);
}

TEST(QtResidual, QuadraticInTorsionOnFlatT3) {
  const auto M = t3();
  const auto T = torsion_from_class(M, class21(M, {1.0}));
  const ChartPoint p{{0.3, 1.2, 4.0}};
  std::vector<double> lambdas = {1, 2, 3}, norms;
  for (double l : lambdas) norms.push_back(qt_residual(M, scaled(T, l), p).frobenius_norm());
  EXPECT_GT(norms[0], 0.0);
  EXPECT_NEAR(fit_exponent(lambdas, norms), 2.0, 0.01);
}

TEST(QtResidual, HarmonicTorsionIsParallelOnS2T2) {
  const auto M = s2t2();
  const auto T = torsion_from_class(M, class21(M, {1.0, 1.0}));
  for (const auto& p : sample_points(M, 10, 10)) {
    EXPECT_LT(torsion_derivative_term(M, T, p).max_abs(), 1e-12);
    const auto diff = (curvature_at(M, T, p).R - curvature_at(M, zero_torsion(M), p).R) * 4.0;
    EXPECT_LT(max_abs_diff(qt_residual(M, T, p), diff), 1e-6);
  }
}

TEST(QtResidual, LinearPartScalesLinearly) {
  const auto M = s2t2();
  const auto T = perturbed(M);
  const ChartPoint p{{1.1, 0.2, 0.9, 2.0}};
  std::vector<double> lambdas = {1, 2, 3}, lin, quad;
  for (double l : lambdas) {
    lin.push_back(torsion_derivative_term(M, scaled(T, l), p).frobenius_norm());
    quad.push_back(qt_residual(M, scaled(T, l), p).frobenius_norm());
  }
  EXPECT_NEAR(fit_exponent(lambdas, lin), 1.0, 0.01);
  EXPECT_NEAR(fit_exponent(lambdas, quad), 2.0, 0.01);
}

TEST(Metricity, LeviCivitaOnEveryCatalogProduct) {
  const std::vector<ProductManifold> Ms = {t3(), s2t2(), s2t2(0.5),
                                           {FactorManifold::sphere(2.0), FactorManifold::torus(1)}};
  for (const auto& M : Ms)
    for (auto mode : {DerivativeMode::analytic, DerivativeMode::finite_difference}) {
      CurvatureOptions opt;
      opt.mode = mode;
      for (const auto& p : sample_points(M, 10, 11)) EXPECT_LT(metricity_check(M, zero_torsion(M), p, opt), 1e-8);
    }
}

TEST(Metricity, SkewTorsionPreservesMetric) {
  const auto M = s2t2();
  const auto T = perturbed(M);
  for (const auto& p : sample_points(M, 20, 12)) EXPECT_LT(metricity_check(M, T, p), 1e-8);
}

TEST(Metricity, SymmetrizedContorsionFails) {
  const auto M = s2t2();
  const auto T = torsion_from_class(M, class21(M, {1.0, 1.0}));
  CurvatureOptions bad;
  bad.contorsion = Contorsion::symmetrized;
  for (const auto& p : sample_points(M, 5, 13)) EXPECT_GT(metricity_check(M, T, p, bad), 1e-3);
}

TEST(Bianchi, ClassicalWithoutTorsion) {
  const auto M = s2t2();
  for (const auto& p : sample_points(M, 10, 14)) EXPECT_LT(bianchi_cyclic_check(M, zero_torsion(M), p), 1e-6);
}

TEST(Bianchi, ConstantTorsionOnFlatT3) {
  const auto M = t3();
  const auto T = scaled(torsion_from_class(M, class21(M, {1.0})), 5.0);
  for (const auto& p : sample_points(M, 10, 15)) EXPECT_LT(bianchi_cyclic_check(M, T, p), 1e-9);
}

TEST(Bianchi, HarmonicAndPerturbedTorsionOnS2T2) {
  const auto M = s2t2();
  CurvatureOptions fd;
  fd.mode = DerivativeMode::finite_difference;
  for (const auto& T : {torsion_from_class(M, class21(M, {1.0, 1.0})), perturbed(M)})
    for (const auto& p : sample_points(M, 10, 16)) {
      EXPECT_LT(bianchi_cyclic_check(M, T, p), 1e-5);
      EXPECT_LT(bianchi_cyclic_check(M, T, p, fd), 1e-5);
    }
}

TEST(MixedComponents, ZeroForLeviCivitaNonzeroWithTorsion) {
  const auto M = s2t2();
  const ChartPoint p{{1.0, 2.0, 3.0, 4.0}};
  EXPECT_LT(max_mixed_component(curvature_at(M, zero_torsion(M), p).R, M.split()), 1e-9);
  const auto T = torsion_from_class(M, class21(M, {1.0, 0.0}));
  EXPECT_GT(max_mixed_component(curvature_at(M, T, p).R, M.split()), 1e-4);
  EXPECT_GT(max_off_block_component(curvature_at(M, T, p).R, M.split()), 1e-4);
}
