#include "offhol/tensor.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace offhol;

namespace {

AntisymmetricForm dx(Index n, Index i) { return AntisymmetricForm::basis_covector(n, i); }

AntisymmetricForm random_form(std::mt19937_64& rng, Index k, Index n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  AntisymmetricForm f(k, n);
  f.mutable_entries().for_each_index([&](std::span<const Index> idx) {
    for (Index a = 1; a < idx.size(); ++a)
      if (idx[a - 1] >= idx[a]) return;
    f.set_component(idx, u(rng));
  });
  return f;
}

Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = g(rng);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

// L_a: (L_a)_{bc} = -eps_{abc}
DenseTensor rotation_generator(Index a) {
  DenseTensor L({3, 3});
  const Index b = (a + 1) % 3, c = (a + 2) % 3;
  L(c, b) = 1.0;
  L(b, c) = -1.0;
  return L;
}

}  // namespace

TEST(DenseTensor, ShapeAndIndexing) {
  DenseTensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  t(1, 2, 3) = 5.0;
  EXPECT_EQ(t.data()[23], 5.0);
  const std::vector<Index> idx = {1, 2, 3};
  EXPECT_EQ(t.at(idx), 5.0);
  EXPECT_THROW(DenseTensor({2}, {1.0, 2.0, 3.0}), ArgumentError);
  EXPECT_THROW(DenseTensor({1}, {std::nan("")}), ArgumentError);
}

TEST(DenseTensor, ZeroExtentAxes) {
  DenseTensor t({0, 1});
  EXPECT_EQ(t.size(), 0u);
  int visits = 0;
  t.for_each_index([&](std::span<const Index>) { ++visits; });
  EXPECT_EQ(visits, 0);
  EXPECT_EQ(numerical_rank(t).rank, 0u);
}

TEST(Contract, TraceOfIdentity) {
  EXPECT_DOUBLE_EQ(contract(DenseTensor::identity(3), 0, 1)(), 3.0);
}

TEST(Contract, FlatMetricRaisesTrivially) {
  std::mt19937_64 rng(3);
  const auto T = random_form(rng, 3, 3).entries();
  const auto id = DenseTensor::identity(3);
  // T_{ijk} g^{kl}: contract the outer product over (2, 3) keeps T.
  const DenseTensor raised = contract(outer(T, id), 2, 3, nullptr);
  EXPECT_LT(max_abs_diff(raised, T), 1e-15);
  EXPECT_LT(max_abs_diff(raise_index(T, 2, id), T), 1e-15);
}

TEST(Contract, LeviCivitaSelfContraction) {
  DenseTensor eps({3, 3, 3});
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j)
      for (Index k = 0; k < 3; ++k)
        if (i != j && j != k && i != k) eps(i, j, k) = ((j + 3 - i) % 3 == 1) ? 1.0 : -1.0;
  // brute force over 27 terms
  double brute = 0.0;
  for (double v : eps.data()) brute += v * v;
  EXPECT_DOUBLE_EQ(brute, 6.0);
  const auto id = DenseTensor::identity(3);
  DenseTensor full = outer(eps, eps);  // (i j k l m n)
  full = contract(full, 0, 3, &id);    // (j k m n)
  full = contract(full, 0, 2, &id);    // (k n)
  full = contract(full, 0, 1, &id);
  EXPECT_DOUBLE_EQ(full(), 6.0);
}

TEST(Contract, RejectsBadAxes) {
  DenseTensor t({2, 3});
  EXPECT_THROW(contract(t, 0, 1), ArgumentError);
  EXPECT_THROW(contract(t, 0, 0), ArgumentError);
  const auto g = DenseTensor::identity(3);
  DenseTensor sq({2, 2});
  EXPECT_THROW(contract(sq, 0, 1, &g), ArgumentError);
}

TEST(Wedge, DeterminantNormalization) {
  const auto dxdy = wedge(dx(2, 0), dx(2, 1));
  const std::vector<std::vector<double>> e = {{1, 0}, {0, 1}};
  EXPECT_DOUBLE_EQ(dxdy.evaluate(e), 1.0);
  EXPECT_DOUBLE_EQ(dxdy(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(dxdy(1, 0), -1.0);
}

TEST(Wedge, SelfWedgeVanishes) { EXPECT_EQ(wedge(dx(3, 0), dx(3, 0)).max_abs(), 0.0); }

TEST(Wedge, TripleProductMatchesPermutationSum) {
  const auto w = wedge(wedge(dx(3, 0), dx(3, 1)), dx(3, 2));
  const std::vector<std::vector<double>> e = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  EXPECT_DOUBLE_EQ(w.evaluate(e), 1.0);
  // brute-force: (a1^a2^a3)(v1,v2,v3) = det[a_i(v_j)] for 1-forms
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<std::vector<double>> v(3, std::vector<double>(3));
  for (auto& r : v)
    for (double& x : r) x = u(rng);
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = v[j][i];
  EXPECT_NEAR(w.evaluate(v), m.determinant(), 1e-14);
}

TEST(Wedge, GradedCommutativeAndBilinear) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    for (auto [k, l] : {std::pair<Index, Index>{1, 1}, {1, 2}, {2, 2}, {1, 3}, {2, 1}}) {
      const auto a = random_form(rng, k, 5), b = random_form(rng, l, 5), c = random_form(rng, l, 5);
      const double sign = (k * l) % 2 ? -1.0 : 1.0;
      EXPECT_LT((wedge(a, b) - wedge(b, a) * sign).max_abs(), 1e-12);
      EXPECT_LT((wedge(a, b * 2.0 + c) - (wedge(a, b) * 2.0 + wedge(a, c))).max_abs(), 1e-12);
    }
  }
}

TEST(Wedge, Associative) {
  std::mt19937_64 rng(8);
  const auto a = random_form(rng, 1, 5), b = random_form(rng, 2, 5), c = random_form(rng, 1, 5);
  EXPECT_LT((wedge(wedge(a, b), c) - wedge(a, wedge(b, c))).max_abs(), 1e-12);
}

TEST(Wedge, DegreeOverflowIsZeroAndDimensionMismatchThrows) {
  EXPECT_EQ(wedge(wedge(dx(2, 0), dx(2, 1)), dx(2, 0)).max_abs(), 0.0);
  EXPECT_THROW(wedge(dx(2, 0), dx(3, 0)), ArgumentError);
}

TEST(AntisymmetricForm, RejectsNonAntisymmetricEntries) {
  DenseTensor e({2, 2});
  e(0, 1) = 1.0;
  e(1, 0) = 1.0;
  EXPECT_THROW(AntisymmetricForm(2, 2, e), ArgumentError);
  e(1, 0) = -1.0;
  EXPECT_NO_THROW(AntisymmetricForm(2, 2, e));
}

TEST(AntisymmetricForm, SetComponentFillsPermutations) {
  AntisymmetricForm f(3, 4);
  const std::vector<Index> idx = {0, 2, 3};
  f.set_component(idx, 2.0);
  EXPECT_DOUBLE_EQ(f(2, 0, 3), -2.0);
  EXPECT_DOUBLE_EQ(f(3, 0, 2), 2.0);
  EXPECT_EQ(f.antisymmetry_defect(), 0.0);
  const std::vector<Index> rep = {0, 0, 1};
  EXPECT_THROW(f.set_component(rep, 1.0), ArgumentError);
}

TEST(AntisymmetricForm, ExtendByZero) {
  const auto e = extend_by_zero(wedge(dx(2, 0), dx(2, 1)), 4, 2);
  EXPECT_DOUBLE_EQ(e(2, 3), 1.0);
  EXPECT_DOUBLE_EQ(e.max_abs(), 1.0);
  EXPECT_THROW(extend_by_zero(dx(2, 0), 2, 1), ArgumentError);
}

TEST(NumericalRank, SpecExamples) {
  EXPECT_EQ(numerical_rank(DenseTensor::from_rows({{1, 0}, {0, 1}}), 1e-10).rank, 2u);
  EXPECT_EQ(numerical_rank(DenseTensor::from_rows({{1, 2}, {2, 4}}), 1e-10).rank, 1u);
  const auto r = numerical_rank(DenseTensor::from_rows({{3, 4}}), 1e-10);
  EXPECT_EQ(r.rank, 1u);
  ASSERT_EQ(r.singular_values.size(), 1u);
  // sigma^2 is the eigenvalue of [[3,4]][[3,4]]^T = 25
  EXPECT_NEAR(r.singular_values[0], 5.0, 1e-14);
}

TEST(NumericalRank, ZeroMatrixAndBadTolerance) {
  EXPECT_EQ(numerical_rank(DenseTensor({3, 3})).rank, 0u);
  EXPECT_THROW(numerical_rank(DenseTensor({2, 2}), 0.0), ArgumentError);
  EXPECT_THROW(numerical_rank(DenseTensor({2, 2, 2})), ArgumentError);
}

TEST(NumericalRank, FloorScaleSuppressesRoundOff) {
  const auto m = DenseTensor::from_rows({{1e-17, 0}, {0, 0}});
  EXPECT_EQ(numerical_rank(m, 1e-8).rank, 1u);
  EXPECT_EQ(numerical_rank(m, 1e-8, 1.0).rank, 0u);
}

TEST(NumericalRank, InvariantUnderOrthogonalChanges) {
  std::mt19937_64 rng(21);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(5, 4);
  m(0, 0) = 3.0;
  m(1, 1) = 1.0;
  m(2, 2) = 1e-3;
  for (double tol : {1e-12, 1e-11, 1e-10, 1e-9, 1e-8}) {
    const Index base = numerical_rank(m, tol).rank;
    EXPECT_EQ(base, 3u);
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::MatrixXd rotated = random_orthogonal(rng, 5) * m * random_orthogonal(rng, 4);
      EXPECT_EQ(numerical_rank(rotated, tol).rank, base) << "tol " << tol;
    }
  }
}

TEST(SpanDimension, SpecExamples) {
  DenseTensor e1({3}, {1, 0, 0}), e2({3}, {0, 1, 0}), e12({3}, {1, 1, 0});
  const std::vector<DenseTensor> three = {e1, e2, e12};
  EXPECT_EQ(span_dimension(three).rank, 2u);
  const std::vector<DenseTensor> zero = {DenseTensor({3})};
  EXPECT_EQ(span_dimension(zero).rank, 0u);
  const std::vector<DenseTensor> gens = {rotation_generator(0), rotation_generator(1), rotation_generator(2)};
  EXPECT_EQ(span_dimension(gens).rank, 3u);
  // Gram determinant of the stacked 9-vectors
  Eigen::Matrix3d gram;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (Index q = 0; q < 9; ++q) s += gens[i].data()[q] * gens[j].data()[q];
      gram(i, j) = s;
    }
  EXPECT_NEAR(gram.determinant(), 8.0, 1e-12);
}

TEST(SpanDimension, NeverExceedsCountOrEntries) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (Index count : {1u, 2u, 5u, 12u}) {
    std::vector<DenseTensor> vs;
    for (Index i = 0; i < count; ++i) {
      DenseTensor v({2, 3});
      for (double& x : v.data()) x = g(rng);
      vs.push_back(v);
    }
    EXPECT_LE(span_dimension(vs).rank, std::min<Index>(count, 6));
  }
  const std::vector<DenseTensor> none;
  EXPECT_THROW(span_dimension(none), ArgumentError);
  const std::vector<DenseTensor> mixed = {DenseTensor({2}), DenseTensor({3})};
  EXPECT_THROW(span_dimension(mixed), ArgumentError);
}

TEST(MatrixHelpers, InverseAndMatmul) {
  const auto a = DenseTensor::from_rows({{2, 1}, {1, 3}});
  EXPECT_LT(max_abs_diff(matmul(a, inverse(a)), DenseTensor::identity(2)), 1e-15);
  EXPECT_THROW(matmul(a, DenseTensor({3, 3})), ArgumentError);
}
