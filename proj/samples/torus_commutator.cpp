// Constant torsion c dx^dy^dz on the flat 3-torus: print the curvature
// endomorphisms, the off-diagonal span, and a loop holonomy next to
// I - s^2 R(e_x, e_y).

#include "offhol/holonomy.hpp"
#include "offhol/kunneth.hpp"

#include <cstdio>

using namespace offhol;

static void print(const char* title, const DenseTensor& E) {
  std::printf("%s\n", title);
  for (Index r = 0; r < E.extent(0); ++r) {
    for (Index c = 0; c < E.extent(1); ++c) std::printf(" %10.6f", E(r, c));
    std::printf("\n");
  }
}

int main() {
  const ProductManifold M(FactorManifold::torus(2), FactorManifold::torus(1));
  KunnethClass cls = KunnethClass::zero(M);
  cls.C21(0, 0) = 1.0;
  const TorsionSpec T = torsion_from_class(M, cls);
  const ChartPoint p{{1.0, 2.0, 3.0}};

  const auto R = curvature_at(M, T, p);
  print("R(e_x, e_y):", R.endomorphism(0, 1));
  print("R(e_x, e_z):", R.endomorphism(0, 2));
  print("R(e_y, e_z):", R.endomorphism(1, 2));

  for (auto v : {SpanVariant::endomorphism, SpanVariant::vector}) {
    const auto rep = off_span_from_curvature(R, SplitProjectors::of(M), kDefaultRankTol, v);
    std::printf("off span (%s): %zu\n", to_string(v).c_str(), static_cast<std::size_t>(rep.dimension));
  }
  std::printf("mixed rank: %zu\n", static_cast<std::size_t>(mixed_rank(cls).total));

  const double s = 0.05;
  const DenseTensor H = loop_holonomy(M, T, p, 0, 1, s);
  print("H(s) for the (x, y) square, s = 0.05:", H);
  print("I - s^2 R(e_x, e_y):", DenseTensor::identity(3) - R.endomorphism(0, 1) * (s * s));
  std::printf("orthogonality defect: %.3e\n", holonomy_orthogonality_defect(M, p, H));
  return 0;
}
