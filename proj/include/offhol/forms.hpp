#pragma once

/// Differential forms on product manifolds: the closed-form harmonic catalog
/// of each factor, wedge-monomial form fields, exterior derivative, Hodge
/// star, codifferential, and L2 inner products on quadrature grids.

#include "offhol/geometry.hpp"
#include "offhol/tensor.hpp"

#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace offhol {

/// Closed-form harmonic form on one factor, L2-normalized for the factor
/// metric. Evaluators take the factor's local coordinates.
struct HarmonicBasisElement {
  int factor = 0;  ///< 1 or 2 once attached to a product; 0 when standalone
  Index degree = 0;
  Index index = 0;
  Index dim = 0;
  std::string label;
  /// Integral over the dual cycle; fixes the de Rham class independently
  /// of the metric (coefficient * period is topological).
  double period = 1.0;
  std::function<AntisymmetricForm(std::span<const double>)> evaluate;
  /// Partial derivative of the component array along local coordinate a.
  std::function<AntisymmetricForm(std::span<const double>, Index)> derivative;
};

namespace detail {

inline std::vector<std::vector<Index>> k_subsets(Index n, Index k) {
  std::vector<std::vector<Index>> out;
  if (k > n) return out;
  std::vector<Index> s(k);
  std::iota(s.begin(), s.end(), Index{0});
  while (true) {
    out.push_back(s);
    Index i = k;
    while (i-- > 0) {
      if (s[i] < n - k + i) break;
    }
    if (i == static_cast<Index>(-1)) break;
    ++s[i];
    for (Index j = i + 1; j < k; ++j) s[j] = s[j - 1] + 1;
  }
  return out;
}

}  // namespace detail

/// Orthonormal harmonic basis of degree k on a catalog factor.
///
/// Flat torus: dx^I / sqrt(vol) for every increasing index set I.
/// Round sphere: constant (k = 0), nothing (k = 1), vol / |vol| (k = 2).
inline std::vector<HarmonicBasisElement> harmonic_basis(const FactorManifold& f, Index k) {
  std::vector<HarmonicBasisElement> out;
  const Index n = f.dim();
  const double vol = f.volume();
  if (f.is_torus()) {
    const auto& L = f.as_torus().periods;
    const double scale = 1.0 / std::sqrt(vol);
    Index idx = 0;
    for (const auto& I : detail::k_subsets(n, k)) {
      HarmonicBasisElement e;
      e.degree = k;
      e.index = idx++;
      e.dim = n;
      double period = scale;
      std::string label;
      for (Index i : I) {
        period *= L[i];
        label += (label.empty() ? "" : "^") + std::string("dx") + std::to_string(i);
      }
      e.label = k == 0 ? "1" : label;
      e.period = period;
      AntisymmetricForm form(k, n);
      if (k == 0)
        form.mutable_entries()() = scale;
      else
        form.set_component(I, scale);
      e.evaluate = [form](std::span<const double>) { return form; };
      e.derivative = [k, n](std::span<const double>, Index) { return AntisymmetricForm(k, n); };
      out.push_back(std::move(e));
    }
    return out;
  }

  const double r = f.as_sphere().radius;
  if (k == 0) {
    const double c = 1.0 / std::sqrt(vol);
    HarmonicBasisElement e{0, 0, 0, 2, "1", c, nullptr, nullptr};
    e.evaluate = [c](std::span<const double>) { return AntisymmetricForm::constant(2, c); };
    e.derivative = [](std::span<const double>, Index) { return AntisymmetricForm(0, 2); };
    out.push_back(std::move(e));
  } else if (k == 2) {
    // vol = r^2 sin(theta) dtheta ^ dphi, |vol|_{L2} = sqrt(4 pi) r
    const double c = r * r / (std::sqrt(4.0 * std::numbers::pi) * r);
    HarmonicBasisElement e{0, 2, 0, 2, "vol", std::sqrt(4.0 * std::numbers::pi) * r, nullptr, nullptr};
    e.evaluate = [c](std::span<const double> x) {
      AntisymmetricForm w(2, 2);
      const Index idx[] = {0, 1};
      w.set_component(idx, c * std::sin(x[0]));
      return w;
    };
    e.derivative = [c](std::span<const double> x, Index a) {
      AntisymmetricForm w(2, 2);
      if (a == 0) {
        const Index idx[] = {0, 1};
        w.set_component(idx, c * std::cos(x[0]));
      }
      return w;
    };
    out.push_back(std::move(e));
  }
  return out;
}

/// Betti number as the size of the catalog basis.
inline Index betti(const FactorManifold& f, Index k) { return harmonic_basis(f, k).size(); }

// ---------------------------------------------------------------------------
// Form fields.

/// Smooth additive term of a form field, typically an exact form d(eta).
struct FormPerturbation {
  std::string name;
  Index degree = 0;
  std::function<AntisymmetricForm(const ChartPoint&)> evaluate;
  /// Optional analytic partial derivative of the components; finite
  /// differences are used when empty.
  std::function<AntisymmetricForm(const ChartPoint&, Index)> derivative;
};

struct FormMonomial {
  double coefficient = 0.0;
  HarmonicBasisElement first;   ///< on factor 1
  HarmonicBasisElement second;  ///< on factor 2
};

/// sum_m c_m pr_1^* a_m ^ pr_2^* b_m  (+ perturbation)
class FormField {
 public:
  FormField(ProductManifold M, Index degree) : M_(std::move(M)), degree_(degree) {}

  const ProductManifold& manifold() const { return M_; }
  Index degree() const { return degree_; }
  const std::vector<FormMonomial>& monomials() const { return monomials_; }
  const std::optional<FormPerturbation>& perturbation() const { return perturbation_; }

  FormField& add(double coefficient, HarmonicBasisElement first, HarmonicBasisElement second) {
    if (first.degree + second.degree != degree_)
      throw ArgumentError("FormField: monomial bidegree (" + std::to_string(first.degree) + "," +
                          std::to_string(second.degree) + ") does not sum to " + std::to_string(degree_));
    if (first.dim != M_.n1() || second.dim != M_.n2())
      throw ArgumentError("FormField: monomial factor dimensions do not match the manifold");
    first.factor = 1;
    second.factor = 2;
    monomials_.push_back({coefficient, std::move(first), std::move(second)});
    return *this;
  }

  FormField& set_perturbation(FormPerturbation p) {
    if (p.degree != degree_) throw ArgumentError("FormField: perturbation degree mismatch");
    perturbation_ = std::move(p);
    return *this;
  }

  /// The field as a pure factor form: a pulled back from one factor.
  static FormField from_factor_element(const ProductManifold& M, int which, const HarmonicBasisElement& e) {
    FormField F(M, e.degree);
    const FactorManifold& other = M.factor(which == 1 ? 2 : 1);
    auto unit = harmonic_basis(other, 0).front();
    const double c = 1.0 / unit.period;  // undo the constant's normalization
    if (which == 1)
      F.add(c, e, unit);
    else
      F.add(c, unit, e);
    return F;
  }

  FormField scaled(double s) const {
    FormField out = *this;
    for (auto& m : out.monomials_) m.coefficient *= s;
    if (out.perturbation_) {
      auto base = out.perturbation_->evaluate;
      out.perturbation_->evaluate = [base, s](const ChartPoint& p) { return base(p) * s; };
      if (auto d = out.perturbation_->derivative)
        out.perturbation_->derivative = [d, s](const ChartPoint& p, Index a) { return d(p, a) * s; };
    }
    return out;
  }

  /// Harmonic part only.
  FormField without_perturbation() const {
    FormField out = *this;
    out.perturbation_.reset();
    return out;
  }

  AntisymmetricForm operator()(const ChartPoint& p) const;

  /// d/dx^a of the component array; analytic for catalog monomials, and for
  /// the perturbation when it supplies a derivative, otherwise central
  /// differences with step h * coordinate_scale(a).
  AntisymmetricForm partial(const ChartPoint& p, Index a, double h) const;

  bool has_analytic_partials() const { return !perturbation_ || static_cast<bool>(perturbation_->derivative); }

 private:
  ProductManifold M_;
  Index degree_;
  std::vector<FormMonomial> monomials_;
  std::optional<FormPerturbation> perturbation_;
};

namespace detail {

inline AntisymmetricForm monomial_value(const ProductManifold& M, const FormMonomial& m, const ChartPoint& p) {
  const auto a = extend_by_zero(m.first.evaluate(local_coords(M, p, 1)), M.dim(), 0);
  const auto b = extend_by_zero(m.second.evaluate(local_coords(M, p, 2)), M.dim(), M.n1());
  return wedge(a, b) * m.coefficient;
}

inline AntisymmetricForm monomial_partial(const ProductManifold& M, const FormMonomial& m, const ChartPoint& p,
                                          Index a) {
  auto [f, local] = M.locate(a);
  const auto x1 = local_coords(M, p, 1);
  const auto x2 = local_coords(M, p, 2);
  const auto A = extend_by_zero(f == 1 ? m.first.derivative(x1, local) : m.first.evaluate(x1), M.dim(), 0);
  const auto B = extend_by_zero(f == 2 ? m.second.derivative(x2, local) : m.second.evaluate(x2), M.dim(), M.n1());
  return wedge(A, B) * m.coefficient;
}

}  // namespace detail

/// Pointwise value of a form field. Requires p in the open chart.
inline AntisymmetricForm eval_form(const FormField& F, const ChartPoint& p) {
  require_in_open_chart(F.manifold(), p);
  const ProductManifold& M = F.manifold();
  AntisymmetricForm out(F.degree(), M.dim());
  for (const auto& m : F.monomials()) {
    if (m.coefficient == 0.0) continue;
    out += detail::monomial_value(M, m, p);
  }
  if (F.perturbation()) out += F.perturbation()->evaluate(p);
  return out;
}

inline AntisymmetricForm FormField::operator()(const ChartPoint& p) const { return eval_form(*this, p); }

inline AntisymmetricForm FormField::partial(const ChartPoint& p, Index a, double h) const {
  require_in_open_chart(M_, p);
  AntisymmetricForm out(degree_, M_.dim());
  for (const auto& m : monomials_) {
    if (m.coefficient == 0.0) continue;
    out += detail::monomial_partial(M_, m, p, a);
  }
  if (perturbation_) {
    if (perturbation_->derivative) {
      out += perturbation_->derivative(p, a);
    } else {
      const double s = h * M_.coordinate_scale(a);
      out += (perturbation_->evaluate(p.shifted(a, s)) - perturbation_->evaluate(p.shifted(a, -s))) * (0.5 / s);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pointwise algebra.

/// (dw)_{i0..ik} = sum_a (-1)^a d_{i_a} w_{i0..^i_a..ik}, given d_a w for every a.
inline AntisymmetricForm exterior_derivative_from_partials(std::span<const AntisymmetricForm> partials) {
  if (partials.empty()) throw ArgumentError("exterior_derivative: no partials");
  const Index k = partials.front().degree(), n = partials.front().dim();
  if (partials.size() != n) throw ArgumentError("exterior_derivative: need one partial per coordinate");
  AntisymmetricForm out(k + 1, n);
  if (k + 1 > n) return out;
  std::vector<Index> rest(k);
  out.mutable_entries().for_each_index([&](std::span<const Index> idx) {
    double s = 0.0;
    for (Index a = 0; a <= k; ++a) {
      Index r = 0;
      for (Index b = 0; b <= k; ++b)
        if (b != a) rest[r++] = idx[b];
      s += (a % 2 ? -1.0 : 1.0) * partials[idx[a]].at(rest);
    }
    out.mutable_entries().at(idx) = s;
  });
  return out;
}

/// Central-difference partials of an arbitrary field callable.
template <typename Field>
std::vector<AntisymmetricForm> central_partials(const Field& field, const ChartPoint& p,
                                                std::span<const double> steps) {
  std::vector<AntisymmetricForm> partials;
  partials.reserve(steps.size());
  for (Index a = 0; a < steps.size(); ++a)
    partials.push_back((field(p.shifted(a, steps[a])) - field(p.shifted(a, -steps[a]))) * (0.5 / steps[a]));
  return partials;
}

namespace detail {

/// Sign of the permutation listed in idx, or 0 if an index repeats.
inline int levi_civita(std::span<const Index> idx) {
  int sign = 1;
  for (Index i = 0; i < idx.size(); ++i)
    for (Index j = i + 1; j < idx.size(); ++j) {
      if (idx[i] == idx[j]) return 0;
      if (idx[i] > idx[j]) sign = -sign;
    }
  return sign;
}

inline AntisymmetricForm raise_all(const AntisymmetricForm& a, const DenseTensor& ginv) {
  DenseTensor t = a.entries();
  for (Index ax = 0; ax < a.degree(); ++ax) t = raise_index(t, ax, ginv);
  AntisymmetricForm out(a.degree(), a.dim());
  out.mutable_entries() = std::move(t);
  return out;
}

}  // namespace detail

/// Algebraic Hodge star for metric g with the coordinate orientation:
/// (*a)_J = (1/k!) sqrt(det g) a^I eps_{IJ}.
inline AntisymmetricForm hodge_star(const DenseTensor& g, const AntisymmetricForm& a) {
  const Index n = a.dim(), k = a.degree();
  if (g.order() != 2 || g.extent(0) != n || g.extent(1) != n)
    throw ArgumentError("hodge_star: metric is not " + std::to_string(n) + "x" + std::to_string(n));
  if (k > n) throw ArgumentError("hodge_star: degree exceeds dimension");
  const double sqrt_det = std::sqrt(to_eigen(g).determinant());
  const AntisymmetricForm up = detail::raise_all(a, inverse(g));
  AntisymmetricForm out(n - k, n);
  std::vector<Index> joint(n);
  out.mutable_entries().for_each_index([&](std::span<const Index> J) {
    double s = 0.0;
    up.entries().for_each_index([&](std::span<const Index> I) {
      const double v = up.at(I);
      if (v == 0.0) return;
      std::copy(I.begin(), I.end(), joint.begin());
      std::copy(J.begin(), J.end(), joint.begin() + k);
      const int e = detail::levi_civita(joint);
      if (e) s += e * v;
    });
    out.mutable_entries().at(J) = s * sqrt_det / detail::factorial(k);
  });
  return out;
}

/// Hodge star at a chart point of M.
inline AntisymmetricForm hodge_star_at(const ProductManifold& M, const AntisymmetricForm& a, const ChartPoint& p) {
  if (a.dim() != M.dim())
    throw ArgumentError("hodge_star_at: form dimension " + std::to_string(a.dim()) + " does not match manifold " +
                        std::to_string(M.dim()));
  return hodge_star(metric_at(M, p), a);
}

/// Pointwise inner product (1/k!) a_I b^I induced by g.
inline double pointwise_inner(const DenseTensor& g_inv, const AntisymmetricForm& a, const AntisymmetricForm& b) {
  a.require_compatible(b);
  const AntisymmetricForm up = detail::raise_all(b, g_inv);
  double s = 0.0;
  for (Index i = 0; i < a.entries().size(); ++i) s += a.entries().data()[i] * up.entries().data()[i];
  return s / detail::factorial(a.degree());
}

enum class DerivativeMode { finite_difference, analytic };

/// dF at p. Finite differences are the default so that closedness is a
/// genuine witness; the analytic mode differentiates the catalog closed forms.
inline AntisymmetricForm exterior_derivative(const FormField& F, const ChartPoint& p, double h,
                                             DerivativeMode mode = DerivativeMode::finite_difference) {
  const ProductManifold& M = F.manifold();
  require_in_open_chart(M, p);
  const auto steps = fd_steps(M, h);
  if (mode == DerivativeMode::analytic) {
    std::vector<AntisymmetricForm> partials;
    for (Index a = 0; a < M.dim(); ++a) partials.push_back(F.partial(p, a, h));
    return exterior_derivative_from_partials(partials);
  }
  require_stencil(M, p, steps);
  return exterior_derivative_from_partials(central_partials(F, p, steps));
}

/// Sign s(n, k) in delta = s * (star d star) on k-forms, Riemannian signature.
/// Fixed so that delta is the formal L2 adjoint of d.
inline double codifferential_sign(Index n, Index k) { return (n * (k + 1) + 1) % 2 ? -1.0 : 1.0; }

/// delta F at p, composed from the Hodge star at stencil points and the
/// finite-difference exterior derivative.
template <typename Field>
AntisymmetricForm codifferential_of(const ProductManifold& M, const Field& field, Index k, const ChartPoint& p,
                                    double h) {
  if (k == 0) throw ArgumentError("codifferential: degree must be at least 1");
  require_in_open_chart(M, p);
  const auto steps = fd_steps(M, h);
  require_stencil(M, p, steps);
  auto starred = [&](const ChartPoint& q) { return hodge_star(detail::metric_unchecked(M, q), field(q)); };
  const auto d_star = exterior_derivative_from_partials(central_partials(starred, p, steps));
  return hodge_star(detail::metric_unchecked(M, p), d_star) * codifferential_sign(M.dim(), k);
}

inline AntisymmetricForm codifferential_at(const ProductManifold& M, const FormField& F, const ChartPoint& p,
                                           double h) {
  if (!(F.manifold() == M)) throw ArgumentError("codifferential_at: field lives on a different manifold");
  return codifferential_of(M, F, F.degree(), p, h);
}

// ---------------------------------------------------------------------------
// L2 inner products.

/// Neumaier-compensated running sum; the result depends only on the order
/// of additions.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// sum_q w_q <F, G>_g(q) over a quadrature grid, in grid order.
template <typename FieldA, typename FieldB>
double l2_inner_fields(const ProductManifold& M, const FieldA& F, const FieldB& G,
                       std::span<const QuadratureNode> grid) {
  CompensatedSum sum;
  for (const auto& node : grid) {
    const DenseTensor ginv = inverse(detail::metric_unchecked(M, node.point));
    sum.add(node.weight * pointwise_inner(ginv, F(node.point), G(node.point)));
  }
  return sum.value();
}

inline double l2_inner(const FormField& F, const FormField& G, std::span<const QuadratureNode> grid) {
  if (F.degree() != G.degree())
    throw ArgumentError("l2_inner: degree mismatch " + std::to_string(F.degree()) + " vs " +
                        std::to_string(G.degree()));
  if (!(F.manifold() == G.manifold())) throw ArgumentError("l2_inner: fields live on different manifolds");
  return l2_inner_fields(F.manifold(), F, G, grid);
}

/// L2 inner product of two harmonic basis elements on their own factor.
inline double factor_l2_inner(const FactorManifold& f, const HarmonicBasisElement& a, const HarmonicBasisElement& b,
                              const FactorResolution& res) {
  if (a.degree != b.degree) throw ArgumentError("factor_l2_inner: degree mismatch");
  CompensatedSum sum;
  for (const auto& node : factor_quadrature(f, res)) {
    const DenseTensor ginv = inverse(factor_metric(f, node.point.coords));
    sum.add(node.weight * pointwise_inner(ginv, a.evaluate(node.point.coords), b.evaluate(node.point.coords)));
  }
  return sum.value();
}

/// Gram matrix of the degree-k catalog basis on a factor.
inline DenseTensor harmonic_gram(const FactorManifold& f, Index k, const FactorResolution& res) {
  const auto basis = harmonic_basis(f, k);
  DenseTensor G({basis.size(), basis.size()});
  for (Index i = 0; i < basis.size(); ++i)
    for (Index j = 0; j < basis.size(); ++j) G(i, j) = factor_l2_inner(f, basis[i], basis[j], res);
  return G;
}

// ---------------------------------------------------------------------------
// Exact perturbations d(eta), eta = A sin(2 pi k x^a / L_a) h with h a
// degree-2 catalog element on one factor. Since h is closed,
//   d(eta) = A kappa cos(kappa x^a) dx^a ^ h,  kappa = 2 pi k / L_a.

struct ExactPerturbationSpec {
  double amplitude = 0.0;
  int wavenumber = 1;
  Index coordinate = 0;  ///< global chart coordinate; must be periodic
  int factor = 1;        ///< factor carrying the 2-form h
  Index basis_index = 0;
};

inline FormPerturbation make_exact_perturbation(const ProductManifold& M, const ExactPerturbationSpec& spec) {
  if (spec.coordinate >= M.dim()) throw ArgumentError("perturbation: coordinate out of range");
  if (spec.factor != 1 && spec.factor != 2) throw ArgumentError("perturbation: factor must be 1 or 2");
  if (spec.wavenumber < 1) throw ArgumentError("perturbation: wavenumber must be at least 1");
  auto [cf, clocal] = M.locate(spec.coordinate);
  const auto L = M.factor(cf).period(clocal);
  if (!L) throw ArgumentError("perturbation: coordinate " + std::to_string(spec.coordinate) + " is not periodic");
  const auto basis = harmonic_basis(M.factor(spec.factor), 2);
  if (spec.basis_index >= basis.size())
    throw ArgumentError("perturbation: factor " + std::to_string(spec.factor) + " has no degree-2 element " +
                        std::to_string(spec.basis_index));
  const HarmonicBasisElement h = basis[spec.basis_index];
  const double kappa = 2.0 * std::numbers::pi * spec.wavenumber / *L;
  const double A = spec.amplitude;
  const Index a = spec.coordinate, n = M.dim();
  const Index off = spec.factor == 1 ? 0 : M.n1();
  const int which = spec.factor;

  auto dxa_wedge = [M, a, n, off, which](const AntisymmetricForm& local) {
    return wedge(AntisymmetricForm::basis_covector(n, a), extend_by_zero(local, n, off));
  };

  FormPerturbation p;
  p.degree = 3;
  p.name = "d(" + std::to_string(A) + " sin(" + std::to_string(spec.wavenumber) + "*2pi*x" + std::to_string(a) +
           "/L) " + h.label + ")";
  p.evaluate = [=](const ChartPoint& q) {
    const auto x = detail::local_coords(M, q, which);
    return dxa_wedge(h.evaluate(x)) * (A * kappa * std::cos(kappa * q[a]));
  };
  p.derivative = [=](const ChartPoint& q, Index b) {
    const auto x = detail::local_coords(M, q, which);
    auto [fb, lb] = M.locate(b);
    AntisymmetricForm out(3, n);
    if (b == a) out += dxa_wedge(h.evaluate(x)) * (-A * kappa * kappa * std::sin(kappa * q[a]));
    if (fb == which) out += dxa_wedge(h.derivative(x, lb)) * (A * kappa * std::cos(kappa * q[a]));
    return out;
  };
  return p;
}

}  // namespace offhol
