#pragma once

/// Dense multi-index arrays, exterior algebra on full-index storage, and
/// tolerance-aware numerical rank.
///
/// Wedge products use the "determinant" normalization: for 1-forms a and b,
/// (a ^ b)(u, v) = a(u) b(v) - a(v) b(u), so (dx ^ dy)(e_x, e_y) = 1 and the
/// component array of a k-form is its value on coordinate basis vectors.
/// The alternative 1/k! convention would rescale every torsion coefficient.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace offhol {

using Index = std::size_t;

/// Thrown when an operation receives inconsistent shapes or degrees.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::string shape_string(std::span<const Index> shape) {
  std::ostringstream os;
  os << '(';
  for (Index i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

inline Index product(std::span<const Index> shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

}  // namespace detail

/// Row-major real array of arbitrary order. Order 0 holds a single scalar.
/// Zero-length axes are allowed so that empty coefficient blocks (for example
/// a 0x1 Kunneth block) remain representable.
class DenseTensor {
 public:
  DenseTensor() : data_(1, 0.0) {}

  explicit DenseTensor(std::vector<Index> shape)
      : shape_(std::move(shape)), data_(detail::product(shape_), 0.0) {}

  DenseTensor(std::vector<Index> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != detail::product(shape_))
      throw ArgumentError("DenseTensor: entry count " + std::to_string(data_.size()) +
                          " does not match shape " + detail::shape_string(shape_));
    for (double v : data_)
      if (!std::isfinite(v)) throw ArgumentError("DenseTensor: non-finite entry");
  }

  static DenseTensor scalar(double v) { return DenseTensor({}, {v}); }

  static DenseTensor identity(Index n) {
    DenseTensor t({n, n});
    for (Index i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
  }

  static DenseTensor from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const Index r = rows.size();
    const Index c = r ? rows.begin()->size() : 0;
    std::vector<double> d;
    d.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw ArgumentError("from_rows: ragged rows");
      d.insert(d.end(), row.begin(), row.end());
    }
    return DenseTensor({r, c}, std::move(d));
  }

  Index order() const { return shape_.size(); }
  const std::vector<Index>& shape() const { return shape_; }
  Index extent(Index axis) const { return shape_.at(axis); }
  Index size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  Index offset(std::span<const Index> idx) const {
    Index off = 0;
    for (Index a = 0; a < shape_.size(); ++a) off = off * shape_[a] + idx[a];
    return off;
  }

  double& at(std::span<const Index> idx) { return data_[offset(idx)]; }
  double at(std::span<const Index> idx) const { return data_[offset(idx)]; }

  template <typename... I>
  double& operator()(I... i) {
    const Index idx[] = {static_cast<Index>(i)...};
    return data_[offset(idx)];
  }
  template <typename... I>
  double operator()(I... i) const {
    const Index idx[] = {static_cast<Index>(i)...};
    return data_[offset(idx)];
  }
  double& operator()() { return data_[0]; }
  double operator()() const { return data_[0]; }

  DenseTensor& operator+=(const DenseTensor& o) {
    require_same_shape(o, "operator+=");
    for (Index i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  DenseTensor& operator-=(const DenseTensor& o) {
    require_same_shape(o, "operator-=");
    for (Index i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  DenseTensor& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
  friend DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
  friend DenseTensor operator*(DenseTensor a, double s) { return a *= s; }
  friend DenseTensor operator*(double s, DenseTensor a) { return a *= s; }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  void require_same_shape(const DenseTensor& o, const char* what) const {
    if (shape_ != o.shape_)
      throw ArgumentError(std::string(what) + ": shape mismatch " + detail::shape_string(shape_) +
                          " vs " + detail::shape_string(o.shape_));
  }

  /// Calls fn(idx) for every multi-index in row-major order.
  template <typename Fn>
  void for_each_index(Fn&& fn) const {
    std::vector<Index> idx(shape_.size(), 0);
    if (data_.empty()) return;
    for (Index flat = 0; flat < data_.size(); ++flat) {
      fn(std::span<const Index>(idx));
      for (Index a = shape_.size(); a-- > 0;) {
        if (++idx[a] < shape_[a]) break;
        idx[a] = 0;
      }
    }
  }

 private:
  std::vector<Index> shape_;
  std::vector<double> data_;
};

inline double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
  a.require_same_shape(b, "max_abs_diff");
  double m = 0.0;
  for (Index i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

/// Tensor product: result shape is a.shape ++ b.shape.
inline DenseTensor outer(const DenseTensor& a, const DenseTensor& b) {
  std::vector<Index> shape = a.shape();
  shape.insert(shape.end(), b.shape().begin(), b.shape().end());
  DenseTensor out(std::move(shape));
  Index k = 0;
  for (double x : a.data())
    for (double y : b.data()) out.data()[k++] = x * y;
  return out;
}

/// Sums t over the paired axes (axis_a, axis_b), removing both. When
/// metric_inverse is given the pairing is t_{..i..j..} g^{ij}.
inline DenseTensor contract(const DenseTensor& t, Index axis_a, Index axis_b,
                            const DenseTensor* metric_inverse = nullptr) {
  if (axis_a == axis_b || axis_a >= t.order() || axis_b >= t.order())
    throw ArgumentError("contract: invalid axes for tensor of order " + std::to_string(t.order()));
  const Index n = t.extent(axis_a);
  if (t.extent(axis_b) != n)
    throw ArgumentError("contract: contracted axes have lengths " + std::to_string(n) + " and " +
                        std::to_string(t.extent(axis_b)));
  if (metric_inverse &&
      (metric_inverse->order() != 2 || metric_inverse->extent(0) != n || metric_inverse->extent(1) != n))
    throw ArgumentError("contract: metric_inverse must be " + std::to_string(n) + "x" + std::to_string(n));

  std::vector<Index> out_shape;
  for (Index a = 0; a < t.order(); ++a)
    if (a != axis_a && a != axis_b) out_shape.push_back(t.extent(a));
  DenseTensor out(out_shape);

  std::vector<Index> full(t.order(), 0);
  out.for_each_index([&](std::span<const Index> oi) {
    Index k = 0;
    for (Index a = 0; a < t.order(); ++a)
      if (a != axis_a && a != axis_b) full[a] = oi[k++];
    double s = 0.0;
    for (Index i = 0; i < n; ++i) {
      full[axis_a] = i;
      if (metric_inverse) {
        for (Index j = 0; j < n; ++j) {
          const double gij = (*metric_inverse)(i, j);
          if (gij == 0.0) continue;
          full[axis_b] = j;
          s += t.at(full) * gij;
        }
      } else {
        full[axis_b] = i;
        s += t.at(full);
      }
    }
    out.at(oi) = s;
  });
  return out;
}

/// Raises (or lowers, given g instead of g^{-1}) the index on `axis`; the
/// resulting index stays in the same position.
inline DenseTensor raise_index(const DenseTensor& t, Index axis, const DenseTensor& metric_inverse) {
  const Index n = t.extent(axis);
  if (metric_inverse.order() != 2 || metric_inverse.extent(0) != n || metric_inverse.extent(1) != n)
    throw ArgumentError("raise_index: metric size mismatch");
  Index outer = 1, inner = 1;
  for (Index a = 0; a < axis; ++a) outer *= t.extent(a);
  for (Index a = axis + 1; a < t.order(); ++a) inner *= t.extent(a);
  DenseTensor out(t.shape());
  const double* src = t.data().data();
  double* dst = out.data().data();
  for (Index o = 0; o < outer; ++o)
    for (Index i = 0; i < n; ++i)
      for (Index m = 0; m < n; ++m) {
        const double gim = metric_inverse(i, m);
        if (gim == 0.0) continue;
        const double* s = src + (o * n + m) * inner;
        double* d = dst + (o * n + i) * inner;
        for (Index r = 0; r < inner; ++r) d[r] += gim * s[r];
      }
  return out;
}

// ---------------------------------------------------------------------------
// Small matrix helpers. Matrices are order-2 DenseTensors.

inline Eigen::MatrixXd to_eigen(const DenseTensor& m) {
  if (m.order() != 2) throw ArgumentError("to_eigen: expected a 2-dimensional tensor, got order " +
                                          std::to_string(m.order()));
  Eigen::MatrixXd e(m.extent(0), m.extent(1));
  for (Index i = 0; i < m.extent(0); ++i)
    for (Index j = 0; j < m.extent(1); ++j) e(i, j) = m(i, j);
  return e;
}

inline DenseTensor from_eigen(const Eigen::MatrixXd& e) {
  DenseTensor m({static_cast<Index>(e.rows()), static_cast<Index>(e.cols())});
  for (Index i = 0; i < m.extent(0); ++i)
    for (Index j = 0; j < m.extent(1); ++j) m(i, j) = e(i, j);
  return m;
}

inline DenseTensor matmul(const DenseTensor& a, const DenseTensor& b) {
  if (a.order() != 2 || b.order() != 2 || a.extent(1) != b.extent(0))
    throw ArgumentError("matmul: incompatible shapes " + detail::shape_string(a.shape()) + " and " +
                        detail::shape_string(b.shape()));
  DenseTensor c({a.extent(0), b.extent(1)});
  for (Index i = 0; i < a.extent(0); ++i)
    for (Index k = 0; k < a.extent(1); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (Index j = 0; j < b.extent(1); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline DenseTensor transpose(const DenseTensor& a) {
  DenseTensor t({a.extent(1), a.extent(0)});
  for (Index i = 0; i < a.extent(0); ++i)
    for (Index j = 0; j < a.extent(1); ++j) t(j, i) = a(i, j);
  return t;
}

inline DenseTensor inverse(const DenseTensor& a) {
  return from_eigen(to_eigen(a).inverse());
}

// ---------------------------------------------------------------------------
// Exterior algebra.

/// Totally antisymmetric k-index array over an n-dimensional space.
class AntisymmetricForm {
 public:
  AntisymmetricForm() : AntisymmetricForm(0, 0) {}

  /// Zero form of the given degree.
  AntisymmetricForm(Index degree, Index dim)
      : degree_(degree), dim_(dim), entries_(std::vector<Index>(degree, dim)) {}

  /// Wraps an entry array; antisymmetry is checked to `tol` relative to the
  /// largest entry.
  AntisymmetricForm(Index degree, Index dim, DenseTensor entries, double tol = 1e-12)
      : degree_(degree), dim_(dim), entries_(std::move(entries)) {
    if (entries_.shape() != std::vector<Index>(degree, dim))
      throw ArgumentError("AntisymmetricForm: entry shape " + detail::shape_string(entries_.shape()) +
                          " does not match degree " + std::to_string(degree) + " on dim " +
                          std::to_string(dim));
    if (antisymmetry_defect() > tol * std::max(1.0, entries_.max_abs()))
      throw ArgumentError("AntisymmetricForm: entries are not totally antisymmetric");
  }

  static AntisymmetricForm constant(Index dim, double value) {
    AntisymmetricForm f(0, dim);
    f.entries_() = value;
    return f;
  }

  /// The coordinate 1-form dx^i.
  static AntisymmetricForm basis_covector(Index dim, Index i) {
    AntisymmetricForm f(1, dim);
    f.entries_(i) = 1.0;
    return f;
  }

  Index degree() const { return degree_; }
  Index dim() const { return dim_; }
  const DenseTensor& entries() const { return entries_; }

  template <typename... I>
  double operator()(I... i) const { return entries_(i...); }
  double at(std::span<const Index> idx) const { return entries_.at(idx); }

  /// Sets the component at `idx` and every permutation of it with the
  /// matching sign. Repeated indices are rejected.
  void set_component(std::span<const Index> idx, double value);

  /// Evaluates on k vectors (each of length dim).
  double evaluate(std::span<const std::vector<double>> vectors) const;

  AntisymmetricForm& operator+=(const AntisymmetricForm& o) {
    require_compatible(o);
    entries_ += o.entries_;
    return *this;
  }
  AntisymmetricForm& operator-=(const AntisymmetricForm& o) {
    require_compatible(o);
    entries_ -= o.entries_;
    return *this;
  }
  AntisymmetricForm& operator*=(double s) {
    entries_ *= s;
    return *this;
  }
  friend AntisymmetricForm operator+(AntisymmetricForm a, const AntisymmetricForm& b) { return a += b; }
  friend AntisymmetricForm operator-(AntisymmetricForm a, const AntisymmetricForm& b) { return a -= b; }
  friend AntisymmetricForm operator*(AntisymmetricForm a, double s) { return a *= s; }
  friend AntisymmetricForm operator*(double s, AntisymmetricForm a) { return a *= s; }

  double max_abs() const { return entries_.max_abs(); }

  /// Largest |w_I + w_{sigma I}| over adjacent transpositions sigma.
  double antisymmetry_defect() const {
    double worst = 0.0;
    std::vector<Index> swapped;
    entries_.for_each_index([&](std::span<const Index> idx) {
      for (Index a = 0; a + 1 < idx.size(); ++a) {
        swapped.assign(idx.begin(), idx.end());
        std::swap(swapped[a], swapped[a + 1]);
        worst = std::max(worst, std::abs(entries_.at(idx) + entries_.at(swapped)));
      }
    });
    return worst;
  }

  void require_compatible(const AntisymmetricForm& o) const {
    if (degree_ != o.degree_ || dim_ != o.dim_)
      throw ArgumentError("AntisymmetricForm: incompatible forms (degree " + std::to_string(degree_) +
                          ", dim " + std::to_string(dim_) + ") vs (degree " + std::to_string(o.degree_) +
                          ", dim " + std::to_string(o.dim_) + ")");
  }

  DenseTensor& mutable_entries() { return entries_; }

 private:
  Index degree_;
  Index dim_;
  DenseTensor entries_;
};

namespace detail {

/// All permutations of 0..k-1 with their signs; k <= 8 in practice.
struct PermutationTable {
  std::vector<std::vector<Index>> perms;
  std::vector<int> signs;
};

inline const PermutationTable& permutations(Index k) {
  static thread_local std::vector<PermutationTable> cache;
  if (cache.size() <= k) cache.resize(k + 1);
  PermutationTable& table = cache[k];
  if (table.perms.empty()) {
    std::vector<Index> p(k);
    std::iota(p.begin(), p.end(), Index{0});
    do {
      int inversions = 0;
      for (Index i = 0; i < k; ++i)
        for (Index j = i + 1; j < k; ++j)
          if (p[i] > p[j]) ++inversions;
      table.perms.push_back(p);
      table.signs.push_back(inversions % 2 ? -1 : 1);
    } while (std::next_permutation(p.begin(), p.end()));
  }
  return table;
}

inline double factorial(Index k) {
  double f = 1.0;
  for (Index i = 2; i <= k; ++i) f *= static_cast<double>(i);
  return f;
}

}  // namespace detail

inline void AntisymmetricForm::set_component(std::span<const Index> idx, double value) {
  if (idx.size() != degree_) throw ArgumentError("set_component: index count does not match degree");
  for (Index a = 0; a < idx.size(); ++a)
    for (Index b = a + 1; b < idx.size(); ++b)
      if (idx[a] == idx[b]) throw ArgumentError("set_component: repeated index");
  const auto& table = detail::permutations(degree_);
  std::vector<Index> permuted(degree_);
  for (Index p = 0; p < table.perms.size(); ++p) {
    for (Index a = 0; a < degree_; ++a) permuted[a] = idx[table.perms[p][a]];
    entries_.at(permuted) = table.signs[p] * value;
  }
}

inline double AntisymmetricForm::evaluate(std::span<const std::vector<double>> vectors) const {
  if (vectors.size() != degree_) throw ArgumentError("evaluate: expected " + std::to_string(degree_) + " vectors");
  for (const auto& v : vectors)
    if (v.size() != dim_) throw ArgumentError("evaluate: vector length does not match form dimension");
  double s = 0.0;
  entries_.for_each_index([&](std::span<const Index> idx) {
    double term = entries_.at(idx);
    for (Index a = 0; a < degree_ && term != 0.0; ++a) term *= vectors[a][idx[a]];
    s += term;
  });
  return s;
}

/// Antisymmetrized product, normalized so that (dx ^ dy)(e_x, e_y) = 1.
inline AntisymmetricForm wedge(const AntisymmetricForm& a, const AntisymmetricForm& b) {
  if (a.dim() != b.dim())
    throw ArgumentError("wedge: dimension mismatch " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  const Index k = a.degree(), l = b.degree(), n = a.dim();
  AntisymmetricForm out(k + l, n);
  if (k + l > n) return out;
  if (a.max_abs() == 0.0 || b.max_abs() == 0.0) return out;

  const auto& table = detail::permutations(k + l);
  const double norm = 1.0 / (detail::factorial(k) * detail::factorial(l));
  std::vector<Index> ia(k), ib(l);
  std::vector<std::pair<std::vector<Index>, double>> sorted_values;
  out.entries().for_each_index([&](std::span<const Index> idx) {
    for (Index x = 1; x < idx.size(); ++x)
      if (idx[x - 1] >= idx[x]) return;
    double s = 0.0;
    for (Index p = 0; p < table.perms.size(); ++p) {
      const auto& perm = table.perms[p];
      for (Index x = 0; x < k; ++x) ia[x] = idx[perm[x]];
      for (Index x = 0; x < l; ++x) ib[x] = idx[perm[k + x]];
      s += table.signs[p] * a.at(ia) * b.at(ib);
    }
    if (s != 0.0) sorted_values.emplace_back(std::vector<Index>(idx.begin(), idx.end()), s * norm);
  });
  for (const auto& [idx, v] : sorted_values) out.set_component(idx, v);
  return out;
}

/// Embeds a form on an m-dimensional summand into dimension n, placing its
/// coordinates at [offset, offset + m).
inline AntisymmetricForm extend_by_zero(const AntisymmetricForm& f, Index n, Index offset) {
  if (offset + f.dim() > n) throw ArgumentError("extend_by_zero: summand does not fit");
  AntisymmetricForm out(f.degree(), n);
  std::vector<Index> big(f.degree());
  f.entries().for_each_index([&](std::span<const Index> idx) {
    for (Index a = 0; a < idx.size(); ++a) big[a] = idx[a] + offset;
    out.mutable_entries().at(big) = f.at(idx);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Numerical rank.

struct RankResult {
  Index rank = 0;
  std::vector<double> singular_values;  ///< descending
  double threshold = 0.0;               ///< absolute cut actually applied
};

inline constexpr double kDefaultRankTol = 1e-8;

/// Counts singular values above tol * max(sigma_max, floor_scale). With the
/// default floor_scale = 0 the cut is purely relative; a positive floor lets
/// callers anchor the cut to an external magnitude so that pure round-off
/// in an otherwise vanishing matrix does not register as rank.
inline RankResult numerical_rank(const Eigen::MatrixXd& m, double tol = kDefaultRankTol, double floor_scale = 0.0) {
  if (!(tol > 0.0)) throw ArgumentError("numerical_rank: tolerance must be positive");
  RankResult r;
  if (m.rows() == 0 || m.cols() == 0) return r;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  r.singular_values.assign(s.data(), s.data() + s.size());
  const double smax = r.singular_values.empty() ? 0.0 : r.singular_values.front();
  r.threshold = tol * std::max(smax, floor_scale);
  if (smax == 0.0) return r;
  for (double v : r.singular_values)
    if (v > r.threshold) ++r.rank;
  return r;
}

inline RankResult numerical_rank(const DenseTensor& m, double tol = kDefaultRankTol, double floor_scale = 0.0) {
  if (m.order() != 2)
    throw ArgumentError("numerical_rank: expected a 2-dimensional tensor, got order " + std::to_string(m.order()));
  return numerical_rank(to_eigen(m), tol, floor_scale);
}

/// Dimension of the linear span of same-shape tensors: each is flattened to
/// a row of a stacked matrix whose numerical rank is returned.
inline RankResult span_dimension(std::span<const DenseTensor> vectors, double tol = kDefaultRankTol,
                                 double floor_scale = 0.0) {
  if (vectors.empty()) throw ArgumentError("span_dimension: empty list");
  const auto& shape = vectors.front().shape();
  Eigen::MatrixXd stack(vectors.size(), vectors.front().size());
  for (Index r = 0; r < vectors.size(); ++r) {
    if (vectors[r].shape() != shape)
      throw ArgumentError("span_dimension: shape mismatch at element " + std::to_string(r));
    for (Index c = 0; c < vectors[r].size(); ++c) stack(r, c) = vectors[r].data()[c];
  }
  return numerical_rank(stack, tol, floor_scale);
}

}  // namespace offhol
