#pragma once

/// Experiment runner: builds the calibrated torsion for a configured class,
/// measures the off-diagonal holonomy dimension at sampled points, compares
/// it with the mixed rank of the class, and runs the certificate checks.

#include "offhol/connection.hpp"
#include "offhol/forms.hpp"
#include "offhol/geometry.hpp"
#include "offhol/holonomy.hpp"
#include "offhol/kunneth.hpp"
#include "offhol/tensor.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace offhol {

inline constexpr const char* kVersion = "0.1.0";

enum class VariantSelection { endomorphism, vector, both };

struct SamplingConfig {
  Index count = 20;
  std::uint64_t seed = 1;
  std::vector<ChartPoint> explicit_points;  ///< used instead of sampling when nonempty
};

struct ToleranceConfig {
  double rank_tol = kDefaultRankTol;
  double fd_step = 1e-4;
  std::optional<QuadratureResolution> quadrature;
};

struct CertificateConfig {
  bool enabled = true;
  Index points = 30;
  std::uint64_t seed = 2;
  double metricity = 1e-8;
  double skewness = 1e-6;
  double bianchi = 1e-5;
  double harmonic_d = 1e-6;
  double harmonic_delta = 1e-6;
  double calibration = 1e-6;
  double slope_target = 2.0;
  double slope_tolerance = 0.1;
};

struct ExperimentConfig {
  std::string name = "custom";
  ProductManifold manifold;
  KunnethClass cls;
  std::optional<ExactPerturbationSpec> perturbation;
  SamplingConfig sampling;
  ToleranceConfig tolerances;
  CertificateConfig certificates;
  std::vector<MetricParams> sweep;
  VariantSelection variant = VariantSelection::both;
  DerivativeMode derivative_mode = DerivativeMode::analytic;

  ExperimentConfig(ProductManifold M, KunnethClass c) : manifold(std::move(M)), cls(std::move(c)) {}

  CurvatureOptions curvature_options() const { return {tolerances.fd_step, derivative_mode, Contorsion::skew}; }
  QuadratureResolution quadrature() const { return tolerances.quadrature.value_or(default_resolution(manifold)); }
};

/// Throws ArgumentError on inconsistent settings.
inline void validate(const ExperimentConfig& cfg) {
  validate_class(cfg.manifold, cfg.cls);
  if (!(cfg.tolerances.rank_tol > 0.0)) throw ArgumentError("rank_tol must be positive");
  if (!(cfg.tolerances.fd_step > 0.0)) throw ArgumentError("fd_step must be positive");
  if (cfg.sampling.explicit_points.empty() && cfg.sampling.count == 0)
    throw ArgumentError("sampling needs at least one point");
  for (const auto& p : cfg.sampling.explicit_points)
    if (p.size() != cfg.manifold.dim())
      throw ArgumentError("explicit point has " + std::to_string(p.size()) + " coordinates, expected " +
                          std::to_string(cfg.manifold.dim()));
  if (cfg.perturbation) make_exact_perturbation(cfg.manifold, *cfg.perturbation);
  const auto& c = cfg.certificates;
  for (double t : {c.metricity, c.skewness, c.bianchi, c.harmonic_d, c.harmonic_delta, c.calibration, c.slope_tolerance})
    if (!(t > 0.0)) throw ArgumentError("certificate thresholds must be positive");
  if (cfg.tolerances.quadrature) {
    quadrature_grid(cfg.manifold, *cfg.tolerances.quadrature);  // throws on bad resolution
  }
}

inline TorsionSpec build_torsion(const ExperimentConfig& cfg) {
  std::optional<FormPerturbation> pert;
  if (cfg.perturbation) pert = make_exact_perturbation(cfg.manifold, *cfg.perturbation);
  return torsion_from_class(cfg.manifold, cfg.cls, std::move(pert));
}

// ---------------------------------------------------------------------------
// Report types.

struct PointRecord {
  Index index = 0;
  ChartPoint point;
  std::optional<OffDiagReport> endomorphism;
  std::optional<OffDiagReport> vector;
  double max_mixed_curvature = 0.0;
  double max_off_block_curvature = 0.0;
  bool bound_rank = false;        ///< dim >= mixed rank
  bool bound_components = false;   ///< dim >= component count
  bool witness_consistent = true;  ///< dim > 0 implies an off-block curvature entry above the cut

  /// Dimension entering the verdict: endomorphism reading when computed.
  Index verdict_dimension() const { return endomorphism ? endomorphism->dimension : vector->dimension; }
};

struct CertificateResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  Index samples = 0;
  std::string detail;
};

struct CalibrationRecord {
  KunnethClass projected;
  double max_abs_diff = 0.0;
  double l2_norm = 0.0;
};

struct SweepRecord {
  std::string label;
  std::string manifold;
  MixedRankReport report;
  bool rank_stable = true;
};

struct BoundReport {
  std::string scenario;
  std::string config_text;  ///< reproducible config echo
  std::string manifold;
  std::uint64_t seed = 0;
  double rank_tol = 0.0;
  double fd_step = 0.0;
  VariantSelection variant = VariantSelection::both;
  MixedRankReport mixed;
  std::optional<CalibrationRecord> calibration;
  std::vector<PointRecord> points;
  Index resampled_points = 0;
  std::vector<CertificateResult> certificates;
  std::vector<SweepRecord> sweep;
  std::vector<std::string> warnings;
  double runtime_seconds = 0.0;
  std::string error;  ///< set when the experiment could not run (sweep isolation)

  bool bound_holds_rank() const {
    if (!error.empty() || points.empty()) return false;
    for (const auto& p : points)
      if (!p.bound_rank) return false;
    return true;
  }
  bool bound_holds_components() const {
    if (!error.empty() || points.empty()) return false;
    for (const auto& p : points)
      if (!p.bound_components) return false;
    return true;
  }
  bool certificates_pass() const {
    if (!error.empty()) return false;
    for (const auto& c : certificates)
      if (!c.pass) return false;
    for (const auto& s : sweep)
      if (s.report.total != mixed.total || !s.rank_stable) return false;
    for (const auto& p : points)
      if (!p.witness_consistent) return false;
    return true;
  }
  Index min_dimension() const {
    Index m = static_cast<Index>(-1);
    for (const auto& p : points) m = std::min(m, p.verdict_dimension());
    return points.empty() ? 0 : m;
  }
  Index max_dimension() const {
    Index m = 0;
    for (const auto& p : points) m = std::max(m, p.verdict_dimension());
    return m;
  }

  /// 0 = bound holds and certificates pass, 1 = bound violated,
  /// 2 = certificate failure (takes precedence: a verdict from uncertified
  /// numbers is not trusted).
  int exit_code() const {
    if (!certificates_pass()) return 2;
    if (!bound_holds_rank()) return 1;
    return 0;
  }
};

namespace detail {

inline CertificateResult max_certificate(std::string name, double value, double threshold, Index samples,
                                         std::string detail = {}) {
  return {std::move(name), value, threshold, value < threshold, samples, std::move(detail)};
}

/// Least-squares slope of log(err) against log(h).
inline double loglog_slope(std::span<const double> h, std::span<const double> err) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h.size());
  for (Index i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Draws points, resampling (bounded, seed-deterministic) whenever the
/// probe throws DomainError.
template <typename Probe>
std::vector<ChartPoint> draw_points(const ProductManifold& M, Index count, std::uint64_t seed, Probe&& probe,
                                    Index& resampled) {
  PointSampler sampler(M, seed);
  std::vector<ChartPoint> pts;
  for (Index i = 0; i < count; ++i) {
    for (int attempt = 0;; ++attempt) {
      ChartPoint p = sampler.next();
      try {
        probe(p);
        pts.push_back(std::move(p));
        break;
      } catch (const DomainError&) {
        if (attempt >= 100) throw DomainError("point sampling: retry budget (100) exhausted");
        ++resampled;
      }
    }
  }
  return pts;
}

}  // namespace detail

/// Finite-difference-vs-closed-form Christoffel gap at h, h/2, h/4 and the
/// fitted convergence order. Flat factors have no gap; they pass trivially.
inline CertificateResult christoffel_convergence(const ProductManifold& M, std::span<const ChartPoint> pts,
                                                 double target, double tolerance) {
  const std::vector<double> hs = {0.02, 0.01, 0.005};
  std::vector<double> gaps;
  for (double h : hs) {
    double worst = 0.0;
    for (const auto& p : pts) worst = std::max(worst, max_abs_diff(christoffel_fd(M, p, h), christoffel_lc(M, p)));
    gaps.push_back(worst);
  }
  if (gaps.front() < 1e-12)
    return {"christoffel_fd_order", target, tolerance, true, pts.size(), "flat metric: finite differences exact"};
  const double slope = detail::loglog_slope(hs, gaps);
  std::string d = "gaps";
  for (double g : gaps) d += " " + std::to_string(g);
  return {"christoffel_fd_order", slope, tolerance, std::abs(slope - target) <= tolerance, pts.size(), d};
}

/// Certificate suite at seeded points: metricity, curvature g-skewness and
/// antisymmetry, first Bianchi identity with torsion, harmonicity of the
/// catalog bases and of the harmonic part of the torsion, Christoffel
/// convergence order, and the calibration round trip.
inline std::vector<CertificateResult> run_certificates(const ExperimentConfig& cfg, const TorsionSpec& T,
                                                       std::optional<CalibrationRecord> calibration = {}) {
  const auto& cc = cfg.certificates;
  const ProductManifold& M = cfg.manifold;
  const CurvatureOptions opt = cfg.curvature_options();
  const double h = cfg.tolerances.fd_step;
  Index resampled = 0;
  const auto pts = detail::draw_points(
      M, cc.points, cc.seed,
      [&](const ChartPoint& p) {
        require_in_chart(M, p);
        require_stencil(M, p, fd_steps(M, 0.02));
      },
      resampled);

  double metricity = 0.0, skew = 0.0, anti = 0.0, bianchi = 0.0;
  for (const auto& p : pts) {
    metricity = std::max(metricity, metricity_check(M, T, p, opt));
    const auto R = curvature_at(M, T, p, opt);
    skew = std::max(skew, curvature_skewness(M, R));
    anti = std::max(anti, curvature_antisymmetry(R));
    bianchi = std::max(bianchi, bianchi_cyclic_check(M, T, p, opt));
  }

  std::vector<CertificateResult> out;
  out.push_back(detail::max_certificate("metricity", metricity, cc.metricity, pts.size()));
  out.push_back(detail::max_certificate("curvature_g_skewness", skew, cc.skewness, pts.size()));
  out.push_back(detail::max_certificate("curvature_antisymmetry", anti, cc.skewness, pts.size()));
  out.push_back(detail::max_certificate("bianchi_cyclic", bianchi, cc.bianchi, pts.size()));

  // Harmonic catalog witnesses, each element pulled back to the product.
  double dmax = 0.0, deltamax = 0.0;
  Index elements = 0;
  for (int which : {1, 2})
    for (Index k = 0; k <= M.factor(which).dim(); ++k)
      for (const auto& e : harmonic_basis(M.factor(which), k)) {
        const FormField F = FormField::from_factor_element(M, which, e);
        ++elements;
        for (const auto& p : pts) {
          if (k < M.dim()) dmax = std::max(dmax, exterior_derivative(F, p, h).max_abs());
          if (k >= 1) deltamax = std::max(deltamax, codifferential_at(M, F, p, h).max_abs());
        }
      }
  const FormField harmonic_part = T.form.without_perturbation();
  for (const auto& p : pts) {
    dmax = std::max(dmax, exterior_derivative(harmonic_part, p, h).max_abs());
    deltamax = std::max(deltamax, codifferential_at(M, harmonic_part, p, h).max_abs());
  }
  const std::string hd = std::to_string(elements) + " catalog elements + harmonic torsion part";
  out.push_back(detail::max_certificate("harmonic_d", dmax, cc.harmonic_d, pts.size(), hd));
  out.push_back(detail::max_certificate("harmonic_delta", deltamax, cc.harmonic_delta, pts.size(), hd));

  // Torsion closedness (calibration needs [T] to be a class at all).
  double dT = 0.0;
  for (const auto& p : pts) dT = std::max(dT, exterior_derivative(T.form, p, h).max_abs());
  out.push_back(detail::max_certificate("torsion_closed", dT, cc.harmonic_d, pts.size()));

  out.push_back(christoffel_convergence(M, pts, cc.slope_target, cc.slope_tolerance));

  if (calibration)
    out.push_back(detail::max_certificate("calibration_round_trip", calibration->max_abs_diff, cc.calibration, 0,
                                          "projected class vs configured class"));
  return out;
}

/// Projects the configured torsion back onto the harmonic basis.
inline CalibrationRecord calibrate(const ExperimentConfig& cfg, const TorsionSpec& T) {
  const auto grid = quadrature_grid(cfg.manifold, cfg.quadrature());
  auto proj = project_form_to_class(T.form, cfg.manifold, grid);
  return {proj.cls, max_abs_diff(proj.cls, cfg.cls), proj.l2_norm};
}

struct RunOptions {
  bool certificates = true;
  bool calibration = true;
  bool sweep = true;
};

/// Runs the bound verification for one configuration.
inline BoundReport run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {},
                                  std::string config_text = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  validate(cfg);
  BoundReport rep;
  rep.scenario = cfg.name;
  rep.config_text = std::move(config_text);
  rep.manifold = cfg.manifold.name();
  rep.seed = cfg.sampling.seed;
  rep.rank_tol = cfg.tolerances.rank_tol;
  rep.fd_step = cfg.tolerances.fd_step;
  rep.variant = cfg.variant;

  const ProductManifold& M = cfg.manifold;
  const TorsionSpec T = build_torsion(cfg);
  const CurvatureOptions opt = cfg.curvature_options();
  const auto split = SplitProjectors::of(M);
  rep.mixed = mixed_rank(cfg.cls, cfg.tolerances.rank_tol);

  auto probe = [&](const ChartPoint& p) {
    require_in_chart(M, p);
    if (opt.mode == DerivativeMode::finite_difference) require_stencil(M, p, fd_steps(M, opt.h));
  };
  std::vector<ChartPoint> pts;
  if (!cfg.sampling.explicit_points.empty()) {
    for (const auto& p : cfg.sampling.explicit_points) {
      const ChartPoint q = canonicalize(M, p);
      probe(q);
      pts.push_back(q);
    }
  } else {
    pts = detail::draw_points(M, cfg.sampling.count, cfg.sampling.seed, probe, rep.resampled_points);
  }
  if (rep.resampled_points)
    rep.warnings.push_back(std::to_string(rep.resampled_points) + " sampled points left the chart and were redrawn");

  for (Index idx = 0; idx < pts.size(); ++idx) {
    PointRecord rec;
    rec.index = idx;
    rec.point = pts[idx];
    const CurvatureAtPoint R = curvature_at(M, T, pts[idx], opt);
    if (cfg.variant != VariantSelection::vector)
      rec.endomorphism = off_span_from_curvature(R, split, cfg.tolerances.rank_tol, SpanVariant::endomorphism);
    if (cfg.variant != VariantSelection::endomorphism)
      rec.vector = off_span_from_curvature(R, split, cfg.tolerances.rank_tol, SpanVariant::vector);
    rec.max_mixed_curvature = max_mixed_component(R.R, M.split());
    rec.max_off_block_curvature = max_off_block_component(R.R, M.split());
    const Index dim = rec.verdict_dimension();
    rec.bound_rank = dim >= rep.mixed.total;
    rec.bound_components = dim >= rep.mixed.component_count;
    // A singular value above the cut forces some stacked entry above
    // cut / sqrt(entry count); the stacked entries are off-block curvature.
    const OffDiagReport& used = rec.endomorphism ? *rec.endomorphism : *rec.vector;
    const double entries = static_cast<double>(used.generators_sampled) *
                           (used.variant == SpanVariant::endomorphism ? M.dim() * M.dim() : M.dim());
    rec.witness_consistent = dim == 0 || rec.max_off_block_curvature >= used.threshold / std::sqrt(entries);
    if (rec.endomorphism && rec.endomorphism->dimension > M.n1() * M.n2()) rec.witness_consistent = false;
    rep.points.push_back(std::move(rec));
  }

  if (options.calibration) rep.calibration = calibrate(cfg, T);
  if (options.certificates && cfg.certificates.enabled) rep.certificates = run_certificates(cfg, T, rep.calibration);
  if (options.sweep && !cfg.sweep.empty()) {
    // The reference class is the configured one; a perturbation does not
    // change it, so the sweep ranks only the harmonic part.
    for (const auto& e : metric_independence_sweep(M, cfg.cls, cfg.sweep, cfg.tolerances.rank_tol, cfg.tolerances.quadrature))
      rep.sweep.push_back({e.params.label(), e.manifold.name(), e.report, e.rank_stable});
  }
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

/// The configuration re-expressed on a different catalog metric: same de
/// Rham class (periods held fixed), same perturbation descriptor.
inline ExperimentConfig with_metric(const ExperimentConfig& cfg, const MetricParams& params) {
  ProductManifold M = apply_metric(cfg.manifold, params);
  ExperimentConfig out(M, transport_class(cfg.manifold, M, cfg.cls));
  out.name = cfg.name + " [" + params.label() + "]";
  out.perturbation = cfg.perturbation;
  out.sampling = cfg.sampling;
  out.tolerances = cfg.tolerances;
  out.certificates = cfg.certificates;
  out.variant = cfg.variant;
  out.derivative_mode = cfg.derivative_mode;
  return out;
}

struct SweepOutcome {
  std::vector<BoundReport> reports;
  bool ranks_constant = true;
  bool all_bounds_hold = true;
  bool all_certificates_pass = true;

  int exit_code() const {
    if (!all_certificates_pass || !ranks_constant) return 2;
    if (!all_bounds_hold) return 1;
    return 0;
  }
};

/// One report per metric parameter set; failures are isolated per metric.
inline SweepOutcome run_sweep(const ExperimentConfig& cfg, const RunOptions& options = {}) {
  if (cfg.sweep.empty()) throw ArgumentError("run_sweep: no metric parameters configured");
  SweepOutcome out;
  RunOptions per = options;
  per.sweep = false;
  std::optional<MixedRankReport> first;
  for (const auto& params : cfg.sweep) {
    BoundReport rep;
    try {
      const ExperimentConfig sub = with_metric(cfg, params);
      rep = run_experiment(sub, per);
      // The rank recorded for the sweep is recomputed from the projected class.
      if (rep.calibration) {
        const MixedRankReport projected = mixed_rank(rep.calibration->projected, cfg.tolerances.rank_tol, rep.calibration->l2_norm);
        rep.sweep.push_back({params.label(), sub.manifold.name(), projected, true});
      }
    } catch (const std::exception& e) {
      rep.scenario = cfg.name + " [" + params.label() + "]";
      rep.error = e.what();
    }
    if (rep.error.empty()) {
      if (!first) first = rep.mixed;
      const MixedRankReport& r = rep.sweep.empty() ? rep.mixed : rep.sweep.front().report;
      if (r.r21 != first->r21 || r.r12 != first->r12 || r.total != first->total) out.ranks_constant = false;
    }
    out.all_bounds_hold = out.all_bounds_hold && rep.bound_holds_rank();
    out.all_certificates_pass = out.all_certificates_pass && rep.certificates_pass();
    out.reports.push_back(std::move(rep));
  }
  return out;
}

}  // namespace offhol
