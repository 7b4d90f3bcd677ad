#pragma once

/// Report serialization: JSON (sorted keys, stable across runs), CSV (one
/// row per sampled point) and a short human-readable text summary.

#include "offhol/config.hpp"
#include "offhol/experiment.hpp"

#include "json.hpp"

#include <cstdio>
#include <sstream>
#include <string>

namespace offhol {

inline constexpr const char* kReportSchema = "offhol.bound-report/1";
inline constexpr const char* kSweepSchema = "offhol.sweep-report/1";

namespace detail {

using json = nlohmann::json;

inline json to_json(const DenseTensor& t) {
  json rows = json::array();
  for (Index r = 0; r < t.extent(0); ++r) {
    json row = json::array();
    for (Index c = 0; c < t.extent(1); ++c) row.push_back(t(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline json to_json(const KunnethClass& c) {
  return {{"C30", to_json(c.C30)}, {"C21", to_json(c.C21)}, {"C12", to_json(c.C12)}, {"C03", to_json(c.C03)},
          {"basis", c.basis_ref}};
}

inline json to_json(const MixedRankReport& r) {
  return {{"r21", r.r21},
          {"r12", r.r12},
          {"total", r.total},
          {"component_count", r.component_count},
          {"is_mixed", r.is_mixed},
          {"singular_values_21", r.singular_values_21},
          {"singular_values_12", r.singular_values_12},
          {"tolerance", r.tolerance}};
}

inline json to_json(const OffDiagReport& r) {
  return {{"variant", to_string(r.variant)},
          {"dimension", r.dimension},
          {"singular_values", r.singular_values},
          {"tolerance", r.tolerance},
          {"threshold", r.threshold},
          {"generators", r.generators_sampled}};
}

inline json to_json(const PointRecord& p) {
  json j = {{"index", p.index},
            {"coords", p.point.coords},
            {"max_mixed_curvature", p.max_mixed_curvature},
            {"max_off_block_curvature", p.max_off_block_curvature},
            {"bound", p.bound_rank},
            {"bound_components", p.bound_components},
            {"witness_consistent", p.witness_consistent}};
  if (p.endomorphism) j["endomorphism"] = to_json(*p.endomorphism);
  if (p.vector) j["vector"] = to_json(*p.vector);
  return j;
}

inline json to_json(const CertificateResult& c) {
  return {{"name", c.name},       {"value", c.value},     {"threshold", c.threshold},
          {"pass", c.pass},       {"samples", c.samples}, {"detail", c.detail}};
}

}  // namespace detail

/// JSON document for a report. Runtime is left out so reruns are
/// byte-identical; pass include_runtime to add it.
inline nlohmann::json report_json(const BoundReport& rep, bool include_runtime = false) {
  using detail::to_json;
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["version"] = kVersion;
  j["scenario"] = rep.scenario;
  j["manifold"] = rep.manifold;
  j["seed"] = rep.seed;
  j["rank_tol"] = rep.rank_tol;
  j["fd_step"] = rep.fd_step;
  j["variant"] = detail::variant_name(rep.variant);
  j["config"] = rep.config_text;
  j["mixed_rank"] = to_json(rep.mixed);
  if (rep.calibration)
    j["calibration"] = {{"projected", to_json(rep.calibration->projected)},
                        {"max_abs_diff", rep.calibration->max_abs_diff},
                        {"l2_norm", rep.calibration->l2_norm}};
  j["points"] = nlohmann::json::array();
  for (const auto& p : rep.points) j["points"].push_back(to_json(p));
  j["resampled_points"] = rep.resampled_points;
  j["certificates"] = nlohmann::json::array();
  for (const auto& c : rep.certificates) j["certificates"].push_back(to_json(c));
  j["sweep"] = nlohmann::json::array();
  for (const auto& s : rep.sweep)
    j["sweep"].push_back({{"label", s.label}, {"manifold", s.manifold}, {"mixed_rank", to_json(s.report)},
                          {"rank_stable", s.rank_stable}});
  j["warnings"] = rep.warnings;
  j["summary"] = {{"bound_holds", rep.bound_holds_rank()},
                  {"bound_holds_components", rep.bound_holds_components()},
                  {"certificates_pass", rep.certificates_pass()},
                  {"min_dimension", rep.min_dimension()},
                  {"max_dimension", rep.max_dimension()},
                  {"exit_code", rep.exit_code()}};
  if (!rep.error.empty()) j["error"] = rep.error;
  if (include_runtime) j["runtime_seconds"] = rep.runtime_seconds;
  return j;
}

inline std::string report_csv(const BoundReport& rep) {
  std::ostringstream os;
  os << "index";
  for (Index a = 0; a < (rep.points.empty() ? 0 : rep.points.front().point.size()); ++a) os << ",x" << a;
  os << ",dim_endomorphism,dim_vector,mixed_rank,component_count,max_mixed_curvature,max_off_block_curvature,"
        "bound,bound_components\n";
  auto opt_dim = [](const std::optional<OffDiagReport>& r) { return r ? std::to_string(r->dimension) : std::string(); };
  for (const auto& p : rep.points) {
    os << p.index;
    for (double c : p.point.coords) os << "," << detail::fmt_real(c);
    os << "," << opt_dim(p.endomorphism) << "," << opt_dim(p.vector) << "," << rep.mixed.total << ","
       << rep.mixed.component_count << "," << detail::fmt_real(p.max_mixed_curvature) << ","
       << detail::fmt_real(p.max_off_block_curvature) << "," << (p.bound_rank ? 1 : 0) << ","
       << (p.bound_components ? 1 : 0) << "\n";
  }
  return os.str();
}

inline std::string report_text(const BoundReport& rep) {
  std::ostringstream os;
  char buf[128];
  os << "scenario: " << rep.scenario << "  (" << rep.manifold << ", seed " << rep.seed << ")\n";
  if (!rep.error.empty()) {
    os << "error: " << rep.error << "\n";
    os << "BOUND HOLDS (Def 4.1): no\n";
    return os.str();
  }
  os << "mixed rank: " << rep.mixed.total << " (r21 " << rep.mixed.r21 << ", r12 " << rep.mixed.r12
     << "), nonzero mixed components: " << rep.mixed.component_count << "\n";
  os << "points: " << rep.points.size();
  if (rep.resampled_points) os << " (" << rep.resampled_points << " redrawn)";
  os << "\n";
  auto range = [&](bool endo) {
    Index lo = static_cast<Index>(-1), hi = 0;
    bool any = false;
    for (const auto& p : rep.points) {
      const auto& r = endo ? p.endomorphism : p.vector;
      if (!r) continue;
      any = true;
      lo = std::min(lo, r->dimension);
      hi = std::max(hi, r->dimension);
    }
    if (any) os << "off-diagonal dim (" << (endo ? "endomorphism" : "vector") << "): " << lo << ".." << hi << "\n";
  };
  range(true);
  range(false);
  if (rep.calibration) {
    std::snprintf(buf, sizeof buf, "calibration round trip: %.3e\n", rep.calibration->max_abs_diff);
    os << buf;
  }
  for (const auto& c : rep.certificates) {
    std::snprintf(buf, sizeof buf, "  %-24s %-4s %.3e (threshold %.1e)\n", c.name.c_str(), c.pass ? "ok" : "FAIL",
                  c.value, c.threshold);
    os << buf;
  }
  for (const auto& s : rep.sweep)
    os << "  sweep " << s.label << ": mixed rank " << s.report.total << (s.rank_stable ? "" : " (unstable)") << "\n";
  for (const auto& w : rep.warnings) os << "warning: " << w << "\n";
  os << "certificates: " << (rep.certificates_pass() ? "pass" : "FAIL") << "\n";
  os << "bound with component count: " << (rep.bound_holds_components() ? "yes" : "no") << "\n";
  os << "BOUND HOLDS (Def 4.1): " << (rep.bound_holds_rank() ? "yes" : "no") << "\n";
  return os.str();
}

/// format: json | csv | text.
inline std::string emit_report(const BoundReport& rep, const std::string& format) {
  if (format == "json") return report_json(rep).dump(2) + "\n";
  if (format == "csv") return report_csv(rep);
  if (format == "text") return report_text(rep);
  throw ArgumentError("unknown report format '" + format + "' (expected json, csv, or text)");
}

inline nlohmann::json sweep_json(const std::string& scenario, const SweepOutcome& out) {
  nlohmann::json j;
  j["schema"] = kSweepSchema;
  j["version"] = kVersion;
  j["scenario"] = scenario;
  j["ranks_constant"] = out.ranks_constant;
  j["all_bounds_hold"] = out.all_bounds_hold;
  j["all_certificates_pass"] = out.all_certificates_pass;
  j["exit_code"] = out.exit_code();
  j["reports"] = nlohmann::json::array();
  for (const auto& r : out.reports) j["reports"].push_back(report_json(r));
  return j;
}

inline std::string emit_sweep(const std::string& scenario, const SweepOutcome& out, const std::string& format) {
  if (format == "json") return sweep_json(scenario, out).dump(2) + "\n";
  if (format == "text") {
    std::string s;
    for (const auto& r : out.reports) s += report_text(r) + "\n";
    s += std::string("ranks constant across metrics: ") + (out.ranks_constant ? "yes" : "no") + "\n";
    s += std::string("all bounds hold: ") + (out.all_bounds_hold ? "yes" : "no") + "\n";
    return s;
  }
  if (format == "csv") {
    std::string s = "metric,manifold,mixed_rank,min_dimension,max_dimension,bound,certificates\n";
    for (const auto& r : out.reports) {
      const std::string label = r.sweep.empty() ? r.scenario : r.sweep.front().label;
      s += "\"" + label + "\"," + r.manifold + "," + std::to_string(r.mixed.total) + "," +
           std::to_string(r.min_dimension()) + "," + std::to_string(r.max_dimension()) + "," +
           (r.bound_holds_rank() ? "1" : "0") + "," + (r.certificates_pass() ? "1" : "0") + "\n";
    }
    return s;
  }
  throw ArgumentError("unknown report format '" + format + "' (expected json, csv, or text)");
}

}  // namespace offhol
