#pragma once

/// Experiment configuration documents and the builtin scenarios.
///
/// A configuration is a single INI-style text document:
///
///   [experiment]   name, variant (endo|vector|both), derivative (analytic|fd)
///   [manifold]     factor1 / factor2 = "torus L1 L2 ..." or "sphere R",
///                  pole_margin
///   [class]        C30, C21, C12, C03: rows separated by '|', entries by
///                  spaces; omitted blocks are zero
///   [perturbation] amplitude, wavenumber, coordinate, factor, basis_index
///   [sampling]     points, seed, point<N> = explicit coordinates
///   [tolerances]   rank_tol, fd_step, quadrature1, quadrature2
///   [certificates] enabled, points, seed, thresholds
///   [sweep]        metric<N> = "radius=R periods=L1,L2 period_scale=S"
///
/// Reals accept a trailing "pi" ("2pi", "0.5pi", "pi").

#include "offhol/experiment.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace offhol {

/// Malformed or inconsistent configuration; the message names the location.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

inline std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& tok, const std::string& where) {
  std::string t = tok;
  double mult = 1.0;
  if (t.size() >= 2 && t.compare(t.size() - 2, 2, "pi") == 0) {
    mult = std::numbers::pi;
    t = t.substr(0, t.size() - 2);
    if (t.empty() || t == "+") t = "1";
    if (t == "-") t = "-1";
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected a real number, got '" + tok + "'");
  }
  if (used != t.size() || !std::isfinite(v)) throw ConfigError(where + ": expected a real number, got '" + tok + "'");
  return v * mult;
}

inline long long parse_int(const std::string& tok, const std::string& where) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &used);
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected an integer, got '" + tok + "'");
  }
  if (used != tok.size()) throw ConfigError(where + ": expected an integer, got '" + tok + "'");
  return v;
}

inline std::uint64_t parse_seed(const std::string& tok, const std::string& where) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(tok, &used);
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected an unsigned integer, got '" + tok + "'");
  }
  if (used != tok.size() || tok.front() == '-') throw ConfigError(where + ": expected an unsigned integer, got '" + tok + "'");
  return v;
}

inline bool parse_bool(const std::string& tok, const std::string& where) {
  if (tok == "true" || tok == "yes" || tok == "1") return true;
  if (tok == "false" || tok == "no" || tok == "0") return false;
  throw ConfigError(where + ": expected true/false, got '" + tok + "'");
}

inline std::vector<double> parse_reals(const std::string& s, const std::string& where) {
  std::vector<double> out;
  for (const auto& tok : split_ws(s)) out.push_back(parse_real(tok, where));
  return out;
}

inline std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline FactorManifold parse_factor(const std::string& s, const std::string& where, const std::string& name) {
  const auto toks = split_ws(s);
  if (toks.empty()) throw ConfigError(where + ": missing factor description");
  std::vector<double> args;
  for (std::size_t i = 1; i < toks.size(); ++i) args.push_back(parse_real(toks[i], where));
  try {
    if (toks[0] == "torus") {
      if (args.empty()) throw ConfigError(where + ": torus needs at least one period");
      return FactorManifold::torus(args, name.empty() ? "" : name);
    }
    if (toks[0] == "sphere") {
      if (args.size() != 1) throw ConfigError(where + ": sphere takes exactly one radius");
      return FactorManifold::sphere(args[0], name.empty() ? "S2" : name);
    }
  } catch (const ArgumentError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": unknown factor kind '" + toks[0] + "' (expected torus or sphere)");
}

inline std::string format_factor(const FactorManifold& f) {
  std::string s;
  if (f.is_sphere()) return "sphere " + fmt_real(f.as_sphere().radius);
  s = "torus";
  for (double L : f.as_torus().periods) s += " " + fmt_real(L);
  return s;
}

inline DenseTensor parse_block(const std::string& s, const std::vector<Index>& shape, const std::string& where) {
  DenseTensor out(shape);
  if (trim(s).empty()) return out;
  const auto rows = split_on(s, '|');
  if (rows.size() != shape[0])
    throw ConfigError(where + ": expected " + std::to_string(shape[0]) + " rows, got " + std::to_string(rows.size()));
  for (Index r = 0; r < rows.size(); ++r) {
    const auto vals = parse_reals(rows[r], where);
    if (vals.size() != shape[1])
      throw ConfigError(where + ": row " + std::to_string(r + 1) + " has " + std::to_string(vals.size()) +
                        " entries, expected " + std::to_string(shape[1]));
    for (Index c = 0; c < vals.size(); ++c) out(r, c) = vals[c];
  }
  return out;
}

inline std::string format_block(const DenseTensor& b) {
  std::string s;
  for (Index r = 0; r < b.extent(0); ++r) {
    if (r) s += " | ";
    for (Index c = 0; c < b.extent(1); ++c) s += (c ? " " : "") + fmt_real(b(r, c));
  }
  return s;
}

inline MetricParams parse_metric(const std::string& s, const std::string& where) {
  MetricParams mp;
  for (const auto& tok : split_ws(s)) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key=value, got '" + tok + "'");
    const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
    if (k == "radius") {
      mp.sphere_radius = parse_real(v, where);
    } else if (k == "periods") {
      std::vector<double> ps;
      for (const auto& p : split_on(v, ',')) ps.push_back(parse_real(p, where));
      mp.torus_periods = ps;
    } else if (k == "period_scale") {
      mp.period_scale = parse_real(v, where);
    } else {
      throw ConfigError(where + ": unknown metric key '" + k + "'");
    }
  }
  return mp;
}

inline std::string format_metric(const MetricParams& mp) {
  std::string s;
  if (mp.sphere_radius) s += "radius=" + fmt_real(*mp.sphere_radius) + " ";
  if (mp.torus_periods) {
    s += "periods=";
    for (Index i = 0; i < mp.torus_periods->size(); ++i) s += (i ? "," : "") + fmt_real((*mp.torus_periods)[i]);
    s += " ";
  }
  s += "period_scale=" + fmt_real(mp.period_scale);
  return s;
}

inline FactorResolution parse_resolution(const std::string& s, const std::string& where) {
  FactorResolution r;
  for (const auto& tok : split_ws(s)) r.push_back(static_cast<int>(parse_int(tok, where)));
  if (r.empty()) throw ConfigError(where + ": empty resolution");
  return r;
}

inline std::string variant_name(VariantSelection v) {
  switch (v) {
    case VariantSelection::endomorphism: return "endo";
    case VariantSelection::vector: return "vector";
    case VariantSelection::both: return "both";
  }
  return "both";
}

}  // namespace detail

inline VariantSelection parse_variant(const std::string& s) {
  if (s == "endo" || s == "endomorphism") return VariantSelection::endomorphism;
  if (s == "vector") return VariantSelection::vector;
  if (s == "both") return VariantSelection::both;
  throw ConfigError("variant: expected endo, vector, or both, got '" + s + "'");
}

/// Parses a configuration document. `source` labels error messages.
inline ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }

  static const std::map<std::string, std::set<std::string>> known = {
      {"experiment", {"name", "variant", "derivative"}},
      {"manifold", {"factor1", "factor2", "pole_margin"}},
      {"class", {"C30", "C21", "C12", "C03"}},
      {"perturbation", {"amplitude", "wavenumber", "coordinate", "factor", "basis_index"}},
      {"sampling", {"points", "seed"}},
      {"tolerances", {"rank_tol", "fd_step", "quadrature1", "quadrature2"}},
      {"certificates",
       {"enabled", "points", "seed", "metricity", "skewness", "bianchi", "harmonic_d", "harmonic_delta", "calibration",
        "slope_target", "slope_tolerance"}},
      {"sweep", {}},
  };
  for (const auto& [section, body] : tree) {
    const auto it = known.find(section);
    if (it == known.end()) throw ConfigError(source + ": unknown section [" + section + "]");
    for (const auto& [key, _] : body) {
      const bool numbered_point = section == "sampling" && key.rfind("point", 0) == 0 && key != "points";
      const bool numbered_metric = section == "sweep" && key.rfind("metric", 0) == 0;
      if (!it->second.count(key) && !numbered_point && !numbered_metric)
        throw ConfigError(source + ": [" + section + "] unknown key '" + key + "'");
    }
  }

  auto where = [&](const std::string& section, const std::string& key) { return source + ": [" + section + "] " + key; };
  auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(section + "/" + key, '/'))) return detail::trim(*v);
    return std::nullopt;
  };

  const auto f1 = get("manifold", "factor1");
  const auto f2 = get("manifold", "factor2");
  if (!f1) throw ConfigError(where("manifold", "factor1") + ": required");
  if (!f2) throw ConfigError(where("manifold", "factor2") + ": required");
  const double margin =
      get("manifold", "pole_margin") ? detail::parse_real(*get("manifold", "pole_margin"), where("manifold", "pole_margin"))
                                     : kDefaultPoleMargin;
  auto factor1 = detail::parse_factor(*f1, where("manifold", "factor1"), "");
  auto factor2 = detail::parse_factor(*f2, where("manifold", "factor2"), "");
  std::optional<ProductManifold> M;
  try {
    M.emplace(factor1, factor2, margin);
  } catch (const ArgumentError& e) {
    throw ConfigError(where("manifold", "pole_margin") + ": " + e.what());
  }

  KunnethClass cls = KunnethClass::zero(*M);
  const char* block_names[] = {"C03", "C12", "C21", "C30"};
  for (int p = 0; p <= 3; ++p)
    if (auto v = get("class", block_names[p]))
      cls.block(p) = detail::parse_block(*v, cls.block(p).shape(), where("class", block_names[p]));

  ExperimentConfig cfg(*M, cls);
  if (auto v = get("experiment", "name")) cfg.name = *v;
  if (auto v = get("experiment", "variant")) {
    try {
      cfg.variant = parse_variant(*v);
    } catch (const ConfigError& e) {
      throw ConfigError(where("experiment", "variant") + ": " + e.what());
    }
  }
  if (auto v = get("experiment", "derivative")) {
    if (*v == "analytic")
      cfg.derivative_mode = DerivativeMode::analytic;
    else if (*v == "fd" || *v == "finite_difference")
      cfg.derivative_mode = DerivativeMode::finite_difference;
    else
      throw ConfigError(where("experiment", "derivative") + ": expected analytic or fd, got '" + *v + "'");
  }

  if (tree.get_child_optional("perturbation")) {
    ExactPerturbationSpec ps;
    auto req = [&](const char* key) {
      auto v = get("perturbation", key);
      if (!v) throw ConfigError(where("perturbation", key) + ": required");
      return *v;
    };
    ps.amplitude = detail::parse_real(req("amplitude"), where("perturbation", "amplitude"));
    ps.wavenumber = static_cast<int>(detail::parse_int(req("wavenumber"), where("perturbation", "wavenumber")));
    ps.coordinate = static_cast<Index>(detail::parse_int(req("coordinate"), where("perturbation", "coordinate")));
    ps.factor = static_cast<int>(detail::parse_int(req("factor"), where("perturbation", "factor")));
    ps.basis_index = static_cast<Index>(detail::parse_int(req("basis_index"), where("perturbation", "basis_index")));
    try {
      make_exact_perturbation(*M, ps);
    } catch (const ArgumentError& e) {
      throw ConfigError(source + ": [perturbation] " + e.what());
    }
    cfg.perturbation = ps;
  }

  if (auto v = get("sampling", "points")) {
    const auto n = detail::parse_int(*v, where("sampling", "points"));
    if (n < 1) throw ConfigError(where("sampling", "points") + ": must be at least 1");
    cfg.sampling.count = static_cast<Index>(n);
  }
  if (auto v = get("sampling", "seed")) cfg.sampling.seed = detail::parse_seed(*v, where("sampling", "seed"));
  if (auto body = tree.get_child_optional("sampling"))
    for (const auto& [key, val] : *body) {
      if (key.rfind("point", 0) != 0 || key == "points") continue;
      auto coords = detail::parse_reals(val.data(), where("sampling", key));
      if (coords.size() != M->dim())
        throw ConfigError(where("sampling", key) + ": expected " + std::to_string(M->dim()) + " coordinates");
      cfg.sampling.explicit_points.push_back(ChartPoint{coords});
    }

  if (auto v = get("tolerances", "rank_tol")) cfg.tolerances.rank_tol = detail::parse_real(*v, where("tolerances", "rank_tol"));
  if (auto v = get("tolerances", "fd_step")) cfg.tolerances.fd_step = detail::parse_real(*v, where("tolerances", "fd_step"));
  {
    auto q1 = get("tolerances", "quadrature1");
    auto q2 = get("tolerances", "quadrature2");
    if (q1 || q2) {
      QuadratureResolution q = default_resolution(*M);
      if (q1) q.factor1 = detail::parse_resolution(*q1, where("tolerances", "quadrature1"));
      if (q2) q.factor2 = detail::parse_resolution(*q2, where("tolerances", "quadrature2"));
      cfg.tolerances.quadrature = q;
    }
  }

  auto& cc = cfg.certificates;
  if (auto v = get("certificates", "enabled")) cc.enabled = detail::parse_bool(*v, where("certificates", "enabled"));
  if (auto v = get("certificates", "points")) {
    const auto n = detail::parse_int(*v, where("certificates", "points"));
    if (n < 1) throw ConfigError(where("certificates", "points") + ": must be at least 1");
    cc.points = static_cast<Index>(n);
  }
  if (auto v = get("certificates", "seed")) cc.seed = detail::parse_seed(*v, where("certificates", "seed"));
  const std::pair<const char*, double*> thresholds[] = {
      {"metricity", &cc.metricity},       {"skewness", &cc.skewness},           {"bianchi", &cc.bianchi},
      {"harmonic_d", &cc.harmonic_d},     {"harmonic_delta", &cc.harmonic_delta}, {"calibration", &cc.calibration},
      {"slope_target", &cc.slope_target}, {"slope_tolerance", &cc.slope_tolerance}};
  for (const auto& [key, dst] : thresholds)
    if (auto v = get("certificates", key)) *dst = detail::parse_real(*v, where("certificates", key));

  if (auto body = tree.get_child_optional("sweep"))
    for (const auto& [key, val] : *body) {
      auto mp = detail::parse_metric(val.data(), where("sweep", key));
      try {
        apply_metric(*M, mp);
      } catch (const std::exception& e) {
        throw ConfigError(where("sweep", key) + ": " + e.what());
      }
      cfg.sweep.push_back(std::move(mp));
    }

  try {
    validate(cfg);
  } catch (const ArgumentError& e) {
    throw ConfigError(source + ": " + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

/// Canonical text form; parse_config(format_config(c)) reproduces c.
inline std::string format_config(const ExperimentConfig& cfg) {
  using detail::fmt_real;
  std::ostringstream os;
  os << "[experiment]\n"
     << "name = " << cfg.name << "\n"
     << "variant = " << detail::variant_name(cfg.variant) << "\n"
     << "derivative = " << (cfg.derivative_mode == DerivativeMode::analytic ? "analytic" : "fd") << "\n\n";
  os << "[manifold]\n"
     << "factor1 = " << detail::format_factor(cfg.manifold.factor1()) << "\n"
     << "factor2 = " << detail::format_factor(cfg.manifold.factor2()) << "\n"
     << "pole_margin = " << fmt_real(cfg.manifold.pole_margin()) << "\n\n";
  os << "[class]\n";
  const char* block_names[] = {"C03", "C12", "C21", "C30"};
  for (int p = 3; p >= 0; --p)
    if (cfg.cls.block(p).size() > 0) os << block_names[p] << " = " << detail::format_block(cfg.cls.block(p)) << "\n";
  os << "\n";
  if (cfg.perturbation) {
    const auto& ps = *cfg.perturbation;
    os << "[perturbation]\n"
       << "amplitude = " << fmt_real(ps.amplitude) << "\n"
       << "wavenumber = " << ps.wavenumber << "\n"
       << "coordinate = " << ps.coordinate << "\n"
       << "factor = " << ps.factor << "\n"
       << "basis_index = " << ps.basis_index << "\n\n";
  }
  os << "[sampling]\n"
     << "points = " << cfg.sampling.count << "\n"
     << "seed = " << cfg.sampling.seed << "\n";
  for (Index i = 0; i < cfg.sampling.explicit_points.size(); ++i) {
    os << "point" << (i + 1) << " =";
    for (double c : cfg.sampling.explicit_points[i].coords) os << " " << fmt_real(c);
    os << "\n";
  }
  os << "\n[tolerances]\n"
     << "rank_tol = " << fmt_real(cfg.tolerances.rank_tol) << "\n"
     << "fd_step = " << fmt_real(cfg.tolerances.fd_step) << "\n";
  if (cfg.tolerances.quadrature) {
    auto res = [](const FactorResolution& r) {
      std::string s;
      for (Index i = 0; i < r.size(); ++i) s += (i ? " " : "") + std::to_string(r[i]);
      return s;
    };
    os << "quadrature1 = " << res(cfg.tolerances.quadrature->factor1) << "\n"
       << "quadrature2 = " << res(cfg.tolerances.quadrature->factor2) << "\n";
  }
  const auto& cc = cfg.certificates;
  os << "\n[certificates]\n"
     << "enabled = " << (cc.enabled ? "true" : "false") << "\n"
     << "points = " << cc.points << "\n"
     << "seed = " << cc.seed << "\n"
     << "metricity = " << fmt_real(cc.metricity) << "\n"
     << "skewness = " << fmt_real(cc.skewness) << "\n"
     << "bianchi = " << fmt_real(cc.bianchi) << "\n"
     << "harmonic_d = " << fmt_real(cc.harmonic_d) << "\n"
     << "harmonic_delta = " << fmt_real(cc.harmonic_delta) << "\n"
     << "calibration = " << fmt_real(cc.calibration) << "\n"
     << "slope_target = " << fmt_real(cc.slope_target) << "\n"
     << "slope_tolerance = " << fmt_real(cc.slope_tolerance) << "\n";
  if (!cfg.sweep.empty()) {
    os << "\n[sweep]\n";
    for (Index i = 0; i < cfg.sweep.size(); ++i) os << "metric" << (i + 1) << " = " << detail::format_metric(cfg.sweep[i]) << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Builtin scenarios.

struct Scenario {
  std::string name;
  std::string summary;
  std::string text;
};

inline const std::vector<Scenario>& builtin_scenarios() {
  static const std::vector<Scenario> scenarios = {
      {"t3", "flat T^3 = T^2 x S^1, torsion proportional to dx^dy^dz (mixed rank 1)",
       R"([experiment]
name = t3
variant = both

[manifold]
factor1 = torus 2pi 2pi
factor2 = torus 2pi

[class]
C21 = 1

[sampling]
points = 20
seed = 20251018

[certificates]
points = 30
seed = 7

[sweep]
metric1 = period_scale=1
metric2 = periods=2pi,4pi,6pi
metric3 = period_scale=3
)"},
      {"s2xt2", "S^2 x T^2 with harmonic torsion vol^dx + vol^dy (mixed rank 1, two nonzero components)",
       R"([experiment]
name = s2xt2
variant = both

[manifold]
factor1 = sphere 1
factor2 = torus 2pi 2pi

[class]
C21 = 1 1

[sampling]
points = 20
seed = 20251018

[certificates]
points = 30
seed = 7

[sweep]
metric1 = radius=0.5 period_scale=1
metric2 = radius=1 period_scale=1
metric3 = radius=2 period_scale=1
metric4 = radius=0.5 period_scale=3
metric5 = radius=1 period_scale=3
metric6 = radius=2 period_scale=3
)"},
      {"s2xt2-perturbed", "s2xt2 plus the exact term d(0.5 sin(x) vol_S2): same class, non-parallel torsion",
       R"([experiment]
name = s2xt2-perturbed
variant = both

[manifold]
factor1 = sphere 1
factor2 = torus 2pi 2pi

[class]
C21 = 1 1

[perturbation]
amplitude = 0.5
wavenumber = 1
coordinate = 2
factor = 1
basis_index = 0

[sampling]
points = 20
seed = 20251018

[certificates]
points = 30
seed = 7

[sweep]
metric1 = radius=0.5 period_scale=1
metric2 = radius=1 period_scale=1
metric3 = radius=2 period_scale=3
)"},
      {"lc-baseline", "S^2 x T^2 with T = 0: Levi-Civita, reducible holonomy",
       R"([experiment]
name = lc-baseline
variant = both

[manifold]
factor1 = sphere 1
factor2 = torus 2pi 2pi

[sampling]
points = 20
seed = 20251018

[certificates]
points = 30
seed = 7

[sweep]
metric1 = radius=0.5
metric2 = radius=1
metric3 = radius=2
)"},
  };
  return scenarios;
}

inline const Scenario* find_scenario(const std::string& name) {
  for (const auto& s : builtin_scenarios())
    if (s.name == name) return &s;
  return nullptr;
}

inline ExperimentConfig scenario_config(const std::string& name) {
  const Scenario* s = find_scenario(name);
  if (!s) throw ConfigError("unknown scenario '" + name + "'");
  return parse_config(s->text, "scenario:" + name);
}

}  // namespace offhol
