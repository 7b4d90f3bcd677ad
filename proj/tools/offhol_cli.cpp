// offhol: off-diagonal holonomy bound experiments.
//
//   offhol run <scenario|config> [flags]
//   offhol sweep <scenario|config> [flags]
//   offhol check [scenario|config] [flags]
//   offhol list-scenarios
//
// Exit codes: 0 bound holds and certificates pass, 1 bound violated,
// 2 certificate failure, 3 configuration error.

#include "offhol/config.hpp"
#include "offhol/experiment.hpp"
#include "offhol/report.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitConfig = 3;

struct Overrides {
  std::optional<long long> points;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<double> fd_step;
  std::optional<std::string> variant;
};

offhol::ExperimentConfig load(const std::string& target) {
  if (offhol::find_scenario(target)) return offhol::scenario_config(target);
  if (std::filesystem::exists(target)) return offhol::load_config(target);
  throw offhol::ConfigError("'" + target + "' is neither a builtin scenario nor a readable config file");
}

void apply(offhol::ExperimentConfig& cfg, const Overrides& o) {
  if (o.points) {
    if (*o.points < 1) throw offhol::ConfigError("--points must be at least 1");
    cfg.sampling.count = static_cast<offhol::Index>(*o.points);
    cfg.sampling.explicit_points.clear();
  }
  if (o.seed) cfg.sampling.seed = *o.seed;
  if (o.tol) cfg.tolerances.rank_tol = *o.tol;
  if (o.fd_step) cfg.tolerances.fd_step = *o.fd_step;
  if (o.variant) cfg.variant = offhol::parse_variant(*o.variant);
  try {
    offhol::validate(cfg);
  } catch (const offhol::ArgumentError& e) {
    throw offhol::ConfigError(e.what());
  }
}

void write(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw offhol::ConfigError("cannot write " + out);
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"offhol: off-diagonal holonomy dimension versus mixed Kunneth rank"};
  app.set_version_flag("--version", offhol::kVersion);
  app.require_subcommand(1);

  Overrides ov;
  std::string format = "text";
  std::string out;
  auto add_flags = [&](CLI::App* sub) {
    sub->add_option("--points", ov.points, "number of sampled points");
    sub->add_option("--seed", ov.seed, "sampling seed");
    sub->add_option("--tol", ov.tol, "relative rank tolerance");
    sub->add_option("--fd-step", ov.fd_step, "finite-difference step");
    sub->add_option("--variant", ov.variant, "off-diagonal span reading")
        ->check(CLI::IsMember({"endo", "vector", "both"}));
    sub->add_option("--format", format, "report format")->check(CLI::IsMember({"json", "csv", "text"}));
    sub->add_option("--out", out, "output path (default stdout)");
  };

  std::string target;
  auto* run = app.add_subcommand("run", "verify the bound for one scenario or config file");
  run->add_option("target", target, "scenario name or config path")->required();
  add_flags(run);

  auto* sweep = app.add_subcommand("sweep", "repeat a run over the configured metric sweep");
  sweep->add_option("target", target, "scenario name or config path")->required();
  add_flags(sweep);

  auto* check = app.add_subcommand("check", "run the certificate suite only (all scenarios by default)");
  check->add_option("target", target, "scenario name or config path");
  add_flags(check);

  auto* list = app.add_subcommand("list-scenarios", "list builtin scenarios");
  bool show_config = false;
  list->add_flag("--config", show_config, "print each scenario's config text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*list) {
      for (const auto& s : offhol::builtin_scenarios()) {
        std::cout << s.name << "  " << s.summary << "\n";
        if (show_config) std::cout << s.text << "\n";
      }
      return 0;
    }

    if (*run) {
      auto cfg = load(target);
      apply(cfg, ov);
      const auto rep = offhol::run_experiment(cfg, {}, offhol::format_config(cfg));
      write(offhol::emit_report(rep, format), out);
      return rep.exit_code();
    }

    if (*sweep) {
      auto cfg = load(target);
      apply(cfg, ov);
      if (cfg.sweep.empty()) throw offhol::ConfigError(target + ": no [sweep] metrics configured");
      const auto res = offhol::run_sweep(cfg);
      write(offhol::emit_sweep(cfg.name, res, format), out);
      return res.exit_code();
    }

    if (*check) {
      std::vector<offhol::ExperimentConfig> cfgs;
      if (target.empty()) {
        for (const auto& s : offhol::builtin_scenarios()) cfgs.push_back(offhol::scenario_config(s.name));
      } else {
        cfgs.push_back(load(target));
      }
      offhol::RunOptions opts;
      opts.sweep = false;
      int rc = 0;
      std::string text;
      for (auto& cfg : cfgs) {
        apply(cfg, ov);
        cfg.variant = offhol::VariantSelection::endomorphism;
        cfg.sampling.count = 1;
        cfg.sampling.explicit_points.clear();
        const auto rep = offhol::run_experiment(cfg, opts, offhol::format_config(cfg));
        if (!rep.certificates_pass()) rc = 2;
        if (format == "json") {
          nlohmann::json j;
          j["scenario"] = rep.scenario;
          j["certificates_pass"] = rep.certificates_pass();
          j["certificates"] = offhol::report_json(rep)["certificates"];
          text += j.dump(2) + "\n";
        } else {
          for (const auto& c : rep.certificates)
            text += rep.scenario + "," + c.name + "," + offhol::detail::fmt_real(c.value) + "," +
                    offhol::detail::fmt_real(c.threshold) + "," + (c.pass ? "pass" : "FAIL") + "\n";
        }
      }
      write(text, out);
      return rc;
    }
  } catch (const offhol::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const offhol::ArgumentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
