// Command-line front end: scenario runs with CSV/metrics export and PE
// audits over a configured trajectory.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "bearing_ins/scenario.hpp"

namespace {

using bearing_ins::ScenarioConfig;

ScenarioConfig resolve_config(const std::string& config_path, const std::string& preset,
                              const std::string& variant) {
  if (config_path.empty() && preset.empty()) {
    throw bearing_ins::ScenarioError("either a config file or --preset is required");
  }
  if (!config_path.empty()) {
    nlohmann::json j;
    {
      std::ifstream in(config_path);
      if (!in) throw bearing_ins::ScenarioError("config: cannot open '" + config_path + "'");
      try {
        in >> j;
      } catch (const nlohmann::json::parse_error& e) {
        throw bearing_ins::ScenarioError("config: parse error in '" + config_path + "': " +
                                         e.what());
      }
    }
    if (!preset.empty()) j["preset"] = preset;
    if (!variant.empty()) j["observer"]["variant"] = variant;
    return bearing_ins::scenario_from_json(j);
  }
  if (!variant.empty()) {
    return bearing_ins::make_preset(preset, bearing_ins::variant_from_string(variant));
  }
  return bearing_ins::make_preset(preset);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riccati-observer state estimation from IMU, a single landmark bearing and a "
               "body-frame reference vector"};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset;
  std::string variant;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  double t_end = -1.0;

  CLI::App* run = app.add_subcommand("run", "simulate a scenario and run the observer");
  run->add_option("config", config_path, "scenario config file (JSON)");
  run->add_option("--preset", preset,
                  "built-in preset (paper-fig3, static, radial); a config file overrides it");
  run->add_option("--variant", variant, "observer variant: full, decoupled or reduced");
  run->add_option("--out", out_dir, "output directory for series.csv and metrics.json");
  run->add_option("--seed", seed, "noise seed override");
  run->add_option("--t-end", t_end, "horizon override (seconds)");

  std::string pa_config;
  std::string pa_preset;
  double pa_delta = 0.0;
  double pa_stride = bearing_ins::kPeStride;
  std::string pa_out;

  CLI::App* audit = app.add_subcommand("pe-audit", "sweep the bearing PE margin over windows");
  audit->add_option("config", pa_config, "scenario config file (JSON)");
  audit->add_option("--preset", pa_preset, "built-in preset");
  audit->add_option("--delta", pa_delta, "window length in seconds")->required();
  audit->add_option("--stride", pa_stride, "window stride in seconds");
  audit->add_option("--out", pa_out, "write the report JSON to this file as well");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      ScenarioConfig cfg = resolve_config(config_path, preset, variant);
      if (seed) {
        cfg.seed = *seed;
        cfg.noise.seed = *seed;
      }
      if (t_end > 0.0) cfg.t_end = t_end;
      cfg.validate();

      const bearing_ins::RunResult result = bearing_ins::run_scenario(cfg);

      std::filesystem::create_directories(out_dir);
      const std::string csv_path = out_dir + "/series.csv";
      bearing_ins::write_csv(csv_path, result.rows);

      nlohmann::json report = bearing_ins::metrics_to_json(result.metrics);
      report["scenario"] = cfg.name;
      report["variant"] = bearing_ins::to_string(cfg.observer.variant);
      report["seed"] = cfg.seed;
      report["t_end"] = cfg.t_end;
      report["csv"] = csv_path;
      {
        std::ofstream mf(out_dir + "/metrics.json", std::ios::binary);
        mf << report.dump(2) << '\n';
      }
      std::cout << report.dump(2) << std::endl;
      return 0;
    }

    if (audit->parsed()) {
      ScenarioConfig cfg = resolve_config(pa_config, pa_preset, "");
      const bearing_ins::PeAuditReport report = bearing_ins::pe_audit(cfg, pa_delta, pa_stride);
      const nlohmann::json out = bearing_ins::pe_report_to_json(report);
      if (!pa_out.empty()) {
        std::ofstream f(pa_out, std::ios::binary);
        f << out.dump(2) << '\n';
      }
      std::cout << out.dump(2) << std::endl;
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << std::endl;
    return 1;
  }
  return 0;
}
