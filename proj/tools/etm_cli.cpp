// Command-line front end for the elapsed-time model solver.
//
// Subcommands:
//   run <config>                solve a scenario described by a config file
//   preset <name>               solve one of the built-in example scenarios
//   converge <config> --levels  grid-refinement convergence study
//   steady <config>             stationary flux levels of the configured model
//
// Exit codes: 0 success, 2 configuration error, 3 solver event (blow-up).

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "etm/etm.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolverEvent = 3;

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

int load_config(const std::string& path, etm::ScenarioConfig& config) {
  std::string text;
  if (!read_file(path, text)) {
    std::cerr << "error: cannot read config file '" << path << "'\n";
    return kExitConfig;
  }
  etm::ParseResult parsed = etm::parse_config(text);
  if (!parsed.ok()) {
    for (const std::string& e : parsed.errors) std::cerr << "error: " << e << "\n";
    return kExitConfig;
  }
  config = parsed.config;
  config.name = std::filesystem::path(path).stem().string();
  return kExitOk;
}

int run_config(const etm::ScenarioConfig& config, const std::string& out_dir,
               bool quiet) {
  try {
    etm::RunReport report = etm::run_scenario(config, out_dir);
    if (!quiet) std::cout << report.summary << "\n";
    return report.exit_code == 0 ? kExitOk : kExitSolverEvent;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solver for nonlinear elapsed-time neural population models"};
  app.require_subcommand(1);

  std::string out_dir = ".";
  bool quiet = false;
  app.add_option("--out-dir", out_dir, "Directory for output CSV files");
  app.add_flag("--quiet", quiet, "Suppress the summary line");

  std::string run_path;
  auto* run_cmd = app.add_subcommand("run", "Solve a scenario config file")->fallthrough();
  run_cmd->add_option("config", run_path, "Scenario config file")->required();

  std::string preset_name;
  bool list_presets = false;
  auto* preset_cmd = app.add_subcommand("preset", "Solve a built-in scenario")->fallthrough();
  preset_cmd->add_option("name", preset_name, "Preset name");
  preset_cmd->add_flag("--list", list_presets, "List available presets");

  std::string conv_path;
  int levels = 3;
  auto* conv_cmd =
      app.add_subcommand("converge", "Grid-refinement convergence study")->fallthrough();
  conv_cmd->add_option("config", conv_path, "Scenario config file")->required();
  conv_cmd->add_option("--levels", levels, "Number of refinement levels");

  std::string steady_path;
  auto* steady_cmd =
      app.add_subcommand("steady", "Stationary flux levels of the scenario")->fallthrough();
  steady_cmd->add_option("config", steady_path, "Scenario config file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      etm::ScenarioConfig config;
      if (int rc = load_config(run_path, config); rc != kExitOk) return rc;
      return run_config(config, out_dir, quiet);
    }

    if (preset_cmd->parsed()) {
      if (list_presets) {
        for (const auto& [name, text] : etm::preset_registry())
          std::cout << name << "\n";
        return kExitOk;
      }
      if (preset_name.empty()) {
        std::cerr << "error: preset name required (or --list)\n";
        return kExitConfig;
      }
      etm::ScenarioConfig config;
      try {
        config = etm::preset_config(preset_name);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
      }
      return run_config(config, out_dir, quiet);
    }

    if (conv_cmd->parsed()) {
      etm::ScenarioConfig config;
      if (int rc = load_config(conv_path, config); rc != kExitOk) return rc;
      std::vector<etm::ConvergenceRow> rows;
      try {
        rows = etm::convergence_study(config, levels);
      } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
      }
      etm::write_convergence_csv(
          std::filesystem::path(out_dir) / "convergence.csv", rows);
      if (!quiet) {
        std::cout << "ds,dt,l1_error,observed_order\n";
        for (const auto& r : rows) {
          std::printf("%.17g,%.17g,%.17g,", r.ds, r.dt, r.l1_error);
          if (!std::isnan(r.observed_order))
            std::printf("%.17g", r.observed_order);
          std::printf("\n");
        }
      }
      return kExitOk;
    }

    if (steady_cmd->parsed()) {
      etm::ScenarioConfig config;
      if (int rc = load_config(steady_path, config); rc != kExitOk) return rc;
      const etm::HazardModel hazard = etm::make_hazard(config);
      const etm::InitialDensity init = etm::make_initial(config);
      if (hazard.kind() == etm::HazardKind::UnboundedQuadratic) {
        std::cerr << "error: the unbounded hazard has no stationary states\n";
        return kExitConfig;
      }
      const std::vector<double> roots =
          etm::stationary_flux_roots(hazard, init.analytic_mass);
      for (double r : roots) {
        const double psi =
            etm::stationary_psi(hazard, r, config.ds,
                                static_cast<std::size_t>(64.0 / config.ds));
        std::printf("N_star=%.17g psi=%.17g\n", r, psi);
      }
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
