#ifndef ETM_SCENARIO_HPP
#define ETM_SCENARIO_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "etm/ddm.hpp"
#include "etm/grid.hpp"
#include "etm/hazard.hpp"
#include "etm/itm.hpp"
#include "etm/kernel.hpp"
#include "etm/oracles.hpp"
#include "etm/steady_state.hpp"
#include "etm/trajectory.hpp"

namespace etm {

enum class ModelType { Itm, Ddm, Linear };
enum class KernelMethod { Auto, Convolution, Ode };

// A fully parsed scenario: model choice, hazard/kernel/initial registry ids
// with their parameters, grid, branch policy and output destinations.
struct ScenarioConfig {
  std::string name = "custom";
  ModelType model = ModelType::Itm;

  std::string hazard_kind = "example1";
  double hazard_p0 = 1.0;      // constant hazard level
  double hazard_J = 1.0;       // example4-itm reduction X = J N
  double hazard_cap = 1e3;     // activity cap for the unbounded hazard

  bool has_kernel = false;
  KernelKind kernel_kind = KernelKind::Exponential;
  double kernel_lambda = 1e-3;
  double kernel_d = 0.0;
  double kernel_J = 1.0;
  KernelMethod kernel_method = KernelMethod::Auto;
  DeltaLimitMode delta_limit = DeltaLimitMode::Auto;

  std::string initial_kind = "example1";
  double initial_rate = 1.0;    // "exponential" family
  double initial_width = 1.0;   // "indicator" family
  double initial_support = 0.0; // 0 = registry default

  double ds = 0.02;
  double T = 10.0;
  double dt = 0.0;     // 0 = defaulted to 0.9x the CFL bound
  double s_max = 0.0;  // 0 = initial support + T + 2 ds

  BranchPolicy branch = BranchPolicy::NearestPrevious;
  std::size_t fixed_index = 0;

  double prescribed_flux = 1.0;  // linear model only

  std::string flux_path = "flux.csv";
  std::string density_path = "density.csv";
  std::vector<double> snapshots;

  double tol = 1e-12;
  bool check_bounds = true;
};

// ---------------------------------------------------------------------------
// Registries
// ---------------------------------------------------------------------------

inline HazardModel make_hazard(const ScenarioConfig& c) {
  if (c.hazard_kind == "example1") return hazards::example1();
  if (c.hazard_kind == "example2") return hazards::example2();
  if (c.hazard_kind == "example3") return hazards::example3();
  if (c.hazard_kind == "example4") return hazards::example4();
  if (c.hazard_kind == "example4-itm") return hazards::example4_itm(c.hazard_J);
  if (c.hazard_kind == "constant") return hazards::constant_rate(c.hazard_p0);
  if (c.hazard_kind == "unbounded-quadratic")
    return HazardModel::unbounded_quadratic(c.hazard_cap);
  throw std::invalid_argument("unknown hazard kind: " + c.hazard_kind);
}

inline InitialDensity make_initial(const ScenarioConfig& c) {
  const double R = c.initial_support;
  if (c.initial_kind == "example1")
    return {[](double s) { return 0.5 * std::exp(-std::max(s - 1.0, 0.0)); },
            1.0, R > 0.0 ? R : 32.0};
  if (c.initial_kind == "example2" || c.initial_kind == "example4")
    return {[](double s) { return s > 1.0 ? std::exp(-(s - 1.0)) : 0.0; }, 1.0,
            R > 0.0 ? R : 32.0};
  if (c.initial_kind == "example3")
    return {[](double s) { return s > 0.5 ? std::exp(-(s - 0.5)) : 0.0; }, 1.0,
            R > 0.0 ? R : 32.0};
  if (c.initial_kind == "exponential") {
    const double r = c.initial_rate;
    if (!(r > 0.0))
      throw std::invalid_argument("initial exponential: rate must be positive");
    return {[r](double s) { return r * std::exp(-r * s); }, 1.0,
            R > 0.0 ? R : 32.0 / r};
  }
  if (c.initial_kind == "indicator") {
    const double w = c.initial_width;
    if (!(w > 0.0))
      throw std::invalid_argument("initial indicator: width must be positive");
    return {[w](double s) { return s < w ? 1.0 : 0.0; }, w, w};
  }
  if (c.initial_kind == "smooth")
    // (1+s)e^{-s}: smooth, n0(0) = 1, mass 2; compatible with a prescribed
    // unit flux at the boundary.
    return {[](double s) { return (1.0 + s) * std::exp(-s); }, 2.0,
            R > 0.0 ? R : 40.0};
  throw std::invalid_argument("unknown initial kind: " + c.initial_kind);
}

inline DelayKernel make_kernel(const ScenarioConfig& c) {
  if (c.kernel_kind == KernelKind::Exponential)
    return DelayKernel::exponential(c.kernel_lambda, c.kernel_J);
  return DelayKernel::gaussian(c.kernel_d, c.kernel_lambda, c.kernel_J);
}

// ---------------------------------------------------------------------------
// Setup resolution: grid defaulting and run-path dispatch decisions
// ---------------------------------------------------------------------------

struct ResolvedSetup {
  HazardModel hazard;
  InitialDensity initial;
  Grid grid;
  std::optional<DelayKernel> kernel;
  bool use_ode = false;          // exponential kernel via the ODE path
  DeltaLimitMode delta = DeltaLimitMode::Off;
};

// Fixed formatting of a CFL bound for error messages (shared with tests).
inline std::string cfl_format(double bound) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", bound);
  return buf;
}

inline double cfl_reference_dt(const HazardModel& hazard, double ds) {
  // The capped unbounded hazard has an impractically large sup-norm; only
  // transport stability is enforceable there (blow-up runs lose positivity
  // by construction).
  if (hazard.kind() == HazardKind::UnboundedQuadratic) return ds;
  return cfl_dt_itm(ds, hazard.p_sup());
}

inline ResolvedSetup resolve_setup(const ScenarioConfig& c) {
  ResolvedSetup r{make_hazard(c), make_initial(c), Grid{}, std::nullopt};
  const double cfl = cfl_reference_dt(r.hazard, c.ds);
  double dt = c.dt > 0.0 ? c.dt : 0.9 * cfl;
  if (c.dt > 0.0 && c.dt > cfl * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "dt = " << c.dt << " violates the CFL bound "
       << cfl_format(cfl);
    throw std::invalid_argument(os.str());
  }

  if (c.model == ModelType::Ddm) {
    r.kernel = make_kernel(c);
    const bool near_delta = c.delta_limit == DeltaLimitMode::On ||
                            (c.delta_limit == DeltaLimitMode::Auto &&
                             c.kernel_lambda < dt);
    if (c.kernel_kind == KernelKind::Exponential &&
        (c.kernel_method == KernelMethod::Ode ||
         (c.kernel_method == KernelMethod::Auto && near_delta))) {
      r.use_ode = true;
    } else if (c.kernel_kind == KernelKind::Gaussian && near_delta &&
               c.kernel_method != KernelMethod::Convolution) {
      r.delta = DeltaLimitMode::On;
      // Snap dt so the delay is an integer number of steps; otherwise the
      // lag substitution X(t) = J N(t - d) carries an O(dt) phase error.
      if (c.kernel_d > 0.0 && c.dt == 0.0)
        dt = c.kernel_d / std::ceil(c.kernel_d / dt - 1e-12);
    } else {
      // Resolved convolution: also honor the activity-contraction bound.
      const double dXp = r.hazard.norms().dNp_sup;
      const double alpha0 = r.kernel->eval(0.0);
      if (std::isfinite(dXp) && dXp > 0.0 && alpha0 > 0.0 && c.dt == 0.0)
        dt = std::min(dt, 0.9 * 2.0 /
                              (alpha0 * dXp * r.initial.analytic_mass));
    }
  }

  // Defaulted dt: shrink so the step count lands exactly on T (keeps the CFL
  // bound satisfied and makes snapshot times exact).
  if (c.dt == 0.0) {
    const double steps = std::ceil(c.T / dt - 1e-12);
    dt = c.T / steps;
  }

  const double s_max =
      c.s_max > 0.0 ? c.s_max : r.initial.support_bound + c.T + 2.0 * c.ds;
  r.grid = build_grid(c.ds, dt, s_max, c.T);
  return r;
}

// ---------------------------------------------------------------------------
// Config parsing: sectioned key=value text, '#' comments, all errors reported
// ---------------------------------------------------------------------------

struct ParseResult {
  ScenarioConfig config;
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ConfigReader {
  std::vector<std::string>& errors;

  void fail(const std::string& section, int line, const std::string& msg) {
    std::ostringstream os;
    os << "[" << section << "] line " << line << ": " << msg;
    errors.push_back(os.str());
  }

  bool to_double(const std::string& section, int line, const std::string& key,
                 const std::string& value, double& out) {
    try {
      std::size_t pos = 0;
      out = std::stod(value, &pos);
      if (pos != value.size()) throw std::invalid_argument("");
      return true;
    } catch (...) {
      fail(section, line, key + ": expected a number, got '" + value + "'");
      return false;
    }
  }
};

}  // namespace detail

inline ParseResult parse_config(const std::string& text) {
  ParseResult res;
  detail::ConfigReader rd{res.errors};
  ScenarioConfig& c = res.config;

  static const std::map<std::string, std::vector<std::string>> schema = {
      {"model", {"type"}},
      {"hazard", {"kind", "p0", "J", "cap"}},
      {"kernel", {"kind", "lambda", "d", "J", "method", "delta_limit"}},
      {"initial", {"kind", "rate", "width", "support"}},
      {"grid", {"ds", "dt", "T", "s_max"}},
      {"branch", {"policy", "index"}},
      {"flux", {"value"}},
      {"output", {"flux", "density", "snapshots"}},
      {"solver", {"tol", "check_bounds"}},
  };

  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = detail::trim(raw);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = detail::trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        rd.fail(section, line_no, "malformed section header '" + line + "'");
        continue;
      }
      section = detail::trim(line.substr(1, line.size() - 2));
      if (!schema.count(section))
        rd.fail(section, line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      rd.fail(section, line_no, "expected key = value, got '" + line + "'");
      continue;
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    auto it = schema.find(section);
    if (it == schema.end()) continue;  // section error already reported
    if (std::find(it->second.begin(), it->second.end(), key) ==
        it->second.end()) {
      rd.fail(section, line_no, "unknown key '" + key + "'");
      continue;
    }

    double num = 0.0;
    if (section == "model") {
      if (value == "itm") c.model = ModelType::Itm;
      else if (value == "ddm") c.model = ModelType::Ddm;
      else if (value == "linear") c.model = ModelType::Linear;
      else rd.fail(section, line_no, "type must be itm, ddm or linear");
    } else if (section == "hazard") {
      if (key == "kind") c.hazard_kind = value;
      else if (rd.to_double(section, line_no, key, value, num)) {
        if (key == "p0") c.hazard_p0 = num;
        else if (key == "J") c.hazard_J = num;
        else c.hazard_cap = num;
      }
    } else if (section == "kernel") {
      c.has_kernel = true;
      if (key == "kind") {
        if (value == "exponential") c.kernel_kind = KernelKind::Exponential;
        else if (value == "gaussian") c.kernel_kind = KernelKind::Gaussian;
        else rd.fail(section, line_no, "kind must be exponential or gaussian");
      } else if (key == "method") {
        if (value == "auto") c.kernel_method = KernelMethod::Auto;
        else if (value == "convolution") c.kernel_method = KernelMethod::Convolution;
        else if (value == "ode") c.kernel_method = KernelMethod::Ode;
        else rd.fail(section, line_no, "method must be auto, convolution or ode");
      } else if (key == "delta_limit") {
        if (value == "auto") c.delta_limit = DeltaLimitMode::Auto;
        else if (value == "on") c.delta_limit = DeltaLimitMode::On;
        else if (value == "off") c.delta_limit = DeltaLimitMode::Off;
        else rd.fail(section, line_no, "delta_limit must be auto, on or off");
      } else if (rd.to_double(section, line_no, key, value, num)) {
        if (key == "lambda") c.kernel_lambda = num;
        else if (key == "d") c.kernel_d = num;
        else c.kernel_J = num;
      }
    } else if (section == "initial") {
      if (key == "kind") c.initial_kind = value;
      else if (rd.to_double(section, line_no, key, value, num)) {
        if (key == "rate") c.initial_rate = num;
        else if (key == "width") c.initial_width = num;
        else c.initial_support = num;
      }
    } else if (section == "grid") {
      if (rd.to_double(section, line_no, key, value, num)) {
        if (key == "ds") c.ds = num;
        else if (key == "dt") c.dt = num;
        else if (key == "T") c.T = num;
        else c.s_max = num;
      }
    } else if (section == "branch") {
      if (key == "policy") {
        if (value == "nearest") c.branch = BranchPolicy::NearestPrevious;
        else if (value == "lowest") c.branch = BranchPolicy::Lowest;
        else if (value == "highest") c.branch = BranchPolicy::Highest;
        else if (value == "fixed") c.branch = BranchPolicy::FixedIndex;
        else rd.fail(section, line_no,
                     "policy must be nearest, lowest, highest or fixed");
      } else if (rd.to_double(section, line_no, key, value, num)) {
        c.fixed_index = static_cast<std::size_t>(num);
      }
    } else if (section == "flux") {
      if (rd.to_double(section, line_no, key, value, num))
        c.prescribed_flux = num;
    } else if (section == "output") {
      if (key == "flux") c.flux_path = value;
      else if (key == "density") c.density_path = value;
      else {
        std::istringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
          if (rd.to_double(section, line_no, key, detail::trim(tok), num))
            c.snapshots.push_back(num);
        }
      }
    } else if (section == "solver") {
      if (key == "check_bounds") {
        if (value == "on") c.check_bounds = true;
        else if (value == "off") c.check_bounds = false;
        else rd.fail(section, line_no, "check_bounds must be on or off");
      } else if (rd.to_double(section, line_no, key, value, num)) {
        c.tol = num;
      }
    }
  }

  // Semantic validation (registry membership, grid sanity, CFL) only when the
  // syntax was clean enough to try.
  if (res.errors.empty()) {
    if (!(c.ds > 0.0)) res.errors.push_back("[grid]: ds must be positive");
    if (!(c.T > 0.0)) res.errors.push_back("[grid]: T must be positive");
    if (c.model == ModelType::Ddm && !c.has_kernel)
      res.errors.push_back("[kernel]: ddm model requires a kernel section");
    if (res.errors.empty()) {
      try {
        resolve_setup(c);
      } catch (const std::exception& e) {
        res.errors.push_back(std::string("[grid]: ") + e.what());
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Presets: the paper's four example experiments plus the blow-up stress run
// ---------------------------------------------------------------------------

inline const std::map<std::string, std::string>& preset_registry() {
  static const std::map<std::string, std::string> presets = {
      {"example1-itm", R"(# strongly inhibitory, unique steady state
[model]
type = itm
[hazard]
kind = example1
[initial]
kind = example1
[grid]
ds = 0.02
T = 30
[output]
snapshots = 0, 10, 30
)"},
      {"example1-ddm", R"(# inhibitory with a near-delta gaussian delay d = 1/2
[model]
type = ddm
[hazard]
kind = example1
[kernel]
kind = gaussian
lambda = 1e-3
d = 0.5
[initial]
kind = example1
[grid]
ds = 0.02
T = 20
[output]
snapshots = 0, 20
)"},
      {"example2-itm", R"(# excitatory, unique steady state, jump discontinuities
[model]
type = itm
[hazard]
kind = example2
[initial]
kind = example2
[grid]
ds = 0.02
T = 20
[output]
snapshots = 0, 20
)"},
      {"example2-ddm", R"(# excitatory with a near-delta exponential kernel
[model]
type = ddm
[hazard]
kind = example2
[kernel]
kind = exponential
lambda = 1e-3
[initial]
kind = example2
[grid]
ds = 0.02
T = 20
[output]
snapshots = 0, 20
)"},
      {"example3-itm", R"(# excitatory with three flux fixed points at t = 0
[model]
type = itm
[hazard]
kind = example3
[initial]
kind = example3
[grid]
ds = 0.02
T = 20
[output]
snapshots = 0, 20
)"},
      {"example3-ddm", R"(# multiple ITM branches; DDM selects the lowest
[model]
type = ddm
[hazard]
kind = example3
[kernel]
kind = exponential
lambda = 1e-3
[initial]
kind = example3
[grid]
ds = 0.02
T = 20
[output]
snapshots = 0, 20
)"},
      {"example4-itm", R"(# variable refractory period, instantaneous limit X = J N
[model]
type = itm
[hazard]
kind = example4-itm
J = 2.5
[initial]
kind = example4
[grid]
ds = 0.02
T = 14
[output]
snapshots = 0, 14
)"},
      {"example4-ddm", R"(# variable refractory period, scaled exponential kernel
[model]
type = ddm
[hazard]
kind = example4
[kernel]
kind = exponential
lambda = 1e-3
J = 2.5
[initial]
kind = example4
[grid]
ds = 0.02
T = 14
[output]
snapshots = 0, 14
)"},
      {"blowup-ddm", R"(# unbounded hazard stress run: finite-time blow-up
[model]
type = ddm
[hazard]
kind = unbounded-quadratic
cap = 1e3
[kernel]
kind = exponential
lambda = 1
method = ode
[initial]
kind = exponential
rate = 1
[grid]
ds = 0.02
dt = 1e-4
T = 3
[solver]
check_bounds = off
[output]
snapshots = 0
)"},
  };
  return presets;
}

inline ScenarioConfig preset_config(const std::string& name) {
  auto it = preset_registry().find(name);
  if (it == preset_registry().end())
    throw std::invalid_argument("unknown preset: " + name);
  ParseResult r = parse_config(it->second);
  if (!r.ok())
    throw std::logic_error("preset '" + name + "' failed to parse: " +
                           r.errors.front());
  r.config.name = name;
  return r.config;
}

// ---------------------------------------------------------------------------
// Running scenarios
// ---------------------------------------------------------------------------

inline Trajectory run_trajectory(const ScenarioConfig& c,
                                 const ResolvedSetup& setup) {
  DensityVector n0 = discretize_initial(setup.initial, setup.grid);
  if (c.model == ModelType::Linear) {
    const double flux = c.prescribed_flux;
    return itm_run_prescribed(std::move(n0), setup.hazard,
                              [flux](double) { return flux; }, setup.grid,
                              c.snapshots);
  }
  if (c.model == ModelType::Itm) {
    ItmOptions opts;
    opts.branch = {c.branch, c.fixed_index};
    opts.roots.residual_tol = c.tol;
    opts.check_bounds = c.check_bounds;
    return itm_run(std::move(n0), setup.hazard, setup.grid, c.snapshots, opts);
  }
  DdmOptions opts;
  opts.activity.residual_tol = c.tol;
  opts.roots.residual_tol = c.tol;
  opts.check_bounds = c.check_bounds;
  opts.delta_limit = setup.delta;
  if (setup.use_ode)
    return ddm_run_exponential_ode(std::move(n0), setup.hazard, c.kernel_lambda,
                                   c.kernel_J, setup.grid, c.snapshots, opts);
  return ddm_run(std::move(n0), setup.hazard, *setup.kernel, setup.grid,
                 c.snapshots, opts);
}

inline Trajectory run_trajectory(const ScenarioConfig& c) {
  return run_trajectory(c, resolve_setup(c));
}

// ---------------------------------------------------------------------------
// CSV emission (fixed formatting: reproducible byte-identical output)
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path.string());
  return out;
}

}  // namespace detail

inline void write_flux_csv(const std::filesystem::path& path,
                           const Trajectory& traj, const ScenarioConfig& c,
                           const Grid& grid) {
  std::ofstream out = detail::open_out(path);
  out << "# scenario=" << c.name << " model="
      << (c.model == ModelType::Itm ? "itm"
          : c.model == ModelType::Ddm ? "ddm" : "linear")
      << "\n";
  out << "# ds=" << detail::fmt17(grid.ds) << " dt=" << detail::fmt17(grid.dt)
      << " s_max=" << detail::fmt17(grid.s_max) << " T=" << detail::fmt17(grid.T)
      << "\n";
  out << "t,N,X,psi,mass,tv,jump\n";
  const bool has_X = !traj.X.empty();
  for (std::size_t m = 0; m < traj.t.size(); ++m) {
    out << detail::fmt17(traj.t[m]) << ',' << detail::fmt17(traj.N[m]) << ',';
    if (has_X) out << detail::fmt17(traj.X[m]);
    out << ',' << detail::fmt17(traj.psi[m]) << ',' << detail::fmt17(traj.mass[m])
        << ',' << detail::fmt17(traj.tv[m]) << ',' << (traj.jump[m] ? 1 : 0)
        << "\n";
  }
}

inline void write_density_csv(const std::filesystem::path& path,
                              const Trajectory& traj, const ScenarioConfig& c,
                              const Grid& grid) {
  std::ofstream out = detail::open_out(path);
  out << "# scenario=" << c.name << " ds=" << detail::fmt17(grid.ds)
      << " dt=" << detail::fmt17(grid.dt) << "\n";
  out << "t,s,n\n";
  for (const DensitySnapshot& snap : traj.snapshots) {
    const auto& v = snap.density.values();
    for (std::size_t j = 0; j < v.size(); ++j)
      out << detail::fmt17(snap.t) << ',' << detail::fmt17(grid.center(j))
          << ',' << detail::fmt17(v[j]) << "\n";
  }
}

// ---------------------------------------------------------------------------
// run_scenario: files + one machine-readable summary line
// ---------------------------------------------------------------------------

struct RunReport {
  int exit_code = 0;
  std::string summary;
  Trajectory trajectory;
};

// Stationary flux levels matching the scenario's hazard. For DDM runs with a
// scaled kernel the fixed point is posed in the activity argument X = J N,
// handled here for the variable-refractory kind (the only scaled preset).
inline std::vector<double> scenario_steady_roots(const ScenarioConfig& c,
                                                 const ResolvedSetup& setup) {
  if (setup.hazard.kind() == HazardKind::UnboundedQuadratic) return {};
  if (c.model == ModelType::Ddm && c.kernel_J != 1.0 &&
      setup.hazard.kind() == HazardKind::StepVariableRefractory) {
    const double J = c.kernel_J;
    HazardModel effective = HazardModel::step_variable(
        [J](double N) { return hazards::example4_sigma(J * N); }, 2.0);
    return stationary_flux_roots(effective, setup.initial.analytic_mass);
  }
  return stationary_flux_roots(setup.hazard, setup.initial.analytic_mass);
}

inline RunReport run_scenario(const ScenarioConfig& c,
                              const std::filesystem::path& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  ResolvedSetup setup = resolve_setup(c);
  RunReport rep;
  rep.trajectory = run_trajectory(c, setup);
  const Trajectory& traj = rep.trajectory;

  write_flux_csv(out_dir / c.flux_path, traj, c, setup.grid);
  write_density_csv(out_dir / c.density_path, traj, c, setup.grid);

  double steady_dist = std::numeric_limits<double>::quiet_NaN();
  if (c.model != ModelType::Linear) {
    for (double r : scenario_steady_roots(c, setup)) {
      const double d = std::abs(traj.N.back() - r);
      if (std::isnan(steady_dist) || d < steady_dist) steady_dist = d;
    }
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::ostringstream os;
  os << "scenario=" << c.name << " final_t=" << detail::fmt17(traj.t.back())
     << " final_N=" << detail::fmt17(traj.N.back())
     << " steady_dist=" << detail::fmt17(steady_dist)
     << " jumps=" << traj.jump_count()
     << " min_psi=" << detail::fmt17(traj.min_psi())
     << " mass_drift=" << detail::fmt17(traj.mass_drift())
     << " bound_violations=" << traj.bound_violations
     << " blow_up=" << (traj.blow_up ? 1 : 0);
  if (traj.blow_up)
    os << " blow_up_time=" << detail::fmt17(traj.blow_up_time);
  os << " wall_s=" << detail::fmt17(wall);
  rep.summary = os.str();
  rep.exit_code = traj.blow_up ? 3 : 0;
  return rep;
}

// ---------------------------------------------------------------------------
// Convergence study
// ---------------------------------------------------------------------------

struct ConvergenceRow {
  double ds = 0.0;
  double dt = 0.0;
  double l1_error = 0.0;
  double observed_order = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline DensityVector final_density(const ScenarioConfig& c) {
  Trajectory traj = run_trajectory(c);
  if (traj.snapshots.empty())
    throw std::logic_error("convergence run produced no final snapshot");
  return traj.snapshots.back().density;
}

// Block-average a fine density (ds/r) down to the coarse resolution ds.
inline DensityVector coarsen(const DensityVector& fine, std::size_t r,
                             double coarse_ds) {
  const auto& v = fine.values();
  std::vector<double> out(v.size() / r, 0.0);
  for (std::size_t j = 0; j < out.size(); ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < r; ++k) acc += v[j * r + k];
    out[j] = acc / static_cast<double>(r);
  }
  return DensityVector(std::move(out), coarse_ds);
}

inline double l1_distance(const DensityVector& a, const DensityVector& b) {
  const std::size_t n = std::min(a.size(), b.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) acc += std::abs(a[j] - b[j]);
  for (std::size_t j = n; j < a.size(); ++j) acc += std::abs(a[j]);
  for (std::size_t j = n; j < b.size(); ++j) acc += std::abs(b[j]);
  return a.ds() * acc;
}

}  // namespace detail

// Refines ds by halving `levels` times starting from config.ds. Linear
// scenarios are measured against the characteristics oracle; nonlinear ones
// against one further halving (self-convergence).
inline std::vector<ConvergenceRow> convergence_study(const ScenarioConfig& base,
                                                     int levels) {
  if (levels < 3)
    throw std::invalid_argument(
        "convergence_study: at least 3 refinement levels required");

  auto level_config = [&](int i) {
    ScenarioConfig c = base;
    c.ds = base.ds / std::pow(2.0, i);
    c.dt = 0.0;  // re-defaulted from the CFL bound at each level
    c.snapshots = {base.T};
    c.s_max = base.s_max;
    return c;
  };

  std::vector<ConvergenceRow> rows;
  std::vector<double> errors;

  if (base.model == ModelType::Linear) {
    const HazardModel hazard = make_hazard(base);
    const InitialDensity init = make_initial(base);
    const double flux = base.prescribed_flux;
    for (int i = 0; i < levels; ++i) {
      const ScenarioConfig c = level_config(i);
      const ResolvedSetup setup = resolve_setup(c);
      const DensityVector n = detail::final_density(c);
      double err = 0.0;
      for (std::size_t j = 0; j < n.size(); ++j) {
        const double exact = oracles::characteristics_density(
            hazard, init.f, [flux](double) { return flux; }, base.T,
            setup.grid.center(j));
        err += std::abs(n[j] - exact);
      }
      rows.push_back({setup.grid.ds, setup.grid.dt, err * setup.grid.ds});
      errors.push_back(rows.back().l1_error);
    }
  } else {
    const DensityVector reference = detail::final_density(level_config(levels));
    for (int i = 0; i < levels; ++i) {
      const ScenarioConfig c = level_config(i);
      const ResolvedSetup setup = resolve_setup(c);
      const DensityVector n = detail::final_density(c);
      const auto ratio = static_cast<std::size_t>(1) << (levels - i);
      const DensityVector ref_c = detail::coarsen(reference, ratio, setup.grid.ds);
      rows.push_back(
          {setup.grid.ds, setup.grid.dt, detail::l1_distance(n, ref_c)});
      errors.push_back(rows.back().l1_error);
    }
  }

  for (std::size_t i = 1; i < rows.size(); ++i)
    rows[i].observed_order = std::log2(errors[i - 1] / errors[i]);
  return rows;
}

inline void write_convergence_csv(const std::filesystem::path& path,
                                  const std::vector<ConvergenceRow>& rows) {
  std::ofstream out = detail::open_out(path);
  out << "ds,dt,l1_error,observed_order\n";
  for (const ConvergenceRow& r : rows) {
    out << detail::fmt17(r.ds) << ',' << detail::fmt17(r.dt) << ','
        << detail::fmt17(r.l1_error) << ',';
    if (!std::isnan(r.observed_order)) out << detail::fmt17(r.observed_order);
    out << "\n";
  }
}

}  // namespace etm

#endif  // ETM_SCENARIO_HPP
