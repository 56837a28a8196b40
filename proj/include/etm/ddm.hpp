#ifndef ETM_DDM_HPP
#define ETM_DDM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "etm/fixed_point.hpp"
#include "etm/grid.hpp"
#include "etm/hazard.hpp"
#include "etm/itm.hpp"
#include "etm/kernel.hpp"
#include "etm/trajectory.hpp"

namespace etm {

// Near-delta kernels (lambda well below dt) cannot be resolved by the
// trapezoidal convolution; the exact-limit mode substitutes the kernel's
// distributional limit instead: X = N(t - d) for the gaussian and the
// exponential-kernel ODE for the exponential.
enum class DeltaLimitMode { Auto, Off, On };

struct DdmOptions {
  ActivityOptions activity;
  RootFindOptions roots;
  DeltaLimitMode delta_limit = DeltaLimitMode::Auto;
  bool check_bounds = true;
};

namespace detail {

inline bool use_delta_limit(const DelayKernel& k, double dt, DeltaLimitMode m) {
  if (m == DeltaLimitMode::On) return true;
  if (m == DeltaLimitMode::Off) return false;
  return k.lambda() < dt;
}

struct DdmRunner {
  const HazardModel& model;
  const Grid& grid;
  const std::vector<double>& snapshot_times;
  bool check_bounds;

  Trajectory traj;
  DensityVector n;
  std::vector<double> flux_history;
  double density_bound = 0.0;
  double x_bound_scale = 1.0;  // ||alpha||_1 factor of the activity bound

  DdmRunner(DensityVector n0, const HazardModel& model_, const Grid& grid_,
            const std::vector<double>& snaps, bool bounds)
      : model(model_), grid(grid_), snapshot_times(snaps), check_bounds(bounds),
        n(std::move(n0)) {
    density_bound = std::max(n.sup_norm(), model.p_sup() * n.mass());
  }

  void record(std::size_t m, double N, double X, double psi, bool blow) {
    const double t = static_cast<double>(m) * grid.dt;
    traj.t.push_back(t);
    traj.N.push_back(N);
    traj.X.push_back(X);
    traj.psi.push_back(psi);
    traj.mass.push_back(n.mass());
    traj.tv.push_back(total_variation(n, N));
    traj.jump.push_back(false);
    if (check_bounds) track_bounds(traj, n.values(), density_bound);
    for (double ts : snapshot_times)
      if (static_cast<std::size_t>(std::llround(ts / grid.dt)) == m)
        traj.snapshots.push_back({t, n});
    if (blow) {
      traj.blow_up = true;
      traj.blow_up_time = t;
    }
    flux_history.push_back(N);
  }
};

}  // namespace detail

// For the unbounded hazard the sup-norm over the capped activity range is
// enormous and no practical dt satisfies the full CFL bound; positivity is
// necessarily lost as the activity grows toward a blow-up, so only the
// transport part dt <= ds is enforced there.
inline void require_cfl_transport(const Grid& g, const HazardModel& model) {
  if (model.kind() == HazardKind::UnboundedQuadratic) {
    if (g.dt > g.ds * (1.0 + 1e-12))
      throw std::invalid_argument("ddm: dt must not exceed ds");
    return;
  }
  require_cfl_itm(g, model);
}

inline void require_cfl_ddm(const Grid& g, const HazardModel& model,
                            double alpha0, double mass0) {
  require_cfl_transport(g, model);
  const double dXp = model.norms().dNp_sup;
  if (std::isfinite(dXp) && dXp > 0.0 && alpha0 > 0.0 &&
      g.dt >= 2.0 / (alpha0 * dXp * mass0) * (1.0 + 1e-12))
    throw std::invalid_argument(
        "ddm: dt violates the activity-contraction bound");
}

// Exponential-kernel path: replaces the convolution by one implicit Euler
// step of lambda X' + X = J N per time step. Also serves the near-delta
// exponential regime.
inline Trajectory ddm_run_exponential_ode(
    DensityVector n0, const HazardModel& model, double lambda, double J,
    const Grid& grid, const std::vector<double>& snapshot_times = {},
    const DdmOptions& opts = {}) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("ddm ode: lambda must be positive");
  require_cfl_transport(grid, model);
  detail::DdmRunner run(std::move(n0), model, grid, snapshot_times,
                        opts.check_bounds);
  run.x_bound_scale = J;

  const bool unbounded = model.kind() == HazardKind::UnboundedQuadratic;
  // Near a blow-up the density entries dwarf the conserved mass and the
  // numerical mass sum is pure cancellation noise; substitute the exactly
  // conserved initial value for the flux of the unbounded hazard.
  const double frozen_mass = unbounded ? run.n.mass() : -1.0;

  double X = 0.0;
  {
    FluxEvaluator F0(run.n, model, frozen_mass);
    run.record(0, F0.flux(0.0), X, F0.psi(X), false);
  }
  double N = run.flux_history.back();

  const double dt = grid.dt;
  const double cap = std::min(opts.activity.blow_up_cap, model.activity_cap());
  for (std::size_t m = 0; m < grid.steps; ++m) {
    detail::upwind_update(run.n.values(), grid.ds, dt, model, X, N);
    FluxEvaluator F(run.n, model, frozen_mass);
    // One implicit Euler step: (lambda + dt) X' - lambda X - dt J F(X') = 0.
    // The equation can have several roots when the hazard is strongly
    // excitatory; select the one nearest the previous activity so X continues
    // its branch, mirroring the ITM branch policy.
    auto g = [&](double x) {
      return (lambda + dt) * x - lambda * X - dt * J * F.flux(x);
    };
    auto dg = [&](double x) {
      return (lambda + dt) - dt * J * (1.0 - F.psi(x));
    };
    bool blow = false;
    double hi;
    if (unbounded) {
      hi = cap;
      if (g(hi) < 0.0) blow = true;
    } else {
      hi = (lambda * X + dt * J * model.p_sup() * F.mass()) / (lambda + dt) + 1.0;
    }
    if (!blow) {
      const double tol = opts.activity.residual_tol * std::max(1.0, hi);
      constexpr int K = 400;
      double chosen = std::numeric_limits<double>::quiet_NaN();
      double px = 0.0, pg = g(0.0);
      if (pg >= 0.0) chosen = 0.0;  // only when X = 0 and F(0) = 0
      for (int i = 1; i <= K; ++i) {
        const double x = hi * i / K;
        const double gx = g(x);
        if ((pg < 0.0) != (gx < 0.0)) {
          bool disc = false;
          const double r = detail::refine_root(g, dg, px, x, pg, gx, tol, &disc);
          if (std::isnan(chosen) || std::abs(r - X) < std::abs(chosen - X))
            chosen = r;
        }
        px = x;
        pg = gx;
      }
      if (std::isnan(chosen))
        throw std::logic_error("ddm ode: activity root scan found no root");
      X = chosen;
      if (X >= cap) blow = true;
    } else {
      X = cap;
    }
    N = F.flux(X);
    run.record(m + 1, N, X, F.psi(X), blow);
    if (blow) break;
  }
  return run.traj;
}

inline Trajectory ddm_run(DensityVector n0, const HazardModel& model,
                          const DelayKernel& kernel, const Grid& grid,
                          const std::vector<double>& snapshot_times = {},
                          const DdmOptions& opts = {}) {
  if (detail::use_delta_limit(kernel, grid.dt, opts.delta_limit)) {
    if (kernel.kind() == KernelKind::Exponential)
      return ddm_run_exponential_ode(std::move(n0), model, kernel.lambda(),
                                     kernel.connectivity(), grid,
                                     snapshot_times, opts);
    // Gaussian near delta(t - d): X^m = J N^{m - round(d/dt)}.
    require_cfl_transport(grid, model);
    const auto lag = static_cast<std::size_t>(
        std::max<long long>(0, std::llround(kernel.delay() / grid.dt)));
    detail::DdmRunner run(std::move(n0), model, grid, snapshot_times,
                          opts.check_bounds);
    double X = 0.0;
    double N = FluxEvaluator(run.n, model).flux(0.0);
    run.record(0, N, X, FluxEvaluator(run.n, model).psi(X), false);
    for (std::size_t m = 0; m < grid.steps; ++m) {
      detail::upwind_update(run.n.values(), grid.ds, grid.dt, model, X, N);
      FluxEvaluator F(run.n, model);
      X = (m + 1 >= lag && lag > 0)
              ? kernel.connectivity() * run.flux_history[m + 1 - lag]
              : 0.0;
      N = F.flux(X);
      run.record(m + 1, N, X, F.psi(X), false);
    }
    return run.traj;
  }

  // Resolved kernel: trapezoidal convolution (Algorithm 2).
  KernelSamples alpha = kernel_sample(kernel, grid.dt, grid.steps);
  require_cfl_ddm(grid, model, alpha.alpha0, n0.mass());
  detail::DdmRunner run(std::move(n0), model, grid, snapshot_times,
                        opts.check_bounds);
  run.x_bound_scale = alpha.l1_discrete;

  double X = 0.0;
  double N = FluxEvaluator(run.n, model).flux(0.0);
  run.record(0, N, X, FluxEvaluator(run.n, model).psi(X), false);

  for (std::size_t m = 0; m < grid.steps; ++m) {
    detail::upwind_update(run.n.values(), grid.ds, grid.dt, model, X, N);
    FluxEvaluator F(run.n, model);
    const ActivitySolve sol =
        solve_activity_ddm(F, alpha, run.flux_history, grid.dt, opts.activity);
    X = sol.X;
    N = F.flux(X);
    run.record(m + 1, N, X, F.psi(X), sol.blow_up);
    if (sol.blow_up) break;
  }
  return run.traj;
}

}  // namespace etm

#endif  // ETM_DDM_HPP
