#ifndef ETM_ITM_HPP
#define ETM_ITM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "etm/fixed_point.hpp"
#include "etm/grid.hpp"
#include "etm/hazard.hpp"
#include "etm/trajectory.hpp"

namespace etm {

struct ItmOptions {
  BranchSelection branch;
  RootFindOptions roots;
  // Frozen-coefficient approximation: N^{m+1} = F(N^m) on the new density
  // instead of the full solve (valid in the weak regime).
  bool frozen_flux = false;
  bool check_bounds = true;
};

struct ItmState {
  std::size_t m = 0;
  DensityVector density;
  double N = 0.0;
  double psi = 0.0;
  double mass = 0.0;
  double tv = 0.0;
  bool jump = false;
};

namespace detail {

// One explicit upwind update with boundary inflow N and rates frozen at the
// current activity argument.
inline void upwind_update(std::vector<double>& v, double ds, double dt,
                          const HazardModel& model, double activity, double N) {
  const double courant = dt / ds;
  double left = N;  // n_0^m := N^m
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double s = ds * (static_cast<double>(j) + 0.5);
    const double cur = v[j];
    v[j] = cur - courant * (cur - left) - dt * model.eval(s, activity) * cur;
    left = cur;
  }
}

inline void record_step(Trajectory& traj, double t, double N, double psi,
                        double mass, double tv, bool jump) {
  traj.t.push_back(t);
  traj.N.push_back(N);
  traj.psi.push_back(psi);
  traj.mass.push_back(mass);
  traj.tv.push_back(tv);
  traj.jump.push_back(jump);
}

inline void track_bounds(Trajectory& traj, const std::vector<double>& v,
                         double upper) {
  for (double x : v) {
    traj.min_density = std::min(traj.min_density, x);
    traj.max_density = std::max(traj.max_density, x);
    if (x < -1e-14 || x > upper + 1e-14) ++traj.bound_violations;
  }
}

}  // namespace detail

inline void require_cfl_itm(const Grid& g, const HazardModel& model) {
  const double bound = cfl_dt_itm(g.ds, model.p_sup());
  if (g.dt > bound * (1.0 + 1e-12))
    throw std::invalid_argument("itm: dt violates the CFL bound");
}

inline ItmState itm_init(DensityVector n0, const HazardModel& model,
                         const ItmOptions& opts = {}) {
  ItmState st;
  st.density = std::move(n0);
  FluxEvaluator F(st.density, model);
  RootReport rep = find_all_roots(F, opts.roots);
  BranchSelection init_sel = opts.branch;
  if (init_sel.policy == BranchPolicy::NearestPrevious && rep.roots.size() > 1)
    init_sel.policy = BranchPolicy::Lowest;  // no previous value at t = 0
  st.N = select_branch(rep, 0.0, init_sel, kInf);
  st.psi = F.psi(st.N);
  st.mass = st.density.mass();
  st.tv = total_variation(st.density, st.N);
  return st;
}

inline ItmState itm_step(const ItmState& state, const HazardModel& model,
                         const Grid& grid, const ItmOptions& opts = {}) {
  require_cfl_itm(grid, model);
  ItmState next;
  next.m = state.m + 1;
  next.density = state.density;
  detail::upwind_update(next.density.values(), grid.ds, grid.dt, model, state.N,
                        state.N);
  FluxEvaluator F(next.density, model);
  if (opts.frozen_flux) {
    next.N = F.flux(state.N);
    next.jump = false;
  } else {
    RootReport rep = find_all_roots(F, opts.roots);
    BranchSelection sel = opts.branch;
    if (sel.policy == BranchPolicy::FixedIndex)
      sel.policy = BranchPolicy::NearestPrevious;  // fixed index is t=0 only
    next.N = select_branch(
        rep, state.N, sel,
        jump_threshold(grid.dt, model.p_sup(), next.density.mass()));
    next.jump = rep.jump_event;
  }
  next.psi = F.psi(next.N);
  next.mass = next.density.mass();
  next.tv = total_variation(next.density, next.N);
  return next;
}

inline Trajectory itm_run(DensityVector n0, const HazardModel& model,
                          const Grid& grid,
                          const std::vector<double>& snapshot_times = {},
                          const ItmOptions& opts = {}) {
  require_cfl_itm(grid, model);
  Trajectory traj;
  const double density_bound =
      std::max(n0.sup_norm(), model.p_sup() * n0.mass());

  std::vector<std::size_t> snap_steps;
  for (double ts : snapshot_times)
    snap_steps.push_back(static_cast<std::size_t>(std::llround(ts / grid.dt)));

  ItmState st = itm_init(std::move(n0), model, opts);
  auto maybe_snapshot = [&](const ItmState& s) {
    for (std::size_t k = 0; k < snap_steps.size(); ++k)
      if (snap_steps[k] == s.m)
        traj.snapshots.push_back(
            {static_cast<double>(s.m) * grid.dt, s.density});
  };
  detail::record_step(traj, 0.0, st.N, st.psi, st.mass, st.tv, false);
  if (opts.check_bounds)
    detail::track_bounds(traj, st.density.values(), density_bound);
  maybe_snapshot(st);

  for (std::size_t m = 0; m < grid.steps; ++m) {
    st = itm_step(st, model, grid, opts);
    detail::record_step(traj, static_cast<double>(st.m) * grid.dt, st.N, st.psi,
                        st.mass, st.tv, st.jump);
    if (opts.check_bounds)
      detail::track_bounds(traj, st.density.values(), density_bound);
    maybe_snapshot(st);
  }
  return traj;
}

// Linear auxiliary problem: the flux is prescribed, no fixed-point solve.
// Used by the convergence study against the characteristics oracle.
inline Trajectory itm_run_prescribed(DensityVector n0, const HazardModel& model,
                                     const std::function<double(double)>& flux,
                                     const Grid& grid,
                                     const std::vector<double>& snapshot_times = {}) {
  require_cfl_itm(grid, model);
  Trajectory traj;
  std::vector<std::size_t> snap_steps;
  for (double ts : snapshot_times)
    snap_steps.push_back(static_cast<std::size_t>(std::llround(ts / grid.dt)));

  DensityVector n = std::move(n0);
  auto record = [&](std::size_t m) {
    const double t = static_cast<double>(m) * grid.dt;
    detail::record_step(traj, t, flux(t), 1.0, n.mass(),
                        total_variation(n, flux(t)), false);
    for (std::size_t k = 0; k < snap_steps.size(); ++k)
      if (snap_steps[k] == m) traj.snapshots.push_back({t, n});
  };
  record(0);
  for (std::size_t m = 0; m < grid.steps; ++m) {
    const double t = static_cast<double>(m) * grid.dt;
    detail::upwind_update(n.values(), grid.ds, grid.dt, model, flux(t), flux(t));
    record(m + 1);
  }
  traj.snapshots.push_back({static_cast<double>(grid.steps) * grid.dt, n});
  return traj;
}

}  // namespace etm

#endif  // ETM_ITM_HPP
