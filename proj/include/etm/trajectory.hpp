#ifndef ETM_TRAJECTORY_HPP
#define ETM_TRAJECTORY_HPP

#include <cstddef>
#include <vector>

#include "etm/grid.hpp"

namespace etm {

struct DensitySnapshot {
  double t = 0.0;
  DensityVector density;
};

// Per-step scalar series of a run plus density snapshots at requested times.
struct Trajectory {
  std::vector<double> t;
  std::vector<double> N;
  std::vector<double> X;  // empty for ITM runs
  std::vector<double> psi;
  std::vector<double> mass;
  std::vector<double> tv;
  std::vector<bool> jump;  // jump[m] flags the transition into step m
  std::vector<DensitySnapshot> snapshots;

  bool blow_up = false;
  double blow_up_time = 0.0;

  // Per-step bound-violation bookkeeping (discrete maximum principle).
  double min_density = 0.0;
  double max_density = 0.0;
  std::size_t bound_violations = 0;

  std::size_t jump_count() const {
    std::size_t c = 0;
    for (bool b : jump) c += b ? 1 : 0;
    return c;
  }

  double min_psi() const {
    double m = psi.empty() ? 0.0 : psi.front();
    for (double v : psi) m = std::min(m, v);
    return m;
  }

  double mass_drift() const {
    if (mass.empty()) return 0.0;
    double d = 0.0;
    for (double v : mass) d = std::max(d, std::abs(v - mass.front()));
    return d;
  }
};

}  // namespace etm

#endif  // ETM_TRAJECTORY_HPP
