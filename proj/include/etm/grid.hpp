#ifndef ETM_GRID_HPP
#define ETM_GRID_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "etm/quadrature.hpp"

namespace etm {

// Uniform age/time mesh: cells I_j = [(j-1)ds, j*ds), centers s_j = (j-1/2)ds.
struct Grid {
  double ds = 0.0;
  double dt = 0.0;
  double s_max = 0.0;  // rounded up to a multiple of ds
  double T = 0.0;
  std::size_t j_max = 0;  // number of age cells
  std::size_t steps = 0;  // M with T <= M*dt

  double center(std::size_t j) const { return (static_cast<double>(j) + 0.5) * ds; }

  std::vector<double> centers() const {
    std::vector<double> s(j_max);
    for (std::size_t j = 0; j < j_max; ++j) s[j] = center(j);
    return s;
  }
};

inline Grid build_grid(double ds, double dt, double s_max, double T) {
  if (!(ds > 0.0) || !(dt > 0.0) || !(s_max > 0.0) || !(T > 0.0))
    throw std::invalid_argument("build_grid: ds, dt, s_max, T must be positive");
  Grid g;
  g.ds = ds;
  g.dt = dt;
  g.T = T;
  g.j_max = static_cast<std::size_t>(std::ceil(s_max / ds - 1e-12));
  g.s_max = static_cast<double>(g.j_max) * ds;
  g.steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-12));
  return g;
}

// Largest stable time step for the ITM upwind update.
inline double cfl_dt_itm(double ds, double p_sup) {
  if (!(ds > 0.0)) throw std::invalid_argument("cfl_dt_itm: ds must be positive");
  if (!(p_sup >= 0.0) || std::isinf(p_sup))
    throw std::invalid_argument(
        "cfl_dt_itm: hazard sup-norm must be finite; unbounded hazards need a "
        "runtime activity cap");
  return 1.0 / (1.0 / ds + p_sup);
}

// DDM bound: the second branch guarantees the per-step activity solve is a
// contraction; it is +inf when the hazard does not depend on the activity.
inline double cfl_dt_ddm(double ds, double p_sup, double dXp_sup, double alpha0,
                         double mass0) {
  if (!(dXp_sup >= 0.0) || !(alpha0 >= 0.0) || !(mass0 >= 0.0))
    throw std::invalid_argument("cfl_dt_ddm: arguments must be nonnegative");
  const double transport = cfl_dt_itm(ds, p_sup);
  const double denom = alpha0 * dXp_sup * mass0;
  if (denom <= 0.0) return transport;
  return std::min(transport, 2.0 / denom);
}

// Nonnegative cell averages of the density at one time level.
class DensityVector {
 public:
  DensityVector() = default;
  DensityVector(std::vector<double> values, double ds)
      : values_(std::move(values)), ds_(ds) {
    if (!(ds_ > 0.0)) throw std::invalid_argument("DensityVector: ds must be positive");
  }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double ds() const { return ds_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }

  double mass() const {
    double acc = 0.0;
    for (double v : values_) acc += v;
    return ds_ * acc;
  }

  double sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, v);
    return m;
  }

 private:
  std::vector<double> values_;
  double ds_ = 0.0;
};

inline double total_mass(const DensityVector& n) { return n.mass(); }

// TV with the j=0 boundary difference taken against the current flux N;
// the implicit trailing zero beyond j_max is included.
inline double total_variation(const DensityVector& n, double boundary_flux) {
  if (!(boundary_flux >= 0.0))
    throw std::invalid_argument("total_variation: boundary flux must be nonnegative");
  const auto& v = n.values();
  if (v.empty()) return boundary_flux;
  double tv = std::abs(v.front() - boundary_flux);
  for (std::size_t j = 0; j + 1 < v.size(); ++j) tv += std::abs(v[j + 1] - v[j]);
  tv += std::abs(v.back());
  return tv;
}

// A closed-form initial density with its analytic mass and a support bound
// (age beyond which the density is numerically zero).
struct InitialDensity {
  std::function<double(double)> f;
  double analytic_mass = 1.0;
  double support_bound = 0.0;
};

// Cell averages by 5-point Gauss-Legendre per cell.
inline DensityVector discretize_initial(const InitialDensity& n0, const Grid& g) {
  if (n0.support_bound > g.s_max - g.T + 1e-12)
    throw std::domain_error(
        "discretize_initial: initial support exceeds s_max - T; the support "
        "grows at unit speed and would leave the grid");
  std::vector<double> v(g.j_max, 0.0);
  for (std::size_t j = 0; j < g.j_max; ++j) {
    const double a = static_cast<double>(j) * g.ds;
    if (a > n0.support_bound) break;
    v[j] = gauss5(n0.f, a, a + g.ds) / g.ds;
    if (v[j] < 0.0) throw std::domain_error("discretize_initial: negative density");
  }
  return DensityVector(std::move(v), g.ds);
}

}  // namespace etm

#endif  // ETM_GRID_HPP
