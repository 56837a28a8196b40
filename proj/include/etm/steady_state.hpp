#ifndef ETM_STEADY_STATE_HPP
#define ETM_STEADY_STATE_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "etm/fixed_point.hpp"
#include "etm/grid.hpp"
#include "etm/hazard.hpp"
#include "etm/quadrature.hpp"

namespace etm {

// Survival integral I(N) = int_0^inf exp(-int_0^s p(u,N) du) ds. A stationary
// flux level N* with total mass m satisfies N* I(N*) = m. Step hazards give
// the closed form I(N) = sigma + 1/phi(N); other kinds are integrated
// numerically up to the point where the survival factor is negligible.
inline double survival_integral(const HazardModel& model, double N) {
  switch (model.kind()) {
    case HazardKind::StepFixedRefractory: {
      const double phi = model.phi(N);
      if (!(phi > 0.0)) return kInf;
      return model.sigma() + 1.0 / phi;
    }
    case HazardKind::StepVariableRefractory:
      return model.sigma_at(N) + 1.0;
    default: {
      // Find a cutoff where the accumulated hazard makes the integrand
      // negligible, then integrate adaptively.
      double s_cut = 1.0;
      for (int i = 0; i < 60 && model.cumulative(s_cut, N) < 45.0; ++i)
        s_cut *= 2.0;
      if (model.cumulative(s_cut, N) < 45.0)
        throw std::domain_error(
            "survival_integral: hazard too weak, integral diverges");
      return adaptive_simpson(
          [&](double s) { return std::exp(-model.cumulative(s, N)); }, 0.0,
          s_cut, 1e-12);
    }
  }
}

struct SteadyStateOptions {
  int scan_brackets = 2000;
  double tol = 1e-13;
};

// All stationary flux levels for total mass `mass`, ascending. Solves
// N I(N) = mass by a bracketing scan over [0, p_sup * mass] followed by
// bisection (the equation can have several roots for excitatory hazards).
inline std::vector<double> stationary_flux_roots(
    const HazardModel& model, double mass, const SteadyStateOptions& opts = {}) {
  if (!(mass > 0.0))
    throw std::invalid_argument("stationary_flux_roots: mass must be positive");
  auto g = [&](double N) {
    const double I = survival_integral(model, N);
    return std::isinf(I) ? -mass : N * I - mass;
  };
  const double hi = model.p_sup() * mass;
  if (!std::isfinite(hi))
    throw std::invalid_argument(
        "stationary_flux_roots: unbounded hazard needs a finite activity cap");

  std::vector<double> roots;
  const int K = opts.scan_brackets;
  double prev_x = 0.0, prev_g = g(0.0);
  for (int i = 1; i <= K; ++i) {
    const double x = hi * i / K;
    const double gx = g(x);
    if ((prev_g < 0.0) != (gx < 0.0)) {
      double a = prev_x, b = x, ga = prev_g;
      while (b - a > opts.tol * std::max(1.0, b)) {
        const double mid = 0.5 * (a + b), gm = g(mid);
        if ((ga < 0.0) == (gm < 0.0)) {
          a = mid;
          ga = gm;
        } else {
          b = mid;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_x = x;
    prev_g = gx;
  }
  return roots;
}

// Stationary profile n*(s_j) = N* exp(-int_0^{s_j} p(u, N*) du) on cell
// centers; its discrete mass approximates N* I(N*).
inline DensityVector stationary_density(const HazardModel& model, double N_star,
                                        double ds, std::size_t j_max) {
  std::vector<double> v(j_max);
  for (std::size_t j = 0; j < j_max; ++j) {
    const double s = ds * (static_cast<double>(j) + 0.5);
    v[j] = N_star * std::exp(-model.cumulative(s, N_star));
  }
  return DensityVector(std::move(v), ds);
}

// Invertibility of the flux map at a stationary level, evaluated on the
// stationary profile itself.
inline double stationary_psi(const HazardModel& model, double N_star, double ds,
                             std::size_t j_max) {
  const DensityVector n = stationary_density(model, N_star, ds, j_max);
  return invertibility_psi(n, model, N_star);
}

}  // namespace etm

#endif  // ETM_STEADY_STATE_HPP
