#ifndef ETM_ORACLES_HPP
#define ETM_ORACLES_HPP

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "etm/hazard.hpp"

// Independent reference solutions used to validate the solver. Everything in
// this header is deliberately decoupled from the scheme implementations: only
// closed forms and plain bisection.

namespace etm::oracles {

// Exact solution of the linear transport problem
//   dn/dt + dn/ds + p(s) n = 0,  n(t,0) = N(t) prescribed,
// by the method of characteristics. The hazard must not depend on the
// activity (it is evaluated at activity 0).
inline double characteristics_density(const HazardModel& model,
                                      const std::function<double(double)>& n0,
                                      const std::function<double(double)>& flux,
                                      double t, double s) {
  if (s >= t) {
    const double decay = model.cumulative(s, 0.0) - model.cumulative(s - t, 0.0);
    return n0(s - t) * std::exp(-decay);
  }
  return flux(t - s) * std::exp(-model.cumulative(s, 0.0));
}

// Closed-form activity of the delta-kernel ODE X' = -X + J F with the
// quadratic hazard p = X^2 + 1, unit mass, J = 1, X(0) = 0:
//   X' = X^2 - X + 1, so X(t) = 1/2 + (sqrt(3)/2) tan((sqrt(3)/2) t - pi/6),
// which blows up at T* = 4 pi / (3 sqrt(3)).
inline double blowup_activity(double t) {
  const double r = std::sqrt(3.0) / 2.0;
  return 0.5 + r * std::tan(r * t - std::numbers::pi / 6.0);
}

inline double blowup_time() {
  return 4.0 * std::numbers::pi / (3.0 * std::sqrt(3.0));
}

// Dense-scan bisection root finder for g(x) = x - F(x) on [0, hi]. Used to
// cross-check the solver's bracketing scan with an independent implementation.
inline std::vector<double> scan_roots(const std::function<double(double)>& F,
                                      double hi, int brackets = 20000,
                                      double tol = 1e-13) {
  std::vector<double> roots;
  auto g = [&](double x) { return x - F(x); };
  double prev_x = 0.0, prev_g = g(0.0);
  for (int i = 1; i <= brackets; ++i) {
    const double x = hi * i / brackets;
    const double gx = g(x);
    if ((prev_g < 0.0) != (gx < 0.0)) {
      double a = prev_x, b = x, ga = prev_g;
      while (b - a > tol * std::max(1.0, b)) {
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

}  // namespace etm::oracles

#endif  // ETM_ORACLES_HPP
