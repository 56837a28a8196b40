#ifndef ETM_QUADRATURE_HPP
#define ETM_QUADRATURE_HPP

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace etm {

// 5-point Gauss-Legendre nodes/weights on [-1,1].
inline constexpr std::array<double, 5> kGauss5Nodes = {
    -0.9061798459386640, -0.5384693101056831, 0.0,
    0.5384693101056831, 0.9061798459386640};
inline constexpr std::array<double, 5> kGauss5Weights = {
    0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
    0.4786286704993665, 0.2369268850561891};

template <class F>
double gauss5(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < 5; ++i)
    acc += kGauss5Weights[i] * f(mid + half * kGauss5Nodes[i]);
  return acc * half;
}

namespace detail {
template <class F>
double adaptive_simpson_rec(F& f, double a, double b, double fa, double fm,
                            double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double h = b - a;
  const double left = (h / 12.0) * (fa + 4.0 * flm + fm);
  const double right = (h / 12.0) * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol,
                              depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol,
                              depth - 1);
}
}  // namespace detail

// Adaptive Simpson on [a,b] with absolute tolerance.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double abs_tol = 1e-10) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = ((b - a) / 6.0) * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, 48);
}

}  // namespace etm

#endif  // ETM_QUADRATURE_HPP
