#ifndef ETM_FIXED_POINT_HPP
#define ETM_FIXED_POINT_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "etm/grid.hpp"
#include "etm/hazard.hpp"
#include "etm/kernel.hpp"

namespace etm {

// F(N) = ds * sum_j p(s_j, N) n_j, the discrete discharge flux.
inline double discrete_flux_map(const DensityVector& n, const HazardModel& model,
                                double N) {
  const double ds = n.ds();
  const auto& v = n.values();
  double acc = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j)
    acc += model.eval(ds * (static_cast<double>(j) + 0.5), N) * v[j];
  return ds * acc;
}

// Psi = 1 - ds * sum_j dp/dN(s_j, N) n_j; the flux branch can be continued
// while Psi != 0. Central finite differences of the flux map when the hazard
// has no pointwise N-derivative.
inline double invertibility_psi(const DensityVector& n, const HazardModel& model,
                                double N) {
  if (model.has_analytic_dN()) {
    const double ds = n.ds();
    const auto& v = n.values();
    double acc = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j)
      acc += model.dN(ds * (static_cast<double>(j) + 0.5), N) * v[j];
    return 1.0 - ds * acc;
  }
  const double h = 1e-6 * std::max(1.0, N);
  const double lo = std::max(N - h, 0.0);
  const double fp = discrete_flux_map(n, model, N + h);
  const double fm = discrete_flux_map(n, model, lo);
  return 1.0 - (fp - fm) / (N + h - lo);
}

// O(1)-per-evaluation view of F and Psi for one fixed density level. Step
// hazards reduce to a refractory tail mass; everything else falls back to the
// direct summation.
class FluxEvaluator {
 public:
  // mass_override substitutes the exactly-conserved analytic mass for the
  // computed one; near a blow-up the density entries grow so large that the
  // numerical mass sum loses all significance to cancellation.
  FluxEvaluator(const DensityVector& n, const HazardModel& model,
                double mass_override = -1.0)
      : n_(n), model_(model),
        mass_(mass_override >= 0.0 ? mass_override : n.mass()) {
    switch (model.kind()) {
      case HazardKind::StepFixedRefractory:
        tail_ = tail_mass(model.sigma());
        break;
      case HazardKind::StepVariableRefractory: {
        // suffix_[j] = ds * sum_{k >= j} n_k
        const auto& v = n.values();
        suffix_.assign(v.size() + 1, 0.0);
        for (std::size_t j = v.size(); j-- > 0;)
          suffix_[j] = suffix_[j + 1] + n.ds() * v[j];
        break;
      }
      default:
        break;
    }
  }

  double mass() const { return mass_; }
  const DensityVector& density() const { return n_; }
  const HazardModel& model() const { return model_; }

  double flux(double N) const {
    switch (model_.kind()) {
      case HazardKind::StepFixedRefractory:
        return model_.phi(N) * tail_;
      case HazardKind::StepVariableRefractory:
        return suffix_tail(model_.sigma_at(N));
      case HazardKind::UnboundedQuadratic:
        return (N * N + 1.0) * mass_;
      default:
        return discrete_flux_map(n_, model_, N);
    }
  }

  double psi(double N) const {
    switch (model_.kind()) {
      case HazardKind::StepFixedRefractory:
        return 1.0 - model_.dN(model_.sigma() + 1.0, N) * tail_;
      case HazardKind::StepVariableRefractory: {
        const double h = 1e-6 * std::max(1.0, N);
        const double lo = std::max(N - h, 0.0);
        return 1.0 - (flux(N + h) - flux(lo)) / (N + h - lo);
      }
      case HazardKind::UnboundedQuadratic:
        return 1.0 - 2.0 * N * mass_;
      default:
        return invertibility_psi(n_, model_, N);
    }
  }

 private:
  double tail_mass(double sigma) const {
    const auto& v = n_.values();
    const double ds = n_.ds();
    double acc = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j)
      if (ds * (static_cast<double>(j) + 0.5) > sigma) acc += v[j];
    return ds * acc;
  }

  double suffix_tail(double sigma) const {
    // first j with center (j + 1/2) ds > sigma
    const double ds = n_.ds();
    double idx = std::ceil(sigma / ds - 0.5);
    if (idx < 0.0) idx = 0.0;
    auto j = static_cast<std::size_t>(idx);
    while (j < suffix_.size() - 1 && ds * (static_cast<double>(j) + 0.5) <= sigma)
      ++j;
    while (j > 0 && ds * (static_cast<double>(j) - 0.5) > sigma) --j;
    return suffix_[std::min(j, suffix_.size() - 1)];
  }

  const DensityVector& n_;
  const HazardModel& model_;
  double mass_ = 0.0;
  double tail_ = 0.0;
  std::vector<double> suffix_;
};

struct RootFindOptions {
  int scan_brackets = 400;
  double residual_tol = 1e-12;  // scaled by max(1, p_sup * mass)
  double tangency_tol = 1e-8;
};

struct RootReport {
  std::vector<double> roots;         // ascending
  std::vector<double> psi_at_roots;  // Psi at each root
  std::vector<bool> tangency;        // |g| dipped below tol without sign change
  std::vector<bool> discontinuous;   // crossing at a jump of F (step hazards)
  std::size_t selected = 0;
  bool jump_event = false;
};

namespace detail {

// Safeguarded Newton-bisection for g on a sign-change bracket [a, b].
// Discontinuous F (variable refractory) can make the residual tolerance
// unattainable; the bracket then collapses to machine width and the crossing
// is reported with the discontinuity flag set.
template <class G, class DG>
inline double refine_root(G&& g, DG&& dg, double a, double b, double ga,
                          double /*gb*/, double tol, bool* discontinuous) {
  double x = 0.5 * (a + b), gx = g(x);
  for (int it = 0; it < 200; ++it) {
    if (std::abs(gx) <= tol) break;
    if ((ga < 0.0) == (gx < 0.0)) {
      a = x;
      ga = gx;
    } else {
      b = x;
    }
    if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() *
                     std::max(1.0, std::abs(x))) {
      if (discontinuous) *discontinuous = true;
      break;
    }
    const double slope = dg(x);
    double cand = slope != 0.0 ? x - gx / slope : x;
    if (!(cand > a) || !(cand < b)) cand = 0.5 * (a + b);
    x = cand;
    gx = g(x);
  }
  return x;
}

}  // namespace detail

inline RootReport find_all_roots(const FluxEvaluator& F,
                                 const RootFindOptions& opts = {}) {
  RootReport report;
  const double hi = std::max(F.model().p_sup() * F.mass(), 0.0);
  auto g = [&](double N) { return N - F.flux(N); };
  auto dg = [&](double N) { return F.psi(N); };  // g' = Psi

  if (hi <= 0.0) {  // zero mass or zero hazard: N = 0 is the only root
    report.roots.push_back(0.0);
    report.psi_at_roots.push_back(dg(0.0));
    report.tangency.push_back(false);
    report.discontinuous.push_back(false);
    return report;
  }

  const double tol = opts.residual_tol * std::max(1.0, hi);
  const int K = opts.scan_brackets;
  const double h = hi / K;
  double prev_x = 0.0, prev_g = g(0.0), prev_prev_g = prev_g;
  if (std::abs(prev_g) <= tol) {
    report.roots.push_back(0.0);
    report.tangency.push_back(false);
    report.discontinuous.push_back(false);
  }
  for (int i = 1; i <= K; ++i) {
    const double x = i * h;
    const double gx = g(x);
    if ((prev_g < 0.0) != (gx < 0.0)) {
      bool disc = false;
      const double r =
          detail::refine_root(g, dg, prev_x, x, prev_g, gx, tol, &disc);
      if (report.roots.empty() || r - report.roots.back() > 0.5 * h) {
        report.roots.push_back(r);
        report.tangency.push_back(false);
        report.discontinuous.push_back(disc);
      }
    } else if (std::abs(gx) <= tol &&
               (report.roots.empty() || x - report.roots.back() > 0.5 * h)) {
      report.roots.push_back(x);
      report.tangency.push_back(false);
      report.discontinuous.push_back(false);
    } else if (i >= 2 && std::abs(prev_g) < opts.tangency_tol &&
               prev_prev_g * prev_g > 0.0 && std::abs(prev_g) < std::abs(gx) &&
               std::abs(prev_g) < std::abs(prev_prev_g) &&
               (report.roots.empty() ||
                prev_x - report.roots.back() > 0.5 * h)) {
      // |g| dips near zero without a sign change: a (near-)double root.
      report.roots.push_back(prev_x);
      report.tangency.push_back(true);
      report.discontinuous.push_back(false);
    }
    prev_prev_g = prev_g;
    prev_x = x;
    prev_g = gx;
  }

  if (report.roots.empty())
    throw std::logic_error(
        "find_all_roots: no sign change found; g(0) <= 0 <= g(p_sup*mass) "
        "should guarantee one");

  report.psi_at_roots.reserve(report.roots.size());
  for (double r : report.roots) report.psi_at_roots.push_back(dg(r));
  return report;
}

inline RootReport find_all_roots(const DensityVector& n, const HazardModel& model,
                                 const RootFindOptions& opts = {}) {
  FluxEvaluator F(n, model);
  return find_all_roots(F, opts);
}

enum class BranchPolicy { NearestPrevious, Lowest, Highest, FixedIndex };

struct BranchSelection {
  BranchPolicy policy = BranchPolicy::NearestPrevious;
  std::size_t fixed_index = 0;  // only honored at t = 0
};

// Default jump threshold: a continuous flux moves O(dt) per step.
inline double jump_threshold(double dt, double p_sup, double mass) {
  return 10.0 * dt * p_sup * mass;
}

// Picks a root per policy; ties in nearest-previous break toward the smaller
// root. Sets report.jump_event when the chosen root moved farther than the
// threshold from previous_N.
inline double select_branch(RootReport& report, double previous_N,
                            const BranchSelection& sel, double threshold) {
  if (report.roots.empty())
    throw std::invalid_argument("select_branch: empty root report");
  std::size_t pick = 0;
  switch (sel.policy) {
    case BranchPolicy::Lowest:
      pick = 0;
      break;
    case BranchPolicy::Highest:
      pick = report.roots.size() - 1;
      break;
    case BranchPolicy::FixedIndex:
      if (sel.fixed_index >= report.roots.size())
        throw std::invalid_argument("select_branch: fixed index out of range");
      pick = sel.fixed_index;
      break;
    case BranchPolicy::NearestPrevious: {
      double best = std::abs(report.roots[0] - previous_N);
      for (std::size_t i = 1; i < report.roots.size(); ++i) {
        const double d = std::abs(report.roots[i] - previous_N);
        if (d < best) {  // strict: ties keep the smaller root
          best = d;
          pick = i;
        }
      }
      break;
    }
  }
  report.selected = pick;
  report.jump_event = std::abs(report.roots[pick] - previous_N) > threshold;
  return report.roots[pick];
}

struct ActivitySolve {
  double X = 0.0;
  bool blow_up = false;
};

struct ActivityOptions {
  bool literal_half_weights = false;  // uniform dt/2 weights on every term
  double residual_tol = 1e-12;
  double blow_up_cap = 1e3;
};

// Solves X = (dt/2) alpha_0 F(X) + H for the DDM activity at step m+1, where
// F(X) = ds sum_j p(s_j, X) n_j^{m+1} and H is the known trapezoidal history
// term over N^0..N^m (endpoint weight dt/2, interior weight dt). Under the
// DDM CFL bound the map is a contraction.
inline ActivitySolve solve_activity_ddm(const FluxEvaluator& F,
                                        const KernelSamples& alpha,
                                        std::span<const double> history,
                                        double dt,
                                        const ActivityOptions& opts = {}) {
  const std::size_t m1 = history.size();  // computing X^{m1}
  if (m1 == 0) return {0.0, false};       // X^0 = 0 by definition
  if (m1 >= alpha.values.size())
    throw std::invalid_argument("solve_activity_ddm: kernel samples too short");

  double H = 0.0;
  for (std::size_t k = 0; k < m1; ++k) {
    const double w = (k == 0 || opts.literal_half_weights) ? 0.5 * dt : dt;
    H += w * history[k] * alpha.values[m1 - k];
  }

  const double c = 0.5 * dt * alpha.values[0];
  auto g = [&](double X) { return X - c * F.flux(X) - H; };
  auto dg = [&](double X) { return 1.0 - c * (1.0 - F.psi(X)); };

  const double cap = std::min(opts.blow_up_cap, F.model().activity_cap());
  double hi;
  if (F.model().kind() == HazardKind::UnboundedQuadratic) {
    hi = cap;
    if (g(hi) < 0.0) return {hi, true};  // no admissible root below the cap
  } else {
    hi = c * F.model().p_sup() * F.mass() + H + 1.0;
  }

  const double glo = g(0.0), ghi = g(hi);
  if (glo >= 0.0) return {0.0, false};  // F(0) = 0 and empty history
  if (ghi < 0.0)
    throw std::logic_error("solve_activity_ddm: bracket lost");
  bool disc = false;
  const double tol = opts.residual_tol * std::max(1.0, hi);
  const double X = detail::refine_root(g, dg, 0.0, hi, glo, ghi, tol, &disc);
  return {X, X >= cap};
}

inline ActivitySolve solve_activity_ddm(const DensityVector& n_next,
                                        const HazardModel& model,
                                        const KernelSamples& alpha,
                                        std::span<const double> history,
                                        double dt,
                                        const ActivityOptions& opts = {}) {
  FluxEvaluator F(n_next, model);
  return solve_activity_ddm(F, alpha, history, dt, opts);
}

}  // namespace etm

#endif  // ETM_FIXED_POINT_HPP
