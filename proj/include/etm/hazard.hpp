#ifndef ETM_HAZARD_HPP
#define ETM_HAZARD_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include "etm/quadrature.hpp"

namespace etm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class HazardKind {
  StepFixedRefractory,     // p(s,N) = phi(N) * chi_{s > sigma}
  StepVariableRefractory,  // p(s,X) = chi_{s > sigma(X)}
  Smooth,                  // closed-form p(s,N), differentiable in N
  UnboundedQuadratic,      // p(s,X) = X^2 + 1, needs an activity cap
};

struct HazardNorms {
  double p_sup = 0.0;
  double gamma = 0.0;     // sup of dp/dN (signed)
  double dNp_sup = 0.0;   // sup of |dp/dN|
  double dsp_sup = 0.0;   // sup of |dp/ds|, +inf for step kinds
};

// The firing coefficient p(s, N) with cached norms. Immutable after
// construction.
class HazardModel {
 public:
  static HazardModel step_fixed(std::function<double(double)> phi,
                                std::function<double(double)> dphi,
                                double sigma, HazardNorms norms,
                                std::string name = "step-fixed") {
    HazardModel m;
    m.kind_ = HazardKind::StepFixedRefractory;
    m.phi_ = std::move(phi);
    m.dphi_ = std::move(dphi);
    m.sigma_ = sigma;
    m.norms_ = norms;
    m.norms_.dsp_sup = kInf;
    m.name_ = std::move(name);
    return m;
  }

  static HazardModel step_variable(std::function<double(double)> sigma_of_X,
                                   double sigma_sup,
                                   std::string name = "step-variable") {
    HazardModel m;
    m.kind_ = HazardKind::StepVariableRefractory;
    m.sigma_fn_ = std::move(sigma_of_X);
    m.sigma_ = sigma_sup;  // upper bound on sigma(X), used for support logic
    m.norms_ = {1.0, kInf, kInf, kInf};  // dN p is a Dirac layer at s=sigma(X)
    m.name_ = std::move(name);
    return m;
  }

  static HazardModel smooth(std::function<double(double, double)> p,
                            std::function<double(double, double)> dNp,
                            HazardNorms norms, std::string name = "smooth") {
    HazardModel m;
    m.kind_ = HazardKind::Smooth;
    m.p_ = std::move(p);
    m.dNp_ = std::move(dNp);
    m.norms_ = norms;
    m.name_ = std::move(name);
    return m;
  }

  // p(s,X) = X^2 + 1. Unbounded in the activity; the cap bounds the admissible
  // activity range and the run records a blow-up event past it.
  static HazardModel unbounded_quadratic(double activity_cap = 1e3) {
    if (!(activity_cap > 0.0))
      throw std::invalid_argument("unbounded hazard requires a positive activity cap");
    HazardModel m;
    m.kind_ = HazardKind::UnboundedQuadratic;
    m.p_ = [](double, double N) { return N * N + 1.0; };
    m.dNp_ = [](double, double N) { return 2.0 * N; };
    m.activity_cap_ = activity_cap;
    m.norms_ = {activity_cap * activity_cap + 1.0, 2.0 * activity_cap,
                2.0 * activity_cap, 0.0};
    m.name_ = "unbounded-quadratic";
    return m;
  }

  HazardKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double activity_cap() const { return activity_cap_; }
  double sigma() const { return sigma_; }
  double sigma_at(double X) const {
    return kind_ == HazardKind::StepVariableRefractory ? sigma_fn_(X) : sigma_;
  }
  double phi(double N) const { return phi_(N); }

  double eval(double s, double N) const {
    switch (kind_) {
      case HazardKind::StepFixedRefractory:
        return s > sigma_ ? phi_(N) : 0.0;
      case HazardKind::StepVariableRefractory:
        return s > sigma_fn_(N) ? 1.0 : 0.0;
      default:
        return p_(s, N);
    }
  }

  // True when d p/dN exists pointwise; for the variable-refractory kind the
  // derivative is a Dirac layer and callers must use the finite-difference
  // path of the invertibility diagnostic instead.
  bool has_analytic_dN() const {
    return kind_ != HazardKind::StepVariableRefractory;
  }

  double dN(double s, double N) const {
    switch (kind_) {
      case HazardKind::StepFixedRefractory:
        return s > sigma_ ? dphi_(N) : 0.0;
      case HazardKind::StepVariableRefractory:
        throw std::logic_error(
            "hazard dN: distributional derivative; use the finite-difference "
            "invertibility path");
      default:
        return dNp_(s, N);
    }
  }

  // Integral of p(u, N) over u in [0, s]; closed form for step kinds.
  double cumulative(double s, double N) const {
    switch (kind_) {
      case HazardKind::StepFixedRefractory:
        return phi_(N) * std::max(s - sigma_, 0.0);
      case HazardKind::StepVariableRefractory:
        return std::max(s - sigma_fn_(N), 0.0);
      default:
        return adaptive_simpson([&](double u) { return p_(u, N); }, 0.0, s,
                                1e-10);
    }
  }

  const HazardNorms& norms() const { return norms_; }
  double p_sup() const { return norms_.p_sup; }
  double gamma() const { return norms_.gamma; }

  // Weak-interconnection predicate gamma * ||n0||_1 < 1 (unique flux roots).
  bool weakly_interconnected(double mass) const {
    return norms_.gamma * mass < 1.0;
  }

 private:
  HazardModel() = default;

  HazardKind kind_ = HazardKind::Smooth;
  std::function<double(double)> phi_, dphi_, sigma_fn_;
  std::function<double(double, double)> p_, dNp_;
  double sigma_ = 0.0;
  double activity_cap_ = kInf;
  HazardNorms norms_;
  std::string name_;
};

inline HazardNorms hazard_norms(const HazardModel& m) {
  if (m.kind() == HazardKind::UnboundedQuadratic && std::isinf(m.activity_cap()))
    throw std::invalid_argument("hazard_norms: unbounded hazard needs an activity cap");
  return m.norms();
}

namespace hazards {

// phi(N) = exp(-9N), sigma = 1/2. Inhibitory: dN p <= 0, gamma = 0.
inline HazardModel example1() {
  return HazardModel::step_fixed(
      [](double N) { return std::exp(-9.0 * N); },
      [](double N) { return -9.0 * std::exp(-9.0 * N); }, 0.5,
      {/*p_sup=*/1.0, /*gamma=*/0.0, /*dNp_sup=*/9.0, /*dsp_sup=*/kInf},
      "inhibitory-exp");
}

// phi(N) = 10 N^2/(N^2+1) + 1/2, sigma = 1. Excitatory;
// gamma = max 20N/(N^2+1)^2 = 3.75*sqrt(3) at N = 1/sqrt(3).
inline HazardModel example2() {
  const double gamma = 3.75 * std::sqrt(3.0);
  return HazardModel::step_fixed(
      [](double N) { return 10.0 * N * N / (N * N + 1.0) + 0.5; },
      [](double N) {
        const double d = N * N + 1.0;
        return 20.0 * N / (d * d);
      },
      1.0, {10.5, gamma, gamma, kInf}, "excitatory-sigmoid");
}

// phi(N) = 1/(1 + exp(3.5 - 9N)), sigma = 1/2. Excitatory with multiple
// flux roots; gamma = 9/4 at the logistic midpoint.
inline HazardModel example3() {
  return HazardModel::step_fixed(
      [](double N) { return 1.0 / (1.0 + std::exp(3.5 - 9.0 * N)); },
      [](double N) {
        const double e = std::exp(3.5 - 9.0 * N);
        const double d = 1.0 + e;
        return 9.0 * e / (d * d);
      },
      0.5, {1.0, 2.25, 2.25, kInf}, "excitatory-logistic");
}

inline double example4_sigma(double X) {
  const double x4 = X * X * X * X;
  return 2.0 - x4 / (x4 + 1.0);
}

// p(s,X) = chi_{s > sigma(X)}, sigma(X) = 2 - X^4/(X^4+1).
inline HazardModel example4() {
  return HazardModel::step_variable(&example4_sigma, 2.0, "variable-refractory");
}

// ITM reduction of example 4: X = J*N, so p(s,N) = chi_{s > sigma(J N)}.
inline HazardModel example4_itm(double J) {
  return HazardModel::step_variable(
      [J](double N) { return example4_sigma(J * N); }, 2.0,
      "variable-refractory-itm");
}

// p identically p0 (no refractory, no coupling).
inline HazardModel constant_rate(double p0) {
  if (!(p0 >= 0.0)) throw std::invalid_argument("constant_rate: p0 must be >= 0");
  return HazardModel::smooth([p0](double, double) { return p0; },
                             [](double, double) { return 0.0; },
                             {p0, 0.0, 0.0, 0.0}, "constant");
}

}  // namespace hazards

}  // namespace etm

#endif  // ETM_HAZARD_HPP
