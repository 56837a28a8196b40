#ifndef ETM_KERNEL_HPP
#define ETM_KERNEL_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace etm {

enum class KernelKind {
  Exponential,  // alpha(t) = exp(-t/lambda)/lambda
  Gaussian,     // alpha(t) = exp(-((t-d)/lambda)^2/2) / (sqrt(2 pi) lambda)
};

// Distributed-delay weight alpha(t), optionally scaled by a connectivity
// factor J (unit mass kernels have J = 1).
class DelayKernel {
 public:
  static DelayKernel exponential(double lambda, double J = 1.0) {
    if (!(lambda > 0.0)) throw std::invalid_argument("kernel: lambda must be positive");
    DelayKernel k;
    k.kind_ = KernelKind::Exponential;
    k.lambda_ = lambda;
    k.J_ = J;
    return k;
  }

  static DelayKernel gaussian(double d, double lambda, double J = 1.0) {
    if (!(lambda > 0.0)) throw std::invalid_argument("kernel: lambda must be positive");
    if (!(d >= 0.0)) throw std::invalid_argument("kernel: delay d must be nonnegative");
    DelayKernel k;
    k.kind_ = KernelKind::Gaussian;
    k.lambda_ = lambda;
    k.d_ = d;
    k.J_ = J;
    return k;
  }

  KernelKind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  double delay() const { return d_; }
  double connectivity() const { return J_; }

  double eval(double t) const {
    if (!(t >= 0.0)) throw std::invalid_argument("kernel eval: t must be >= 0");
    switch (kind_) {
      case KernelKind::Exponential:
        return J_ * std::exp(-t / lambda_) / lambda_;
      case KernelKind::Gaussian: {
        const double z = (t - d_) / lambda_;
        constexpr double inv_sqrt_2pi = 0.3989422804014327;
        return J_ * inv_sqrt_2pi / lambda_ * std::exp(-0.5 * z * z);
      }
    }
    return 0.0;
  }

 private:
  DelayKernel() = default;
  KernelKind kind_ = KernelKind::Exponential;
  double lambda_ = 1.0;
  double d_ = 0.0;
  double J_ = 1.0;
};

// alpha_k = alpha(k dt) for k = 0..M with the discrete norms Algorithm-level
// code needs. under_resolved flags dt > lambda/4.
struct KernelSamples {
  std::vector<double> values;
  double dt = 0.0;
  double alpha0 = 0.0;
  double l1_discrete = 0.0;  // dt * sum |alpha_k|
  double tv_discrete = 0.0;  // sum |alpha_{k+1} - alpha_k|
  bool under_resolved = false;
};

inline KernelSamples kernel_sample(const DelayKernel& kernel, double dt,
                                   std::size_t steps) {
  if (!(dt > 0.0)) throw std::invalid_argument("kernel_sample: dt must be positive");
  KernelSamples s;
  s.dt = dt;
  s.values.resize(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k)
    s.values[k] = kernel.eval(static_cast<double>(k) * dt);
  s.alpha0 = s.values[0];
  for (double v : s.values) s.l1_discrete += std::abs(v);
  s.l1_discrete *= dt;
  for (std::size_t k = 0; k + 1 <= steps; ++k)
    s.tv_discrete += std::abs(s.values[k + 1] - s.values[k]);
  s.under_resolved = dt > kernel.lambda() / 4.0;
  return s;
}

}  // namespace etm

#endif  // ETM_KERNEL_HPP
