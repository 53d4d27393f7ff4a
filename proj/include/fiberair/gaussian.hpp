#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>
#include <complex>

namespace fiberair {

/// Bivariate Gaussian over (Re, Im) of a complex amplitude. No
/// circularity assumption: the full 2x2 covariance is kept.
struct Gaussian2d {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
};

inline Eigen::Vector2d to_vec2(std::complex<double> z) {
  return {z.real(), z.imag()};
}

/// Log density (nats) of z under g. Regularizes a non-positive-definite
/// covariance by inflating the diagonal until the Cholesky succeeds.
double gaussian2d_logpdf(const Gaussian2d& g, std::complex<double> z);

/// Precomputed form for evaluating one Gaussian at many points.
struct Gaussian2dEval {
  Eigen::Vector2d mean;
  Eigen::Matrix2d precision;
  double log_norm;  // -log(2*pi) - 0.5*log(det)

  explicit Gaussian2dEval(const Gaussian2d& g);
  double logpdf(std::complex<double> z) const {
    const Eigen::Vector2d d = to_vec2(z) - mean;
    return log_norm - 0.5 * d.dot(precision * d);
  }
};

/// Sample mean / covariance (1/(n-1) normalization) of complex samples.
Gaussian2d fit_gaussian2d(const Eigen::Ref<const Eigen::ArrayXcd>& samples);

/// log(sum(exp(v))) with the usual max shift.
template <typename Derived>
double log_sum_exp(const Eigen::ArrayBase<Derived>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v - m).exp().sum());
}

}  // namespace fiberair
