#include "fiberair/gaussian.hpp"

#include <cmath>

namespace fiberair {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

// Cholesky of a symmetric 2x2; inflates the diagonal until positive
// definite. Returns the (possibly regularized) matrix.
Eigen::Matrix2d make_positive_definite(Eigen::Matrix2d cov) {
  double ridge = 1e-12 * std::max(1.0, cov.trace());
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
    if (cov(0, 0) > 0.0 && det > 0.0) return cov;
    cov(0, 0) += ridge;
    cov(1, 1) += ridge;
    ridge *= 1e3;
  }
  return cov;
}

}  // namespace

Gaussian2dEval::Gaussian2dEval(const Gaussian2d& g) : mean(g.mean) {
  const Eigen::Matrix2d cov = make_positive_definite(g.cov);
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  precision << cov(1, 1), -cov(0, 1), -cov(1, 0), cov(0, 0);
  precision /= det;
  log_norm = -kLog2Pi - 0.5 * std::log(det);
}

double gaussian2d_logpdf(const Gaussian2d& g, std::complex<double> z) {
  return Gaussian2dEval(g).logpdf(z);
}

Gaussian2d fit_gaussian2d(const Eigen::Ref<const Eigen::ArrayXcd>& samples) {
  const auto n = samples.size();
  Gaussian2d g;
  if (n == 0) return g;
  const std::complex<double> mean = samples.mean();
  g.mean = to_vec2(mean);
  if (n < 2) {
    g.cov.setZero();
    return g;
  }
  double srr = 0, sii = 0, sri = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dr = samples[i].real() - mean.real();
    const double di = samples[i].imag() - mean.imag();
    srr += dr * dr;
    sii += di * di;
    sri += dr * di;
  }
  const double norm = 1.0 / static_cast<double>(n - 1);
  g.cov << srr * norm, sri * norm, sri * norm, sii * norm;
  return g;
}

}  // namespace fiberair
