#pragma once

#include <Eigen/Core>
#include <complex>

#include "fiberair/constellation.hpp"
#include "fiberair/dbp.hpp"

namespace fiberair {

/// Monte-Carlo information-rate estimate with its standard error.
struct AirEstimate {
  double value_bits_per_symbol = 0.0;
  double standard_error = 0.0;
  Eigen::ArrayXd per_run;

  int runs() const { return static_cast<int>(per_run.size()); }
};

/// Mean and standard error (sample std / sqrt(N)) of per-run values.
AirEstimate mc_air(const Eigen::ArrayXd& per_run_values);

/// Finite test surrogate: p(y|x) rows over y, input law p(x).
struct DiscreteChannel {
  Eigen::MatrixXd transition;  // A x B, rows sum to 1
  Eigen::VectorXd input_law;   // length A
};

/// Exact MI of a discrete memoryless channel, bits.
double dmc_mi(const DiscreteChannel& ch);

/// Mismatched-decoding lower bound with auxiliary forward channel q:
/// sum p(x) p(y|x) log2 q(y|x)/q(y), q(y) = sum p(x) q(y|x).
double dmc_air_afc(const DiscreteChannel& ch, const Eigen::MatrixXd& q);

/// Lower bound with auxiliary backward channel r(x|y) (columns over x
/// must be distributions): sum p(x) p(y|x) log2 r(x|y)/p(x).
double dmc_air_abc(const DiscreteChannel& ch, const Eigen::MatrixXd& r);

/// ABC induced by an AFC: r(x|y) = p(x) q(y|x) / q(y).
Eigen::MatrixXd induced_abc(const DiscreteChannel& ch,
                            const Eigen::MatrixXd& q);

/// log2(1 + SNR), bits per complex symbol.
double awgn_capacity(double snr_linear);

/// Gauss-Hermite nodes/weights for integral of exp(-x^2) f(x).
void gauss_hermite(int order, Eigen::ArrayXd& nodes, Eigen::ArrayXd& weights);

/// MI of the discrete-input complex AWGN channel at the given SNR via
/// 2-D Gauss-Hermite quadrature, bits/symbol.
double constrained_capacity_qam(const Constellation& c, double snr_linear,
                                int quad_order = 20);

/// MAP symbol decision under a Gaussian AFC: argmax of
/// log q(z|m) + log p(m); ties break to the lowest index.
int map_decision_afc(std::complex<double> z, const GaussianAuxChannel& aux,
                     const Eigen::ArrayXd& input_law);

}  // namespace fiberair
