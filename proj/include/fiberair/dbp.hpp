#pragma once

#include <Eigen/Core>
#include <complex>
#include <vector>

#include "fiberair/channel.hpp"
#include "fiberair/gaussian.hpp"

namespace fiberair {

enum class GaussVariant { IidGaussian, CorrelatedGaussian };

/// Memoryless Gaussian auxiliary forward channel q(z_k | x_k = m):
/// one mean and 2x2 covariance per constellation point. The iidG variant
/// constrains each covariance to sigma_m^2 * I.
struct GaussianAuxChannel {
  GaussVariant variant = GaussVariant::CorrelatedGaussian;
  Eigen::ArrayXcd means;
  std::vector<Eigen::Matrix2d> covariances;

  // Cached natural-parameter form; rebuilt by train/deserialize.
  std::vector<Gaussian2dEval> evals;
  void rebuild_cache();
  int size() const { return static_cast<int>(means.size()); }
};

struct TrainOptions {
  int min_count_per_point = 50;
  bool pooled_variance = false;        // iidG: one sigma^2 shared by all points
  double cov_regularization = 1e-12;   // added to the diagonal before inversion
};

/// Deterministic digital backpropagation: inverse blocks in reverse
/// order (receiver filter is a projection, so its inverse is a no-op on
/// in-band signals; per span inverse EDFA gain, inverse FBG, inverse
/// SSFM), then matched filter + sampling. Segmentation matches the
/// forward channel by construction (same SpanConfig).
Eigen::ArrayXcd dbp_receive(const ComplexBasebandSignal& y,
                            const LinkConfig& link, const TxConfig& tx);

/// Per-point sample means and covariances of z given the labels.
/// Throws training_insufficient (std::runtime_error) when a point has
/// fewer than min_count_per_point observations.
GaussianAuxChannel train_gaussian_aux(const Eigen::ArrayXcd& z,
                                      const SymbolSequence& labels,
                                      int alphabet_size, GaussVariant variant,
                                      const TrainOptions& opts = {});

/// log q(z_k | x_k = m) in nats.
double q_loglik(std::complex<double> z, int point,
                const GaussianAuxChannel& aux);

/// Eq.-(16)-style factorized estimate of I_q(X;Z) for one block, in
/// bits/symbol: mean over k of log2 q(z_k|x_k) / sum_m p(m) q(z_k|m).
/// The first/last edge_exclude symbols are left out of the average.
double air_dbp(const Eigen::ArrayXcd& z, const SymbolSequence& x,
               const GaussianAuxChannel& aux,
               const Eigen::ArrayXd& input_law, int edge_exclude = 0);

}  // namespace fiberair
