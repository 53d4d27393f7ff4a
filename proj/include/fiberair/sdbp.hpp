#pragma once

#include <Eigen/Core>

#include "fiberair/channel.hpp"
#include "fiberair/posterior.hpp"

namespace fiberair {

/// Collection of candidate waveforms representing the receiver's
/// uncertainty about the pre-channel signal. One column per particle;
/// metadata mirrors ComplexBasebandSignal.
struct ParticleEnsemble {
  Eigen::MatrixXcd particles;  // length x N_p
  double sample_rate_hz = 0.0;
  double symbol_rate_hz = 0.0;
  int samples_per_symbol = 1;
  int symbol_count = 0;
  int delay_samples = 0;
  double nominal_power_w = 0.0;

  int num_particles() const { return static_cast<int>(particles.cols()); }
  int length() const { return static_cast<int>(particles.rows()); }
};

/// Stochastic digital backpropagation. Every particle starts as y and
/// traverses the inverse link; at each amplifier the particle draws its
/// own ASE realization w ~ CN(0, sigma^2) with the forward statistics and
/// applies (u - w) / sqrt(G). Deterministic blocks are shared. Noise uses
/// per-(particle, amplifier) derived streams, so the result is identical
/// for any num_threads.
ParticleEnsemble sdbp_backward(const ComplexBasebandSignal& y,
                               const LinkConfig& link, const TxConfig& tx,
                               int num_particles, std::uint64_t seed,
                               int num_threads = 1);

/// Symbol-by-symbol posterior: matched-filter + sample each particle,
/// fit a bivariate Gaussian per slot over the particle cloud, evaluate at
/// the constellation and normalize.
PosteriorTable sbs_posterior(const ParticleEnsemble& ens, const PulseShape& p,
                             const Constellation& c);

struct GmpOptions {
  int window_symbols = 0;   // 0 -> 4 x pulse span
  double ridge_rel = 1e-9;  // diagonal floor, relative to mean variance
  int num_threads = 1;
};

/// Gaussian-message-passing posterior. Per window: fit a joint Gaussian
/// over the stacked (Re, Im) window samples of the ensemble (Ledoit-Wolf
/// shrinkage toward scaled identity keeps the fit well conditioned when
/// the particle count is below the window dimension), model the window as
/// H x + n with H the local Toeplitz pulse-shaping operator, and run the
/// linear-Gaussian update. Nuisance symbols carry the unit-energy Gaussian
/// prior; the reported symbol's own prior message is removed so r~_k is a
/// pure likelihood message, which is then evaluated on the constellation
/// and normalized.
PosteriorTable gmp_posterior(const ParticleEnsemble& ens, const PulseShape& p,
                             const Constellation& c,
                             const GmpOptions& opts = {});

/// Eq.-(18)-style factorized ABC estimate for one block, bits/symbol:
/// mean over k of log2 r_k(x_k|y) / p(x_k), edges excluded.
double air_abc(const PosteriorTable& post, const SymbolSequence& x,
               const Eigen::ArrayXd& input_law, int edge_exclude = 0);

}  // namespace fiberair
