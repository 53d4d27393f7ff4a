#include "fiberair/sdbp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "fiberair/gaussian.hpp"
#include "fiberair/parallel.hpp"
#include "fiberair/sigproc.hpp"

namespace fiberair {

namespace {

// Evaluate a fitted symbol Gaussian on the constellation and write the
// normalized row.
void fill_posterior_row(PosteriorTable& table, int k, const Gaussian2d& g,
                        const Constellation& c) {
  const int m_count = c.size();
  const Gaussian2dEval eval(g);
  Eigen::ArrayXd logp(m_count);
  for (int m = 0; m < m_count; ++m) logp[m] = eval.logpdf(c.points[m]);
  const double lse = log_sum_exp(logp);
  for (int m = 0; m < m_count; ++m)
    table.probs(k, m) = std::max(std::exp(logp[m] - lse), kProbabilityFloor);
}

}  // namespace

ParticleEnsemble sdbp_backward(const ComplexBasebandSignal& y,
                               const LinkConfig& link, const TxConfig& tx,
                               int num_particles, std::uint64_t seed,
                               int num_threads) {
  if (num_particles < 2)
    throw std::invalid_argument("sdbp_backward: need at least 2 particles");
  if (y.samples_per_symbol != tx.pulse.samples_per_symbol)
    throw std::invalid_argument("sdbp_backward: signal does not match tx config");

  ParticleEnsemble ens;
  ens.particles.resize(y.length(), num_particles);
  ens.sample_rate_hz = y.sample_rate_hz;
  ens.symbol_rate_hz = y.symbol_rate_hz;
  ens.samples_per_symbol = y.samples_per_symbol;
  ens.symbol_count = y.symbol_count;
  ens.delay_samples = y.delay_samples;
  ens.nominal_power_w = y.nominal_power_w;

  const double gain_db = link.span_gain_db();
  const double inv_amp = std::pow(10.0, -gain_db / 20.0);
  const double sigma2 = link.noiseless
                            ? 0.0
                            : edfa_noise_variance(gain_db,
                                                  link.edfa_noise_figure_db,
                                                  y.sample_rate_hz,
                                                  link.span.wavelength_m);
  const double extra_amp = std::pow(10.0, link.span.extra_loss_db / 20.0);

  parallel_for(num_particles, num_threads, [&](int ip) {
    Eigen::ArrayXcd u = y.samples;
    // Receiver/in-line filters are projections; skipped in the inverse.
    for (int s = link.num_spans - 1; s >= 0; --s) {
      if (sigma2 > 0.0) {
        Rng rng(derive_seed({seed, 0x5dbULL, static_cast<std::uint64_t>(s),
                             static_cast<std::uint64_t>(ip)}));
        for (int i = 0; i < y.length(); ++i)
          u[i] = (u[i] - rng.complex_normal(sigma2)) * inv_amp;
      } else {
        u *= inv_amp;
      }
      if (link.dispersion_managed)
        fbg_inplace(u, link.span, link.fbg_insertion_loss_db,
                    y.sample_rate_hz, Direction::Inverse);
      if (link.span.extra_loss_db != 0.0) u *= extra_amp;
      ssfm_span_inplace(u, link.span, y.sample_rate_hz, Direction::Inverse);
    }
    ens.particles.col(ip) = u.matrix();
  });
  return ens;
}

PosteriorTable sbs_posterior(const ParticleEnsemble& ens, const PulseShape& p,
                             const Constellation& c) {
  const int k_count = ens.symbol_count;
  const int n_p = ens.num_particles();
  const double scale =
      constellation_scale(ens.nominal_power_w, ens.samples_per_symbol);

  Eigen::MatrixXcd mf(k_count, n_p);
  for (int ip = 0; ip < n_p; ++ip)
    mf.col(ip) = matched_filter_and_sample(ens.particles.col(ip).array(), p,
                                           ens.delay_samples, k_count, scale)
                     .matrix();

  std::vector<Gaussian2d> fits(k_count);
  Eigen::ArrayXcd slot(n_p);
  for (int k = 0; k < k_count; ++k) {
    slot = mf.row(k).array();
    fits[k] = fit_gaussian2d(slot);
  }

  // Pool the per-slot covariances toward the block mean with a
  // Ledoit-Wolf intensity: the Wishart noise of an N_p-sample 2x2 fit is
  // comparable to the true slot-to-slot variation, and the log score is
  // dominated by slots whose covariance comes out too small. When all
  // slots share one covariance the pooling is exact and changes nothing.
  Eigen::Matrix2d pooled = Eigen::Matrix2d::Zero();
  for (const auto& g : fits) pooled += g.cov;
  pooled /= k_count;
  double noise2 = 0.0, disp2 = 0.0;
  for (const auto& g : fits) {
    noise2 += (g.cov.trace() * g.cov.trace() + g.cov.squaredNorm()) /
              std::max(1, n_p - 1);
    disp2 += (g.cov - pooled).squaredNorm();
  }
  const double weight =
      disp2 > 0.0 ? std::min(1.0, noise2 / disp2) : 1.0;

  PosteriorTable table;
  table.probs.resize(k_count, c.size());
  for (int k = 0; k < k_count; ++k) {
    Gaussian2d g = fits[k];
    g.cov = (1.0 - weight) * g.cov + weight * pooled;
    fill_posterior_row(table, k, g, c);
  }
  return table;
}

PosteriorTable gmp_posterior(const ParticleEnsemble& ens, const PulseShape& p,
                             const Constellation& c, const GmpOptions& opts) {
  const int k_count = ens.symbol_count;
  const int n_p = ens.num_particles();
  const int sps = ens.samples_per_symbol;
  const int n_samples = ens.length();
  const int span = p.span_symbols;
  const int window = opts.window_symbols > 0 ? opts.window_symbols : 4 * span;
  if (window < span)
    throw std::invalid_argument("gmp_posterior: window smaller than pulse span");
  const int interior = window - span;
  if (interior <= 0)
    throw std::invalid_argument("gmp_posterior: window leaves no interior symbols");
  const int n_win = window * sps;
  if (n_win > n_samples)
    throw std::invalid_argument("gmp_posterior: window longer than signal");

  const int half_pulse = p.group_delay();
  const double scale = constellation_scale(ens.nominal_power_w, sps);
  const int num_windows = (k_count + interior - 1) / interior;
  const int dim = 2 * n_win;

  PosteriorTable table;
  table.probs.resize(k_count, c.size());

  struct WindowGeometry {
    int k0, k1, s0, j_lo, j_hi;
  };
  std::vector<WindowGeometry> windows(num_windows);
  for (int t = 0; t < num_windows; ++t) {
    WindowGeometry& w = windows[t];
    w.k0 = t * interior;
    w.k1 = std::min(w.k0 + interior, k_count);
    // Sample range: the assigned symbols' pulses must lie fully inside.
    const int lo_needed = w.k0 * sps + ens.delay_samples - half_pulse;
    const int used = (w.k1 - 1 - w.k0) * sps + p.length();
    w.s0 = lo_needed - (n_win - used) / 2;
    w.s0 = std::max(0, std::min(w.s0, n_samples - n_win));
    // Symbols whose pulse support intersects the window.
    const auto ceil_div = [](int a, int b) {
      return a >= 0 ? (a + b - 1) / b : -(-a / b);
    };
    const auto floor_div = [](int a, int b) {
      return a >= 0 ? a / b : -((-a + b - 1) / b);
    };
    w.j_lo = std::max(0, ceil_div(w.s0 - ens.delay_samples - half_pulse, sps));
    w.j_hi = std::min(k_count - 1, floor_div(w.s0 + n_win - 1 -
                                                 ens.delay_samples + half_pulse,
                                             sps));
  }

  auto window_data = [&](int t, Eigen::MatrixXd& data, Eigen::VectorXd& mu) {
    for (int ip = 0; ip < n_p; ++ip) {
      for (int r = 0; r < n_win; ++r) {
        const std::complex<double> v =
            ens.particles(windows[t].s0 + r, ip) / scale;
        data(ip, r) = v.real();
        data(ip, n_win + r) = v.imag();
      }
    }
    mu = data.colwise().mean();
    data.rowwise() -= mu.transpose();
  };

  parallel_for(num_windows, opts.num_threads, [&](int t) {
    const int k0 = windows[t].k0;
    const int k1 = windows[t].k1;
    const int s0 = windows[t].s0;
    const int j_lo = windows[t].j_lo;
    const int j_hi = windows[t].j_hi;
    const int n_x = j_hi - j_lo + 1;

    Eigen::MatrixXd data(n_p, dim);
    Eigen::VectorXd mu(dim);
    window_data(t, data, mu);

    // Locally stationary (block-Toeplitz over symbol blocks) covariance:
    // each symbol-lag block is averaged over all positions in the window,
    // which cuts the Wishart noise of the n_p-sample fit by roughly the
    // window length while keeping the window-to-window adaptivity. The
    // residual process is cyclostationary with period sps, so blocks are
    // one symbol (sps samples) of stacked (Re, Im) coordinates.
    const int blk = 2 * sps;
    std::vector<Eigen::MatrixXd> lag_cov(window,
                                         Eigen::MatrixXd::Zero(blk, blk));
    Eigen::MatrixXd blocks(n_p * window, blk);
    for (int ip = 0; ip < n_p; ++ip)
      for (int kk = 0; kk < window; ++kk)
        for (int ss = 0; ss < sps; ++ss) {
          blocks(ip * window + kk, ss) = data(ip, kk * sps + ss);
          blocks(ip * window + kk, sps + ss) =
              data(ip, n_win + kk * sps + ss);
        }
    for (int lag = 0; lag < window; ++lag) {
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(blk, blk);
      for (int ip = 0; ip < n_p; ++ip) {
        const auto base = blocks.middleRows(ip * window, window);
        acc.noalias() += base.bottomRows(window - lag).transpose() *
                         base.topRows(window - lag);
      }
      // 1/(n_p - 1) in particles (matching the per-slot fit), biased in
      // the lag (divide by the full window) so the assembled matrix stays
      // positive semidefinite.
      lag_cov[lag] = acc / (static_cast<double>(n_p - 1) * window);
    }

    Eigen::MatrixXd cov(dim, dim);
    for (int i = 0; i < window; ++i)
      for (int j = 0; j < window; ++j) {
        const Eigen::MatrixXd& block_ij =
            i >= j ? lag_cov[i - j] : lag_cov[j - i];
        for (int a = 0; a < sps; ++a)
          for (int b = 0; b < sps; ++b) {
            // For i < j the block is the transpose of the stored lag.
            const double rr = i >= j ? block_ij(a, b) : block_ij(b, a);
            const double ri = i >= j ? block_ij(a, sps + b)
                                     : block_ij(sps + b, a);
            const double ir = i >= j ? block_ij(sps + a, b)
                                     : block_ij(b, sps + a);
            const double ii = i >= j ? block_ij(sps + a, sps + b)
                                     : block_ij(sps + b, sps + a);
            cov(i * sps + a, j * sps + b) = rr;
            cov(i * sps + a, n_win + j * sps + b) = ri;
            cov(n_win + i * sps + a, j * sps + b) = ir;
            cov(n_win + i * sps + a, n_win + j * sps + b) = ii;
          }
      }

    // Conditioning floor; 1e-12 covers the exactly-degenerate noiseless
    // ensemble (constellation domain, unit energy).
    const double mean_var = cov.trace() / dim;
    double ridge = opts.ridge_rel * mean_var + 1e-12;
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (int attempt = 0;; ++attempt) {
      Eigen::MatrixXd regularized = cov;
      regularized.diagonal().array() += ridge;
      llt.compute(regularized);
      if (llt.info() == Eigen::Success) break;
      if (attempt >= 8)
        throw std::runtime_error("gmp_posterior: window covariance not PD");
      ridge = std::max(ridge * 100.0, 1e-12);
    }

    // B = blkdiag(H, H) with H the local Toeplitz pulse operator.
    Eigen::MatrixXd b_op = Eigen::MatrixXd::Zero(dim, 2 * n_x);
    for (int j = j_lo; j <= j_hi; ++j) {
      const int start = j * sps + ens.delay_samples - half_pulse;
      for (int tap = 0; tap < p.length(); ++tap) {
        const int r = start + tap - s0;
        if (r < 0 || r >= n_win) continue;
        b_op(r, j - j_lo) = p.taps[tap];
        b_op(n_win + r, n_x + (j - j_lo)) = p.taps[tap];
      }
    }

    const Eigen::MatrixXd white_b = llt.matrixL().solve(b_op);
    const Eigen::VectorXd white_mu = llt.matrixL().solve(mu);

    // Posterior with the unit-energy Gaussian prior (precision 2 per real
    // component) on every overlapping symbol.
    Eigen::MatrixXd j_post = white_b.transpose() * white_b;
    j_post.diagonal().array() += 2.0;
    const Eigen::VectorXd rhs = white_b.transpose() * white_mu;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(j_post);
    const Eigen::MatrixXd s_post =
        ldlt.solve(Eigen::MatrixXd::Identity(2 * n_x, 2 * n_x));
    const Eigen::VectorXd m_post = ldlt.solve(rhs);

    for (int k = k0; k < k1; ++k) {
      // Re/Im coordinate indices of symbol k.
      const int ir = k - j_lo;
      const int ii = n_x + (k - j_lo);
      Eigen::Matrix2d s_kk;
      s_kk << s_post(ir, ir), s_post(ir, ii), s_post(ii, ir), s_post(ii, ii);
      const Eigen::Vector2d m_k(m_post[ir], m_post[ii]);

      // Remove the symbol's own prior message so r~_k is likelihood-only
      // (rank-2 Woodbury downdate of the joint posterior).
      Eigen::Matrix2d t = Eigen::Matrix2d::Identity() - 2.0 * s_kk;
      t.diagonal().array() += 1e-12;
      const Eigen::Matrix2d t_inv = t.inverse();
      Gaussian2d g;
      g.mean = t_inv * m_k;
      g.cov = s_kk * t_inv;
      g.cov = 0.5 * (g.cov + g.cov.transpose()).eval();  // symmetrize roundoff
      fill_posterior_row(table, k, g, c);
    }
  });
  return table;
}

double air_abc(const PosteriorTable& post, const SymbolSequence& x,
               const Eigen::ArrayXd& input_law, int edge_exclude) {
  if (post.symbol_count() != x.size())
    throw std::invalid_argument("air_abc: posterior/symbol size mismatch");
  const int k_count = post.symbol_count();
  const int first = edge_exclude;
  const int last = k_count - edge_exclude;
  if (first >= last) throw std::invalid_argument("air_abc: nothing left after edges");

  double sum = 0.0;
  for (int k = first; k < last; ++k) {
    const double r = std::max(post.probs(k, x[k]), kProbabilityFloor);
    sum += std::log2(r / input_law[x[k]]);
  }
  return sum / (last - first);
}

}  // namespace fiberair
