#include "fiberair/dbp.hpp"

#include <cmath>
#include <stdexcept>

#include "fiberair/fft_utils.hpp"
#include "fiberair/sigproc.hpp"

namespace fiberair {

void GaussianAuxChannel::rebuild_cache() {
  evals.clear();
  evals.reserve(means.size());
  for (int m = 0; m < size(); ++m)
    evals.emplace_back(Gaussian2d{to_vec2(means[m]), covariances[m]});
}

Eigen::ArrayXcd dbp_receive(const ComplexBasebandSignal& y,
                            const LinkConfig& link, const TxConfig& tx) {
  if (y.samples_per_symbol != tx.pulse.samples_per_symbol ||
      y.symbol_count <= 0)
    throw std::invalid_argument("dbp_receive: signal does not match tx config");

  ComplexBasebandSignal sig = y;
  // The receiver/in-line filters are band-limiting projections; on their
  // own range the inverse is the identity, so they are skipped here.
  const double inv_gain = std::pow(10.0, -link.span_gain_db() / 20.0);
  for (int s = link.num_spans - 1; s >= 0; --s) {
    sig.samples *= inv_gain;
    if (link.dispersion_managed)
      fbg_inplace(sig.samples, link.span, link.fbg_insertion_loss_db,
                  sig.sample_rate_hz, Direction::Inverse);
    if (link.span.extra_loss_db != 0.0)
      sig.samples *= std::pow(10.0, link.span.extra_loss_db / 20.0);
    ssfm_span_inplace(sig.samples, link.span, sig.sample_rate_hz,
                      Direction::Inverse);
  }
  return matched_filter_and_sample(sig, tx.pulse);
}

GaussianAuxChannel train_gaussian_aux(const Eigen::ArrayXcd& z,
                                      const SymbolSequence& labels,
                                      int alphabet_size, GaussVariant variant,
                                      const TrainOptions& opts) {
  if (z.size() != labels.size())
    throw std::invalid_argument("train_gaussian_aux: sample/label size mismatch");

  GaussianAuxChannel aux;
  aux.variant = variant;
  aux.means.resize(alphabet_size);
  aux.covariances.resize(alphabet_size);

  std::vector<std::vector<std::complex<double>>> buckets(alphabet_size);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const int m = labels[i];
    if (m < 0 || m >= alphabet_size)
      throw std::invalid_argument("train_gaussian_aux: label out of range");
    buckets[m].push_back(z[i]);
  }

  double pooled = 0.0;
  for (int m = 0; m < alphabet_size; ++m) {
    if (static_cast<int>(buckets[m].size()) < opts.min_count_per_point)
      throw std::runtime_error(
          "train_gaussian_aux: constellation point " + std::to_string(m) +
          " observed " + std::to_string(buckets[m].size()) + " < " +
          std::to_string(opts.min_count_per_point) + " times");
    const Eigen::Map<const Eigen::ArrayXcd> pts(buckets[m].data(),
                                                buckets[m].size());
    Gaussian2d g = fit_gaussian2d(pts);
    aux.means[m] = {g.mean[0], g.mean[1]};
    if (variant == GaussVariant::IidGaussian) {
      const double iso = 0.5 * (g.cov(0, 0) + g.cov(1, 1));
      g.cov = iso * Eigen::Matrix2d::Identity();
      pooled += iso;
    }
    g.cov += opts.cov_regularization * Eigen::Matrix2d::Identity();
    aux.covariances[m] = g.cov;
  }
  if (variant == GaussVariant::IidGaussian && opts.pooled_variance) {
    pooled = pooled / alphabet_size + opts.cov_regularization;
    for (auto& cov : aux.covariances)
      cov = pooled * Eigen::Matrix2d::Identity();
  }
  aux.rebuild_cache();
  return aux;
}

double q_loglik(std::complex<double> z, int point,
                const GaussianAuxChannel& aux) {
  return aux.evals[point].logpdf(z);
}

double air_dbp(const Eigen::ArrayXcd& z, const SymbolSequence& x,
               const GaussianAuxChannel& aux,
               const Eigen::ArrayXd& input_law, int edge_exclude) {
  if (z.size() != x.size())
    throw std::invalid_argument("air_dbp: sample/symbol size mismatch");
  const int k_count = static_cast<int>(z.size());
  const int first = edge_exclude;
  const int last = k_count - edge_exclude;
  if (first >= last) throw std::invalid_argument("air_dbp: nothing left after edges");

  const Eigen::ArrayXd log_prior = input_law.log();
  Eigen::ArrayXd logs(aux.size());
  double sum_nats = 0.0;
  for (int k = first; k < last; ++k) {
    for (int m = 0; m < aux.size(); ++m)
      logs[m] = log_prior[m] + q_loglik(z[k], m, aux);
    sum_nats += q_loglik(z[k], x[k], aux) - log_sum_exp(logs);
  }
  return sum_nats / ((last - first) * std::log(2.0));
}

}  // namespace fiberair
