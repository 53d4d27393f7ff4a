#include "fiberair/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "fiberair/fft_utils.hpp"
#include "fiberair/sigproc.hpp"

namespace fiberair {

namespace {

constexpr double kPi = 3.14159265358979323846;

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace

int SpanConfig::segment_count() const {
  if (segment_length_m <= 0.0 || length_m <= 0.0)
    throw std::invalid_argument("span: lengths must be positive");
  return static_cast<int>(std::ceil(length_m / segment_length_m));
}

double segment_length(double power_w, double symbol_rate_hz,
                      const SpanConfig& span, double wavelength_m,
                      double epsilon) {
  if (power_w <= 0.0)
    throw std::invalid_argument("segment_length: power must be > 0");
  if (symbol_rate_hz <= 0.0 || wavelength_m <= 0.0 || epsilon <= 0.0)
    throw std::invalid_argument("segment_length: inputs must be positive");
  if (span.gamma_w_m <= 0.0 || span.dispersion_s_m2 == 0.0)
    throw std::invalid_argument("segment_length: need gamma > 0 and D != 0");
  const double l_nl = 1.0 / (span.gamma_w_m * power_w);
  const double l_d = 2.0 * kPi * kSpeedOfLight /
                     (symbol_rate_hz * symbol_rate_hz *
                      std::abs(span.dispersion_s_m2) * wavelength_m *
                      wavelength_m);
  return std::cbrt(epsilon * l_nl * l_d * l_d);
}

double edfa_noise_variance(double gain_db, double nf_db,
                           double sample_rate_hz, double wavelength_m) {
  const double gain = db_to_linear(gain_db);
  const double n_sp = db_to_linear(nf_db) / 2.0;
  const double photon_energy = kPlanck * kSpeedOfLight / wavelength_m;
  return (gain - 1.0) * photon_energy * n_sp * sample_rate_hz;
}

void ssfm_span_inplace(Eigen::ArrayXcd& u, const SpanConfig& span,
                       double sample_rate_hz, Direction dir) {
  const int n_seg = span.segment_count();
  const double dz = span.length_m / n_seg;
  const double beta2 = span.beta2_s2_m();
  const double alpha = span.alpha_np_m;
  // Effective nonlinear length referred to the segment-end field, so the
  // Kerr phase applied after the lossy linear step reproduces the exact
  // dispersionless SPM solution.
  const double l_eff =
      alpha > 0.0 ? (std::exp(alpha * dz) - 1.0) / alpha : dz;

  const int n = static_cast<int>(u.size());
  const Eigen::ArrayXd omega = fft_omega_grid(n, sample_rate_hz);
  const double att = std::exp(-0.5 * alpha * dz);
  Eigen::ArrayXcd lin_fwd(n);
  for (int i = 0; i < n; ++i)
    lin_fwd[i] = std::polar(att, 0.5 * beta2 * dz * omega[i] * omega[i]);

  auto kerr = [&](double sign) {
    const double c = sign * span.gamma_w_m * l_eff;
    for (int i = 0; i < n; ++i) u[i] *= std::polar(1.0, c * std::norm(u[i]));
  };

  if (dir == Direction::Forward) {
    for (int s = 0; s < n_seg; ++s) {
      fft_inplace(u);
      u *= lin_fwd;
      ifft_inplace(u);
      kerr(+1.0);
    }
  } else {
    const Eigen::ArrayXcd lin_inv = lin_fwd.inverse();
    for (int s = 0; s < n_seg; ++s) {
      kerr(-1.0);
      fft_inplace(u);
      u *= lin_inv;
      ifft_inplace(u);
    }
  }
}

void fbg_inplace(Eigen::ArrayXcd& u, const SpanConfig& span,
                 double insertion_loss_db, double sample_rate_hz,
                 Direction dir) {
  const double sign = dir == Direction::Forward ? -1.0 : 1.0;
  const double beta2_l = span.beta2_s2_m() * span.length_m;
  const double amp = std::pow(10.0, sign * insertion_loss_db / 20.0);
  const int n = static_cast<int>(u.size());
  const Eigen::ArrayXd omega = fft_omega_grid(n, sample_rate_hz);
  fft_inplace(u);
  for (int i = 0; i < n; ++i)
    u[i] *= std::polar(amp, sign * 0.5 * beta2_l * omega[i] * omega[i]);
  ifft_inplace(u);
}

void bandpass_inplace(Eigen::ArrayXcd& u, double bandwidth_hz,
                      double sample_rate_hz) {
  if (bandwidth_hz <= 0.0)
    throw std::invalid_argument("bandpass: bandwidth must be > 0");
  const int n = static_cast<int>(u.size());
  const double bin_hz = sample_rate_hz / n;
  fft_inplace(u);
  for (int i = 0; i < n; ++i) {
    const int k = (i <= (n - 1) / 2) ? i : i - n;
    if (std::abs(k * bin_hz) > 0.5 * bandwidth_hz) u[i] = 0.0;
  }
  ifft_inplace(u);
}

ComplexBasebandSignal ssfm_span(const ComplexBasebandSignal& sig,
                                const SpanConfig& span, Direction dir) {
  ComplexBasebandSignal out = sig;
  ssfm_span_inplace(out.samples, span, sig.sample_rate_hz, dir);
  return out;
}

ComplexBasebandSignal fbg(const ComplexBasebandSignal& sig,
                          const SpanConfig& span, double insertion_loss_db,
                          Direction dir) {
  ComplexBasebandSignal out = sig;
  fbg_inplace(out.samples, span, insertion_loss_db, sig.sample_rate_hz, dir);
  return out;
}

std::pair<ComplexBasebandSignal, Eigen::ArrayXcd> edfa(
    const ComplexBasebandSignal& sig, double gain_db, double nf_db,
    double wavelength_m, Rng& rng) {
  if (gain_db < 0.0) throw std::invalid_argument("edfa: gain must be >= 1");
  ComplexBasebandSignal out = sig;
  const double amp = std::pow(10.0, gain_db / 20.0);
  const double sigma2 =
      edfa_noise_variance(gain_db, nf_db, sig.sample_rate_hz, wavelength_m);
  Eigen::ArrayXcd noise(sig.length());
  for (int i = 0; i < sig.length(); ++i)
    noise[i] = rng.complex_normal(sigma2);
  out.samples = amp * out.samples + noise;
  return {std::move(out), std::move(noise)};
}

ComplexBasebandSignal bandpass(const ComplexBasebandSignal& sig,
                               double bandwidth_hz) {
  ComplexBasebandSignal out = sig;
  bandpass_inplace(out.samples, bandwidth_hz, sig.sample_rate_hz);
  return out;
}

TransmitResult transmit(const SymbolSequence& x, const LinkConfig& link,
                        const TxConfig& tx, std::uint64_t seed) {
  if (link.num_spans < 0) throw std::invalid_argument("transmit: num_spans < 0");
  TransmitResult result;
  result.received = modulate(x, tx.constellation, tx.pulse, tx.launch_power_w,
                             tx.symbol_rate_hz);
  ComplexBasebandSignal& sig = result.received;

  for (int s = 0; s < link.num_spans; ++s) {
    ssfm_span_inplace(sig.samples, link.span, sig.sample_rate_hz,
                      Direction::Forward);
    if (link.span.extra_loss_db != 0.0)
      sig.samples *= std::pow(10.0, -link.span.extra_loss_db / 20.0);
    if (link.dispersion_managed)
      fbg_inplace(sig.samples, link.span, link.fbg_insertion_loss_db,
                  sig.sample_rate_hz, Direction::Forward);
    const double gain_db = link.span_gain_db();
    const double amp = std::pow(10.0, gain_db / 20.0);
    sig.samples *= amp;
    if (!link.noiseless) {
      Rng rng(derive_seed({seed, 0xa5eULL, static_cast<std::uint64_t>(s)}));
      const double sigma2 = edfa_noise_variance(
          gain_db, link.edfa_noise_figure_db, sig.sample_rate_hz,
          link.span.wavelength_m);
      Eigen::ArrayXcd noise(sig.length());
      for (int i = 0; i < sig.length(); ++i)
        noise[i] = rng.complex_normal(sigma2);
      sig.samples += noise;
      result.noise.amplifier_noise.push_back(std::move(noise));
    }
    if (link.inline_filters)
      bandpass_inplace(sig.samples, link.bandpass_bandwidth_hz,
                       sig.sample_rate_hz);
  }
  if (link.receiver_filter)
    bandpass_inplace(sig.samples, link.bandpass_bandwidth_hz,
                     sig.sample_rate_hz);
  return result;
}

}  // namespace fiberair
