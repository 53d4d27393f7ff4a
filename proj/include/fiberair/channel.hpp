#pragma once

#include <Eigen/Core>
#include <cmath>
#include <utility>
#include <vector>

#include "fiberair/constellation.hpp"
#include "fiberair/rng.hpp"
#include "fiberair/signal.hpp"

namespace fiberair {

inline constexpr double kSpeedOfLight = 299792458.0;   // m/s
inline constexpr double kPlanck = 6.62607015e-34;      // J s

enum class Direction { Forward, Inverse };

/// One fiber span. All fields SI: D in s/m^2, gamma in 1/(W m), alpha in
/// Np/m (power attenuation). extra_loss_db models a lumped attenuator in
/// front of the amplifier; zero for the standard link.
struct SpanConfig {
  double length_m = 0.0;
  double dispersion_s_m2 = 0.0;
  double gamma_w_m = 0.0;
  double alpha_np_m = 0.0;
  double segment_length_m = 0.0;
  double wavelength_m = 1550e-9;
  double extra_loss_db = 0.0;

  int segment_count() const;
  double beta2_s2_m() const {
    return -dispersion_s_m2 * wavelength_m * wavelength_m /
           (2.0 * 3.14159265358979323846 * kSpeedOfLight);
  }
  double fiber_loss_db() const {
    return 10.0 * alpha_np_m * length_m / std::log(10.0);
  }
};

struct LinkConfig {
  SpanConfig span;
  int num_spans = 1;
  double edfa_noise_figure_db = 5.5;
  double fbg_insertion_loss_db = 3.0;
  // Two-sided brick-wall width. An equivalent low-pass bandwidth of Rs
  // (cutoff +-Rs) corresponds to 2*Rs here.
  double bandpass_bandwidth_hz = 0.0;
  bool dispersion_managed = true;
  bool inline_filters = true;
  bool receiver_filter = true;
  bool noiseless = false;  // NF -> -inf switch: amplifiers stay, ASE off

  /// Gain restoring the span launch power: fiber loss + extra loss
  /// + FBG insertion loss when dispersion managed.
  double span_gain_db() const {
    return span.fiber_loss_db() + span.extra_loss_db +
           (dispersion_managed ? fbg_insertion_loss_db : 0.0);
  }
};

/// Transmitter-side bundle shared by the channel and both receivers.
struct TxConfig {
  Constellation constellation;
  PulseShape pulse;
  double symbol_rate_hz = 0.0;
  double launch_power_w = 0.0;
};

/// Complex noise actually injected, one block per amplifier.
struct NoiseRecord {
  std::vector<Eigen::ArrayXcd> amplifier_noise;
};

/// SSFM segment length (ep * L_N * L_D^2)^(1/3) with L_N = 1/(gamma P)
/// and L_D = 2 pi c / (Rs^2 |D| lambda^2). The caller caps the result at
/// the span length.
double segment_length(double power_w, double symbol_rate_hz,
                      const SpanConfig& span, double wavelength_m,
                      double epsilon);

/// Per-sample ASE variance of an amplifier with the given gain:
/// (G - 1) h nu (10^(NF/10) / 2) Fs, white across the simulation band.
double edfa_noise_variance(double gain_db, double nf_db,
                           double sample_rate_hz, double wavelength_m);

// Waveform-level kernels. These mutate the sample buffer only; metadata
// is handled by the signal-level wrappers. The same kernels run per
// particle inside SDBP.
void ssfm_span_inplace(Eigen::ArrayXcd& u, const SpanConfig& span,
                       double sample_rate_hz, Direction dir);
void fbg_inplace(Eigen::ArrayXcd& u, const SpanConfig& span,
                 double insertion_loss_db, double sample_rate_hz,
                 Direction dir);
void bandpass_inplace(Eigen::ArrayXcd& u, double bandwidth_hz,
                      double sample_rate_hz);

/// Split-step Fourier propagation over one span. Forward applies, per
/// segment, the frequency-domain operator exp((-alpha/2 + i beta2/2 w^2) dz)
/// followed by the Kerr phase exp(i gamma L_eff |u|^2) with L_eff the
/// loss-weighted effective segment length. Inverse undoes the segments in
/// reverse order and is the exact operator inverse of Forward.
ComplexBasebandSignal ssfm_span(const ComplexBasebandSignal& sig,
                                const SpanConfig& span, Direction dir);

/// Lumped dispersion compensator: exact conjugate of the span's
/// accumulated dispersion plus insertion loss.
ComplexBasebandSignal fbg(const ComplexBasebandSignal& sig,
                          const SpanConfig& span, double insertion_loss_db,
                          Direction dir = Direction::Forward);

/// Flat gain plus circularly symmetric ASE; returns the injected noise.
std::pair<ComplexBasebandSignal, Eigen::ArrayXcd> edfa(
    const ComplexBasebandSignal& sig, double gain_db, double nf_db,
    double wavelength_m, Rng& rng);

/// Ideal brick-wall low-pass of two-sided width bandwidth_hz.
ComplexBasebandSignal bandpass(const ComplexBasebandSignal& sig,
                               double bandwidth_hz);

struct TransmitResult {
  ComplexBasebandSignal received;
  NoiseRecord noise;
};

/// Full forward link: modulate, then per span SSFM -> FBG (if managed)
/// -> EDFA -> in-line filter, then the receiver filter.
TransmitResult transmit(const SymbolSequence& x, const LinkConfig& link,
                        const TxConfig& tx, std::uint64_t seed);

}  // namespace fiberair
