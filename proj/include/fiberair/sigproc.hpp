#pragma once

#include <Eigen/Core>

#include "fiberair/constellation.hpp"
#include "fiberair/posterior.hpp"
#include "fiberair/signal.hpp"

namespace fiberair {

/// Truncated root-raised-cosine pulse, unit energy. The singular time
/// points (t = 0 and t = +-T/(4*rolloff)) use their analytic limits.
/// Preconditions: 0 <= rolloff <= 1, span_symbols even and > 0, sps >= 2.
PulseShape rrc_pulse(double rolloff, int span_symbols, int sps);

/// Upsample, pulse-shape and scale so the mean launch power is power_w
/// in expectation over uniform symbols. The output is zero-padded to an
/// FFT-friendly length; the live region is the first
/// symbol_count * sps + taps - 1 samples and delay_samples records the
/// filter group delay for later alignment.
ComplexBasebandSignal modulate(const SymbolSequence& x, const Constellation& c,
                               const PulseShape& p, double power_w,
                               double symbol_rate_hz);

/// Matched filter + symbol-rate sampling, delay-compensated and rescaled
/// to unit average constellation energy. Returns one complex sample per
/// symbol slot.
Eigen::ArrayXcd matched_filter_and_sample(const ComplexBasebandSignal& sig,
                                          const PulseShape& p);

/// Raw-buffer form used per particle by SDBP: same filter and sampling
/// grid, explicit delay/scale bookkeeping.
Eigen::ArrayXcd matched_filter_and_sample(const Eigen::ArrayXcd& samples,
                                          const PulseShape& p,
                                          int delay_samples, int symbol_count,
                                          double amplitude_scale);

/// Per-slot argmax of r_k(.|y); ties break to the lowest index.
SymbolSequence map_decision_abc(const PosteriorTable& post);

/// Amplitude scale between the unit-energy constellation domain and the
/// waveform domain of a signal modulated at power_w.
inline double constellation_scale(double power_w, int sps) {
  return std::sqrt(power_w * sps);
}

}  // namespace fiberair
