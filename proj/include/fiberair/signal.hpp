#pragma once

#include <Eigen/Core>

namespace fiberair {

/// Real, symmetric, unit-energy FIR pulse sampled at sps samples per
/// symbol. Tap count is span_symbols * sps + 1 (odd).
struct PulseShape {
  Eigen::ArrayXd taps;
  double rolloff = 0.0;
  int span_symbols = 0;
  int samples_per_symbol = 0;

  int length() const { return static_cast<int>(taps.size()); }
  int group_delay() const { return (length() - 1) / 2; }
};

/// Uniformly sampled complex envelope in sqrt(W). Carries the metadata
/// the receiver chain needs: symbol grid, accumulated filter delay, and
/// the nominal launch power used to rescale matched-filter outputs back
/// to the unit-energy constellation domain.
struct ComplexBasebandSignal {
  Eigen::ArrayXcd samples;
  double sample_rate_hz = 0.0;
  double symbol_rate_hz = 0.0;
  int samples_per_symbol = 1;
  int symbol_count = 0;
  int delay_samples = 0;
  double nominal_power_w = 0.0;

  int length() const { return static_cast<int>(samples.size()); }
};

}  // namespace fiberair
