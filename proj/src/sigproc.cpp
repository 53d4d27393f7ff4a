#include "fiberair/sigproc.hpp"

#include <cmath>
#include <stdexcept>

#include "fiberair/fft_utils.hpp"
#include "fiberair/rng.hpp"

namespace fiberair {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_perfect_square(int n, int& root) {
  root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  return root * root == n;
}

}  // namespace

Constellation build_square_qam(int order) {
  int side = 0;
  if (order < 4 || !is_perfect_square(order, side))
    throw std::invalid_argument("square QAM order must be a perfect square >= 4");

  const int bits_per_axis = static_cast<int>(std::lround(std::log2(side)));
  Constellation c;
  c.points.resize(order);
  // Gray labels along each axis; index = (gray(I) << bits) | gray(Q).
  for (int li = 0; li < side; ++li) {
    for (int lq = 0; lq < side; ++lq) {
      const int gi = li ^ (li >> 1);
      const int gq = lq ^ (lq >> 1);
      const int index = (gi << bits_per_axis) | gq;
      c.points[index] = {static_cast<double>(2 * li - (side - 1)),
                         static_cast<double>(2 * lq - (side - 1))};
    }
  }
  const double energy = c.points.abs2().mean();
  c.points /= std::sqrt(energy);
  return c;
}

Eigen::ArrayXd uniform_input_law(int size) {
  return Eigen::ArrayXd::Constant(size, 1.0 / size);
}

SymbolSequence random_symbols(int count, int alphabet_size, Rng& rng) {
  SymbolSequence x(count);
  for (int k = 0; k < count; ++k)
    x[k] = static_cast<int>(rng.uniform_int(alphabet_size));
  return x;
}

PulseShape rrc_pulse(double rolloff, int span_symbols, int sps) {
  if (rolloff < 0.0 || rolloff > 1.0)
    throw std::invalid_argument("rrc rolloff must be in [0, 1]");
  if (span_symbols <= 0 || span_symbols % 2 != 0)
    throw std::invalid_argument("rrc span_symbols must be even and positive");
  if (sps < 2) throw std::invalid_argument("rrc sps must be >= 2");

  const int n_taps = span_symbols * sps + 1;
  PulseShape p;
  p.taps.resize(n_taps);
  p.rolloff = rolloff;
  p.span_symbols = span_symbols;
  p.samples_per_symbol = sps;

  const double b = rolloff;
  for (int i = 0; i < n_taps; ++i) {
    const double t = (i - (n_taps - 1) / 2) / static_cast<double>(sps);  // in T
    double v;
    if (std::abs(t) < 1e-12) {
      v = 1.0 - b + 4.0 * b / kPi;
    } else if (b > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-9) {
      v = (b / std::sqrt(2.0)) *
          ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * b)) +
           (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * b)));
    } else {
      const double num = std::sin(kPi * t * (1.0 - b)) +
                         4.0 * b * t * std::cos(kPi * t * (1.0 + b));
      const double den = kPi * t * (1.0 - 16.0 * b * b * t * t);
      v = num / den;
    }
    p.taps[i] = v;
  }
  p.taps /= std::sqrt(p.taps.square().sum());
  return p;
}

ComplexBasebandSignal modulate(const SymbolSequence& x, const Constellation& c,
                               const PulseShape& p, double power_w,
                               double symbol_rate_hz) {
  if (x.size() == 0) throw std::invalid_argument("modulate: empty sequence");
  if (power_w <= 0.0) throw std::invalid_argument("modulate: power must be > 0");
  const int sps = p.samples_per_symbol;
  const int k_count = static_cast<int>(x.size());
  const int live = k_count * sps + p.length() - 1;
  const int n = next_fast_fft_length(live, sps);

  const double scale = constellation_scale(power_w, sps);
  Eigen::ArrayXcd impulses = Eigen::ArrayXcd::Zero(n);
  for (int k = 0; k < k_count; ++k) {
    const int idx = x[k];
    if (idx < 0 || idx >= c.size())
      throw std::invalid_argument("modulate: symbol index out of range");
    impulses[k * sps] = scale * c.points[idx];
  }

  Eigen::ArrayXcd taps = Eigen::ArrayXcd::Zero(n);
  taps.head(p.length()) = p.taps.cast<std::complex<double>>();
  fft_inplace(impulses);
  fft_inplace(taps);
  impulses *= taps;
  ifft_inplace(impulses);

  ComplexBasebandSignal sig;
  sig.samples = std::move(impulses);
  sig.sample_rate_hz = symbol_rate_hz * sps;
  sig.symbol_rate_hz = symbol_rate_hz;
  sig.samples_per_symbol = sps;
  sig.symbol_count = k_count;
  sig.delay_samples = p.group_delay();
  sig.nominal_power_w = power_w;
  return sig;
}

Eigen::ArrayXcd matched_filter_and_sample(const Eigen::ArrayXcd& samples,
                                          const PulseShape& p,
                                          int delay_samples, int symbol_count,
                                          double amplitude_scale) {
  const int n = static_cast<int>(samples.size());
  const int sps = p.samples_per_symbol;
  if (symbol_count <= 0 || (symbol_count - 1) * sps + delay_samples +
                               p.group_delay() >= n)
    throw std::invalid_argument("matched filter: signal/symbol length mismatch");

  Eigen::ArrayXcd taps = Eigen::ArrayXcd::Zero(n);
  taps.head(p.length()) = p.taps.cast<std::complex<double>>();
  fft_inplace(taps);
  Eigen::ArrayXcd out = fft(samples);
  out *= taps;
  ifft_inplace(out);

  const int total_delay = delay_samples + p.group_delay();
  Eigen::ArrayXcd z(symbol_count);
  for (int k = 0; k < symbol_count; ++k)
    z[k] = out[total_delay + k * sps] / amplitude_scale;
  return z;
}

Eigen::ArrayXcd matched_filter_and_sample(const ComplexBasebandSignal& sig,
                                          const PulseShape& p) {
  if (sig.samples_per_symbol != p.samples_per_symbol)
    throw std::invalid_argument("matched filter: sps mismatch with pulse");
  const double scale = constellation_scale(sig.nominal_power_w,
                                           sig.samples_per_symbol);
  return matched_filter_and_sample(sig.samples, p, sig.delay_samples,
                                   sig.symbol_count, scale);
}

SymbolSequence map_decision_abc(const PosteriorTable& post) {
  const int k_count = post.symbol_count();
  const int m = post.alphabet_size();
  SymbolSequence out(k_count);
  for (int k = 0; k < k_count; ++k) {
    int best = 0;
    double best_p = post.probs(k, 0);
    for (int j = 1; j < m; ++j) {
      if (post.probs(k, j) > best_p) {  // strict: ties keep the lowest index
        best_p = post.probs(k, j);
        best = j;
      }
    }
    out[k] = best;
  }
  return out;
}

}  // namespace fiberair
