#pragma once

#include <Eigen/Core>

namespace fiberair {

/// In-place FFT / inverse FFT on a complex array. The inverse includes
/// the 1/N factor, so ifft(fft(u)) == u up to roundoff. Plans are cached
/// per thread, so concurrent calls from a worker pool are safe.
void fft_inplace(Eigen::ArrayXcd& u);
void ifft_inplace(Eigen::ArrayXcd& u);

Eigen::ArrayXcd fft(const Eigen::ArrayXcd& u);
Eigen::ArrayXcd ifft(const Eigen::ArrayXcd& u);

/// Smallest 5-smooth length (2^a 3^b 5^c, a >= 2) that is >= n and a
/// multiple of `multiple`. Keeps kissfft on its fast radices.
int next_fast_fft_length(int n, int multiple = 1);

/// Angular frequency grid for an FFT of length n at the given sample
/// rate, in FFT bin order (DC first, negative frequencies in the upper
/// half). Units: rad/s.
Eigen::ArrayXd fft_omega_grid(int n, double sample_rate_hz);

}  // namespace fiberair
