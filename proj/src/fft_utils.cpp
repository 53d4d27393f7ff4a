#include "fiberair/fft_utils.hpp"

#include <unsupported/Eigen/FFT>

#include <stdexcept>

namespace fiberair {

namespace {

Eigen::FFT<double>& thread_plan() {
  thread_local Eigen::FFT<double> plan;
  return plan;
}

}  // namespace

void fft_inplace(Eigen::ArrayXcd& u) {
  Eigen::VectorXcd out(u.size());
  thread_plan().fwd(out, u.matrix().eval());
  u = out.array();
}

void ifft_inplace(Eigen::ArrayXcd& u) {
  Eigen::VectorXcd out(u.size());
  thread_plan().inv(out, u.matrix().eval());
  u = out.array();
}

Eigen::ArrayXcd fft(const Eigen::ArrayXcd& u) {
  Eigen::ArrayXcd v = u;
  fft_inplace(v);
  return v;
}

Eigen::ArrayXcd ifft(const Eigen::ArrayXcd& u) {
  Eigen::ArrayXcd v = u;
  ifft_inplace(v);
  return v;
}

int next_fast_fft_length(int n, int multiple) {
  if (n <= 0 || multiple <= 0) throw std::invalid_argument("bad fft length");
  auto smooth = [](int v) {
    while (v % 2 == 0) v /= 2;
    while (v % 3 == 0) v /= 3;
    while (v % 5 == 0) v /= 5;
    return v == 1;
  };
  int len = n;
  if (len % multiple != 0) len += multiple - len % multiple;
  while (!(len % 4 == 0 && smooth(len))) len += multiple;
  return len;
}

Eigen::ArrayXd fft_omega_grid(int n, double sample_rate_hz) {
  Eigen::ArrayXd omega(n);
  const double step = 2.0 * 3.14159265358979323846 * sample_rate_hz / n;
  for (int i = 0; i < n; ++i) {
    const int k = (i <= (n - 1) / 2) ? i : i - n;
    omega[i] = step * k;
  }
  return omega;
}

}  // namespace fiberair
