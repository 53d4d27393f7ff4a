#include "fiberair/infotheory.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fiberair/gaussian.hpp"

namespace fiberair {

namespace {

constexpr double kPi = 3.14159265358979323846;

void validate_channel(const DiscreteChannel& ch) {
  const auto a = ch.transition.rows();
  if (ch.input_law.size() != a)
    throw std::invalid_argument("discrete channel: input law size mismatch");
  if (std::abs(ch.input_law.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("discrete channel: input law must sum to 1");
  for (Eigen::Index i = 0; i < a; ++i)
    if (std::abs(ch.transition.row(i).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("discrete channel: transition row not normalized");
}

}  // namespace

AirEstimate mc_air(const Eigen::ArrayXd& per_run_values) {
  if (per_run_values.size() == 0)
    throw std::invalid_argument("mc_air: no per-run values");
  AirEstimate est;
  est.per_run = per_run_values;
  const int n = static_cast<int>(per_run_values.size());
  est.value_bits_per_symbol = per_run_values.mean();
  if (n > 1) {
    const double var =
        (per_run_values - est.value_bits_per_symbol).square().sum() / (n - 1);
    est.standard_error = std::sqrt(var / n);
  }
  return est;
}

double dmc_mi(const DiscreteChannel& ch) {
  validate_channel(ch);
  const Eigen::VectorXd py = ch.transition.transpose() * ch.input_law;
  double mi = 0.0;
  for (Eigen::Index i = 0; i < ch.transition.rows(); ++i)
    for (Eigen::Index j = 0; j < ch.transition.cols(); ++j) {
      const double pxy = ch.input_law[i] * ch.transition(i, j);
      if (pxy > 0.0) mi += pxy * std::log2(ch.transition(i, j) / py[j]);
    }
  return mi;
}

double dmc_air_afc(const DiscreteChannel& ch, const Eigen::MatrixXd& q) {
  validate_channel(ch);
  if (q.rows() != ch.transition.rows() || q.cols() != ch.transition.cols())
    throw std::invalid_argument("dmc_air_afc: q shape mismatch");
  for (Eigen::Index i = 0; i < q.rows(); ++i)
    if (std::abs(q.row(i).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("dmc_air_afc: q row not normalized");
  const Eigen::VectorXd qy = q.transpose() * ch.input_law;
  double air = 0.0;
  for (Eigen::Index i = 0; i < q.rows(); ++i)
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      const double pxy = ch.input_law[i] * ch.transition(i, j);
      if (pxy > 0.0) air += pxy * std::log2(q(i, j) / qy[j]);
    }
  return air;
}

double dmc_air_abc(const DiscreteChannel& ch, const Eigen::MatrixXd& r) {
  validate_channel(ch);
  if (r.rows() != ch.transition.rows() || r.cols() != ch.transition.cols())
    throw std::invalid_argument("dmc_air_abc: r shape mismatch");
  for (Eigen::Index j = 0; j < r.cols(); ++j) {
    const double colsum = r.col(j).sum();
    if (std::abs(colsum - 1.0) > 1e-9 || r.col(j).minCoeff() < 0.0)
      throw std::invalid_argument(
          "dmc_air_abc: r column is not a conditional distribution");
  }
  double air = 0.0;
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
      const double pxy = ch.input_law[i] * ch.transition(i, j);
      if (pxy > 0.0) air += pxy * std::log2(r(i, j) / ch.input_law[i]);
    }
  return air;
}

Eigen::MatrixXd induced_abc(const DiscreteChannel& ch,
                            const Eigen::MatrixXd& q) {
  const Eigen::VectorXd qy = q.transpose() * ch.input_law;
  Eigen::MatrixXd r(q.rows(), q.cols());
  for (Eigen::Index i = 0; i < q.rows(); ++i)
    for (Eigen::Index j = 0; j < q.cols(); ++j)
      r(i, j) = ch.input_law[i] * q(i, j) / qy[j];
  return r;
}

double awgn_capacity(double snr_linear) {
  if (snr_linear < 0.0) throw std::invalid_argument("awgn_capacity: snr < 0");
  return std::log2(1.0 + snr_linear);
}

void gauss_hermite(int order, Eigen::ArrayXd& nodes, Eigen::ArrayXd& weights) {
  if (order < 1) throw std::invalid_argument("gauss_hermite: order < 1");
  // Golub-Welsch on the Hermite Jacobi matrix.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    const double off = std::sqrt(i / 2.0);
    jacobi(i, i - 1) = off;
    jacobi(i - 1, i) = off;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  nodes = solver.eigenvalues().array();
  weights.resize(order);
  const double norm = std::sqrt(kPi);
  for (int i = 0; i < order; ++i) {
    const double v0 = solver.eigenvectors()(0, i);
    weights[i] = norm * v0 * v0;
  }
}

double constrained_capacity_qam(const Constellation& c, double snr_linear,
                                int quad_order) {
  if (quad_order < 4)
    throw std::invalid_argument("constrained_capacity_qam: order < 4");
  if (snr_linear < 0.0)
    throw std::invalid_argument("constrained_capacity_qam: snr < 0");
  const int m_count = c.size();
  if (snr_linear == 0.0) return 0.0;

  Eigen::ArrayXd nodes, weights;
  gauss_hermite(quad_order, nodes, weights);
  const double sigma = std::sqrt(1.0 / snr_linear);
  const double inv_sigma2 = snr_linear;

  double accum = 0.0;
  Eigen::ArrayXd arg(m_count);
  for (int m = 0; m < m_count; ++m) {
    for (int i = 0; i < quad_order; ++i) {
      for (int j = 0; j < quad_order; ++j) {
        const std::complex<double> noise(sigma * nodes[i], sigma * nodes[j]);
        const double n2 = std::norm(noise);
        for (int mp = 0; mp < m_count; ++mp)
          arg[mp] =
              (n2 - std::norm(c.points[m] + noise - c.points[mp])) * inv_sigma2;
        accum += weights[i] * weights[j] * log_sum_exp(arg);
      }
    }
  }
  return std::log2(static_cast<double>(m_count)) -
         accum / (m_count * kPi * std::log(2.0));
}

int map_decision_afc(std::complex<double> z, const GaussianAuxChannel& aux,
                     const Eigen::ArrayXd& input_law) {
  int best = 0;
  double best_metric = -std::numeric_limits<double>::infinity();
  for (int m = 0; m < aux.size(); ++m) {
    const double metric = q_loglik(z, m, aux) + std::log(input_law[m]);
    if (metric > best_metric) {  // strict: ties keep the lowest index
      best_metric = metric;
      best = m;
    }
  }
  return best;
}

}  // namespace fiberair
