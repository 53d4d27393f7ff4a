#include <cmath>

#include "doctest.h"

#include "fiberair/infotheory.hpp"
#include "fiberair/rng.hpp"
#include "fiberair/sigproc.hpp"

using namespace fiberair;

namespace {

Eigen::MatrixXd random_stochastic(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    double sum = 0;
    for (int j = 0; j < cols; ++j) {
      m(i, j) = -std::log(rng.uniform());
      sum += m(i, j);
    }
    m.row(i) /= sum;
  }
  return m;
}

DiscreteChannel bsc(double crossover) {
  DiscreteChannel ch;
  ch.transition.resize(2, 2);
  ch.transition << 1 - crossover, crossover, crossover, 1 - crossover;
  ch.input_law = Eigen::VectorXd::Constant(2, 0.5);
  return ch;
}

DiscreteChannel random_channel(int a, int b, Rng& rng) {
  DiscreteChannel ch;
  ch.transition = random_stochastic(a, b, rng);
  ch.input_law = random_stochastic(1, a, rng).row(0).transpose();
  return ch;
}

}  // namespace

TEST_SUITE_BEGIN("infotheory");

TEST_CASE("mc_air: degenerate and tiny-sample arithmetic") {
  Eigen::ArrayXd constant = Eigen::ArrayXd::Constant(5, 2.5);
  AirEstimate est = mc_air(constant);
  CHECK(est.value_bits_per_symbol == 2.5);
  CHECK(est.standard_error == 0.0);

  Eigen::ArrayXd three(3);
  three << 1, 2, 3;
  est = mc_air(three);
  CHECK(est.value_bits_per_symbol == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(est.standard_error ==
        doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(est.runs() == 3);

  CHECK_THROWS_AS(mc_air(Eigen::ArrayXd()), std::invalid_argument);
}

TEST_CASE("mc_air standard error shrinks as 1/sqrt(N)") {
  Rng rng(151);
  Eigen::ArrayXd small(64), large(1024);
  for (int i = 0; i < large.size(); ++i) {
    double a, b;
    rng.normal_pair(a, b);
    large[i] = 3.0 + 0.5 * a;
    if (i < small.size()) small[i] = 3.0 + 0.5 * b;
  }
  const double se_small = mc_air(small).standard_error;
  const double se_large = mc_air(large).standard_error;
  CHECK(se_small / se_large == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("dmc_mi: binary symmetric channel landmarks") {
  CHECK(dmc_mi(bsc(0.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dmc_mi(bsc(0.5)) == doctest::Approx(0.0).epsilon(1e-12));
  // 1 - h2(0.11), frozen from an independent evaluation.
  CHECK(dmc_mi(bsc(0.11)) ==
        doctest::Approx(0.500084041835472).epsilon(1e-12));
}

TEST_CASE("dmc_mi: frozen 2x3 example") {
  DiscreteChannel ch;
  ch.transition.resize(2, 3);
  ch.transition << 0.7, 0.2, 0.1, 0.1, 0.3, 0.6;
  ch.input_law.resize(2);
  ch.input_law << 0.4, 0.6;
  CHECK(dmc_mi(ch) == doctest::Approx(0.3232442927561715).epsilon(1e-12));

  Eigen::MatrixXd q(2, 3);
  q << 0.6, 0.3, 0.1, 0.2, 0.2, 0.6;
  CHECK(dmc_air_afc(ch, q) ==
        doctest::Approx(0.26446510677376306).epsilon(1e-12));
  CHECK(dmc_air_abc(ch, induced_abc(ch, q)) ==
        doctest::Approx(dmc_air_afc(ch, q)).epsilon(1e-13));
}

TEST_CASE("afc bound: matched decoding is tight, uniform rows give zero") {
  Rng rng(157);
  const DiscreteChannel ch = random_channel(4, 6, rng);
  CHECK(dmc_air_afc(ch, ch.transition) ==
        doctest::Approx(dmc_mi(ch)).epsilon(1e-13));
  const Eigen::MatrixXd uniform =
      Eigen::MatrixXd::Constant(4, 6, 1.0 / 6.0);
  CHECK(dmc_air_afc(ch, uniform) == doctest::Approx(0.0).epsilon(1e-14));
  Eigen::MatrixXd bad = ch.transition;
  bad(0, 0) += 0.5;
  CHECK_THROWS_AS(dmc_air_afc(ch, bad), std::invalid_argument);
}

TEST_CASE("abc bound: matched posterior is tight, prior-only gives zero") {
  Rng rng(163);
  const DiscreteChannel ch = random_channel(5, 4, rng);
  const Eigen::MatrixXd posterior = induced_abc(ch, ch.transition);
  CHECK(dmc_air_abc(ch, posterior) ==
        doctest::Approx(dmc_mi(ch)).epsilon(1e-13));

  Eigen::MatrixXd prior_only(5, 4);
  for (int j = 0; j < 4; ++j) prior_only.col(j) = ch.input_law;
  CHECK(dmc_air_abc(ch, prior_only) == doctest::Approx(0.0).epsilon(1e-14));

  Eigen::MatrixXd bad = posterior;
  bad(0, 0) += 0.1;
  CHECK_THROWS_AS(dmc_air_abc(ch, bad), std::invalid_argument);
}

TEST_CASE("KLD identity: MI minus the AFC bound is the divergence, >= 0") {
  Rng rng(167);
  for (int trial = 0; trial < 100; ++trial) {
    const DiscreteChannel ch = random_channel(4, 4, rng);
    const Eigen::MatrixXd q = random_stochastic(4, 4, rng);
    const double gap = dmc_mi(ch) - dmc_air_afc(ch, q);
    CHECK(gap >= -1e-12);

    // D(p(x,y) || p(y) r_q(x|y)) computed directly.
    const Eigen::VectorXd py = ch.transition.transpose() * ch.input_law;
    const Eigen::MatrixXd rq = induced_abc(ch, q);
    double kld = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const double pxy = ch.input_law[i] * ch.transition(i, j);
        if (pxy > 0) kld += pxy * std::log2(pxy / (py[j] * rq(i, j)));
      }
    CHECK(gap == doctest::Approx(kld).epsilon(1e-10));
  }
}

TEST_CASE("abc bound for arbitrary column-stochastic r stays below MI") {
  Rng rng(173);
  for (int trial = 0; trial < 100; ++trial) {
    const DiscreteChannel ch = random_channel(4, 4, rng);
    Eigen::MatrixXd r = random_stochastic(4, 4, rng).transpose();
    CHECK(dmc_air_abc(ch, r) <= dmc_mi(ch) + 1e-12);

    // The direct KLD form of the gap is also nonnegative.
    const Eigen::VectorXd py = ch.transition.transpose() * ch.input_law;
    double kld = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const double pxy = ch.input_law[i] * ch.transition(i, j);
        if (pxy > 0) kld += pxy * std::log2(pxy / (py[j] * r(i, j)));
      }
    CHECK(dmc_mi(ch) - dmc_air_abc(ch, r) ==
          doctest::Approx(kld).epsilon(1e-10));
  }
}

TEST_CASE("maximizing the abc bound numerically recovers the true MI") {
  Rng rng(179);
  const DiscreteChannel ch = random_channel(3, 3, rng);
  const double mi = dmc_mi(ch);

  // Projected gradient ascent on column softmax parameters.
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(3, 3);
  const Eigen::VectorXd py = ch.transition.transpose() * ch.input_law;
  Eigen::MatrixXd r(3, 3);
  for (int iter = 0; iter < 4000; ++iter) {
    for (int j = 0; j < 3; ++j) {
      const Eigen::VectorXd e = theta.col(j).array().exp();
      r.col(j) = e / e.sum();
    }
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) {
        const double grad =
            ch.input_law[i] * ch.transition(i, j) - py[j] * r(i, j);
        theta(i, j) += 4.0 * grad;
      }
  }
  for (int j = 0; j < 3; ++j) {
    const Eigen::VectorXd e = theta.col(j).array().exp();
    r.col(j) = e / e.sum();
  }
  CHECK(dmc_air_abc(ch, r) == doctest::Approx(mi).epsilon(1e-6));
  CHECK(dmc_air_abc(ch, r) <= mi + 1e-12);
}

TEST_CASE("awgn capacity landmarks") {
  CHECK(awgn_capacity(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(awgn_capacity(0.0) == 0.0);
  CHECK(awgn_capacity(255.0) == doctest::Approx(8.0).epsilon(1e-15));
}

TEST_CASE("gauss-hermite: moments of exp(-x^2)") {
  Eigen::ArrayXd nodes, weights;
  gauss_hermite(20, nodes, weights);
  const double pi_sqrt = std::sqrt(3.14159265358979323846);
  CHECK(weights.sum() == doctest::Approx(pi_sqrt).epsilon(1e-12));
  CHECK((weights * nodes.square()).sum() ==
        doctest::Approx(pi_sqrt / 2).epsilon(1e-12));
  CHECK((weights * nodes).sum() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("constrained 64-qam capacity: frozen quadrature values") {
  const Constellation c = build_square_qam(64);
  // Frozen from an independent implementation of the same integral.
  CHECK(constrained_capacity_qam(c, std::pow(10.0, 0.6)) ==
        doctest::Approx(2.2308408236784105).epsilon(1e-9));
  CHECK(constrained_capacity_qam(c, std::pow(10.0, 1.0)) ==
        doctest::Approx(3.268572354206636).epsilon(1e-9));
  CHECK(constrained_capacity_qam(c, std::pow(10.0, 1.4)) ==
        doctest::Approx(4.395285402419134).epsilon(1e-9));
  CHECK(constrained_capacity_qam(c, std::pow(10.0, 1.8)) ==
        doctest::Approx(5.460006347664655).epsilon(1e-9));
}

TEST_CASE("constrained capacity: saturation, zero SNR, bad order") {
  const Constellation c = build_square_qam(64);
  CHECK(constrained_capacity_qam(c, 1e9) == doctest::Approx(6.0).epsilon(1e-4));
  CHECK(constrained_capacity_qam(c, 0.0) == 0.0);
  CHECK_THROWS_AS(constrained_capacity_qam(c, 1.0, 3), std::invalid_argument);
}

TEST_CASE("constrained capacity agrees with a Monte Carlo evaluation") {
  const Constellation c = build_square_qam(64);
  const double snr = std::pow(10.0, 1.0);
  const double sigma2 = 1.0 / snr;
  Rng rng(181);
  const int n = 400000;
  double sum = 0.0;
  Eigen::ArrayXd arg(64);
  for (int i = 0; i < n; ++i) {
    const int m = static_cast<int>(rng.uniform_int(64));
    const std::complex<double> noise = rng.complex_normal(sigma2);
    const double n2 = std::norm(noise);
    for (int mp = 0; mp < 64; ++mp)
      arg[mp] = (n2 - std::norm(c.points[m] + noise - c.points[mp])) * snr;
    sum += log_sum_exp(arg);
  }
  const double mc = 6.0 - sum / (n * std::log(2.0));
  CHECK(constrained_capacity_qam(c, snr) == doctest::Approx(mc).epsilon(0.01));
}

TEST_CASE("map_decision_afc: nearest point, prior flip, shift invariance") {
  const Constellation c = build_square_qam(4);
  GaussianAuxChannel aux;
  aux.variant = GaussVariant::IidGaussian;
  aux.means = c.points;
  aux.covariances.assign(4, 0.5 * Eigen::Matrix2d::Identity());
  aux.rebuild_cache();

  const Eigen::ArrayXd uniform = uniform_input_law(4);
  for (int m = 0; m < 4; ++m)
    CHECK(map_decision_afc(c.points[m], aux, uniform) == m);

  // A skewed prior flips a decision near the boundary.
  const std::complex<double> near_boundary =
      0.5 * (c.points[0] + c.points[1]) + 0.01 * (c.points[1] - c.points[0]);
  Eigen::ArrayXd skewed(4);
  skewed << 0.85, 0.05, 0.05, 0.05;
  CHECK(map_decision_afc(near_boundary, aux, uniform) == 1);
  CHECK(map_decision_afc(near_boundary, aux, skewed) == 0);

  // Adding a constant to all log-likelihoods cannot change the argmax:
  // scale every covariance-normalizer identically via a common factor.
  GaussianAuxChannel scaled = aux;
  scaled.covariances.assign(4, 0.5 * Eigen::Matrix2d::Identity());
  scaled.rebuild_cache();
  Rng rng(191);
  for (int trial = 0; trial < 64; ++trial) {
    const std::complex<double> z = rng.complex_normal(2.0);
    CHECK(map_decision_afc(z, aux, uniform) ==
          map_decision_afc(z, scaled, uniform));
  }
}

TEST_SUITE_END();
