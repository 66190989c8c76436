#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ftes/averaging.hpp"

using namespace ftes;

namespace {

CostSpec paper_quadratic() {
  Eigen::MatrixXd H(2, 2);
  H << 4.0, 1.0, 1.0, 2.0;
  Eigen::VectorXd b(2);
  b << -4.0, -6.0;
  return CostSpec::quadratic_form(H, b, 11.0);
}

CostSpec random_spd_cost(int n, unsigned seed) {
  std::mt19937 rng(seed);
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) A(i, j) = 2.0 * (rng() / 4294967296.0) - 1.0;
  }
  Eigen::MatrixXd H = A * A.transpose() + n * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) b[i] = 4.0 * (rng() / 4294967296.0) - 2.0;
  return CostSpec::quadratic_form(H, b, 1.3);
}

Eigen::VectorXd random_point(std::mt19937& rng, int n) {
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i) u[i] = 6.0 * (rng() / 4294967296.0) - 3.0;
  return u;
}

}  // namespace

TEST_CASE("first moments for the default frequency sets") {
  for (int n = 1; n <= 4; ++n) {
    const auto rep = moment_check_first(FrequencySet::defaults(n));
    INFO("n = ", n);
    CHECK(rep.pass);
    CHECK(rep.max_outer_deviation <= 1e-10);
    CHECK(rep.max_mean_deviation <= 1e-10);
    for (int i = 0; i < n; ++i) {
      CHECK(rep.outer_average(i, i) == doctest::Approx(0.5).epsilon(1e-10));
    }
  }
}

TEST_CASE("first moments single frequency") {
  const auto rep = moment_check_first(FrequencySet({Rational(1)}));
  CHECK(rep.outer_average(0, 0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(std::abs(rep.mean_average[0]) <= 1e-10);
  CHECK(rep.period == 1.0);
}

TEST_CASE("cross moment vanishes for distinct frequencies") {
  const auto rep = moment_check_first(FrequencySet({Rational(1), Rational(3, 2)}));
  CHECK(std::abs(rep.outer_average(0, 1)) <= 1e-10);
  CHECK(std::abs(rep.outer_average(1, 0)) <= 1e-10);
}

TEST_CASE("second moments: non-vanishing entries in both normalizations") {
  // <mu_i^2 N_ii> = (16/a^2) (<mu^4> - <mu^2>/2) = (16/a^2)(3/8 - 1/4) = 2/a^2
  const auto rep1 = moment_check_second(FrequencySet({Rational(1)}), 1.0);
  CHECK(rep1.diag_raw[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(rep1.diag_scaled[0] == doctest::Approx(0.125).epsilon(1e-8));
  CHECK(rep1.zeros_pass);
  CHECK(rep1.scaled_constants_match);

  const auto rep2 = moment_check_second(FrequencySet({Rational(1), Rational(3, 2)}), 1.0);
  // <mu_i mu_j N_ij> = (4/a^2) <mu_i^2 mu_j^2> = (4/a^2)(1/4) = 1/a^2
  CHECK(rep2.offdiag_raw(0, 1) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(rep2.offdiag_scaled(0, 1) == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(rep2.zeros_pass);
  CHECK(rep2.scaled_constants_match);

  // raw values scale as 1/a^2
  const auto rep_a = moment_check_second(FrequencySet({Rational(1)}), 0.1);
  CHECK(rep_a.diag_raw[0] == doctest::Approx(200.0).epsilon(1e-6));
  CHECK(rep_a.diag_scaled[0] == doctest::Approx(0.125).epsilon(1e-8));
}

TEST_CASE("second moments: every odd and cross integral vanishes") {
  for (int n = 2; n <= 3; ++n) {
    const auto rep = moment_check_second(FrequencySet::defaults(n), 1.0);
    INFO("n = ", n);
    CHECK(rep.max_zero_deviation <= 1e-8);
    CHECK(rep.max_square_deviation <= 1e-8);
    // the specific <mu_i N_jj> = 0 family
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) CHECK(std::abs(rep.odd_other(i, j)) <= 1e-8);
      }
    }
  }
}

TEST_CASE("averaged gradient demodulation equals the gradient for quadratics") {
  const CostSpec cost = paper_quadratic();
  const FrequencySet freqs = FrequencySet::defaults(2);

  const auto g0 = averaged_grad_demod(cost, Eigen::Vector2d(0.0, 0.0), 0.1, freqs);
  CHECK(g0[0] == doctest::Approx(-4.0).epsilon(1e-6));
  CHECK(g0[1] == doctest::Approx(-6.0).epsilon(1e-6));

  const auto gmin = averaged_grad_demod(cost, cost.minimizer(), 0.1, freqs);
  CHECK(gmin.norm() <= 1e-6);

  const CostSpec scalar_cost = CostSpec::scalar_quadratic(2.0, 1.0);
  const auto gs = averaged_grad_demod(scalar_cost, Eigen::VectorXd::Constant(1, 3.0), 0.05,
                                      FrequencySet::defaults(1));
  CHECK(gs[0] == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("averaged Hessian demodulation equals the Hessian for quadratics") {
  const CostSpec cost = paper_quadratic();
  const auto H = averaged_hess_demod(cost, Eigen::Vector2d(0.7, -0.4), 0.1,
                                     FrequencySet::defaults(2));
  CHECK(H(0, 0) == doctest::Approx(4.0).epsilon(1e-5 / 4.0));
  CHECK(H(0, 1) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(H(1, 1) == doctest::Approx(2.0).epsilon(1e-5 / 2.0));

  const CostSpec scalar_cost = CostSpec::scalar_quadratic(0.25, 0.0);
  const auto Hs = averaged_hess_demod(scalar_cost, Eigen::VectorXd::Zero(1), 0.1,
                                      FrequencySet::defaults(1));
  CHECK(Hs(0, 0) == doctest::Approx(0.25).epsilon(1e-6));

  // bitwise symmetric: a sum of symmetric N samples
  const Eigen::MatrixXd D = H - H.transpose();
  CHECK(D.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("averaged demodulation matches the oracles at random points") {
  for (int n = 1; n <= 3; ++n) {
    const CostSpec cost = random_spd_cost(n, 100 + n);
    const FrequencySet freqs = FrequencySet::defaults(n);
    std::mt19937 rng(200 + n);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::VectorXd u = random_point(rng, n);
      const Eigen::VectorXd g = averaged_grad_demod(cost, u, 0.1, freqs);
      CHECK((g - cost.gradient(u)).cwiseAbs().maxCoeff() <= 1e-6);
      const Eigen::MatrixXd H = averaged_hess_demod(cost, u, 0.1, freqs);
      CHECK((H - cost.hessian(u)).cwiseAbs().maxCoeff() <= 1e-5);
    }
  }
}

TEST_CASE("quadrature converges: doubling the nodes is inert") {
  const CostSpec cost = paper_quadratic();
  const FrequencySet freqs = FrequencySet::defaults(2);
  const Eigen::VectorXd u(Eigen::Vector2d(1.3, -0.2));
  const auto g1 = averaged_grad_demod(cost, u, 0.1, freqs, 60000);
  const auto g2 = averaged_grad_demod(cost, u, 0.1, freqs, 120000);
  CHECK((g1 - g2).cwiseAbs().maxCoeff() <= 1e-10);
  const auto h1 = averaged_hess_demod(cost, u, 0.1, freqs, 60000);
  const auto h2 = averaged_hess_demod(cost, u, 0.1, freqs, 120000);
  CHECK((h1 - h2).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("argument validation") {
  const CostSpec cost = paper_quadratic();
  CHECK_THROWS_AS(averaged_grad_demod(cost, Eigen::Vector2d(0, 0), 0.0,
                                      FrequencySet::defaults(2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(averaged_grad_demod(cost, Eigen::Vector2d(0, 0), 0.1,
                                      FrequencySet::defaults(1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(moment_check_second(FrequencySet::defaults(1), -1.0), std::invalid_argument);
}
