#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ftes/dither.hpp"

using namespace ftes;

TEST_CASE("oscillator derivative matches the rotation generator") {
  const FrequencySet one({Rational(1)});
  // block [[0,-1],[1,0]] applied to (1,0), scaled by -2pi
  auto d = oscillator_derivative(TorusState(Eigen::Vector2d(1.0, 0.0)), one, 1.0);
  CHECK(d[0] == doctest::Approx(0.0));
  CHECK(d[1] == doctest::Approx(-2.0 * std::numbers::pi));

  const FrequencySet two({Rational(2)});
  d = oscillator_derivative(TorusState(Eigen::Vector2d(0.0, 1.0)), two, 1.0);
  CHECK(d[0] == doctest::Approx(4.0 * std::numbers::pi));
  CHECK(d[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("oscillator derivative is orthogonal to the state pairwise") {
  std::mt19937 rng(7);
  const FrequencySet freqs = FrequencySet::defaults(3);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd mu(6);
    for (int i = 0; i < 3; ++i) {
      const double th = 2.0 * std::numbers::pi * (rng() / 4294967296.0);
      mu[2 * i] = std::cos(th);
      mu[2 * i + 1] = std::sin(th);
    }
    const auto d = oscillator_derivative(TorusState(mu), freqs, 0.37);
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(mu[2 * i] * d[2 * i] + mu[2 * i + 1] * d[2 * i + 1]) < 1e-12);
    }
  }
}

TEST_CASE("closed-form oscillator solution") {
  const FrequencySet one({Rational(1)});
  const TorusState mu0(Eigen::Vector2d(1.0, 0.0));

  auto at0 = oscillator_at(mu0, one, 1.0, 0.0);
  CHECK(at0.mu[0] == doctest::Approx(1.0));
  CHECK(at0.mu[1] == doctest::Approx(0.0));

  // quarter period: mu1 = cos(2 pi t), mu2 = -sin(2 pi t)
  auto quarter = oscillator_at(mu0, one, 1.0, 0.25);
  CHECK(quarter.mu[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(quarter.mu[1] == doctest::Approx(-1.0));

  auto full = oscillator_at(mu0, one, 1.0, 1.0);
  CHECK(full.mu[0] == doctest::Approx(1.0));
  CHECK(std::abs(full.mu[1]) < 1e-12);
}

TEST_CASE("oscillator solution preserves pairwise norms") {
  const FrequencySet freqs = FrequencySet::defaults(2);
  Eigen::VectorXd mu(4);
  mu << 0.6, 0.8, -1.0, 0.0;
  for (double t : {0.0, 0.1, 0.3333, 1.7, 12.9}) {
    CHECK(oscillator_at(TorusState(mu), freqs, 0.05, t).max_pair_norm_error() < 1e-12);
  }
}

TEST_CASE("odd projection selects the cos components") {
  Eigen::VectorXd mu(4);
  mu << 1.0, 0.0, 0.0, 1.0;
  const auto p = odd_projection(mu);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == 0.0);

  Eigen::VectorXd pair(2);
  pair << 0.3, -0.5;
  CHECK(odd_projection(pair)[0] == 0.3);

  Eigen::VectorXd mixed(4);
  mixed << 0.6, 0.8, -1.0, 0.0;
  const auto m = odd_projection(mixed);
  CHECK(m[0] == 0.6);
  CHECK(m[1] == -1.0);

  Eigen::VectorXd odd(3);
  CHECK_THROWS_AS(odd_projection(odd), std::invalid_argument);
}

TEST_CASE("probe input") {
  const TorusState mu(Eigen::Vector4d(1.0, 0.0, 0.0, 1.0));
  CHECK(probe_input(Eigen::Vector2d(1.0, 2.0), 0.0, mu).isApprox(Eigen::Vector2d(1.0, 2.0)));
  const auto z = probe_input(Eigen::Vector2d(0.0, 0.0), 0.1, mu);
  CHECK(z[0] == doctest::Approx(0.1));
  CHECK(z[1] == doctest::Approx(0.0));

  const TorusState neg(Eigen::Vector2d(-1.0, 0.0));
  CHECK(probe_input(Eigen::VectorXd::Ones(1), 0.1, neg)[0] == doctest::Approx(0.9));
  CHECK_THROWS_AS(probe_input(Eigen::Vector2d(0, 0), -0.1, mu), std::invalid_argument);
}

TEST_CASE("gradient demodulation") {
  const TorusState mu(Eigen::Vector4d(1.0, 0.0, 0.0, 1.0));
  auto M = grad_demod(mu, 0.1);
  CHECK(M[0] == doctest::Approx(20.0));
  CHECK(M[1] == doctest::Approx(0.0));
  M = grad_demod(mu, 2.0);
  CHECK(M[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(grad_demod(mu, 0.0), std::invalid_argument);

  // definition inverted: M(mu; a) * a/2 recovers the odd projection
  std::mt19937 rng(3);
  for (int i = 0; i < 20; ++i) {
    const double th = rng() / 4294967296.0 * 6.28;
    const TorusState state(Eigen::Vector2d(std::cos(th), std::sin(th)));
    const double a = 0.05 + rng() / 4294967296.0;
    CHECK((0.5 * a * grad_demod(state, a) - odd_projection(state.mu)).norm() < 1e-14);
  }
}

TEST_CASE("Hessian demodulation entries") {
  const TorusState unit(Eigen::Vector2d(1.0, 0.0));
  CHECK(hess_demod(unit, 1.0)(0, 0) == doctest::Approx(8.0));    // 16*(1-1/2)
  CHECK(hess_demod(unit, 0.1)(0, 0) == doctest::Approx(800.0));  // 16/0.01*0.5

  const TorusState both(Eigen::Vector4d(1.0, 0.0, 1.0, 0.0));
  const auto N = hess_demod(both, 1.0);
  CHECK(N(0, 1) == doctest::Approx(4.0));  // 4*1*1
  CHECK(N(1, 0) == N(0, 1));
}

TEST_CASE("Hessian demodulation is bitwise symmetric") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::VectorXd mu(6);
    for (int i = 0; i < 3; ++i) {
      const double th = 2.0 * std::numbers::pi * (rng() / 4294967296.0);
      mu[2 * i] = std::cos(th);
      mu[2 * i + 1] = std::sin(th);
    }
    const auto N = hess_demod(TorusState(mu), 0.37);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) CHECK(N(i, j) == N(j, i));
    }
  }
}

TEST_CASE("common period in exact arithmetic") {
  CHECK(common_period(FrequencySet({Rational(1)}), 1.0) == 1.0);
  CHECK(common_period(FrequencySet({Rational(1), Rational(2)}), 1.0) == 1.0);
  CHECK(common_period(FrequencySet({Rational(1, 2), Rational(1, 3)}), 1.0) == 6.0);
  CHECK(common_period(FrequencySet::defaults(3), 1.0) == 4.0);  // gcd(1,3/2,7/4) = 1/4
  CHECK(common_period(FrequencySet({Rational(1)}), 0.02) == doctest::Approx(0.02));
}

TEST_CASE("frequency set validation") {
  CHECK_THROWS_AS(FrequencySet({Rational(1), Rational(1)}), std::invalid_argument);
  CHECK_THROWS_AS(FrequencySet({Rational(-1)}), std::invalid_argument);
  CHECK_THROWS_AS(FrequencySet({}), std::invalid_argument);
  CHECK_THROWS_AS(FrequencySet::defaults(9), std::invalid_argument);
}

TEST_CASE("default frequency sets satisfy the nonresonance conditions") {
  for (int n = 1; n <= 4; ++n) {
    const FrequencySet f = FrequencySet::defaults(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) {
          CHECK(f.value(i) != f.value(j));
          CHECK(f.value(i) != 2.0 * f.value(j));
          CHECK(f.value(j) != 3.0 * f.value(i));
        }
        for (int l = 0; l < n; ++l) {
          if (j != l) CHECK(f.value(i) != f.value(j) + f.value(l));
        }
      }
    }
    // pairwise sums distinct
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          for (int l = k + 1; l < n; ++l) {
            if (i == k && j == l) continue;
            CHECK(f.value(i) + f.value(j) != f.value(k) + f.value(l));
          }
        }
      }
    }
  }
}

TEST_CASE("rational parsing") {
  CHECK(Rational::parse("3/2").value() == 1.5);
  CHECK(Rational::parse("7").value() == 7.0);
  CHECK(Rational::parse("6/4") == Rational(3, 2));
  CHECK_THROWS_AS(Rational::parse("x"), std::invalid_argument);
  CHECK_THROWS_AS(Rational(1, 0), std::invalid_argument);
}
