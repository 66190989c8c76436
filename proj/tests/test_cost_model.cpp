#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ftes/cost_model.hpp"

using namespace ftes;

namespace {

CostSpec paper_quadratic() {
  Eigen::MatrixXd H(2, 2);
  H << 4.0, 1.0, 1.0, 2.0;
  Eigen::VectorXd b(2);
  b << -4.0, -6.0;
  return CostSpec::quadratic_form(H, b, 11.0);
}

Eigen::VectorXd random_point(std::mt19937& rng, int n, double scale) {
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z[i] = scale * (2.0 * (rng() / 4294967296.0) - 1.0);
  return z;
}

}  // namespace

TEST_CASE("quadratic form minimizer and minimum") {
  const CostSpec cost = paper_quadratic();
  // z* = -H^{-1} b = (2/7, 20/7); phi* = c - b'H^{-1}b/2 = 13/7
  CHECK(cost.minimizer()[0] == doctest::Approx(2.0 / 7.0).epsilon(1e-12));
  CHECK(cost.minimizer()[1] == doctest::Approx(20.0 / 7.0).epsilon(1e-12));
  CHECK(cost.minimum() == doctest::Approx(13.0 / 7.0).epsilon(1e-12));
  CHECK(cost.eval(cost.minimizer()) == doctest::Approx(13.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("scalar quadratic oracles") {
  const CostSpec cost = CostSpec::scalar_quadratic(1.0, 1.0);
  CHECK(cost.eval(Eigen::VectorXd::Ones(1)) == 0.0);

  const CostSpec steep = CostSpec::scalar_quadratic(2.0, 1.0);
  CHECK(steep.gradient(Eigen::VectorXd::Constant(1, 3.0))[0] == doctest::Approx(4.0));

  const CostSpec flat = CostSpec::scalar_quadratic(0.25, 0.0);
  CHECK(flat.hessian(Eigen::VectorXd::Zero(1))(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("gradient examples") {
  const CostSpec cost = paper_quadratic();
  CHECK(cost.gradient(cost.minimizer()).norm() < 1e-12);
  const auto g0 = cost.gradient(Eigen::Vector2d(0.0, 0.0));
  CHECK(g0[0] == doctest::Approx(-4.0));
  CHECK(g0[1] == doctest::Approx(-6.0));
}

TEST_CASE("hessian is the constant quadratic coefficient") {
  const CostSpec cost = paper_quadratic();
  std::mt19937 rng(5);
  for (int i = 0; i < 5; ++i) {
    const auto H = cost.hessian(random_point(rng, 2, 10.0));
    CHECK(H(0, 0) == doctest::Approx(4.0));
    CHECK(H(0, 1) == doctest::Approx(1.0));
    CHECK(H(1, 0) == doctest::Approx(1.0));
    CHECK(H(1, 1) == doctest::Approx(2.0));
  }
}

TEST_CASE("construction rejects bad inputs") {
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(CostSpec::quadratic_form(indefinite, Eigen::Vector2d(0, 0), 0.0),
                  std::invalid_argument);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(CostSpec::quadratic_form(asym, Eigen::Vector2d(0, 0), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(CostSpec::scalar_quadratic(0.0, 1.0), std::invalid_argument);
  const CostSpec cost = paper_quadratic();
  CHECK_THROWS_AS(cost.eval(Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("demo plant steady state and output") {
  const PlantModel plant = PlantModel::demo2x2();
  // l(z) = (z1/4 + z2/16, z2/4); A l(z) + B z = 0
  std::mt19937 rng(13);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd z = random_point(rng, 2, 5.0);
    const Eigen::VectorXd l = plant.steady_state(z);
    CHECK(l[0] == doctest::Approx(z[0] / 4.0 + z[1] / 16.0).epsilon(1e-12));
    CHECK(l[1] == doctest::Approx(z[1] / 4.0).epsilon(1e-12));
    CHECK((plant.A() * l + plant.B() * z).norm() < 1e-12);
  }
  CHECK(plant.output(Eigen::Vector2d(0.0, 0.0)) == 0.0);
  // first dynamics row at x = 0, z = (1, 0): -20*0 + 5*0 + 5*1
  const auto dx = plant.dynamics(Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, 0.0));
  CHECK(dx[0] == doctest::Approx(5.0));
  CHECK(dx[1] == doctest::Approx(0.0));
}

TEST_CASE("plant model rejects non-Hurwitz dynamics") {
  Eigen::MatrixXd A(1, 1), B(1, 1), Q(1, 1);
  A << 0.5;
  B << 1.0;
  Q << 1.0;
  CHECK_THROWS_AS(PlantModel(A, B, Q, Eigen::VectorXd::Zero(1)), std::invalid_argument);
}

TEST_CASE("plant-composed cost oracles") {
  const CostSpec cost = CostSpec::plant_composed(PlantModel::demo2x2());
  CHECK(cost.eval(Eigen::Vector2d(0.0, 0.0)) == doctest::Approx(0.0));

  // Hessian of h(l(z)) derived symbolically: 2 L'QL
  const auto H = cost.hessian(Eigen::Vector2d(1.0, -1.0));
  CHECK(H(0, 0) == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(H(0, 1) == doctest::Approx(0.3125).epsilon(1e-12));
  CHECK(H(1, 0) == doctest::Approx(0.3125).epsilon(1e-12));
  CHECK(H(1, 1) == doctest::Approx(1.328125).epsilon(1e-12));

  CHECK(cost.minimizer()[0] == doctest::Approx(-0.09).epsilon(1e-12));
  CHECK(cost.minimizer()[1] == doctest::Approx(-0.04).epsilon(1e-12));

  // composed value equals output at the steady state
  const PlantModel plant = PlantModel::demo2x2();
  std::mt19937 rng(17);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd z = random_point(rng, 2, 8.0);
    CHECK(cost.eval(z) == doctest::Approx(plant.output(plant.steady_state(z))).epsilon(1e-12));
  }
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937 rng(23);
  const double h = 1e-5;
  const std::vector<CostSpec> families = {
      CostSpec::scalar_quadratic(0.7, -2.0),
      paper_quadratic(),
      CostSpec::plant_composed(PlantModel::demo2x2()),
  };
  for (const auto& cost : families) {
    const int n = cost.dim();
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::VectorXd z = random_point(rng, n, 5.0);
      const Eigen::VectorXd g = cost.gradient(z);
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd zp = z, zm = z;
        zp[i] += h;
        zm[i] -= h;
        const double fd = (cost.eval(zp) - cost.eval(zm)) / (2.0 * h);
        CHECK(std::abs(fd - g[i]) <= 1e-6 * std::max(1.0, std::abs(g[i])));
      }
    }
  }
}

TEST_CASE("hessian matches finite differences of the gradient") {
  std::mt19937 rng(29);
  const double h = 1e-5;
  const std::vector<CostSpec> families = {
      CostSpec::scalar_quadratic(0.7, -2.0),
      paper_quadratic(),
      CostSpec::plant_composed(PlantModel::demo2x2()),
  };
  for (const auto& cost : families) {
    const int n = cost.dim();
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::VectorXd z = random_point(rng, n, 5.0);
      const Eigen::MatrixXd H = cost.hessian(z);
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd zp = z, zm = z;
        zp[i] += h;
        zm[i] -= h;
        const Eigen::VectorXd col = (cost.gradient(zp) - cost.gradient(zm)) / (2.0 * h);
        for (int j = 0; j < n; ++j) {
          CHECK(std::abs(col[j] - H(j, i)) <= 1e-5 * std::max(1.0, std::abs(H(j, i))));
        }
      }
    }
  }
}

TEST_CASE("minimizer dominates a sampled grid") {
  const std::vector<CostSpec> families = {
      CostSpec::scalar_quadratic(0.7, -2.0),
      paper_quadratic(),
      CostSpec::plant_composed(PlantModel::demo2x2()),
  };
  for (const auto& cost : families) {
    const int n = cost.dim();
    const double best = cost.eval(cost.minimizer());
    std::mt19937 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
      CHECK(best <= cost.eval(random_point(rng, n, 20.0)) + 1e-12);
    }
  }
}

TEST_CASE("PL constant estimate") {
  // For quadratics the ratio |grad|^2 / (2 (phi - phi*)) equals the curvature
  // at every sample, so the estimate is exact.
  const CostSpec unit = CostSpec::scalar_quadratic(1.0, 0.0);
  CHECK(pl_constant_estimate(unit, Eigen::VectorXd::Constant(1, -10.0),
                             Eigen::VectorXd::Constant(1, 10.0), 100) ==
        doctest::Approx(1.0).epsilon(1e-12));

  const CostSpec flat = CostSpec::scalar_quadratic(0.25, 0.0);
  CHECK(pl_constant_estimate(flat, Eigen::VectorXd::Constant(1, -10.0),
                             Eigen::VectorXd::Constant(1, 10.0), 100) ==
        doctest::Approx(0.25).epsilon(1e-12));

  // For quadratic forms the grid minimum approaches the smallest eigenvalue
  // of H: 3 - sqrt(2). Cross-checked by brute-force grid evaluation here.
  const CostSpec paper = paper_quadratic();
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -10.0);
  const Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 10.0);
  const double est = pl_constant_estimate(paper, lo, hi, 41);
  double brute = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 41; ++i) {
    for (int j = 0; j < 41; ++j) {
      Eigen::VectorXd z(2);
      z << -10.0 + 20.0 * i / 40.0, -10.0 + 20.0 * j / 40.0;
      const double gap = paper.eval(z) - paper.minimum();
      if (gap <= 1e-15) continue;
      brute = std::min(brute, paper.gradient(z).squaredNorm() / (2.0 * gap));
    }
  }
  CHECK(est == doctest::Approx(brute).epsilon(1e-12));
  const double lambda_min = 3.0 - std::sqrt(2.0);
  CHECK(est == doctest::Approx(lambda_min).epsilon(0.02));
  CHECK(est >= lambda_min - 1e-9);

  CHECK_THROWS_AS(pl_constant_estimate(unit, lo, hi, 100), std::invalid_argument);
  CHECK_THROWS_AS(pl_constant_estimate(unit, Eigen::VectorXd::Constant(1, -1.0),
                                       Eigen::VectorXd::Constant(1, 1.0), 1),
                  std::invalid_argument);
}
