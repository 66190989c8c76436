#include "ftes/bounds.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ftes {

namespace {

void check_positive(double v, const char* name) {
  if (!(v > 0.0)) {
    throw std::domain_error(std::string(name) + " must be > 0, got " + std::to_string(v));
  }
}

// Cost-independent part of the gradient bound: t_star_gradient(k, ...) * k.
double gradient_bound_times_k(double q1, double q2, double kappa_pl) {
  const auto [a1, a2] = alphas(q1, q2);
  const double g1 = std::pow(2.0, (8.0 - 3.0 * a1) / 4.0) * std::pow(kappa_pl, (2.0 - a1) / 2.0);
  const double g2 = std::pow(2.0, (8.0 - 3.0 * a2) / 4.0) * std::pow(kappa_pl, (2.0 - a2) / 2.0);
  return 4.0 * (1.0 / (g1 * a1) - 1.0 / (g2 * a2));
}

double newton_bound_times_k(double q1, double q2) {
  const auto [a1, a2] = alphas(q1, q2);
  const double g1 = std::pow(2.0, a1 / 2.0);
  const double g2 = std::pow(2.0, a2 / 2.0);
  return g1 / a1 - g2 / a2;
}

}  // namespace

std::pair<double, double> alphas(double q1, double q2) {
  if (!(q1 > 2.0)) {
    throw std::domain_error("inadmissible q1 = " + std::to_string(q1) + ": need q1 > 2");
  }
  if (!(q2 > 1.0 && q2 < 2.0)) {
    throw std::domain_error("inadmissible q2 = " + std::to_string(q2) + ": need 1 < q2 < 2");
  }
  return {(q1 - 2.0) / (q1 - 1.0), (q2 - 2.0) / (q2 - 1.0)};
}

ShapeParams ShapeParams::admissible(double q1, double q2, double k) {
  check_positive(k, "gain k");
  const auto [a1, a2] = alphas(q1, q2);
  return ShapeParams{q1, q2, a1, a2, k};
}

ShapeParams ShapeParams::classic(double k) {
  check_positive(k, "gain k");
  return ShapeParams{0.0, 0.0, 0.0, 0.0, k};
}

double t_star_gradient(double k, double q1, double q2, double kappa_pl) {
  check_positive(k, "gain k");
  check_positive(kappa_pl, "kappa_pl");
  return gradient_bound_times_k(q1, q2, kappa_pl) / k;
}

double gain_for_tstar_gradient(double tstar, double q1, double q2, double kappa_pl) {
  check_positive(tstar, "tstar");
  check_positive(kappa_pl, "kappa_pl");
  return gradient_bound_times_k(q1, q2, kappa_pl) / tstar;
}

double t_star_newton(double k, double q1, double q2) {
  check_positive(k, "gain k");
  return newton_bound_times_k(q1, q2) / k;
}

double gain_for_tstar_newton(double tstar, double q1, double q2) {
  check_positive(tstar, "tstar");
  return newton_bound_times_k(q1, q2) / tstar;
}

}  // namespace ftes
