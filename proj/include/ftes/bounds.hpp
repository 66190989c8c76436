#pragma once

#include <utility>

namespace ftes {

// Shaping exponents and gain for the fixed-time drive term.
//
// Admissible parameters have q1 in (2, inf) and q2 in (1, 2), which puts
// alpha1 = (q1-2)/(q1-1) in (0, 1) and alpha2 = (q2-2)/(q2-1) below 0.
// The distinguished classic variant carries alpha1 = alpha2 = 0 and reduces
// the controllers to their standard asymptotic counterparts.
struct ShapeParams {
  double q1 = 0.0;
  double q2 = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double k = 1.0;

  static ShapeParams admissible(double q1, double q2, double k);
  static ShapeParams classic(double k = 0.5);

  bool is_classic() const { return alpha1 == 0.0 && alpha2 == 0.0; }
};

// (alpha1, alpha2) from admissible (q1, q2); throws std::domain_error naming
// the violated bound otherwise.
std::pair<double, double> alphas(double q1, double q2);

// Upper bound on the settling time of the gradient-based controller for a
// cost with PL constant kappa_pl:
//   T = (4/k) (1/(gamma1 alpha1) - 1/(gamma2 alpha2)),
//   gamma_i = 2^((8 - 3 alpha_i)/4) kappa_pl^((2 - alpha_i)/2).
double t_star_gradient(double k, double q1, double q2, double kappa_pl);

// Gain that makes t_star_gradient equal the requested bound (exact inverse).
double gain_for_tstar_gradient(double tstar, double q1, double q2, double kappa_pl);

// Upper bound for the Newton-based controller; independent of the cost:
//   T = (1/k) (g1/alpha1 - g2/alpha2),  g_i = 2^(alpha_i / 2).
double t_star_newton(double k, double q1, double q2);

double gain_for_tstar_newton(double tstar, double q1, double q2);

}  // namespace ftes
