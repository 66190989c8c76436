#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ftes/rational.hpp"

namespace ftes {

// State of n uncoupled unit-circle oscillators, stored as n consecutive
// (cos, sin) pairs in a 2n-vector.
struct TorusState {
  Eigen::VectorXd mu;

  TorusState() = default;
  explicit TorusState(Eigen::VectorXd m);

  // (1, 0, 1, 0, ...): every oscillator starts at phase zero.
  static TorusState canonical(int pairs);

  int pairs() const { return static_cast<int>(mu.size()) / 2; }

  // max_i |mu_{2i}^2 + mu_{2i+1}^2 - 1|
  double max_pair_norm_error() const;
};

// Probing frequencies as exact rationals: positive, pairwise distinct.
class FrequencySet {
 public:
  explicit FrequencySet(std::vector<Rational> freqs);

  // Built-in nonresonant sets: (1), (1, 3/2), (1, 3/2, 7/4), (1, 3/2, 7/4, 15/8).
  // Chosen so that kappa_i != kappa_j, kappa_i != 2 kappa_j,
  // kappa_i != kappa_j + kappa_k, and pairwise sums are distinct.
  static FrequencySet defaults(int n);

  // Every frequency multiplied by an exact rational factor. Scaling preserves
  // all of the nonresonance conditions above.
  FrequencySet scaled(const Rational& factor) const;

  int size() const { return static_cast<int>(freqs_.size()); }
  const Rational& at(int i) const { return freqs_.at(i); }
  double value(int i) const { return freqs_.at(i).value(); }
  double max_value() const;

  // gcd of all entries; the common oscillator period is eps1 / gcd.
  Rational gcd() const;

  std::string str() const;

 private:
  std::vector<Rational> freqs_;
};

// Probing amplitude and oscillator time scale.
struct DitherParams {
  double a = 0.1;
  double eps1 = 0.01;

  DitherParams() = default;
  DitherParams(double amplitude, double eps1_in);
};

// d(mu)/dt = -(2 pi / eps1) R_kappa mu, with R_kappa block diagonal and the
// i-th block the rotation generator [[0, -kappa_i], [kappa_i, 0]].
Eigen::VectorXd oscillator_derivative(const TorusState& mu, const FrequencySet& freqs,
                                      double eps1);

// Closed-form solution at time t >= 0; pairwise norms preserved exactly.
TorusState oscillator_at(const TorusState& mu0, const FrequencySet& freqs, double eps1,
                         double t);

// Odd-indexed components (the cos entries of each pair).
Eigen::VectorXd odd_projection(const Eigen::VectorXd& mu);

// z = u + a * mu_odd
Eigen::VectorXd probe_input(const Eigen::VectorXd& u, double a, const TorusState& mu);

// M(mu) = (2/a) * mu_odd; requires a > 0.
Eigen::VectorXd grad_demod(const TorusState& mu, double a);

// Symmetric demodulation matrix: N_ii = (16/a^2)(mu_odd_i^2 - 1/2),
// N_ij = (4/a^2) mu_odd_i mu_odd_j for i != j; requires a > 0.
Eigen::MatrixXd hess_demod(const TorusState& mu, double a);

// Smallest T > 0 such that every oscillator solution is T-periodic:
// T = eps1 / gcd(freqs), computed in exact integer arithmetic.
double common_period(const FrequencySet& freqs, double eps1);

}  // namespace ftes
