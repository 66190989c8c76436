#pragma once

#include <Eigen/Dense>

#include "ftes/cost_model.hpp"
#include "ftes/dither.hpp"

namespace ftes {

// First-moment identities of the oscillator over one exact common period:
// (1/T) int mu_odd mu_odd' dt = I/2 and (1/T) int mu_odd dt = 0.
struct FirstMomentReport {
  Eigen::MatrixXd outer_average;
  Eigen::VectorXd mean_average;
  double max_outer_deviation = 0.0;  // from I/2
  double max_mean_deviation = 0.0;   // from 0
  double period = 0.0;
  long nodes = 0;
  bool pass = false;  // both deviations <= 1e-8
};

FirstMomentReport moment_check_first(const FrequencySet& freqs);

// Second-moment integrals against the demodulation matrix N. The raw values
// use N as defined with its 16/a^2 and 4/a^2 factors, so the non-vanishing
// entries come out as 2/a^2 (diagonal) and 1/a^2 (off-diagonal); the `scaled`
// fields multiply by a^2/16 resp. a^2/4, which lands on 1/8 and 1/4. Both
// normalizations are reported.
struct SecondMomentReport {
  Eigen::VectorXd mean;             // <mu_i>
  Eigen::VectorXd square;           // <mu_i^2>
  Eigen::MatrixXd cross;            // <mu_i mu_j>, i != j
  Eigen::VectorXd diag_raw;         // <mu_i^2 N_ii>
  Eigen::VectorXd diag_scaled;      // * a^2/16
  Eigen::MatrixXd offdiag_raw;      // <mu_i mu_j N_ij>, i != j
  Eigen::MatrixXd offdiag_scaled;   // * a^2/4
  Eigen::MatrixXd square_other;     // <mu_i^2 N_jj>, i != j
  Eigen::MatrixXd cube_cross;       // <mu_i^2 N_ij>, i != j
  Eigen::MatrixXd odd_pair;         // <mu_i N_ij>, i != j
  Eigen::VectorXd odd_diag;         // <mu_i N_ii>
  Eigen::MatrixXd odd_other;        // <mu_i N_jj>, i != j
  Eigen::MatrixXd mixed;            // <mu_i mu_j N_ii>, i != j
  double max_zero_deviation = 0.0;  // worst of everything expected to vanish
  double max_square_deviation = 0.0;  // from 1/2
  double max_diag_scaled_deviation = 0.0;     // from 1/8
  double max_offdiag_scaled_deviation = 0.0;  // from 1/4
  double period = 0.0;
  long nodes = 0;
  bool zeros_pass = false;          // all vanishing entries <= 1e-8
  bool scaled_constants_match = false;
};

SecondMomentReport moment_check_second(const FrequencySet& freqs, double a);

// (1/T) int phi(u + a mu_odd(t)) M(mu(t)) dt over one common period with u
// frozen. Equals the exact gradient for quadratic costs with nonresonant
// frequencies. `nodes` overrides the quadrature resolution (0 = default).
Eigen::VectorXd averaged_grad_demod(const CostSpec& cost, const Eigen::VectorXd& u, double a,
                                    const FrequencySet& freqs, long nodes = 0);

// (1/T) int phi(u + a mu_odd(t)) N(mu(t)) dt; exact Hessian for quadratics.
Eigen::MatrixXd averaged_hess_demod(const CostSpec& cost, const Eigen::VectorXd& u, double a,
                                    const FrequencySet& freqs, long nodes = 0);

}  // namespace ftes
