#include "ftes/averaging.hpp"

#include <cmath>
#include <stdexcept>

namespace ftes {

namespace {

// Quadrature node budget: at least 1e4 nodes per cycle of the fastest
// oscillator over the common period. The integrands are trigonometric
// polynomials, so the composite trapezoid rule over a full period is exact
// once the node count clears the highest harmonic.
long node_count(const FrequencySet& freqs, double period) {
  const double cycles = period * freqs.max_value();
  return static_cast<long>(std::ceil(1e4 * std::max(1.0, cycles)));
}

// Trapezoid average of fn(mu_odd(t)) over one common period with eps1 = 1.
// fn accumulates weighted samples itself to avoid per-node allocations.
template <class Accumulate>
void average_over_period(const FrequencySet& freqs, double period, long nodes, Accumulate&& acc) {
  const TorusState mu0 = TorusState::canonical(freqs.size());
  const double h = period / static_cast<double>(nodes);
  for (long i = 0; i <= nodes; ++i) {
    const double w = (i == 0 || i == nodes) ? 0.5 : 1.0;
    const TorusState mu = oscillator_at(mu0, freqs, 1.0, h * static_cast<double>(i));
    acc(w / static_cast<double>(nodes), mu);
  }
}

}  // namespace

FirstMomentReport moment_check_first(const FrequencySet& freqs) {
  const int n = freqs.size();
  FirstMomentReport rep;
  rep.period = common_period(freqs, 1.0);
  rep.nodes = node_count(freqs, rep.period);
  rep.outer_average = Eigen::MatrixXd::Zero(n, n);
  rep.mean_average = Eigen::VectorXd::Zero(n);

  average_over_period(freqs, rep.period, rep.nodes, [&](double w, const TorusState& mu) {
    const Eigen::VectorXd m = odd_projection(mu.mu);
    rep.outer_average.noalias() += w * (m * m.transpose());
    rep.mean_average += w * m;
  });

  rep.max_outer_deviation =
      (rep.outer_average - 0.5 * Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  rep.max_mean_deviation = rep.mean_average.cwiseAbs().maxCoeff();
  rep.pass = rep.max_outer_deviation <= 1e-8 && rep.max_mean_deviation <= 1e-8;
  return rep;
}

SecondMomentReport moment_check_second(const FrequencySet& freqs, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("moment_check_second: a must be > 0");
  const int n = freqs.size();
  SecondMomentReport rep;
  rep.period = common_period(freqs, 1.0);
  rep.nodes = node_count(freqs, rep.period);

  rep.mean = Eigen::VectorXd::Zero(n);
  rep.square = Eigen::VectorXd::Zero(n);
  rep.cross = Eigen::MatrixXd::Zero(n, n);
  rep.diag_raw = Eigen::VectorXd::Zero(n);
  rep.offdiag_raw = Eigen::MatrixXd::Zero(n, n);
  rep.square_other = Eigen::MatrixXd::Zero(n, n);
  rep.cube_cross = Eigen::MatrixXd::Zero(n, n);
  rep.odd_pair = Eigen::MatrixXd::Zero(n, n);
  rep.odd_diag = Eigen::VectorXd::Zero(n);
  rep.odd_other = Eigen::MatrixXd::Zero(n, n);
  rep.mixed = Eigen::MatrixXd::Zero(n, n);

  average_over_period(freqs, rep.period, rep.nodes, [&](double w, const TorusState& mu) {
    const Eigen::VectorXd m = odd_projection(mu.mu);
    const Eigen::MatrixXd N = hess_demod(mu, a);
    for (int i = 0; i < n; ++i) {
      rep.mean[i] += w * m[i];
      rep.square[i] += w * m[i] * m[i];
      rep.diag_raw[i] += w * m[i] * m[i] * N(i, i);
      rep.odd_diag[i] += w * m[i] * N(i, i);
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        rep.cross(i, j) += w * m[i] * m[j];
        rep.offdiag_raw(i, j) += w * m[i] * m[j] * N(i, j);
        rep.square_other(i, j) += w * m[i] * m[i] * N(j, j);
        rep.cube_cross(i, j) += w * m[i] * m[i] * N(i, j);
        rep.odd_pair(i, j) += w * m[i] * N(i, j);
        rep.odd_other(i, j) += w * m[i] * N(j, j);
        rep.mixed(i, j) += w * m[i] * m[j] * N(i, i);
      }
    }
  });

  rep.diag_scaled = rep.diag_raw * (a * a / 16.0);
  rep.offdiag_scaled = rep.offdiag_raw * (a * a / 4.0);

  double zero_dev = rep.mean.cwiseAbs().maxCoeff();
  zero_dev = std::max(zero_dev, rep.cross.cwiseAbs().maxCoeff());
  zero_dev = std::max(zero_dev, rep.square_other.cwiseAbs().maxCoeff());
  zero_dev = std::max(zero_dev, rep.cube_cross.cwiseAbs().maxCoeff());
  zero_dev = std::max(zero_dev, rep.odd_pair.cwiseAbs().maxCoeff());
  zero_dev = std::max(zero_dev, rep.odd_diag.cwiseAbs().maxCoeff());
  zero_dev = std::max(zero_dev, rep.odd_other.cwiseAbs().maxCoeff());
  zero_dev = std::max(zero_dev, rep.mixed.cwiseAbs().maxCoeff());
  rep.max_zero_deviation = zero_dev;

  rep.max_square_deviation = (rep.square.array() - 0.5).abs().maxCoeff();
  rep.max_diag_scaled_deviation = (rep.diag_scaled.array() - 0.125).abs().maxCoeff();
  double off_dev = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j != i) off_dev = std::max(off_dev, std::abs(rep.offdiag_scaled(i, j) - 0.25));
    }
  }
  rep.max_offdiag_scaled_deviation = off_dev;

  rep.zeros_pass = rep.max_zero_deviation <= 1e-8 && rep.max_square_deviation <= 1e-8;
  rep.scaled_constants_match =
      rep.max_diag_scaled_deviation <= 1e-8 && (n < 2 || rep.max_offdiag_scaled_deviation <= 1e-8);
  return rep;
}

Eigen::VectorXd averaged_grad_demod(const CostSpec& cost, const Eigen::VectorXd& u, double a,
                                    const FrequencySet& freqs, long nodes) {
  if (!(a > 0.0)) throw std::invalid_argument("averaged_grad_demod: a must be > 0");
  const int n = freqs.size();
  if (cost.dim() != n || u.size() != n) {
    throw std::invalid_argument("averaged_grad_demod: dimension mismatch");
  }
  const double period = common_period(freqs, 1.0);
  if (nodes <= 0) nodes = node_count(freqs, period);
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(n);
  average_over_period(freqs, period, nodes, [&](double w, const TorusState& mu) {
    const Eigen::VectorXd z = probe_input(u, a, mu);
    avg += (w * cost.eval(z)) * grad_demod(mu, a);
  });
  return avg;
}

Eigen::MatrixXd averaged_hess_demod(const CostSpec& cost, const Eigen::VectorXd& u, double a,
                                    const FrequencySet& freqs, long nodes) {
  if (!(a > 0.0)) throw std::invalid_argument("averaged_hess_demod: a must be > 0");
  const int n = freqs.size();
  if (cost.dim() != n || u.size() != n) {
    throw std::invalid_argument("averaged_hess_demod: dimension mismatch");
  }
  const double period = common_period(freqs, 1.0);
  if (nodes <= 0) nodes = node_count(freqs, period);
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(n, n);
  average_over_period(freqs, period, nodes, [&](double w, const TorusState& mu) {
    const Eigen::VectorXd z = probe_input(u, a, mu);
    avg += (w * cost.eval(z)) * hess_demod(mu, a);
  });
  return avg;
}

}  // namespace ftes
