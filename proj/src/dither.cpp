#include "ftes/dither.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace ftes {

TorusState::TorusState(Eigen::VectorXd m) : mu(std::move(m)) {
  if (mu.size() % 2 != 0) {
    throw std::invalid_argument("TorusState: state must have even length (cos,sin pairs)");
  }
}

TorusState TorusState::canonical(int pairs) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(2 * pairs);
  for (int i = 0; i < pairs; ++i) m[2 * i] = 1.0;
  return TorusState(std::move(m));
}

double TorusState::max_pair_norm_error() const {
  double worst = 0.0;
  for (int i = 0; i < pairs(); ++i) {
    const double r2 = mu[2 * i] * mu[2 * i] + mu[2 * i + 1] * mu[2 * i + 1];
    worst = std::max(worst, std::abs(r2 - 1.0));
  }
  return worst;
}

FrequencySet::FrequencySet(std::vector<Rational> freqs) : freqs_(std::move(freqs)) {
  if (freqs_.empty()) throw std::invalid_argument("FrequencySet: empty");
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  for (const auto& f : freqs_) {
    if (!f.positive()) {
      throw std::invalid_argument("FrequencySet: frequencies must be positive, got " + f.str());
    }
    if (!seen.insert({f.num, f.den}).second) {
      throw std::invalid_argument("FrequencySet: duplicate frequency " + f.str());
    }
  }
}

FrequencySet FrequencySet::defaults(int n) {
  // Validated against the first- and second-moment checks in tests.
  static const std::vector<Rational> table = {Rational(1), Rational(3, 2), Rational(7, 4),
                                              Rational(15, 8)};
  if (n < 1 || n > static_cast<int>(table.size())) {
    throw std::invalid_argument("FrequencySet::defaults: supported dimensions are 1.." +
                                std::to_string(table.size()));
  }
  return FrequencySet(std::vector<Rational>(table.begin(), table.begin() + n));
}

FrequencySet FrequencySet::scaled(const Rational& factor) const {
  if (!factor.positive()) throw std::invalid_argument("FrequencySet::scaled: factor must be > 0");
  std::vector<Rational> out;
  out.reserve(freqs_.size());
  for (const auto& f : freqs_) out.push_back(Rational(f.num * factor.num, f.den * factor.den));
  return FrequencySet(std::move(out));
}

double FrequencySet::max_value() const {
  double m = 0.0;
  for (const auto& f : freqs_) m = std::max(m, f.value());
  return m;
}

Rational FrequencySet::gcd() const {
  Rational g = freqs_.front();
  for (std::size_t i = 1; i < freqs_.size(); ++i) g = Rational::gcd(g, freqs_[i]);
  return g;
}

std::string FrequencySet::str() const {
  std::string s;
  for (std::size_t i = 0; i < freqs_.size(); ++i) {
    if (i) s += " ";
    s += freqs_[i].str();
  }
  return s;
}

DitherParams::DitherParams(double amplitude, double eps1_in) : a(amplitude), eps1(eps1_in) {
  if (a < 0.0) throw std::invalid_argument("DitherParams: a must be >= 0");
  if (eps1 <= 0.0) throw std::invalid_argument("DitherParams: eps1 must be > 0");
}

Eigen::VectorXd oscillator_derivative(const TorusState& mu, const FrequencySet& freqs,
                                      double eps1) {
  if (mu.pairs() != freqs.size()) {
    throw std::invalid_argument("oscillator_derivative: state/frequency dimension mismatch");
  }
  if (eps1 <= 0.0) throw std::invalid_argument("oscillator_derivative: eps1 must be > 0");
  const double scale = 2.0 * std::numbers::pi / eps1;
  Eigen::VectorXd d(mu.mu.size());
  for (int i = 0; i < freqs.size(); ++i) {
    const double w = scale * freqs.value(i);
    // -(2 pi / eps1) * [[0, -k], [k, 0]] * (c, s) = (w s, -w c)
    d[2 * i] = w * mu.mu[2 * i + 1];
    d[2 * i + 1] = -w * mu.mu[2 * i];
  }
  return d;
}

TorusState oscillator_at(const TorusState& mu0, const FrequencySet& freqs, double eps1,
                         double t) {
  if (mu0.pairs() != freqs.size()) {
    throw std::invalid_argument("oscillator_at: state/frequency dimension mismatch");
  }
  if (eps1 <= 0.0) throw std::invalid_argument("oscillator_at: eps1 must be > 0");
  Eigen::VectorXd m(mu0.mu.size());
  for (int i = 0; i < freqs.size(); ++i) {
    const double theta = 2.0 * std::numbers::pi * freqs.value(i) * t / eps1;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double c0 = mu0.mu[2 * i];
    const double s0 = mu0.mu[2 * i + 1];
    m[2 * i] = c0 * c + s0 * s;
    m[2 * i + 1] = -c0 * s + s0 * c;
  }
  return TorusState(std::move(m));
}

Eigen::VectorXd odd_projection(const Eigen::VectorXd& mu) {
  if (mu.size() % 2 != 0) {
    throw std::invalid_argument("odd_projection: input must have even length");
  }
  const int n = static_cast<int>(mu.size()) / 2;
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = mu[2 * i];
  return out;
}

Eigen::VectorXd probe_input(const Eigen::VectorXd& u, double a, const TorusState& mu) {
  if (a < 0.0) throw std::invalid_argument("probe_input: a must be >= 0");
  if (u.size() != mu.pairs()) {
    throw std::invalid_argument("probe_input: input/oscillator dimension mismatch");
  }
  Eigen::VectorXd z = u;
  for (int i = 0; i < mu.pairs(); ++i) z[i] += a * mu.mu[2 * i];
  return z;
}

Eigen::VectorXd grad_demod(const TorusState& mu, double a) {
  if (a <= 0.0) throw std::invalid_argument("grad_demod: a must be > 0");
  return (2.0 / a) * odd_projection(mu.mu);
}

Eigen::MatrixXd hess_demod(const TorusState& mu, double a) {
  if (a <= 0.0) throw std::invalid_argument("hess_demod: a must be > 0");
  const Eigen::VectorXd m = odd_projection(mu.mu);
  const int n = static_cast<int>(m.size());
  Eigen::MatrixXd N(n, n);
  const double diag_scale = 16.0 / (a * a);
  const double off_scale = 4.0 / (a * a);
  for (int i = 0; i < n; ++i) {
    N(i, i) = diag_scale * (m[i] * m[i] - 0.5);
    for (int j = i + 1; j < n; ++j) {
      const double v = off_scale * m[i] * m[j];
      N(i, j) = v;
      N(j, i) = v;
    }
  }
  return N;
}

double common_period(const FrequencySet& freqs, double eps1) {
  if (eps1 <= 0.0) throw std::invalid_argument("common_period: eps1 must be > 0");
  const Rational g = freqs.gcd();
  // T = eps1 / (p/q) = eps1 * q / p, exact integers until the final division.
  return eps1 * static_cast<double>(g.den) / static_cast<double>(g.num);
}

}  // namespace ftes
