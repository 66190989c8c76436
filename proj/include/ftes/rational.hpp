#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ftes {

// Exact positive rational, kept in lowest terms with a positive denominator.
// Probing frequencies are stored this way so that common periods can be
// computed in integer arithmetic instead of floating point.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("Rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  explicit Rational(std::int64_t n) : Rational(n, 1) {}

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool positive() const { return num > 0; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return Rational(a.num * b.den + b.num * a.den, a.den * b.den);
  }
  friend Rational operator*(std::int64_t s, const Rational& a) {
    return Rational(s * a.num, a.den);
  }

  // gcd(a/b, c/d) = gcd(a, c) / lcm(b, d) for fractions in lowest terms.
  static Rational gcd(const Rational& a, const Rational& b) {
    return Rational(std::gcd(a.num < 0 ? -a.num : a.num, b.num < 0 ? -b.num : b.num),
                    std::lcm(a.den, b.den));
  }

  // Parses "p/q" or a plain integer "p".
  static Rational parse(const std::string& text);

  std::string str() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
  }
};

inline Rational Rational::parse(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) {
      return Rational(std::stoll(text));
    }
    return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
  } catch (const std::exception&) {
    throw std::invalid_argument("Rational: cannot parse '" + text + "' (expected p or p/q)");
  }
}

}  // namespace ftes
