// SPDX-License-Identifier: Apache-2.0

// Closed forms for ball cardinalities |B(r)| of the built-in groups, valid
// for every r >= 0 including radii far beyond breadth-first reach:
//
//   Z^d, diagonal generators:   (2r + 1)^d
//   Z^d, unit vectors:          sum_k 2^k C(d, k) C(r, k)
//   H3, x^{+-1}, y^{+-1}:       (31 r^4 - 14 r^3 + 127 r^2 + 144 r + k(r mod 12)) / 72
//                               k = 72, 72, 44, 108, 72, 8, 108, 108, 8, 72, 108, 44
//
// The H3 form is the expansion of the growth series
//   (1 + x + 4x^2 + 11x^3 + 8x^4 + 21x^5 + 6x^6 + 9x^7 + x^8)
//     / ((1 - x)^4 (1 - x^3) (1 + x^2)),
// which reproduces breadth-first ball counts (see the growth tests).

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cergo/group.hpp"
#include "cergo/rational.hpp"

namespace cergo {

/// Polynomial with rational coefficients, lowest degree first.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<Rational> coefficients) : c_(std::move(coefficients)) {
    trim();
  }

  static Polynomial constant(Rational const& v) { return Polynomial({v}); }
  static Polynomial monomial_shift(Rational const& a) { return Polynomial({a, Rational(1)}); }

  std::vector<Rational> const& coefficients() const noexcept { return c_; }
  bool is_zero() const noexcept { return c_.empty(); }
  std::size_t degree() const noexcept { return c_.empty() ? 0 : c_.size() - 1; }
  Rational leading() const { return c_.empty() ? Rational(0) : c_.back(); }

  Rational operator()(Rational const& x) const {
    Rational acc = 0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) {
      acc = acc * x + *it;
    }
    return acc;
  }

  friend Polynomial operator+(Polynomial const& a, Polynomial const& b) {
    std::vector<Rational> c(std::max(a.c_.size(), b.c_.size()));
    for (std::size_t i = 0; i < a.c_.size(); ++i) c[i] += a.c_[i];
    for (std::size_t i = 0; i < b.c_.size(); ++i) c[i] += b.c_[i];
    return Polynomial(std::move(c));
  }

  friend Polynomial operator-(Polynomial const& a, Polynomial const& b) {
    return a + b * Polynomial::constant(-1);
  }

  friend Polynomial operator*(Polynomial const& a, Polynomial const& b) {
    if (a.is_zero() || b.is_zero()) {
      return {};
    }
    std::vector<Rational> c(a.c_.size() + b.c_.size() - 1);
    for (std::size_t i = 0; i < a.c_.size(); ++i) {
      for (std::size_t j = 0; j < b.c_.size(); ++j) {
        c[i + j] += a.c_[i] * b.c_[j];
      }
    }
    return Polynomial(std::move(c));
  }

  /// x -> p(x + a)
  Polynomial shifted(Rational const& a) const {
    Polynomial out;
    Polynomial power = constant(1);
    Polynomial const step = monomial_shift(a);
    for (auto const& coef : c_) {
      out = out + power * constant(coef);
      power = power * step;
    }
    return out;
  }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == 0) {
      c_.pop_back();
    }
  }

  std::vector<Rational> c_;
};

/// f(r) = P_{r mod period}(r) with one polynomial per residue class.
class QuasiPolynomial {
 public:
  explicit QuasiPolynomial(std::vector<Polynomial> classes) : classes_(std::move(classes)) {
    if (classes_.empty()) {
      throw precondition_error("quasi-polynomial needs at least one residue class");
    }
  }

  std::size_t period() const noexcept { return classes_.size(); }
  Polynomial const& residue_class(std::size_t r) const { return classes_[r % period()]; }

  Integer operator()(Integer const& r) const {
    Integer residue = r % static_cast<unsigned long>(period());
    Rational v = classes_[residue.get_ui()](Rational(r));
    if (v.get_den() != 1) {
      throw precondition_error("quasi-polynomial is not integral at " + r.get_str());
    }
    return v.get_num();
  }

  Integer operator()(std::uint64_t r) const { return (*this)(to_integer(r)); }

  /// Certifies f(r)^2 >= f(r-1) f(r+1) for every r >= 1.  Per residue class
  /// the defect is a polynomial; it is checked exactly up to its Cauchy root
  /// bound and by the sign of its leading coefficient beyond.
  bool certify_log_concave() const {
    std::size_t const p = period();
    for (std::size_t rho = 0; rho < p; ++rho) {
      Polynomial const& mid = classes_[rho];
      Polynomial const& lower = classes_[(rho + p - 1) % p];
      Polynomial const& upper = classes_[(rho + 1) % p];
      Polynomial const defect = mid * mid - lower.shifted(-1) * upper.shifted(1);
      if (defect.is_zero()) {
        continue;
      }
      if (defect.leading() < 0) {
        return false;
      }
      Rational bound = 0;
      for (auto const& a : defect.coefficients()) {
        bound = std::max(bound, cergo::abs(a / defect.leading()));
      }
      bound += 1;
      Integer const last = bound.get_num() / bound.get_den() + 1;
      std::uint64_t const first = rho == 0 ? p : rho;
      for (Integer r = first; r <= last; r += static_cast<unsigned long>(p)) {
        if (defect(Rational(r)) < 0) {
          return false;
        }
      }
    }
    return true;
  }

 private:
  std::vector<Polynomial> classes_;
};

inline Polynomial binomial_polynomial(std::size_t k) {
  // C(r, k) = r (r - 1) ... (r - k + 1) / k!
  Polynomial p = Polynomial::constant(1);
  Integer factorial = 1;
  for (std::size_t i = 0; i < k; ++i) {
    p = p * Polynomial::monomial_shift(-Rational(static_cast<unsigned long>(i)));
    factorial *= static_cast<unsigned long>(i + 1);
  }
  return p * Polynomial::constant(Rational(1) / Rational(factorial));
}

/// Exact |B(r)| as a quasi-polynomial in r, for the groups that ship.
inline QuasiPolynomial ball_count_formula(GroupSpec const& spec) {
  if (spec.kind == GroupKind::heisenberg) {
    constexpr long kappa[12] = {72, 72, 44, 108, 72, 8, 108, 108, 8, 72, 108, 44};
    std::vector<Polynomial> classes;
    for (long k : kappa) {
      std::vector<Rational> c = {Rational(k), Rational(144), Rational(127), Rational(-14),
                                 Rational(31)};
      for (auto& x : c) {
        x /= 72;
      }
      classes.emplace_back(std::move(c));
    }
    return QuasiPolynomial(std::move(classes));
  }
  std::size_t const d = spec.dimension;
  if (spec.generators == GeneratorChoice::diagonal) {
    Polynomial p = Polynomial::constant(1);
    for (std::size_t i = 0; i < d; ++i) {
      p = p * Polynomial({Rational(1), Rational(2)});
    }
    return QuasiPolynomial({p});
  }
  Polynomial p;
  Integer choose = 1;  // C(d, k)
  for (std::size_t k = 0; k <= d; ++k) {
    Integer weight = choose;
    mpz_mul_2exp(weight.get_mpz_t(), weight.get_mpz_t(), k);
    p = p + binomial_polynomial(k) * Polynomial::constant(Rational(weight));
    choose = choose * static_cast<unsigned long>(d - k) / static_cast<unsigned long>(k + 1);
  }
  return QuasiPolynomial({p});
}

}  // namespace cergo
