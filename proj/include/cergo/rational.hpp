// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <vector>

#include "cergo/error.hpp"

namespace cergo {

using Integer = mpz_class;
using Rational = mpq_class;

inline Integer to_integer(std::uint64_t v) {
  Integer z;
  mpz_import(z.get_mpz_t(), 1, 1, sizeof(v), 0, 0, &v);
  return z;
}

inline bool fits_u64(Integer const& z) {
  return sgn(z) >= 0 && mpz_sizeinbase(z.get_mpz_t(), 2) <= 64;
}

inline std::uint64_t to_u64(Integer const& z) {
  if (!fits_u64(z)) {
    throw complexity_limit("integer " + z.get_str() + " does not fit 64 bits");
  }
  std::uint64_t v = 0;
  mpz_export(&v, nullptr, 1, sizeof(v), 0, 0, z.get_mpz_t());
  return v;
}

inline Rational make_rational(Integer const& num, Integer const& den) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

inline Rational ratio(std::uint64_t num, std::uint64_t den) {
  return make_rational(to_integer(num), to_integer(den));
}

inline Rational pow(Rational const& base, unsigned long e) {
  Rational r;
  mpz_pow_ui(r.get_num_mpz_t(), base.get_num_mpz_t(), e);
  mpz_pow_ui(r.get_den_mpz_t(), base.get_den_mpz_t(), e);
  r.canonicalize();
  return r;
}

/// 2^e for any sign of e.
inline Rational pow2(long e) {
  Rational r(1);
  if (e >= 0) {
    mpz_mul_2exp(r.get_num_mpz_t(), r.get_num_mpz_t(), static_cast<unsigned long>(e));
  } else {
    mpz_mul_2exp(r.get_den_mpz_t(), r.get_den_mpz_t(), static_cast<unsigned long>(-e));
  }
  return r;
}

inline Rational abs(Rational const& q) { return q < 0 ? Rational(-q) : q; }

/// "n" or "n/d" in lowest terms.
inline std::string rational_string(Rational const& q) { return q.get_str(); }

/// Decimal rendering with the requested number of significant digits.
inline std::string decimal_string(Rational const& q, int digits = 12) {
  if (q == 0) {
    return "0";
  }
  mpf_class f(0, 1024);
  f = q;
  int const len = gmp_snprintf(nullptr, 0, "%.*Fg", digits, f.get_mpf_t());
  std::string out(static_cast<std::size_t>(len) + 1, '\0');
  gmp_snprintf(out.data(), out.size(), "%.*Fg", digits, f.get_mpf_t());
  out.resize(static_cast<std::size_t>(len));
  return out;
}

/// Accepts "a", "a/b" and finite decimals such as "0.25" or "-1.5e-3".
inline Rational parse_rational(std::string const& text) {
  auto bad = [&]() { return validation_error("not a rational number: '" + text + "'"); };
  if (text.empty()) {
    throw bad();
  }
  if (text.find('/') != std::string::npos) {
    Rational q;
    if (q.set_str(text, 10) != 0 || q.get_den() == 0) {
      throw bad();
    }
    q.canonicalize();
    return q;
  }
  std::string mantissa = text;
  long exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string::npos) {
    mantissa = text.substr(0, e);
    try {
      std::size_t used = 0;
      exponent = std::stol(text.substr(e + 1), &used);
      if (used != text.size() - e - 1) {
        throw bad();
      }
    } catch (std::logic_error const&) {
      throw bad();
    }
  }
  bool negative = false;
  std::size_t pos = 0;
  if (!mantissa.empty() && (mantissa[0] == '-' || mantissa[0] == '+')) {
    negative = mantissa[0] == '-';
    pos = 1;
  }
  std::string digits;
  long fraction_digits = 0;
  bool seen_point = false;
  for (; pos < mantissa.size(); ++pos) {
    char const c = mantissa[pos];
    if (c == '.' && !seen_point) {
      seen_point = true;
    } else if (c >= '0' && c <= '9') {
      digits.push_back(c);
      fraction_digits += seen_point ? 1 : 0;
    } else {
      throw bad();
    }
  }
  if (digits.empty()) {
    throw bad();
  }
  Integer num(digits, 10);
  Rational q(num);
  long const shift = exponent - fraction_digits;
  Integer ten;
  mpz_ui_pow_ui(ten.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
  q = shift < 0 ? Rational(num, ten) : Rational(num * ten);
  q.canonicalize();
  return negative ? Rational(-q) : q;
}

}  // namespace cergo
