#pragma once

// Exact rational helpers on top of GMP's mpq_class.

#include <gmpxx.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace persuasion {

using Rational = mpq_class;
using Vec = std::vector<Rational>;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Accepts "p", "p/q", "-p/q" and finite decimals such as "0.25".
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
  if (s.empty()) throw ParseError("empty rational literal");
  auto dot = s.find('.');
  if (dot != std::string::npos) {
    if (s.find('/') != std::string::npos) throw ParseError("mixed decimal and fraction: " + s);
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    std::size_t frac_len = s.size() - dot - 1;
    mpz_class num;
    if (num.set_str(digits, 10) != 0) throw ParseError("bad decimal literal: " + s);
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, frac_len);
    Rational r(num, den);
    r.canonicalize();
    return r;
  }
  Rational r;
  if (r.set_str(s, 10) != 0) throw ParseError("bad rational literal: " + s);
  if (r.get_den() == 0) throw ParseError("zero denominator: " + s);
  r.canonicalize();
  return r;
}

inline Rational frac(long num, long den) {
  Rational r{mpz_class(num), mpz_class(den)};
  r.canonicalize();
  return r;
}

inline std::string to_string(const Rational& r) { return r.get_str(); }

inline double to_double(const Rational& r) { return r.get_d(); }

inline std::string to_decimal(const Rational& r, int places = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(places) << r.get_d();
  return os.str();
}

inline Rational sum(const Vec& v) {
  Rational s = 0;
  for (const auto& x : v) s += x;
  return s;
}

inline Rational dot(const Vec& a, const Vec& b) {
  Rational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Rational linf_distance(const Vec& a, const Vec& b) {
  Rational d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    Rational x = abs(a[i] - b[i]);
    if (x > d) d = x;
  }
  return d;
}

// Smallest integer strictly greater than x.
inline mpz_class floor_plus_one(const Rational& x) {
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
  return f + 1;
}

inline mpz_class ceil_of(const Rational& x) {
  mpz_class c;
  mpz_cdiv_q(c.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
  return c;
}

// Value that may be an explicit +infinity; used where a recursion has an unbounded end.
struct Extended {
  Rational value = 0;
  bool infinite = false;

  static Extended top() { return Extended{0, true}; }
  static Extended finite(Rational v) { return Extended{std::move(v), false}; }

  friend bool operator<(const Extended& a, const Extended& b) {
    if (a.infinite) return false;
    if (b.infinite) return true;
    return a.value < b.value;
  }
  friend bool operator<=(const Extended& a, const Extended& b) { return !(b < a); }
  friend bool operator==(const Extended& a, const Extended& b) {
    return a.infinite == b.infinite && (a.infinite || a.value == b.value);
  }
  std::string str() const { return infinite ? std::string("inf") : value.get_str(); }
};

}  // namespace persuasion
