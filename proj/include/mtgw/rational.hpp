#pragma once

// Exact arithmetic helpers shared by every module: GMP rationals, integer
// vectors (offspring vectors, censuses, lattice points) and a few small
// numeric utilities.

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mtgw {

using Rational = mpq_class;
using Integer = mpz_class;

/// Type index, 0-based (type i in the usual 1-based notation is Type i-1).
using Type = int;

/// Offspring vector, census or lattice point.
using IntVector = std::vector<int>;

inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  auto slash = s.find('/');
  Rational q;
  try {
    if (slash == std::string::npos) {
      q = Rational(Integer(s), 1);
    } else {
      Integer num(s.substr(0, slash));
      Integer den(s.substr(slash + 1));
      if (den == 0) throw std::invalid_argument("zero denominator");
      q = Rational(num, den);
    }
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("malformed rational '" + s + "'");
  }
  q.canonicalize();
  return q;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

inline Rational factorial(int n) {
  Integer f;
  mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(n));
  return Rational(f);
}

/// |k|! / (k_1! ... k_d!)
inline Integer multinomial(const IntVector& k) {
  Integer result = 1;
  unsigned long running = 0;
  for (int ki : k) {
    Integer b;
    running += static_cast<unsigned long>(ki);
    mpz_bin_uiui(b.get_mpz_t(), running, static_cast<unsigned long>(ki));
    result *= b;
  }
  return result;
}

inline int total(const IntVector& k) { return std::accumulate(k.begin(), k.end(), 0); }

inline IntVector unit_vector(int d, int i) {
  IntVector e(static_cast<std::size_t>(d), 0);
  e[static_cast<std::size_t>(i)] = 1;
  return e;
}

inline IntVector add(const IntVector& a, const IntVector& b) {
  IntVector c(a);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
  return c;
}

inline IntVector sub(const IntVector& a, const IntVector& b) {
  IntVector c(a);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
  return c;
}

/// a <= b componentwise
inline bool dominated(const IntVector& a, const IntVector& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

inline bool nonnegative(const IntVector& a) {
  for (int x : a)
    if (x < 0) return false;
  return true;
}

inline Rational power(const Rational& base, int e) {
  Rational r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

/// Best rational approximation with denominator <= max_den (continued
/// fractions). Used to recognize exact eigen-data from float iterates.
inline Rational rationalize(double x, long max_den = 1000000) {
  if (!std::isfinite(x)) throw std::domain_error("rationalize: non-finite value");
  long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double v = x;
  for (int iter = 0; iter < 64; ++iter) {
    double a = std::floor(v);
    long ai = static_cast<long>(a);
    long p2 = ai * p1 + p0;
    long q2 = ai * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    double frac = v - a;
    if (std::fabs(frac) < 1e-15) break;
    v = 1.0 / frac;
    if (std::fabs(static_cast<double>(p1) / static_cast<double>(q1) - x) < 1e-15) break;
  }
  Rational r(p1, q1);
  r.canonicalize();
  return r;
}

/// 64-bit FNV-1a; stable across platforms, used for config hashes.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace mtgw
