#pragma once

// Exact-convolution checks of lattice walk asymptotics: the uniform local
// CLT for tilted sums, the strong ratio limit, the exponential lower bound,
// the weighted ratio, and the embedding of d independent multi-type walks
// into a single walk on Z^{2d-1}.

#include "mtgw/distribution.hpp"
#include "mtgw/errors.hpp"
#include "mtgw/laplace.hpp"
#include "mtgw/offspring.hpp"
#include "mtgw/progeny_exact.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mtgw {

/// Exact law of S_n.
inline WalkAtomTable sum_pmf(const LatticeDistribution& f, int n) { return WalkAtomTable::power(f, n); }

namespace detail {

/// log(num/den) for big integers without overflow.
inline double log_ratio(const Integer& num, const Integer& den) {
  long en = 0, ed = 0;
  double mn = mpz_get_d_2exp(&en, num.get_mpz_t());
  double md = mpz_get_d_2exp(&ed, den.get_mpz_t());
  return std::log(mn) - std::log(md) + static_cast<double>(en - ed) * std::log(2.0);
}

inline double log_probability(const Rational& q) { return log_ratio(q.get_num(), q.get_den()); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Local CLT

struct GnedenkoPoint {
  double exact_scaled = 0;  // n^{D/2} |Sigma|^{1/2} P_theta(S_n = s)
  double gaussian = 0;      // (2 pi)^{-D/2} e^{-|z|^2/2}
  double error() const { return std::fabs(exact_scaled - gaussian); }
};

struct GnedenkoResult {
  double sup = 0;
  std::size_t theta_index = 0;
  IntVector argmax;
  /// Largest Gaussian term at lattice points where the exact law vanishes.
  double off_support = 0;
};

namespace detail {

struct TiltedWalkContext {
  const WalkAtomTable* table;
  Eigen::VectorXd theta;
  double log_mgf = 0;  // phi(theta)
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov_inv_sqrt;
  double scale = 0;  // n^{D/2} |Sigma|^{1/2}
  int n = 0;
  double log_den = 0;

  GnedenkoPoint at(const IntVector& s, const Integer& numerator) const {
    const auto dim = static_cast<Eigen::Index>(s.size());
    Eigen::VectorXd sv(dim);
    for (Eigen::Index j = 0; j < dim; ++j) sv(j) = s[static_cast<std::size_t>(j)];
    GnedenkoPoint p;
    if (numerator != 0) {
      double lp = detail::log_ratio(numerator, Integer(1)) - log_den;
      p.exact_scaled = scale * std::exp(lp + theta.dot(sv) - n * log_mgf);
    }
    Eigen::VectorXd z = cov_inv_sqrt * (sv - n * mean) / std::sqrt(static_cast<double>(n));
    p.gaussian = std::pow(2 * M_PI, -0.5 * static_cast<double>(dim)) * std::exp(-0.5 * z.squaredNorm());
    return p;
  }
};

inline TiltedWalkContext tilted_context(const LatticeDistribution& f, const WalkAtomTable& table,
                                        const Eigen::VectorXd& theta, int n) {
  TiltedWalkContext c;
  c.table = &table;
  c.theta = theta;
  c.n = n;
  auto view = tilt(f, theta);
  c.log_mgf = view.log_normalizer;
  c.mean = view.mean;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(view.covariance);
  c.cov_inv_sqrt = es.operatorInverseSqrt();
  const double dim = static_cast<double>(f.dimension());
  c.scale = std::pow(static_cast<double>(n), dim / 2) * std::sqrt(view.covariance.determinant());
  c.log_den = detail::log_ratio(table.denominator(), Integer(1));
  return c;
}

}  // namespace detail

/// Single-point term of the uniform local CLT.
inline GnedenkoPoint gnedenko_point(const LatticeDistribution& f, const Eigen::VectorXd& theta, int n,
                                    const IntVector& s) {
  if (!lattice_aperiodic(f)) throw NotAperiodic("gnedenko: distribution is not aperiodic");
  auto table = sum_pmf(f, n);
  auto ctx = detail::tilted_context(f, table, theta, n);
  return ctx.at(s, table.numerator(s));
}

/// sup over theta in the grid and lattice points s of
/// |n^{D/2}|Sigma_theta|^{1/2} P_theta(S_n=s) - N(z_n(theta,s))|. Lattice
/// points one step outside the bounding box of the exact law are included,
/// so the off-support Gaussian mass near the edge is accounted for.
inline GnedenkoResult gnedenko_discrepancy(const LatticeDistribution& f, const std::vector<Eigen::VectorXd>& theta_grid,
                                           int n) {
  if (!lattice_aperiodic(f)) throw NotAperiodic("gnedenko: distribution is not aperiodic");
  if (n < 1) throw std::invalid_argument("gnedenko: n must be positive");
  auto table = sum_pmf(f, n);
  const std::size_t dim = f.dimension();
  GnedenkoResult best;
  best.sup = -1;
  for (std::size_t g = 0; g < theta_grid.size(); ++g) {
    auto ctx = detail::tilted_context(f, table, theta_grid[g], n);
    IntVector lo = table.lower(), s(dim);
    for (auto& v : lo) --v;
    IntVector ext = table.extent();
    for (auto& e : ext) e += 2;
    IntVector idx(dim, 0);
    while (true) {
      for (std::size_t j = 0; j < dim; ++j) s[j] = lo[j] + idx[j];
      Integer num = table.numerator(s);
      auto p = ctx.at(s, num);
      if (p.error() > best.sup) {
        best.sup = p.error();
        best.theta_index = g;
        best.argmax = s;
      }
      if (num == 0) best.off_support = std::max(best.off_support, p.gaussian);
      std::size_t j = 0;
      while (j < dim && idx[j] == ext[j] - 1) idx[j++] = 0;
      if (j == dim) break;
      ++idx[j];
    }
  }
  return best;
}

/// Square grid of `per_axis` points per coordinate on [lo, hi]^D.
inline std::vector<Eigen::VectorXd> theta_grid(std::size_t dim, double lo, double hi, int per_axis) {
  std::vector<Eigen::VectorXd> out;
  std::vector<int> idx(dim, 0);
  auto coord = [&](int i) { return per_axis == 1 ? (lo + hi) / 2 : lo + (hi - lo) * i / (per_axis - 1); };
  while (true) {
    Eigen::VectorXd t(static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < dim; ++j) t(static_cast<Eigen::Index>(j)) = coord(idx[j]);
    out.push_back(t);
    std::size_t j = 0;
    while (j < dim && idx[j] == per_axis - 1) idx[j++] = 0;
    if (j == dim) break;
    ++idx[j];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Strong ratio and lower bound

/// s_n = coordinatewise round(n E[X]).
inline IntVector mean_rounded(const LatticeDistribution& f, int n) {
  auto m = f.mean();
  IntVector s;
  for (const auto& mj : m) {
    Rational x = mj * n + Rational(1, 2);
    Integer fl;
    mpz_fdiv_q(fl.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    s.push_back(static_cast<int>(fl.get_si()));
  }
  return s;
}

/// P(S_{n-m} = s_n - b) / P(S_n = s_n), exact.
inline Rational strong_ratio(const LatticeDistribution& f, int n, int m, const IntVector& b, const IntVector& s_n) {
  if (m < 0 || m > n) throw std::invalid_argument("strong_ratio: need 0 <= m <= n");
  if (!lattice_aperiodic(f)) throw NotAperiodic("strong_ratio: distribution is not aperiodic");
  WalkAtomTable t(f.dimension());
  std::optional<Rational> numer;
  for (int i = 0; i <= n; ++i) {
    if (i > 0) t = t.convolve(f);
    if (i == n - m) numer = t.probability(sub(s_n, b));
  }
  Rational den = t.probability(s_n);
  if (den == 0) throw ZeroDenominator("strong_ratio: P(S_n = s_n) = 0 at n = " + std::to_string(n));
  return *numer / den;
}

struct LowerBoundReport {
  std::vector<int> n;
  /// log P(S_n=s_n) + n psi(s_n/n) - n log(1-eta); the bound holds iff >= 0.
  std::vector<double> margin;
  /// Smallest n0 in the range with the bound holding for every n >= n0.
  std::optional<int> n0;
  bool all_pass() const {
    for (double m : margin)
      if (m < 0) return false;
    return true;
  }
};

/// Checks P(S_n=s_n) e^{n psi(s_n/n)} >= (1-eta)^n for n in [n_min, n_max].
inline LowerBoundReport lower_bound_check(const LatticeDistribution& f, int n_min, int n_max,
                                          const std::function<IntVector(int)>& s_rule, double eta) {
  if (!(eta > 0 && eta < 1)) throw std::invalid_argument("lower_bound_check: need 0 < eta < 1");
  LowerBoundReport rep;
  WalkAtomTable t(f.dimension());
  for (int n = 1; n <= n_max; ++n) {
    t = t.convolve(f);
    if (n < n_min) continue;
    IntVector s = s_rule(n);
    std::vector<Rational> x;
    for (int v : s) {
      x.emplace_back(v, n);
      x.back().canonicalize();
    }
    Rational p = t.probability(s);
    double psi = legendre(f, x);
    double margin = (p == 0 || std::isinf(psi)) ? -std::numeric_limits<double>::infinity()
                                               : detail::log_probability(p) + n * psi - n * std::log1p(-eta);
    rep.n.push_back(n);
    rep.margin.push_back(margin);
  }
  for (std::size_t i = rep.n.size(); i-- > 0;) {
    if (rep.margin[i] < 0) break;
    rep.n0 = rep.n[i];
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Weighted ratio

/// Joint finite law of (G, H'), independent of the walk.
class WeightPair {
 public:
  WeightPair(std::size_t dim, std::map<std::pair<int, IntVector>, Rational> atoms, int c = 1)
      : dim_(dim), atoms_(std::move(atoms)), c_(c) {
    Rational sum = 0, zero = 0;
    for (const auto& [gh, p] : atoms_) {
      if (gh.first < 0) throw std::invalid_argument("WeightPair: G must be non-negative");
      if (gh.second.size() != dim_) throw std::invalid_argument("WeightPair: H' of wrong dimension");
      if (p < 0) throw std::invalid_argument("WeightPair: negative mass");
      sum += p;
      if (gh.first == 0) zero += p;
    }
    if (sum != 1) throw std::invalid_argument("WeightPair: masses sum to " + sum.get_str());
    if (zero == 1) throw std::invalid_argument("WeightPair: P(G = 0) = 1");
  }

  /// G = 1 and H' = 0.
  static WeightPair trivial(std::size_t dim) { return WeightPair(dim, {{{1, IntVector(dim, 0)}, Rational(1)}}); }

  std::size_t dimension() const { return dim_; }
  int exponent() const { return c_; }
  const std::map<std::pair<int, IntVector>, Rational>& atoms() const { return atoms_; }

  /// G <= |H'|^c on every atom.
  bool satisfies_growth_bound() const {
    for (const auto& [gh, p] : atoms_) {
      double h = 0;
      for (int v : gh.second) h += std::abs(v);
      if (static_cast<double>(gh.first) > std::pow(h, c_)) return false;
    }
    return true;
  }

  /// E[G; H' + W = w] against an exact table for W.
  Rational expectation(const WalkAtomTable& t, const IntVector& w) const {
    Rational acc = 0;
    for (const auto& [gh, p] : atoms_) {
      if (gh.first == 0) continue;
      acc += p * gh.first * t.probability(sub(w, gh.second));
    }
    return acc;
  }

 private:
  std::size_t dim_;
  std::map<std::pair<int, IntVector>, Rational> atoms_;
  int c_;
};

/// E[G; H' + W_{n-l} = w_n - b] / E[G; H' + W_n = w_n], exact.
inline Rational weighted_ratio(const LatticeDistribution& f, const WeightPair& w, int n, int l, const IntVector& b,
                               const IntVector& w_n) {
  if (l < 0 || l > n) throw std::invalid_argument("weighted_ratio: need 0 <= l <= n");
  if (w.dimension() != f.dimension()) throw std::invalid_argument("weighted_ratio: dimension mismatch");
  WalkAtomTable t(f.dimension());
  std::optional<Rational> numer;
  for (int i = 0; i <= n; ++i) {
    if (i > 0) t = t.convolve(f);
    if (i == n - l) numer = w.expectation(t, sub(w_n, b));
  }
  Rational den = w.expectation(t, w_n);
  if (den == 0) throw ZeroDenominator("weighted_ratio: zero denominator at n = " + std::to_string(n));
  return *numer / den;
}

// ---------------------------------------------------------------------------
// Embedding of the multi-type walks

/// Y = (U, V) on Z^{2d-1}: V = v_i with probability a_i (v_i = e_i for
/// i < d, v_d = 0) and U | V = v_i has law p^(i).
class EmbeddedWalk {
 public:
  EmbeddedWalk(const OffspringSpec& spec, const SpectralData& sd) : spec_(spec) {
    require_critical(sd);
    a_ = sd.require_exact().a;
    const int d = spec.types();
    std::map<IntVector, Rational> atoms;
    for (int i = 0; i < d; ++i) {
      for (const auto& [k, p] : spec.law(i).atoms()) {
        atoms[delta(k, unit_vector(d, i))] += a_[static_cast<std::size_t>(i)] * p;
      }
    }
    law_ = LatticeDistribution(static_cast<std::size_t>(2 * d - 1), atoms);
    if (!lattice_aperiodic(law_)) throw NotAperiodic("embed_multitype: Y is not aperiodic");
  }

  const LatticeDistribution& law() const { return law_; }
  const std::vector<Rational>& a() const { return a_; }
  int types() const { return spec_.types(); }

  /// delta(x, z) = (x, z_1, ..., z_{d-1}).
  static IntVector delta(const IntVector& x, const IntVector& z) {
    IntVector out = x;
    out.insert(out.end(), z.begin(), z.end() - 1);
    return out;
  }

  /// D(k) = |k|! / prod k_i! * prod a_i^{k_i}.
  Rational D(const IntVector& k) const {
    Rational out = Rational(multinomial(k));
    for (std::size_t i = 0; i < k.size(); ++i) out *= power(a_[i], k[i]);
    return out;
  }

  /// P(W_{|k|} = delta(s, k)).
  Rational embedded_probability(const IntVector& k, const IntVector& s) const {
    return WalkAtomTable::power(law_, total(k)).probability(delta(s, k));
  }

  /// P(S_k = s) with S_k = sum_i S_{i,k_i}.
  Rational multitype_probability(const IntVector& k, const IntVector& s) const {
    const int d = spec_.types();
    WalkAtomTable t(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
      for (int c = 0; c < k[static_cast<std::size_t>(i)]; ++c) t = t.convolve(spec_.law(i));
    return t.probability(s);
  }

  /// P(W_{|k|} = delta(s,k)) == D(k) P(S_k = s).
  bool identity_holds(const IntVector& k, const IntVector& s) const {
    return embedded_probability(k, s) == D(k) * multitype_probability(k, s);
  }

 private:
  OffspringSpec spec_;
  std::vector<Rational> a_;
  LatticeDistribution law_;
};

inline EmbeddedWalk embed_multitype(const OffspringSpec& spec, const SpectralData& sd) { return EmbeddedWalk(spec, sd); }

}  // namespace mtgw
