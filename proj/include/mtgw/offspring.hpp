#pragma once

// Multi-type offspring distributions: validation and JSON I/O, the mean
// matrix and its Perron data, criticality / singularity / aperiodicity
// checks, and the size-biased laws that drive the Kesten spine.

#include "mtgw/distribution.hpp"
#include "mtgw/errors.hpp"
#include "mtgw/linalg.hpp"
#include "mtgw/rational.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mtgw {

/// d finite-support laws p^(i) on N^d, exact rational weights.
class OffspringSpec {
 public:
  OffspringSpec(int d, std::vector<LatticeDistribution> laws) : d_(d), laws_(std::move(laws)) {
    if (d_ < 1) throw SpecError("d must be >= 1");
    if (static_cast<int>(laws_.size()) != d_)
      throw SpecError("expected " + std::to_string(d_) + " laws, got " + std::to_string(laws_.size()));
    for (int i = 0; i < d_; ++i) {
      const auto& law = laws_[static_cast<std::size_t>(i)];
      if (static_cast<int>(law.dimension()) != d_) throw SpecError("law dimension mismatch", i);
      for (const auto& kv : law.atoms())
        if (!nonnegative(kv.first)) throw SpecError("offspring vectors must be in N^d", i);
    }
  }

  /// Builds a spec from raw atom maps, reporting the first law that is not
  /// a probability distribution.
  static OffspringSpec from_atoms(int d, const std::vector<std::map<IntVector, Rational>>& atoms) {
    std::vector<LatticeDistribution> laws;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      Rational sum = 0;
      for (const auto& kv : atoms[i]) {
        if (kv.second < 0 || kv.second > 1)
          throw SpecError("law of type " + std::to_string(i + 1) + " has a weight outside [0,1]",
                          static_cast<int>(i));
        if (static_cast<int>(kv.first.size()) != d)
          throw SpecError("law of type " + std::to_string(i + 1) + " has an atom of wrong dimension",
                          static_cast<int>(i));
        Rational m = kv.second;
        m.canonicalize();
        sum += m;
      }
      if (sum != 1)
        throw SpecError("law of type " + std::to_string(i + 1) + " sums to " + sum.get_str(),
                        static_cast<int>(i));
      laws.emplace_back(static_cast<std::size_t>(d), atoms[i]);
    }
    return OffspringSpec(d, std::move(laws));
  }

  int types() const { return d_; }
  const LatticeDistribution& law(Type i) const { return laws_.at(static_cast<std::size_t>(i)); }
  const std::vector<LatticeDistribution>& laws() const { return laws_; }

  /// f^(i)(s) = E[s^{X_i}]
  double generating_function(Type i, const std::vector<double>& s) const {
    double acc = 0;
    for (const auto& [k, p] : law(i).atoms()) {
      double term = p.get_d();
      for (int j = 0; j < d_; ++j) term *= std::pow(s[static_cast<std::size_t>(j)], k[static_cast<std::size_t>(j)]);
      acc += term;
    }
    return acc;
  }

  bool operator==(const OffspringSpec& o) const { return d_ == o.d_ && laws_ == o.laws_; }

 private:
  int d_;
  std::vector<LatticeDistribution> laws_;
};

// --- JSON -------------------------------------------------------------------
// {"d":2,"laws":[[{"k":[0,0],"p":"1/4"}, ...], ...]}

inline Rational rational_from_json(const nlohmann::json& v) {
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<long>());
  throw std::invalid_argument("probabilities must be rational strings \"num/den\"");
}

inline OffspringSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("d") || !j.contains("laws")) throw SpecError("spec needs \"d\" and \"laws\"");
  int d = j.at("d").get<int>();
  const auto& laws = j.at("laws");
  if (!laws.is_array() || static_cast<int>(laws.size()) != d)
    throw SpecError("\"laws\" must be an array of d laws");
  std::vector<std::map<IntVector, Rational>> atoms(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < laws.size(); ++i) {
    try {
      for (const auto& atom : laws[i]) {
        auto k = atom.at("k").get<IntVector>();
        atoms[i][k] += rational_from_json(atom.at("p"));
      }
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      throw SpecError("law of type " + std::to_string(i + 1) + ": " + e.what(), static_cast<int>(i));
    }
  }
  return OffspringSpec::from_atoms(d, atoms);
}

inline nlohmann::json to_json(const OffspringSpec& spec) {
  nlohmann::json laws = nlohmann::json::array();
  for (const auto& law : spec.laws()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [k, p] : law.atoms()) arr.push_back({{"k", k}, {"p", p.get_str()}});
    laws.push_back(arr);
  }
  return {{"d", spec.types()}, {"laws", laws}};
}

// --- mean matrix and spectral data ---------------------------------------------

/// m_ij = sum_k k_j p^(i)(k)
inline RationalMatrix mean_matrix(const OffspringSpec& spec) {
  const auto d = static_cast<std::size_t>(spec.types());
  RationalMatrix m = zero_matrix(d, d);
  for (std::size_t i = 0; i < d; ++i) m[i] = spec.law(static_cast<Type>(i)).mean();
  return m;
}

inline Eigen::MatrixXd to_eigen(const RationalMatrix& m) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.empty() ? 0 : m[0].size()));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j].get_d();
  return out;
}

/// Positivity of M^n for n = (d-1)^2 + 1 (Wielandt's bound).
inline bool is_primitive(const RationalMatrix& m) {
  const std::size_t d = m.size();
  std::vector<std::vector<bool>> base(d, std::vector<bool>(d));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) base[i][j] = m[i][j] > 0;
  auto pattern = base;
  const std::size_t bound = (d - 1) * (d - 1) + 1;
  for (std::size_t step = 1; step < bound; ++step) {
    std::vector<std::vector<bool>> next(d, std::vector<bool>(d, false));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t l = 0; l < d; ++l)
        if (pattern[i][l])
          for (std::size_t j = 0; j < d; ++j)
            if (base[l][j]) next[i][j] = true;
    pattern = std::move(next);
  }
  for (const auto& row : pattern)
    for (bool b : row)
      if (!b) return false;
  return true;
}

enum class Criticality { subcritical, critical, supercritical };

inline std::string to_string(Criticality c) {
  switch (c) {
    case Criticality::subcritical: return "subcritical";
    case Criticality::critical: return "critical";
    case Criticality::supercritical: return "supercritical";
  }
  return "?";
}

struct ExactEigenData {
  Rational rho;
  std::vector<Rational> a;       // left, <a,1> = 1
  std::vector<Rational> a_star;  // right, <a,a*> = 1
};

struct SpectralData {
  RationalMatrix mean;
  Eigen::MatrixXd M;
  double rho = 0;
  Eigen::VectorXd a;
  Eigen::VectorXd a_star;
  bool primitive = false;
  Criticality criticality = Criticality::subcritical;
  /// Criticality decided in exact arithmetic (rational Perron root).
  bool certified = false;
  std::optional<ExactEigenData> exact;

  const ExactEigenData& require_exact() const {
    if (!exact) throw InexactSpectralData("Perron root is not rational; exact eigenvectors unavailable");
    return *exact;
  }
};

namespace detail {

inline Eigen::VectorXd power_iterate(const Eigen::MatrixXd& m, double& rho, double tol, int max_iter) {
  const Eigen::Index d = m.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Constant(d, 1.0 / static_cast<double>(d));
  // M + I has the same Perron vector and no competing eigenvalue of equal
  // modulus, which keeps the iteration from oscillating.
  Eigen::MatrixXd shifted = m + Eigen::MatrixXd::Identity(d, d);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = shifted * v;
    w /= w.sum();
    double delta = (w - v).lpNorm<Eigen::Infinity>();
    v = w;
    if (delta < tol) break;
  }
  // Rayleigh-quotient refinement.
  for (int it = 0; it < 3; ++it) {
    Eigen::VectorXd mv = m * v;
    double mu = v.dot(mv) / v.dot(v);
    Eigen::MatrixXd a = m - (mu + 1e-14) * Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd w = a.fullPivLu().solve(v);
    if (!w.allFinite() || w.norm() == 0) break;
    w /= w.sum();
    if ((w - v).lpNorm<Eigen::Infinity>() < 1e-16) {
      v = w;
      break;
    }
    v = w;
  }
  Eigen::VectorXd mv = m * v;
  rho = mv.sum() / v.sum();
  return v;
}

inline std::vector<Rational> null_vector(RationalMatrix a) {
  const std::size_t n = a.size();
  auto piv = row_reduce(a);
  if (piv.size() != n - 1) throw Error("null_vector: eigenspace is not one-dimensional");
  std::size_t free = 0;
  while (std::find(piv.begin(), piv.end(), free) != piv.end()) ++free;
  std::vector<Rational> v(n, Rational(0));
  v[free] = 1;
  for (std::size_t r = 0; r < piv.size(); ++r) v[piv[r]] = -a[r][free];
  return v;
}

}  // namespace detail

/// Perron eigenvalue and normalized positive eigenvectors of the mean
/// matrix; exact when the Perron root is rational.
inline SpectralData perron(const OffspringSpec& spec) {
  SpectralData out;
  out.mean = mean_matrix(spec);
  out.M = to_eigen(out.mean);
  out.primitive = is_primitive(out.mean);
  if (!out.primitive) throw NotPrimitive("mean matrix is not primitive");

  constexpr double kTol = 1e-13;
  constexpr int kMaxIter = 100000;
  double rho_right = 0, rho_left = 0;
  Eigen::VectorXd right = detail::power_iterate(out.M, rho_right, kTol, kMaxIter);
  Eigen::VectorXd left = detail::power_iterate(out.M.transpose(), rho_left, kTol, kMaxIter);
  out.rho = 0.5 * (rho_right + rho_left);
  out.a = left / left.sum();
  out.a_star = right / out.a.dot(right);

  // Exact certification: rational candidate root with det(M - rI) = 0.
  const std::size_t d = out.mean.size();
  Rational candidate = rationalize(out.rho, 100000);
  RationalMatrix shifted = out.mean;
  for (std::size_t i = 0; i < d; ++i) shifted[i][i] -= candidate;
  if (std::fabs(candidate.get_d() - out.rho) < 1e-9 && determinant(shifted) == 0) {
    ExactEigenData ex;
    ex.rho = candidate;
    ex.a_star = detail::null_vector(shifted);
    RationalMatrix transposed = zero_matrix(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) transposed[i][j] = shifted[j][i];
    ex.a = detail::null_vector(transposed);
    Rational sa = 0;
    for (const auto& x : ex.a) sa += x;
    for (auto& x : ex.a) x /= sa;
    Rational dot = 0;
    for (std::size_t i = 0; i < d; ++i) dot += ex.a[i] * ex.a_star[i];
    for (auto& x : ex.a_star) x /= dot;
    for (std::size_t i = 0; i < d; ++i) {
      out.a(static_cast<Eigen::Index>(i)) = ex.a[i].get_d();
      out.a_star(static_cast<Eigen::Index>(i)) = ex.a_star[i].get_d();
    }
    out.rho = ex.rho.get_d();
    out.certified = true;
    out.criticality = ex.rho == 1 ? Criticality::critical
                      : ex.rho < 1 ? Criticality::subcritical
                                   : Criticality::supercritical;
    out.exact = std::move(ex);
  } else {
    out.certified = false;
    out.criticality = std::fabs(out.rho - 1) <= 1e-10 ? Criticality::critical
                      : out.rho < 1                   ? Criticality::subcritical
                                                      : Criticality::supercritical;
  }
  return out;
}

/// Union over types of supp p^(i) - supp p^(i) generates Z^d.
inline bool is_aperiodic(const OffspringSpec& spec) {
  const auto d = static_cast<std::size_t>(spec.types());
  std::vector<std::vector<Integer>> rows;
  for (const auto& law : spec.laws()) {
    auto support = law.support();
    for (const auto& s : support) {
      std::vector<Integer> row(d);
      for (std::size_t j = 0; j < d; ++j) row[j] = s[j] - support.front()[j];
      rows.push_back(std::move(row));
    }
  }
  return reduce_lattice(std::move(rows), d).is_full_lattice(d);
}

/// f(s) = Ms identically iff every individual has exactly one child, i.e.
/// every law is supported on the unit vectors.
inline bool is_singular(const OffspringSpec& spec) {
  for (const auto& law : spec.laws())
    for (const auto& kv : law.atoms())
      if (total(kv.first) != 1) return false;
  return true;
}

struct Classification {
  Criticality criticality = Criticality::subcritical;
  bool non_singular = false;
  bool primitive = false;
  bool aperiodic = false;
  /// Criticality decided exactly; otherwise a 1e-10 float test was used.
  bool certified = false;

  /// (H1): primitive, critical, non-singular.
  bool h1() const { return primitive && criticality == Criticality::critical && non_singular; }
  /// (H2): aperiodic.
  bool h2() const { return aperiodic; }
};

inline Classification classify(const OffspringSpec& spec) {
  Classification c;
  c.non_singular = !is_singular(spec);
  c.aperiodic = is_aperiodic(spec);
  c.primitive = is_primitive(mean_matrix(spec));
  if (c.primitive) {
    auto sd = perron(spec);
    c.criticality = sd.criticality;
    c.certified = sd.certified;
  } else {
    // Without primitivity the Perron root is still the spectral radius;
    // use Eigen's eigenvalues for the classification.
    Eigen::EigenSolver<Eigen::MatrixXd> es(to_eigen(mean_matrix(spec)));
    double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    c.criticality = std::fabs(rho - 1) <= 1e-10 ? Criticality::critical
                    : rho < 1                   ? Criticality::subcritical
                                                : Criticality::supercritical;
  }
  return c;
}

inline void require_critical(const SpectralData& sd) {
  if (sd.criticality != Criticality::critical)
    throw NotCritical("offspring distribution is not critical (rho = " + std::to_string(sd.rho) + ")");
}

/// p-hat^(i)(k) = <k, a*> / a*_i p^(i)(k), exact.
inline OffspringSpec size_biased_offspring(const OffspringSpec& spec, const SpectralData& sd) {
  require_critical(sd);
  const auto& ex = sd.require_exact();
  std::vector<LatticeDistribution> laws;
  for (Type i = 0; i < spec.types(); ++i) {
    std::map<IntVector, Rational> atoms;
    for (const auto& [k, p] : spec.law(i).atoms()) {
      Rational dot = 0;
      for (std::size_t j = 0; j < k.size(); ++j) dot += ex.a_star[j] * k[j];
      atoms[k] = dot / ex.a_star[static_cast<std::size_t>(i)] * p;
    }
    laws.emplace_back(static_cast<std::size_t>(spec.types()), atoms);
  }
  return OffspringSpec(spec.types(), std::move(laws));
}

/// Float weights of the size-biased law, usable when a* is irrational.
inline std::vector<std::vector<std::pair<IntVector, double>>> size_biased_weights(const OffspringSpec& spec,
                                                                                 const SpectralData& sd) {
  require_critical(sd);
  std::vector<std::vector<std::pair<IntVector, double>>> out;
  for (Type i = 0; i < spec.types(); ++i) {
    std::vector<std::pair<IntVector, double>> row;
    for (const auto& [k, p] : spec.law(i).atoms()) {
      double dot = 0;
      for (std::size_t j = 0; j < k.size(); ++j) dot += sd.a_star(static_cast<Eigen::Index>(j)) * k[j];
      double w = dot / sd.a_star(i) * p.get_d();
      if (w > 0) row.emplace_back(k, w);
    }
    out.push_back(std::move(row));
  }
  return out;
}

/// alpha-hat(i) = alpha(i) a*_i / <alpha, a*>
template <class Scalar>
std::vector<Scalar> size_biased_root(const std::vector<Scalar>& alpha, const std::vector<Scalar>& a_star) {
  if (alpha.size() != a_star.size()) throw std::invalid_argument("size_biased_root: size mismatch");
  Scalar dot = 0;
  for (std::size_t i = 0; i < alpha.size(); ++i) dot += alpha[i] * a_star[i];
  if (dot == 0) throw ZeroMass("size_biased_root: <alpha, a*> = 0");
  std::vector<Scalar> out(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) out[i] = alpha[i] * a_star[i] / dot;
  return out;
}

/// Q_ij = (a*_j / a*_i) m_ij: type chain along the Kesten spine.
inline Eigen::MatrixXd spine_transition(const SpectralData& sd) {
  require_critical(sd);
  const Eigen::Index d = sd.M.rows();
  Eigen::MatrixXd q(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) q(i, j) = sd.a_star(j) / sd.a_star(i) * sd.M(i, j);
  return q;
}

inline RationalMatrix spine_transition_exact(const SpectralData& sd) {
  require_critical(sd);
  const auto& ex = sd.require_exact();
  const std::size_t d = sd.mean.size();
  RationalMatrix q = zero_matrix(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) q[i][j] = ex.a_star[j] / ex.a_star[i] * sd.mean[i][j];
  return q;
}

}  // namespace mtgw
