#pragma once

// Graft-class probabilities for GW, Kesten and census-conditioned trees,
// the convergence experiment built on them, and the mono-type partition
// embedding with its tilted offspring law.

#include "mtgw/errors.hpp"
#include "mtgw/marked_tree.hpp"
#include "mtgw/offspring.hpp"
#include "mtgw/progeny_exact.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mtgw {

/// Memoized P_r(|tau| = k) from the walk engine.
class ProgenyCache {
 public:
  explicit ProgenyCache(const OffspringSpec& spec, int cap = 400) : spec_(spec), cap_(cap) {}

  const Rational& operator()(Type r, const IntVector& k) {
    auto key = std::make_pair(r, k);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    Rational v = nonnegative(k) ? progeny_via_walks(spec_, r, k, cap_) : Rational(0);
    return memo_.emplace(std::move(key), std::move(v)).first->second;
  }

  const OffspringSpec& spec() const { return spec_; }

 private:
  OffspringSpec spec_;
  int cap_;
  std::map<std::pair<Type, IntVector>, Rational> memo_;
};

// ---------------------------------------------------------------------------
// Graft-class probabilities

/// P_r(tau in T(t,x)): product over the base without the leaf x.
inline Rational gw_graft_prob(const OffspringSpec& spec, const GraftClass& g, Type r) {
  const auto& t = g.base();
  if (t.root_mark() != r) throw std::invalid_argument("gw_graft_prob: root mark of the base differs from r");
  Rational prob = 1;
  for (std::size_t u = 0; u < t.size(); ++u) {
    if (t.node(u).address == g.leaf().address) continue;
    IntVector k = t.offspring(u);
    Rational p = spec.law(t.node(u).mark).mass(k);
    if (p == 0) return 0;
    prob *= p;
    prob /= multinomial(k);
  }
  return prob;
}

/// P_r(tau* in T(t,x)) = (a*_i / a*_r) P_r(tau in T(t,x)), i = M(x).
inline Rational kesten_graft_prob(const OffspringSpec& spec, const SpectralData& sd, const GraftClass& g, Type r) {
  require_critical(sd);
  const auto& as = sd.require_exact().a_star;
  return as[static_cast<std::size_t>(g.leaf().mark)] / as[static_cast<std::size_t>(r)] * gw_graft_prob(spec, g, r);
}

/// P_r(tau in T(t,x) | |tau| = k), computed through the Kesten form and
/// directly; the two must agree.
inline Rational conditioned_graft_prob(const OffspringSpec& spec, const SpectralData& sd, const GraftClass& g, Type r,
                                       const IntVector& k, ProgenyCache& cache) {
  const Rational& den = cache(r, k);
  if (den == 0) throw ZeroDenominator("conditioned_graft_prob: P_r(|tau| = k) = 0");
  const Type i = g.leaf().mark;
  IntVector rest = add(sub(k, g.base().type_counts()), unit_vector(spec.types(), i));
  const Rational& num = cache(i, rest);
  const auto& as = sd.require_exact().a_star;
  Rational via_kesten = as[static_cast<std::size_t>(r)] / as[static_cast<std::size_t>(i)] * (num / den) *
                        kesten_graft_prob(spec, sd, g, r);
  Rational direct = gw_graft_prob(spec, g, r) * num / den;
  if (via_kesten != direct) throw std::logic_error("conditioned_graft_prob: the two routes disagree");
  return direct;
}

inline Rational conditioned_graft_prob(const OffspringSpec& spec, const SpectralData& sd, const GraftClass& g, Type r,
                                       const IntVector& k) {
  ProgenyCache cache(spec);
  return conditioned_graft_prob(spec, sd, g, r, k, cache);
}

/// P_r(r_h(tau*) = t, v*_h = x) built from the spine construction: special
/// nodes reproduce by p-hat and hand the mark to a child with probability
/// a*_{type} / <k, a*>; everyone else reproduces by p.
/// `hat` is size_biased_offspring(spec, sd).
inline Rational kesten_truncated_pmf(const OffspringSpec& spec, const OffspringSpec& hat, const SpectralData& sd,
                                     const MarkedTree& t, const TypedNode& x, int h) {
  const auto& as = sd.require_exact().a_star;
  if (t.height() > h || x.depth() != h || !t.contains(x)) return 0;
  Rational prob = 1;
  for (std::size_t u = 0; u < t.size(); ++u) {
    const auto& node = t.node(u);
    if (node.depth() >= h) continue;
    IntVector k = t.offspring(u);
    const bool special = is_prefix(node.address, x.address);
    if (!special) {
      prob *= spec.law(node.mark).mass(k);
      prob /= multinomial(k);
    } else {
      prob *= hat.law(node.mark).mass(k);
      prob /= multinomial(k);
      Rational weight = 0;
      for (std::size_t j = 0; j < k.size(); ++j) weight += as[j] * k[j];
      if (weight == 0) return 0;
      Address next = x.address;
      next.resize(node.address.size() + 1);
      auto c = t.find(next);
      prob *= as[static_cast<std::size_t>(t.node(*c).mark)] / weight;
    }
    if (prob == 0) return 0;
  }
  return prob;
}

// ---------------------------------------------------------------------------
// Probes

/// Compact label: marks are 1-based, the leaf carries a '*'.
inline std::string describe(const GraftClass& g) {
  const auto& t = g.base();
  std::function<std::string(std::size_t)> rec = [&](std::size_t u) {
    std::string s = std::to_string(t.node(u).mark + 1);
    if (t.node(u).address == g.leaf().address) s += "*";
    const auto& kids = t.children(u);
    if (!kids.empty()) {
      s += "(";
      for (std::size_t c = 0; c < kids.size(); ++c) {
        if (c) s += ",";
        s += rec(kids[c]);
      }
      s += ")";
    }
    return s;
  };
  return rec(0);
}

/// All plane trees with root type r and at most max_size nodes.
inline std::vector<MarkedTree> enumerate_shapes(int d, Type r, int max_size) {
  std::vector<MarkedTree> out;
  std::vector<TypedNode> nodes{TypedNode{{}, r}};
  std::function<void(std::size_t)> expand = [&](std::size_t head) {
    if (head == nodes.size()) {
      out.emplace_back(d, nodes);
      return;
    }
    const int room = max_size - static_cast<int>(nodes.size());
    for (int m = 0; m <= room; ++m) {
      // every sequence of m child types
      std::vector<int> seq(static_cast<std::size_t>(m), 0);
      while (true) {
        const std::size_t before = nodes.size();
        for (int c = 0; c < m; ++c) {
          Address a = nodes[head].address;
          a.push_back(c + 1);
          nodes.push_back(TypedNode{std::move(a), seq[static_cast<std::size_t>(c)]});
        }
        expand(head + 1);
        nodes.resize(before);
        int j = 0;
        while (j < m && seq[static_cast<std::size_t>(j)] == d - 1) seq[static_cast<std::size_t>(j++)] = 0;
        if (j == m) break;
        ++seq[static_cast<std::size_t>(j)];
      }
    }
  };
  expand(0);
  return out;
}

/// Every graft class whose base has root r and at most max_size nodes.
inline std::vector<GraftClass> enumerate_probes(int d, Type r, int max_size) {
  std::vector<GraftClass> out;
  for (const auto& t : enumerate_shapes(d, r, max_size))
    for (std::size_t leaf : t.leaves()) out.emplace_back(t, t.node(leaf));
  return out;
}

// ---------------------------------------------------------------------------
// Convergence experiment

/// k(n) = round(n * scale * a), then the nearest census (l1 radius <= 2) of
/// positive probability; nullopt when none is found.
inline std::optional<IntVector> feasible_census(const std::vector<Rational>& a, int n, const Rational& scale, Type r,
                                                ProgenyCache& cache) {
  IntVector k;
  for (const auto& ai : a) {
    Rational x = ai * scale * n + Rational(1, 2);
    Integer fl;
    mpz_fdiv_q(fl.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    k.push_back(static_cast<int>(fl.get_si()));
  }
  if (cache(r, k) > 0) return k;
  const int d = static_cast<int>(k.size());
  std::vector<IntVector> moves;
  for (int j = 0; j < d; ++j) {
    moves.push_back(unit_vector(d, j));
    moves.push_back(sub(IntVector(static_cast<std::size_t>(d), 0), unit_vector(d, j)));
  }
  for (const auto& m : moves)
    if (auto c = add(k, m); nonnegative(c) && cache(r, c) > 0) return c;
  for (const auto& m1 : moves)
    for (const auto& m2 : moves)
      if (auto c = add(add(k, m1), m2); c != k && nonnegative(c) && cache(r, c) > 0) return c;
  return std::nullopt;
}

struct ExperimentPlan {
  OffspringSpec spec;
  SpectralData spectral;
  Type root = 0;
  /// k(n) = round(n * scale * a); scale = d gives k(n) = (n,...,n) when a is uniform.
  Rational scale = 1;
  int n_min = 1;
  int n_max = 10;
  std::vector<GraftClass> probes;
  std::vector<IntVector> key_offsets;
};

struct ExperimentRow {
  std::size_t probe = 0;
  int n = 0;
  IntVector k;
  Rational conditioned;
  Rational kesten;
  Rational delta;
};

struct KeyRatioRow {
  int n = 0;
  IntVector k;
  IntVector b;
  Rational ratio;  // P_r(|tau| = k - b) / P_r(|tau| = k)
};

struct ProbeSummary {
  std::string label;
  /// Delta is non-increasing over the feasible n of the run.
  bool decreasing = true;
  Rational final_delta;
};

struct ExperimentTable {
  std::vector<ExperimentRow> rows;
  std::vector<KeyRatioRow> key_ratios;
  std::vector<ProbeSummary> summary;
  std::vector<int> skipped;

  bool all_decreasing() const {
    for (const auto& s : summary)
      if (!s.decreasing) return false;
    return true;
  }
};

inline ExperimentTable convergence_experiment(const ExperimentPlan& plan, ProgenyCache& cache) {
  ExperimentTable table;
  const auto& a = plan.spectral.require_exact().a;
  table.summary.resize(plan.probes.size());
  for (std::size_t p = 0; p < plan.probes.size(); ++p) table.summary[p].label = describe(plan.probes[p]);
  std::vector<std::optional<Rational>> last(plan.probes.size());
  for (int n = plan.n_min; n <= plan.n_max; ++n) {
    auto k = feasible_census(a, n, plan.scale, plan.root, cache);
    if (!k) {
      table.skipped.push_back(n);
      continue;
    }
    for (std::size_t p = 0; p < plan.probes.size(); ++p) {
      const auto& g = plan.probes[p];
      ExperimentRow row;
      row.probe = p;
      row.n = n;
      row.k = *k;
      row.conditioned = conditioned_graft_prob(plan.spec, plan.spectral, g, plan.root, *k, cache);
      row.kesten = kesten_graft_prob(plan.spec, plan.spectral, g, plan.root);
      row.delta = abs(row.conditioned - row.kesten);
      auto& s = table.summary[p];
      if (last[p] && row.delta > *last[p]) s.decreasing = false;
      last[p] = row.delta;
      s.final_delta = row.delta;
      table.rows.push_back(std::move(row));
    }
    for (const auto& b : plan.key_offsets) {
      KeyRatioRow kr;
      kr.n = n;
      kr.k = *k;
      kr.b = b;
      kr.ratio = cache(plan.root, sub(*k, b)) / cache(plan.root, *k);
      table.key_ratios.push_back(std::move(kr));
    }
  }
  return table;
}

inline ExperimentTable convergence_experiment(const ExperimentPlan& plan) {
  ProgenyCache cache(plan.spec);
  return convergence_experiment(plan, cache);
}

// ---------------------------------------------------------------------------
// Mono-type partition embedding

struct MonotypePartition {
  std::map<int, Rational> q;          // offspring pmf
  std::vector<std::vector<int>> cells;  // A_1, ..., A_d
  std::vector<Rational> target;       // alpha-tilde

  int types() const { return static_cast<int>(cells.size()); }

  /// alpha(i) = q(A_i).
  std::vector<Rational> alpha() const {
    std::vector<Rational> out;
    for (const auto& c : cells) {
      Rational s = 0;
      for (int l : c) s += mass(l);
      out.push_back(s);
    }
    return out;
  }

  Rational mass(int l) const {
    auto it = q.find(l);
    return it == q.end() ? Rational(0) : it->second;
  }

  /// Index of the cell holding l, or -1.
  int cell_of(int l) const {
    for (std::size_t i = 0; i < cells.size(); ++i)
      for (int v : cells[i])
        if (v == l) return static_cast<int>(i);
    return -1;
  }

  void validate() const {
    if (cells.empty()) throw InvalidPartition("monotype: no cells");
    Rational sum = 0;
    for (const auto& [l, p] : q) {
      if (l < 0 || p < 0) throw InvalidPartition("monotype: q must be a pmf on N");
      sum += p;
    }
    if (sum != 1) throw InvalidPartition("monotype: q sums to " + sum.get_str());
    std::set<int> seen;
    for (const auto& c : cells) {
      if (c.empty()) throw InvalidPartition("monotype: empty cell");
      for (int l : c) {
        if (mass(l) == 0) throw InvalidPartition("monotype: cell point outside supp(q)");
        if (!seen.insert(l).second) throw InvalidPartition("monotype: cells overlap");
      }
    }
    for (const auto& [l, p] : q)
      if (p > 0 && !seen.count(l)) throw InvalidPartition("monotype: cells do not cover supp(q)");
    const auto& a1 = cells.front();
    if (std::find(a1.begin(), a1.end(), 0) == a1.end()) throw InvalidPartition("monotype: 0 must lie in A_1");
    if (a1.size() <= 1) throw InvalidPartition("monotype: A_1 needs more than one point");
  }
};

struct MonotypeEmbedding {
  OffspringSpec spec;
  std::vector<Rational> alpha;
  std::vector<Rational> alpha_star;
};

/// p^(i)(k) = 1{|k| in A_i} q(|k|)/alpha(i) multinom(k) alpha^k.
inline MonotypeEmbedding monotype_embed(const MonotypePartition& mp) {
  mp.validate();
  const int d = mp.types();
  auto alpha = mp.alpha();
  std::vector<std::map<IntVector, Rational>> laws(static_cast<std::size_t>(d));
  std::vector<Rational> alpha_star(static_cast<std::size_t>(d), Rational(0));
  for (int i = 0; i < d; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (int l : mp.cells[ui]) {
      alpha_star[ui] += l * mp.mass(l) / alpha[ui];
      // compositions of l into d parts
      IntVector k(static_cast<std::size_t>(d), 0);
      std::function<void(std::size_t, int)> rec = [&](std::size_t j, int left) {
        if (j + 1 == k.size()) {
          k[j] = left;
          Rational p = mp.mass(l) / alpha[ui] * Rational(multinomial(k));
          for (std::size_t t = 0; t < k.size(); ++t) p *= power(alpha[t], k[t]);
          laws[ui][k] += p;
          return;
        }
        for (int v = 0; v <= left; ++v) {
          k[j] = v;
          rec(j + 1, left - v);
        }
      };
      rec(0, l);
    }
  }
  MonotypeEmbedding out{OffspringSpec::from_atoms(d, laws), alpha, alpha_star};
  auto m = mean_matrix(out.spec);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j)
      if (m[i][j] != alpha_star[i] * alpha[j]) throw std::logic_error("monotype_embed: M != alpha*^T alpha");
  Rational rho = 0;
  for (std::size_t i = 0; i < alpha.size(); ++i) rho += alpha_star[i] * alpha[i];
  if (rho != 1) throw NotCritical("monotype_embed: q is not critical (rho = " + rho.get_str() + ")");
  return out;
}

struct PartitionValues {
  std::vector<double> f;  // f_{A_i}(gamma)
  double h = 0;           // sum_i x_i E_{i,gamma}[Z]
  double m = 0;           // sum_i x_i inf A_i
};

/// f_{A_i}(gamma) = sum_{l in A_i} gamma^l q(l) and
/// h(gamma) = sum_i x_i gamma f'_{A_i}(gamma) / f_{A_i}(gamma), the mean of
/// the gamma-tilted cell laws weighted by x = alpha-tilde.
inline PartitionValues partition_functions(const MonotypePartition& mp, double gamma) {
  if (!(gamma > 0)) throw std::invalid_argument("partition_functions: gamma must be positive");
  PartitionValues v;
  for (std::size_t i = 0; i < mp.cells.size(); ++i) {
    double f = 0, gf1 = 0;
    int lo = mp.cells[i].front();
    for (int l : mp.cells[i]) {
      double w = std::pow(gamma, l) * mp.mass(l).get_d();
      f += w;
      gf1 += l * w;
      lo = std::min(lo, l);
    }
    v.f.push_back(f);
    v.h += mp.target[i].get_d() * gf1 / f;
    v.m += mp.target[i].get_d() * lo;
  }
  return v;
}

/// Exact h(gamma) for rational gamma.
inline Rational partition_h_exact(const MonotypePartition& mp, const Rational& gamma) {
  Rational h = 0;
  for (std::size_t i = 0; i < mp.cells.size(); ++i) {
    Rational f = 0, gf1 = 0;
    for (int l : mp.cells[i]) {
      Rational w = power(gamma, l) * mp.mass(l);
      f += w;
      gf1 += l * w;
    }
    h += mp.target[i] * gf1 / f;
  }
  return h;
}

/// Root of h(gamma) = 1 by bisection with a geometrically grown bracket.
inline double solve_gamma(const MonotypePartition& mp, double tol = 1e-12, double bracket_cap = 1e8) {
  mp.validate();
  if (mp.target.size() != mp.cells.size()) throw std::invalid_argument("solve_gamma: target size");
  auto h = [&](double g) { return partition_functions(mp, g).h; };
  if (partition_functions(mp, 1.0).m >= 1) throw PreconditionFailed("solve_gamma: m >= 1");
  double lo = 1.0, hi = 1.0;
  while (h(lo) > 1) {
    lo /= 2;
    if (lo < 1e-300) throw NoRoot("solve_gamma: h stays above 1 near 0");
  }
  while (h(hi) < 1) {
    hi *= 2;
    if (hi > bracket_cap) throw NoRoot("solve_gamma: h stays below 1 up to the bracket cap");
  }
  for (int it = 0; it < 400 && hi - lo > tol * std::max(1.0, lo); ++it) {
    double mid = 0.5 * (lo + hi);
    if (h(mid) < 1)
      lo = mid;
    else
      hi = mid;
  }
  double g = 0.5 * (lo + hi);
  // Final polish: pick the bracket end with the smaller residual.
  for (double c : {lo, hi})
    if (std::fabs(h(c) - 1) < std::fabs(h(g) - 1)) g = c;
  return g;
}

/// gamma as an exact rational when a small-denominator candidate solves
/// h(gamma) = 1 exactly.
inline std::optional<Rational> exact_gamma(const MonotypePartition& mp, double gamma, long max_den = 100000) {
  Rational c = rationalize(gamma, max_den);
  if (c > 0 && partition_h_exact(mp, c) == 1) return c;
  return std::nullopt;
}

/// q~(l) = alpha-tilde(i) / f_{A_i}(gamma) gamma^l q(l) for l in A_i.
inline std::map<int, double> tilted_q(const MonotypePartition& mp, double gamma) {
  auto v = partition_functions(mp, gamma);
  std::map<int, double> out;
  for (std::size_t i = 0; i < mp.cells.size(); ++i)
    for (int l : mp.cells[i]) out[l] = mp.target[i].get_d() / v.f[i] * std::pow(gamma, l) * mp.mass(l).get_d();
  return out;
}

inline std::map<int, Rational> tilted_q_exact(const MonotypePartition& mp, const Rational& gamma) {
  std::map<int, Rational> out;
  for (std::size_t i = 0; i < mp.cells.size(); ++i) {
    Rational f = 0;
    for (int l : mp.cells[i]) f += power(gamma, l) * mp.mass(l);
    for (int l : mp.cells[i]) out[l] = mp.target[i] / f * power(gamma, l) * mp.mass(l);
  }
  return out;
}

/// One-type OffspringSpec from a pmf on N.
inline OffspringSpec monotype_spec(const std::map<int, Rational>& q) {
  std::map<IntVector, Rational> atoms;
  for (const auto& [l, p] : q) atoms[{l}] += p;
  return OffspringSpec::from_atoms(1, {atoms});
}

/// Census by cells: number of individuals whose offspring count lies in A_i.
inline IntVector cell_census(const MonotypePartition& mp, const MarkedTree& t) {
  IntVector k(mp.cells.size(), 0);
  for (std::size_t u = 0; u < t.size(); ++u) {
    int c = mp.cell_of(static_cast<int>(t.children(u).size()));
    if (c < 0) throw std::invalid_argument("cell_census: offspring count outside the partition");
    ++k[static_cast<std::size_t>(c)];
  }
  return k;
}

}  // namespace mtgw
