#pragma once

// Exact laws of the total progeny by types.
//
// Two independent engines compute P_r(|tau| = k):
//   * enumerate_progeny: recursive generation over offspring vectors,
//     bounded by the remaining census (brute-force oracle);
//   * progeny_via_walks: the hitting-time formula for the census
//       P_r(|tau| = k) = E[det S(k,r); S_k + e_r = k] / prod_i k_i
//     evaluated by enumerating joint atoms of d independent exact walks.
// Plus the determinant machinery behind it: elementary-forest expansions,
// the type-tree expansion of det S(k,r), and the law of the type-pair
// counts B_ij.

#include "mtgw/distribution.hpp"
#include "mtgw/errors.hpp"
#include "mtgw/linalg.hpp"
#include "mtgw/marked_tree.hpp"
#include "mtgw/offspring.hpp"

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <utility>
#include <vector>

namespace mtgw {

inline constexpr int kDefaultEnumerationCap = 10;
inline constexpr int kDefaultWalkCap = 24;

// ---------------------------------------------------------------------------
// Tree probabilities

/// P_r(tau = t) = prod_u [k_u^(1)!...k_u^(d)! / |k_u|!] p^(M(u))(k_u(t)).
inline Rational tree_probability(const OffspringSpec& spec, const MarkedTree& t, Type r) {
  if (t.root_mark() != r) throw std::invalid_argument("tree_probability: root mark differs from r");
  Rational prob = 1;
  for (std::size_t u = 0; u < t.size(); ++u) {
    IntVector k = t.offspring(u);
    Rational p = spec.law(t.node(u).mark).mass(k);
    if (p == 0) return 0;
    prob *= p;
    prob /= multinomial(k);
  }
  return prob;
}

/// P_r(r_h(tau) = t): only individuals strictly below height h reproduce.
inline Rational truncated_tree_probability(const OffspringSpec& spec, const MarkedTree& t, Type r, int h) {
  if (t.root_mark() != r) throw std::invalid_argument("truncated_tree_probability: root mark differs from r");
  if (t.height() > h) return 0;
  Rational prob = 1;
  for (std::size_t u = 0; u < t.size(); ++u) {
    if (t.node(u).depth() >= h) continue;
    IntVector k = t.offspring(u);
    Rational p = spec.law(t.node(u).mark).mass(k);
    if (p == 0) return 0;
    prob *= p;
    prob /= multinomial(k);
  }
  return prob;
}

// ---------------------------------------------------------------------------
// Brute-force engine

namespace detail {

class ForestEnumerator {
 public:
  explicit ForestEnumerator(const OffspringSpec& spec) : spec_(spec) {}

  /// Probability that independent GW trees rooted at `pending` (counts by
  /// type) have total census exactly `remaining`.
  Rational forest(const IntVector& pending, const IntVector& remaining) {
    if (!dominated(pending, remaining)) return 0;
    auto it = std::find_if(pending.begin(), pending.end(), [](int c) { return c > 0; });
    if (it == pending.end()) {
      bool empty = std::all_of(remaining.begin(), remaining.end(), [](int c) { return c == 0; });
      return empty ? Rational(1) : Rational(0);
    }
    auto key = std::make_pair(pending, remaining);
    if (auto m = memo_.find(key); m != memo_.end()) return m->second;
    const auto i = static_cast<std::size_t>(it - pending.begin());
    IntVector rest = pending;
    --rest[i];
    IntVector left = remaining;
    --left[i];
    Rational acc = 0;
    for (const auto& [v, p] : spec_.law(static_cast<Type>(i)).atoms()) {
      IntVector next = add(rest, v);
      if (!dominated(next, left)) continue;
      acc += p * forest(next, left);
    }
    memo_.emplace(std::move(key), acc);
    return acc;
  }

 private:
  const OffspringSpec& spec_;
  std::map<std::pair<IntVector, IntVector>, Rational> memo_;
};

}  // namespace detail

inline Rational enumerate_progeny(const OffspringSpec& spec, Type r, const IntVector& k,
                                  int cap = kDefaultEnumerationCap) {
  if (static_cast<int>(k.size()) != spec.types()) throw std::invalid_argument("enumerate_progeny: census size");
  if (total(k) > cap) throw CapExceeded("enumerate_progeny: |k| exceeds the cap");
  if (!nonnegative(k)) return 0;
  detail::ForestEnumerator e(spec);
  return e.forest(unit_vector(spec.types(), r), k);
}

/// Every plane tree with root type r and census k that has positive
/// probability, with its probability. Exponential; meant for |k| <= 8.
inline std::vector<std::pair<MarkedTree, Rational>> enumerate_trees(const OffspringSpec& spec, Type r,
                                                                    const IntVector& k) {
  const int d = spec.types();
  std::vector<std::pair<MarkedTree, Rational>> out;
  if (!nonnegative(k) || k[static_cast<std::size_t>(r)] < 1) return out;
  std::vector<TypedNode> nodes{TypedNode{{}, r}};
  IntVector counts = unit_vector(d, r);

  // Distinct arrangements of a multiset of child types.
  auto arrangements = [](const IntVector& v) {
    std::vector<Type> kids;
    for (std::size_t j = 0; j < v.size(); ++j)
      for (int c = 0; c < v[j]; ++c) kids.push_back(static_cast<Type>(j));
    std::vector<std::vector<Type>> all;
    do all.push_back(kids); while (std::next_permutation(kids.begin(), kids.end()));
    return all;
  };

  std::function<void(std::size_t, Rational)> expand = [&](std::size_t head, Rational prob) {
    if (head == nodes.size()) {
      if (counts == k) out.emplace_back(MarkedTree(d, nodes), prob);
      return;
    }
    const TypedNode parent = nodes[head];
    for (const auto& [v, p] : spec.law(parent.mark).atoms()) {
      IntVector next = add(counts, v);
      if (!dominated(next, k)) continue;
      Rational weight = prob * p / multinomial(v);
      for (const auto& kids : arrangements(v)) {
        const std::size_t before = nodes.size();
        for (std::size_t c = 0; c < kids.size(); ++c) {
          Address a = parent.address;
          a.push_back(static_cast<int>(c + 1));
          nodes.push_back(TypedNode{std::move(a), kids[c]});
        }
        IntVector saved = counts;
        counts = next;
        expand(head + 1, weight);
        counts = saved;
        nodes.resize(before);
      }
    }
  };
  expand(0, Rational(1));
  return out;
}

/// Every tree t of height <= h with P_r(r_h(tau) = t) > 0, with that
/// probability. Individuals at height h are left childless.
inline std::vector<std::pair<MarkedTree, Rational>> enumerate_truncated_trees(const OffspringSpec& spec, Type r,
                                                                              int h, std::size_t max_trees = 2'000'000) {
  const int d = spec.types();
  std::vector<std::pair<MarkedTree, Rational>> out;
  std::vector<TypedNode> nodes{TypedNode{{}, r}};
  std::function<void(std::size_t, Rational)> expand = [&](std::size_t head, Rational prob) {
    if (head == nodes.size()) {
      if (out.size() >= max_trees) throw CapExceeded("enumerate_truncated_trees: too many trees");
      out.emplace_back(MarkedTree(d, nodes), prob);
      return;
    }
    const TypedNode parent = nodes[head];
    if (parent.depth() >= h) {
      expand(head + 1, prob);
      return;
    }
    for (const auto& [v, p] : spec.law(parent.mark).atoms()) {
      std::vector<Type> kids;
      for (std::size_t j = 0; j < v.size(); ++j)
        for (int c = 0; c < v[j]; ++c) kids.push_back(static_cast<Type>(j));
      Rational weight = prob * p / multinomial(v);
      do {
        const std::size_t before = nodes.size();
        for (std::size_t c = 0; c < kids.size(); ++c) {
          Address a = parent.address;
          a.push_back(static_cast<int>(c + 1));
          nodes.push_back(TypedNode{std::move(a), kids[c]});
        }
        expand(head + 1, weight);
        nodes.resize(before);
      } while (std::next_permutation(kids.begin(), kids.end()));
    }
  };
  expand(0, Rational(1));
  return out;
}

// ---------------------------------------------------------------------------
// Walks and the determinant formula

/// Exact law of S_{i,n} = X_{i,1} + ... + X_{i,n}.
inline WalkAtomTable walk_pmf(const OffspringSpec& spec, Type i, int n) {
  return WalkAtomTable::power(spec.law(i), n);
}

/// Fraction-free (Bareiss) integer determinant.
inline Integer integer_determinant(std::vector<std::vector<Integer>> a) {
  const std::size_t n = a.size();
  if (n == 0) return 1;
  Integer prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (a[k][k] == 0) {
      std::size_t p = k + 1;
      while (p < n && a[p][k] == 0) ++p;
      if (p == n) return 0;
      std::swap(a[p], a[k]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j) {
        a[i][j] = a[i][j] * a[k][k] - a[i][k] * a[k][j];
        mpz_divexact(a[i][j].get_mpz_t(), a[i][j].get_mpz_t(), prev.get_mpz_t());
      }
    prev = a[k][k];
  }
  return sign * a[n - 1][n - 1];
}

/// S_ij(k,r) = -S^{(j)}_{i,k_i} + (S_k^{(j)} + 1{r=i}) 1{i=j}, from the
/// realized per-type sums S_{i,k_i} (one vector per type).
inline std::vector<std::vector<Integer>> build_S_matrix(const std::vector<IntVector>& sums, Type r) {
  const std::size_t d = sums.size();
  std::vector<std::vector<Integer>> s(d, std::vector<Integer>(d, Integer(0)));
  IntVector total_sum(d, 0);
  for (const auto& v : sums) total_sum = add(total_sum, v);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      s[i][j] = -sums[i][j];
      if (i == j) s[i][j] += total_sum[j] + (static_cast<Type>(i) == r ? 1 : 0);
    }
  return s;
}

namespace detail {

/// Restriction to the types with k_j > 0: laws keep only offspring vectors
/// with no child of a dropped type, and are projected onto the kept
/// coordinates. The weights become sub-stochastic; the formulas involved
/// are polynomial identities in the weights, so they still apply.
struct ReducedSystem {
  std::vector<Type> active;
  std::vector<std::map<IntVector, Rational>> laws;
  IntVector k;
  std::size_t root = 0;  // index of r within `active`
};

inline ReducedSystem reduce(const OffspringSpec& spec, Type r, const IntVector& k) {
  ReducedSystem red;
  for (Type j = 0; j < spec.types(); ++j)
    if (k[static_cast<std::size_t>(j)] > 0) red.active.push_back(j);
  for (std::size_t a = 0; a < red.active.size(); ++a) {
    if (red.active[a] == r) red.root = a;
    red.k.push_back(k[static_cast<std::size_t>(red.active[a])]);
    std::map<IntVector, Rational> law;
    for (const auto& [v, p] : spec.law(red.active[a]).atoms()) {
      bool inside = true;
      for (Type j = 0; j < spec.types(); ++j)
        if (v[static_cast<std::size_t>(j)] > 0 && k[static_cast<std::size_t>(j)] == 0) inside = false;
      if (!inside) continue;
      IntVector proj;
      for (Type j : red.active) proj.push_back(v[static_cast<std::size_t>(j)]);
      law.emplace(std::move(proj), p);
    }
    red.laws.push_back(std::move(law));
  }
  return red;
}

/// Visits every tuple (s_1, ..., s_d) of atoms, s_i from tables[i], whose
/// sum equals target, passing the product of numerators.
inline void for_each_joint_atom(const std::vector<WalkAtomTable>& tables, const IntVector& target,
                                const std::function<void(const std::vector<IntVector>&, const Integer&)>& visit) {
  const std::size_t d = tables.size();
  std::vector<IntVector> chosen(d);
  std::function<void(std::size_t, const IntVector&, const Integer&)> rec =
      [&](std::size_t i, const IntVector& partial, const Integer& weight) {
        if (i + 1 == d) {
          IntVector last = sub(target, partial);
          if (!nonnegative(last)) return;
          Integer n = tables[i].numerator(last);
          if (n == 0) return;
          chosen[i] = last;
          visit(chosen, weight * n);
          return;
        }
        tables[i].for_each_atom([&](const IntVector& x, const Integer& n) {
          IntVector next = add(partial, x);
          if (!dominated(next, target)) return;
          chosen[i] = x;
          rec(i + 1, next, weight * n);
        });
      };
  rec(0, IntVector(target.size(), 0), Integer(1));
}

}  // namespace detail

/// Census law through the walks. Censuses with zero entries are handled by
/// restricting to the types that occur.
inline Rational progeny_via_walks(const OffspringSpec& spec, Type r, const IntVector& k,
                                  int cap = kDefaultWalkCap) {
  if (static_cast<int>(k.size()) != spec.types()) throw std::invalid_argument("progeny_via_walks: census size");
  if (total(k) > cap) throw CapExceeded("progeny_via_walks: |k| exceeds the cap");
  if (!nonnegative(k) || k[static_cast<std::size_t>(r)] < 1) return 0;
  auto red = detail::reduce(spec, r, k);
  const std::size_t d = red.active.size();
  std::vector<WalkAtomTable> tables;
  Integer den = 1;
  for (std::size_t i = 0; i < d; ++i) {
    tables.push_back(WalkAtomTable::power_atoms(d, red.laws[i], red.k[i]));
    den *= tables.back().denominator();
    den *= red.k[i];
  }
  IntVector target = red.k;
  --target[red.root];
  Integer acc = 0;
  detail::for_each_joint_atom(tables, target, [&](const std::vector<IntVector>& sums, const Integer& w) {
    acc += w * integer_determinant(build_S_matrix(sums, static_cast<Type>(red.root)));
  });
  Rational q(acc, den);
  q.canonicalize();
  return q;
}

// ---------------------------------------------------------------------------
// Elementary forests and type trees

/// Visits every rooted forest on {0..d-1} as a parent map (-1 for roots).
inline void for_each_forest(int d, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> parent(static_cast<std::size_t>(d), -2);
  auto creates_cycle = [&](int j, int p) {
    while (p >= 0) {
      if (p == j) return true;
      p = parent[static_cast<std::size_t>(p)];
      if (p == -2) return false;
    }
    return false;
  };
  std::function<void(int)> rec = [&](int j) {
    if (j == d) {
      visit(parent);
      return;
    }
    for (int p = -1; p < d; ++p) {
      if (p == j || (p >= 0 && creates_cycle(j, p))) continue;
      parent[static_cast<std::size_t>(j)] = p;
      rec(j + 1);
      parent[static_cast<std::size_t>(j)] = -2;
    }
  };
  rec(0);
}

/// det(m) = (-1)^d sum over elementary forests f of prod_j m_{j_f, j}, with
/// m_{0,j} = -sum_i m_ij standing for "j is a root".
inline Rational det_elementary_forests(const RationalMatrix& m) {
  const int d = static_cast<int>(m.size());
  if (d > 8) throw DimensionTooLarge("det_elementary_forests: d > 8");
  std::vector<Rational> root_weight(static_cast<std::size_t>(d), Rational(0));
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) root_weight[static_cast<std::size_t>(j)] -= m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  Rational acc = 0;
  for_each_forest(d, [&](const std::vector<int>& parent) {
    Rational term = 1;
    for (int j = 0; j < d && term != 0; ++j) {
      int p = parent[static_cast<std::size_t>(j)];
      term *= p < 0 ? root_weight[static_cast<std::size_t>(j)] : m[static_cast<std::size_t>(p)][static_cast<std::size_t>(j)];
    }
    acc += term;
  });
  return (d % 2 == 0) ? acc : -acc;
}

/// A tree on the type set with one individual per type, as a parent map.
struct TypeTree {
  Type root = 0;
  /// parent[j] is the type of the parent of type j; -1 at the root.
  std::vector<int> parent;

  /// As a marked tree, children listed by increasing type.
  MarkedTree to_marked_tree() const {
    const int d = static_cast<int>(parent.size());
    std::function<Shape(Type)> build = [&](Type u) {
      Shape s{u, {}};
      for (Type j = 0; j < d; ++j)
        if (parent[static_cast<std::size_t>(j)] == u) s.children.push_back(build(j));
      return s;
    };
    return MarkedTree::from_shape(d, build(root));
  }

  bool operator==(const TypeTree&) const = default;
};

inline std::vector<TypeTree> enumerate_type_trees(int d, Type r) {
  std::vector<TypeTree> out;
  for_each_forest(d, [&](const std::vector<int>& parent) {
    int roots = 0;
    for (int p : parent) roots += (p < 0);
    if (roots == 1 && parent[static_cast<std::size_t>(r)] < 0) out.push_back(TypeTree{r, parent});
  });
  return out;
}

/// det S(k,r) = sum_{t in T_r} prod_{j != r} S^{(j)}_{j_t, k_{j_t}}, where
/// sums[i] is the realized S_{i,k_i}.
inline Integer detS_tree_expansion(const std::vector<IntVector>& sums, Type r) {
  const int d = static_cast<int>(sums.size());
  Integer acc = 0;
  for (const auto& t : enumerate_type_trees(d, r)) {
    Integer term = 1;
    for (Type j = 0; j < d; ++j) {
      if (j == r) continue;
      term *= sums[static_cast<std::size_t>(t.parent[static_cast<std::size_t>(j)])][static_cast<std::size_t>(j)];
    }
    acc += term;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Type-pair counts

/// kappa[i][j]: number of type-i individuals whose parent has type j.
struct TypePairCounts {
  std::vector<IntVector> kappa;

  /// k = e_r + sum_j kappa_j (row sums plus the root).
  IntVector census(Type r) const {
    IntVector k(kappa.size(), 0);
    for (std::size_t i = 0; i < kappa.size(); ++i)
      for (int v : kappa[i]) k[i] += v;
    ++k[static_cast<std::size_t>(r)];
    return k;
  }

  IntVector column(std::size_t j) const {
    IntVector c(kappa.size());
    for (std::size_t i = 0; i < kappa.size(); ++i) c[i] = kappa[i][j];
    return c;
  }
};

/// P_r(B = kappa) = det(Delta(k) - kappa) prod_j P(S_{j,k_j} = kappa_j) / k_j.
/// Types absent from the census are dropped (see detail::reduce).
inline Rational pair_counts_pmf(const OffspringSpec& spec, Type r, const TypePairCounts& pc) {
  const auto d = static_cast<std::size_t>(spec.types());
  if (pc.kappa.size() != d) throw std::invalid_argument("pair_counts_pmf: kappa must be d x d");
  IntVector k = pc.census(r);
  // A type with no individuals cannot be anyone's parent.
  for (std::size_t j = 0; j < d; ++j)
    if (k[j] == 0)
      for (std::size_t i = 0; i < d; ++i)
        if (pc.kappa[i][j] != 0) return 0;
  auto red = detail::reduce(spec, r, k);
  const std::size_t dr = red.active.size();
  std::vector<std::vector<Integer>> m(dr, std::vector<Integer>(dr, Integer(0)));
  Rational prod = 1;
  for (std::size_t b = 0; b < dr; ++b) {
    IntVector col;
    for (std::size_t a = 0; a < dr; ++a)
      col.push_back(pc.kappa[static_cast<std::size_t>(red.active[a])][static_cast<std::size_t>(red.active[b])]);
    for (std::size_t a = 0; a < dr; ++a) m[a][b] = (a == b ? red.k[a] : 0) - col[a];
    auto table = WalkAtomTable::power_atoms(dr, red.laws[b], red.k[b]);
    prod *= table.probability(col);
    prod /= red.k[b];
    if (prod == 0) return 0;
  }
  return Rational(integer_determinant(m)) * prod;
}

}  // namespace mtgw
