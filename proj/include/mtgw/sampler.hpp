#pragma once

// Random generation: unconditioned GW trees, height-truncated Kesten trees
// with their special spine, and rejection sampling of trees conditioned on
// their census by types.

#include "mtgw/errors.hpp"
#include "mtgw/marked_tree.hpp"
#include "mtgw/offspring.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace mtgw {

/// Seeded 64-bit generator with derivable independent streams.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream), engine_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ull))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Independent stream for worker / experiment cell `id`.
  Rng split(std::uint64_t id) const { return Rng(seed_, stream_ * 0x100000001b3ull + id + 1); }

  std::uint64_t operator()() { return engine_(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) {
    // Lemire-style rejection keeps the draw unbiased.
    const std::uint64_t bound = n;
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t x;
    do x = engine_(); while (x >= limit);
    return static_cast<std::size_t>(x % bound);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {  // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

/// Inverse-CDF draw from a finite weighted list.
template <class Item>
class DiscreteTable {
 public:
  DiscreteTable() = default;
  explicit DiscreteTable(std::vector<std::pair<Item, double>> weighted) {
    double acc = 0;
    for (auto& [item, w] : weighted) {
      if (w <= 0) continue;
      acc += w;
      items_.push_back(std::move(item));
      cumulative_.push_back(acc);
    }
    if (items_.empty()) throw ZeroMass("DiscreteTable: no positive weight");
  }

  const Item& draw(Rng& rng) const {
    double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return items_[static_cast<std::size_t>(it - cumulative_.begin())];
  }

 private:
  std::vector<Item> items_;
  std::vector<double> cumulative_;
};

namespace detail {

inline std::vector<DiscreteTable<IntVector>> offspring_tables(const OffspringSpec& spec) {
  std::vector<DiscreteTable<IntVector>> out;
  for (const auto& law : spec.laws()) {
    std::vector<std::pair<IntVector, double>> w;
    for (const auto& [k, p] : law.atoms()) w.emplace_back(k, p.get_d());
    out.emplace_back(std::move(w));
  }
  return out;
}

/// Child types in a uniformly random arrangement of the multiset k.
inline std::vector<Type> arrange_children(const IntVector& k, Rng& rng) {
  std::vector<Type> kids;
  for (std::size_t j = 0; j < k.size(); ++j)
    for (int c = 0; c < k[j]; ++c) kids.push_back(static_cast<Type>(j));
  for (std::size_t i = kids.size(); i > 1; --i) std::swap(kids[i - 1], kids[rng.below(i)]);
  return kids;
}

inline Type draw_type(const std::vector<double>& law, Rng& rng) {
  std::vector<std::pair<Type, double>> w;
  for (std::size_t i = 0; i < law.size(); ++i) w.emplace_back(static_cast<Type>(i), law[i]);
  return DiscreteTable<Type>(std::move(w)).draw(rng);
}

}  // namespace detail

/// Reusable GW sampler (per-type offspring tables built once).
class GwSampler {
 public:
  explicit GwSampler(const OffspringSpec& spec) : d_(spec.types()), tables_(detail::offspring_tables(spec)) {}

  /// Breadth-first generation. Returns nullopt once more than node_budget
  /// individuals exist. With `census` set, also returns nullopt as soon as
  /// the tree cannot end with exactly that census.
  std::optional<MarkedTree> try_sample(Type root, std::size_t node_budget, Rng& rng,
                                       const IntVector* census = nullptr) const {
    const IntVector* type_caps = census;
    std::vector<TypedNode> nodes;
    nodes.push_back(TypedNode{{}, root});
    IntVector counts(static_cast<std::size_t>(d_), 0);
    counts[static_cast<std::size_t>(root)] = 1;
    if (nodes.size() > node_budget) return std::nullopt;
    if (type_caps && counts[static_cast<std::size_t>(root)] > (*type_caps)[static_cast<std::size_t>(root)])
      return std::nullopt;
    for (std::size_t head = 0; head < nodes.size(); ++head) {
      const IntVector& k = tables_[static_cast<std::size_t>(nodes[head].mark)].draw(rng);
      const int n_kids = total(k);
      if (n_kids == 0) continue;
      if (nodes.size() + static_cast<std::size_t>(n_kids) > node_budget) return std::nullopt;
      if (type_caps) {
        for (std::size_t j = 0; j < k.size(); ++j)
          if (counts[j] + k[j] > (*type_caps)[j]) return std::nullopt;
      }
      auto kids = detail::arrange_children(k, rng);
      for (std::size_t c = 0; c < kids.size(); ++c) {
        Address a = nodes[head].address;
        a.push_back(static_cast<int>(c + 1));
        nodes.push_back(TypedNode{std::move(a), kids[c]});
        ++counts[static_cast<std::size_t>(kids[c])];
      }
    }
    if (census && counts != *census) return std::nullopt;
    return MarkedTree(d_, std::move(nodes));
  }

 private:
  int d_;
  std::vector<DiscreteTable<IntVector>> tables_;
};

inline MarkedTree sample_gw(const OffspringSpec& spec, const std::vector<double>& root_law,
                            std::size_t node_budget, Rng& rng) {
  GwSampler sampler(spec);
  Type root = detail::draw_type(root_law, rng);
  auto t = sampler.try_sample(root, node_budget, rng);
  if (!t) throw BudgetExceeded("sample_gw: population passed the node budget");
  return *std::move(t);
}

struct SampledKesten {
  /// r_h of the Kesten tree.
  MarkedTree tree;
  /// Special individuals v*_0, ..., v*_h.
  std::vector<TypedNode> spine;
};

/// Kesten tree truncated at height h. The root type follows alpha-hat;
/// special nodes reproduce by p-hat and pass the mark to one child chosen
/// with probability proportional to a*_{type}.
inline SampledKesten sample_kesten(const OffspringSpec& spec, const SpectralData& sd,
                                   const std::vector<double>& root_law, int h, Rng& rng) {
  require_critical(sd);
  if (h < 0) throw std::invalid_argument("sample_kesten: negative height");
  const int d = spec.types();
  std::vector<double> a_star(sd.a_star.data(), sd.a_star.data() + sd.a_star.size());
  auto root_hat = size_biased_root(root_law, a_star);
  auto normal = detail::offspring_tables(spec);
  std::vector<DiscreteTable<IntVector>> special;
  for (auto& w : size_biased_weights(spec, sd)) special.emplace_back(std::move(w));

  std::vector<TypedNode> nodes;
  std::vector<bool> is_special;
  nodes.push_back(TypedNode{{}, detail::draw_type(root_hat, rng)});
  is_special.push_back(true);
  std::vector<TypedNode> spine{nodes.front()};

  for (std::size_t head = 0; head < nodes.size(); ++head) {
    if (nodes[head].depth() >= h) continue;
    const Type m = nodes[head].mark;
    const bool sp = is_special[head];
    const IntVector& k = sp ? special[static_cast<std::size_t>(m)].draw(rng)
                            : normal[static_cast<std::size_t>(m)].draw(rng);
    auto kids = detail::arrange_children(k, rng);
    std::size_t chosen = kids.size();
    if (sp) {
      std::vector<std::pair<std::size_t, double>> w;
      for (std::size_t c = 0; c < kids.size(); ++c) w.emplace_back(c, a_star[static_cast<std::size_t>(kids[c])]);
      chosen = DiscreteTable<std::size_t>(std::move(w)).draw(rng);
    }
    for (std::size_t c = 0; c < kids.size(); ++c) {
      Address a = nodes[head].address;
      a.push_back(static_cast<int>(c + 1));
      nodes.push_back(TypedNode{std::move(a), kids[c]});
      is_special.push_back(c == chosen);
      if (c == chosen) spine.push_back(nodes.back());
    }
  }
  return SampledKesten{MarkedTree(d, std::move(nodes)), std::move(spine)};
}

/// Rejection sampler for tau given |tau| = k, root type r.
inline MarkedTree sample_conditioned(const OffspringSpec& spec, Type r, const IntVector& k,
                                     std::size_t max_attempts, Rng& rng) {
  GwSampler sampler(spec);
  const auto budget = static_cast<std::size_t>(total(k));
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    auto t = sampler.try_sample(r, budget, rng, &k);
    if (t && t->type_counts() == k) return *std::move(t);
  }
  throw Exhausted("sample_conditioned: no tree with the requested census after " + std::to_string(max_attempts) +
                      " attempts",
                  0.0);
}

/// Batch variant that also reports the acceptance rate.
struct ConditionedBatch {
  std::vector<MarkedTree> trees;
  std::size_t attempts = 0;
  double acceptance_rate() const {
    return attempts == 0 ? 0.0 : static_cast<double>(trees.size()) / static_cast<double>(attempts);
  }
};

inline ConditionedBatch sample_conditioned_batch(const OffspringSpec& spec, Type r, const IntVector& k,
                                                 std::size_t wanted, std::size_t max_attempts, Rng& rng) {
  GwSampler sampler(spec);
  const auto budget = static_cast<std::size_t>(total(k));
  ConditionedBatch out;
  while (out.trees.size() < wanted) {
    if (out.attempts >= max_attempts)
      throw Exhausted("sample_conditioned_batch: attempt budget exhausted", out.acceptance_rate());
    ++out.attempts;
    auto t = sampler.try_sample(r, budget, rng, &k);
    if (t && t->type_counts() == k) out.trees.push_back(*std::move(t));
  }
  return out;
}

}  // namespace mtgw
