#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mtgw;
using fx::q;

namespace {

// |freq - p| within 3 sigma (plus a hair for p near 0 or 1)
void expect_within_3sigma(std::size_t hits, std::size_t n, double p) {
  double freq = static_cast<double>(hits) / static_cast<double>(n);
  double sigma = std::sqrt(p * (1 - p) / static_cast<double>(n));
  EXPECT_LE(std::fabs(freq - p), 3 * sigma + 1e-9) << "freq " << freq << " vs " << p;
}

}  // namespace

TEST(Rng, Reproducible) {
  Rng a(123), b(123);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a(), b());
  Rng c(123), d(123);
  auto s1 = c.split(4), s2 = d.split(4), s3 = d.split(5);
  EXPECT_EQ(s1(), s2());
  EXPECT_NE(s1(), s3());
}

TEST(SampleGw, DeltaZeroGivesRoot) {
  auto spec = OffspringSpec::from_atoms(2, {{{{0, 0}, Rational(1)}}, {{{0, 0}, Rational(1)}}});
  Rng rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_gw(spec, {0.5, 0.5}, 10, rng).size(), 1u);
}

TEST(SampleGw, E1SingleRootFrequency) {
  auto spec = fx::e1();
  Rng rng(2);
  const std::size_t n = 20000;
  std::size_t hits = 0;
  GwSampler s(spec);
  for (std::size_t i = 0; i < n; ++i) {
    auto t = s.try_sample(0, 2000, rng);
    hits += t && t->size() == 1;
  }
  expect_within_3sigma(hits, n, 0.25);
}

TEST(SampleGw, E1SmallTrees) {
  auto spec = fx::binary();
  Rng rng(3);
  const std::size_t n = 20000;
  std::size_t hits = 0;
  GwSampler s(spec);
  for (std::size_t i = 0; i < n; ++i) {
    auto t = s.try_sample(0, 1000, rng);
    hits += t && t->size() == 3;
  }
  expect_within_3sigma(hits, n, 0.125);
}

TEST(SampleGw, BudgetExceeded) {
  auto super = OffspringSpec::from_atoms(1, {{{{3}, Rational(1)}}});
  Rng rng(4);
  EXPECT_THROW(sample_gw(super, {1.0}, 50, rng), BudgetExceeded);
}

TEST(SampleGw, TreeFrequenciesMatchTreeProbability) {
  auto spec = fx::e1();
  Rng rng(5);
  const std::size_t n = 100000;
  std::map<MarkedTree, std::size_t> freq;
  GwSampler s(spec);
  for (std::size_t i = 0; i < n; ++i) {
    auto t = s.try_sample(0, 4, rng);
    if (t) ++freq[*t];
  }
  int checked = 0;
  for (const auto& [t, hits] : freq) {
    if (t.size() > 3) continue;
    expect_within_3sigma(hits, n, tree_probability(spec, t, 0).get_d());
    ++checked;
  }
  EXPECT_EQ(checked, 9);  // 1 + 2 + 2 + 4 plane trees with at most 3 nodes
}

TEST(SampleKesten, HeightZeroRootLaw) {
  auto spec = fx::asymmetric();
  auto sd = perron(spec);
  Rng rng(6);
  const std::size_t n = 20000;
  std::size_t ones = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto k = sample_kesten(spec, sd, {0.5, 0.5}, 0, rng);
    ASSERT_EQ(k.tree.size(), 1u);
    ASSERT_EQ(k.spine.size(), 1u);
    ones += k.tree.root_mark() == 0;
  }
  // alpha-hat = (a*_1, a*_2)/(a*_1 + a*_2) = (1/3, 2/3)
  expect_within_3sigma(ones, n, 1.0 / 3.0);
}

TEST(SampleKesten, E1SpineChain) {
  auto spec = fx::e1();
  auto sd = perron(spec);
  Rng rng(7);
  std::size_t same = 0, steps = 0;
  while (steps < 10000) {
    auto k = sample_kesten(spec, sd, {1.0, 0.0}, 20, rng);
    ASSERT_EQ(k.spine.size(), 21u);
    for (std::size_t i = 0; i + 1 < k.spine.size(); ++i) {
      same += k.spine[i].mark == k.spine[i + 1].mark;
      ++steps;
    }
  }
  expect_within_3sigma(same, steps, 0.5);
}

TEST(SampleKesten, SpineStructure) {
  auto spec = fx::asymmetric();
  auto sd = perron(spec);
  Rng rng(8);
  for (int rep = 0; rep < 200; ++rep) {
    auto k = sample_kesten(spec, sd, {0.5, 0.5}, 4, rng);
    EXPECT_EQ(k.spine.front().address, Address{});
    EXPECT_LE(k.tree.height(), 4);
    for (std::size_t i = 0; i < k.spine.size(); ++i) {
      EXPECT_EQ(k.spine[i].depth(), static_cast<int>(i));
      EXPECT_TRUE(k.tree.contains(k.spine[i]));
      if (i + 1 < k.spine.size()) {
        EXPECT_TRUE(is_prefix(k.spine[i].address, k.spine[i + 1].address));
      }
    }
  }
}

TEST(SampleKesten, BinarySpecialNodesHaveTwoChildren) {
  auto spec = fx::binary();
  auto sd = perron(spec);
  Rng rng(9);
  for (int rep = 0; rep < 200; ++rep) {
    auto k = sample_kesten(spec, sd, {1.0}, 5, rng);
    for (std::size_t i = 0; i + 1 < k.spine.size(); ++i) {
      auto idx = k.tree.find(k.spine[i].address);
      EXPECT_EQ(k.tree.children(*idx).size(), 2u);
    }
  }
}

TEST(SampleKesten, RejectsSubcritical) {
  auto sub = OffspringSpec::from_atoms(1, {{{{0}, q("1/2")}, {{1}, q("1/4")}, {{2}, q("1/4")}}});
  Rng rng(1);
  EXPECT_THROW(sample_kesten(sub, perron(sub), {1.0}, 2, rng), NotCritical);
}

TEST(SampleKesten, TruncationFrequenciesMatchKestenIdentity) {
  auto spec = fx::asymmetric();
  auto sd = perron(spec);
  const auto& as = sd.exact->a_star;
  Rng rng(10);
  const std::size_t n = 60000;
  const int h = 2;
  std::map<std::pair<MarkedTree, Address>, std::size_t> freq;
  for (std::size_t i = 0; i < n; ++i) {
    auto k = sample_kesten(spec, sd, {1.0, 0.0}, h, rng);
    ++freq[{k.tree, k.spine.back().address}];
  }
  int checked = 0;
  for (const auto& [key, hits] : freq) {
    const auto& [t, addr] = key;
    Type i = t.node(*t.find(addr)).mark;
    double p = Rational(as[static_cast<std::size_t>(i)] / as[0] * truncated_tree_probability(spec, t, 0, h)).get_d();
    if (p < 0.01) continue;
    expect_within_3sigma(hits, n, p);
    ++checked;
  }
  EXPECT_GE(checked, 5);
}

TEST(SampleConditioned, Singletons) {
  auto spec = fx::e1();
  Rng rng(11);
  EXPECT_EQ(sample_conditioned(spec, 0, {1, 0}, 10000, rng), MarkedTree::single(2, 0));
  auto expect = MarkedTree::from_shape(2, Shape{0, {{1, {}}}});
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_conditioned(spec, 0, {1, 1}, 10000, rng), expect);
}

TEST(SampleConditioned, MatchesExactConditionedPmf) {
  auto spec = fx::e1();
  Rng rng(12);
  const IntVector k{2, 1};
  auto batch = sample_conditioned_batch(spec, 0, k, 20000, 10000000, rng);
  std::map<MarkedTree, std::size_t> freq;
  for (const auto& t : batch.trees) {
    EXPECT_EQ(t.type_counts(), k);
    ++freq[t];
  }
  auto exact = enumerate_trees(spec, 0, k);
  Rational total = 0;
  for (const auto& [t, p] : exact) total += p;
  ASSERT_EQ(total, enumerate_progeny(spec, 0, k));
  for (const auto& [t, p] : exact) expect_within_3sigma(freq[t], batch.trees.size(), Rational(p / total).get_d());
  EXPECT_GT(batch.acceptance_rate(), 0);
}

TEST(SampleConditioned, Exhausted) {
  auto spec = fx::binary();
  Rng rng(13);
  try {
    sample_conditioned(spec, 0, {2}, 100, rng);  // even sizes are impossible
    FAIL();
  } catch (const Exhausted& e) {
    EXPECT_EQ(e.acceptance_rate, 0.0);
  }
}
