#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace mtgw;
using fx::q;
using fx::tree;

TEST(TreeProbability, Examples) {
  auto spec = fx::e1();
  EXPECT_EQ(tree_probability(spec, MarkedTree::single(2, 0), 0), q("1/4"));
  EXPECT_EQ(tree_probability(spec, tree(2, Shape{0, {{1, {}}}}), 0), q("1/16"));
  EXPECT_EQ(tree_probability(fx::binary(), tree(1, Shape{0, {{0, {}}, {0, {}}}}), 0), q("1/8"));
}

TEST(TreeProbability, MultinomialFactor) {
  // (1,1) offspring: each of the two arrangements gets half of p(1,1)
  auto spec = fx::e1();
  auto a = tree(2, Shape{0, {{0, {}}, {1, {}}}});
  auto b = tree(2, Shape{0, {{1, {}}, {0, {}}}});
  EXPECT_EQ(tree_probability(spec, a, 0), q("1/4") / 2 * q("1/16"));
  EXPECT_EQ(tree_probability(spec, a, 0), tree_probability(spec, b, 0));
}

TEST(EnumerateProgeny, Examples) {
  auto spec = fx::e1();
  EXPECT_EQ(enumerate_progeny(spec, 0, {1, 0}), q("1/4"));
  EXPECT_EQ(enumerate_progeny(spec, 0, {2, 0}), q("1/16"));
  EXPECT_EQ(enumerate_progeny(spec, 0, {1, 1}), q("1/16"));
  EXPECT_THROW(enumerate_progeny(spec, 0, {6, 6}), CapExceeded);
}

TEST(EnumerateProgeny, AgreesWithTreeList) {
  auto spec = fx::asymmetric();
  for (int a = 1; a <= 4; ++a)
    for (int b = 0; b <= 3; ++b) {
      Rational s = 0;
      for (const auto& [t, p] : enumerate_trees(spec, 0, {a, b})) {
        EXPECT_EQ(t.type_counts(), (IntVector{a, b}));
        EXPECT_EQ(p, tree_probability(spec, t, 0));
        s += p;
      }
      EXPECT_EQ(s, enumerate_progeny(spec, 0, {a, b}));
    }
}

TEST(WalkPmf, Examples) {
  auto spec = fx::e1();
  auto zero = walk_pmf(spec, 0, 0);
  EXPECT_EQ(zero.probability({0, 0}), 1);
  EXPECT_EQ(zero.atom_count(), 1u);
  EXPECT_EQ(walk_pmf(spec, 0, 2).probability({2, 2}), q("1/16"));
  auto b = walk_pmf(fx::binary(), 0, 3);
  EXPECT_EQ(b.atoms(), (std::map<IntVector, Rational>{{{0}, q("1/8")}, {{2}, q("3/8")}, {{4}, q("3/8")}, {{6}, q("1/8")}}));
  EXPECT_EQ(b.total_mass(), 1);
}

TEST(ProgenyViaWalks, Examples) {
  auto spec = fx::e1();
  EXPECT_EQ(progeny_via_walks(spec, 0, {1, 1}), q("1/16"));
  EXPECT_EQ(progeny_via_walks(fx::binary(), 0, {3}), q("1/8"));
  EXPECT_EQ(progeny_via_walks(spec, 0, {2, 1}), enumerate_progeny(spec, 0, {2, 1}));
}

TEST(ProgenyViaWalks, BoundaryCensus) {
  auto spec = fx::e1();
  EXPECT_EQ(progeny_via_walks(spec, 0, {1, 0}), q("1/4"));
  EXPECT_EQ(progeny_via_walks(spec, 0, {2, 0}), q("1/16"));
  EXPECT_EQ(progeny_via_walks(spec, 0, {0, 3}), 0);
  for (int a = 1; a <= 6; ++a) EXPECT_EQ(progeny_via_walks(spec, 0, {a, 0}), enumerate_progeny(spec, 0, {a, 0}));
}

TEST(ProgenyViaWalks, OracleEquivalenceSmall) {
  std::mt19937_64 gen(99);
  std::vector<OffspringSpec> specs{fx::e1(), fx::asymmetric()};
  for (int i = 0; i < 6; ++i) specs.push_back(fx::random_spec(2 + i % 2, gen));
  for (const auto& spec : specs) {
    const int d = spec.types();
    for (Type r = 0; r < d; ++r) {
      IntVector k(static_cast<std::size_t>(d), 0);
      while (true) {
        if (total(k) <= 6) {
          EXPECT_EQ(progeny_via_walks(spec, r, k), enumerate_progeny(spec, r, k));
        }
        std::size_t j = 0;
        while (j < k.size() && k[j] == 6) k[j++] = 0;
        if (j == k.size()) break;
        ++k[j];
      }
    }
  }
}

TEST(ProgenyViaWalks, MassBelowOne) {
  for (const auto& spec : {fx::e1(), fx::asymmetric()}) {
    Rational s = 0;
    for (int a = 0; a <= 10; ++a)
      for (int b = 0; a + b <= 10; ++b) s += progeny_via_walks(spec, 0, {a, b});
    EXPECT_LE(s, 1);
    EXPECT_GT(s, q("1/2"));
  }
}

TEST(ProgenyViaWalks, SubcriticalMassApproachesOne) {
  auto sub = OffspringSpec::from_atoms(1, {{{{0}, q("2/3")}, {{2}, q("1/3")}}});
  Rational s10 = 0, s30 = 0;
  for (int n = 1; n <= 30; ++n) {
    auto p = progeny_via_walks(sub, 0, {n}, 40);
    if (n <= 10) s10 += p;
    s30 += p;
  }
  EXPECT_LT(s10, s30);
  EXPECT_GT(s30.get_d(), 0.99);
  EXPECT_LE(s30, 1);
}

TEST(ElementaryForests, Examples) {
  EXPECT_EQ(det_elementary_forests({{1, 0}, {0, 1}}), 1);
  EXPECT_EQ(det_elementary_forests({{1, 2}, {3, 4}}), -2);
  EXPECT_THROW(det_elementary_forests(RationalMatrix(9, std::vector<Rational>(9, Rational(0)))), DimensionTooLarge);
}

TEST(ElementaryForests, RandomMatrices) {
  std::mt19937_64 gen(17);
  std::uniform_int_distribution<int> entry(-5, 5);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t d = 1 + static_cast<std::size_t>(rep % 4);
    RationalMatrix m(d, std::vector<Rational>(d));
    for (auto& row : m)
      for (auto& v : row) v = entry(gen);
    EXPECT_EQ(det_elementary_forests(m), determinant(m));
  }
}

TEST(TypeTrees, Counts) {
  EXPECT_EQ(enumerate_type_trees(1, 0).size(), 1u);
  EXPECT_EQ(enumerate_type_trees(2, 0).size(), 1u);
  auto t3 = enumerate_type_trees(3, 0);
  EXPECT_EQ(t3.size(), 3u);
  EXPECT_EQ(enumerate_type_trees(4, 2).size(), 16u);
  for (const auto& t : t3) {
    auto mt = t.to_marked_tree();
    EXPECT_EQ(mt.type_counts(), (IntVector{1, 1, 1}));
    EXPECT_EQ(mt.root_mark(), 0);
  }
}

TEST(DetSTreeExpansion, Examples) {
  EXPECT_EQ(detS_tree_expansion({{4}}, 0), 1);
  EXPECT_EQ(integer_determinant(build_S_matrix({{4}}, 0)), 1);
  std::vector<IntVector> zero{{0, 0}, {0, 0}};
  EXPECT_EQ(detS_tree_expansion(zero, 0), integer_determinant(build_S_matrix(zero, 0)));
}

TEST(DetSTreeExpansion, RandomRealizations) {
  std::mt19937_64 gen(23);
  std::uniform_int_distribution<int> entry(0, 6);
  for (int rep = 0; rep < 300; ++rep) {
    const int d = 1 + rep % 4;
    std::vector<IntVector> sums(static_cast<std::size_t>(d), IntVector(static_cast<std::size_t>(d)));
    for (auto& s : sums)
      for (auto& v : s) v = entry(gen);
    Type r = rep % d;
    EXPECT_EQ(detS_tree_expansion(sums, r), integer_determinant(build_S_matrix(sums, r)));
  }
}

TEST(PairCounts, Examples) {
  auto spec = fx::e1();
  TypePairCounts one{{{0, 0}, {1, 0}}};
  EXPECT_EQ(one.census(0), (IntVector{1, 1}));
  EXPECT_EQ(pair_counts_pmf(spec, 0, one), q("1/16"));
  TypePairCounts none{{{0, 0}, {0, 0}}};
  EXPECT_EQ(pair_counts_pmf(spec, 0, none), q("1/4"));
}

TEST(PairCounts, MarginalizesToProgeny) {
  auto spec = fx::asymmetric();
  for (int a = 1; a <= 4; ++a)
    for (int b = 0; b <= 3; ++b) {
      IntVector k{a, b};
      Rational s = 0;
      // kappa columns: kappa_j in N^2 with row sums k - e_r
      for (int k00 = 0; k00 <= a; ++k00)
        for (int k10 = 0; k10 <= b; ++k10) {
          TypePairCounts pc{{{k00, a - 1 - k00}, {k10, b - k10}}};
          if (a - 1 - k00 < 0) continue;
          s += pair_counts_pmf(spec, 0, pc);
        }
      EXPECT_EQ(s, progeny_via_walks(spec, 0, k)) << a << "," << b;
    }
}

TEST(PairCounts, MatchesTreeEnumeration) {
  auto spec = fx::e1();
  const IntVector k{3, 2};
  std::map<std::vector<IntVector>, Rational> by_kappa;
  for (const auto& [t, p] : enumerate_trees(spec, 0, k)) {
    std::vector<IntVector> kappa(2, IntVector(2, 0));
    for (std::size_t u = 1; u < t.size(); ++u)
      ++kappa[static_cast<std::size_t>(t.node(u).mark)][static_cast<std::size_t>(t.node(*t.parent(u)).mark)];
    by_kappa[kappa] += p;
  }
  for (const auto& [kappa, p] : by_kappa) EXPECT_EQ(pair_counts_pmf(spec, 0, TypePairCounts{kappa}), p);
}

TEST(TruncatedTrees, SumToOne) {
  for (const auto& spec : {fx::e1(), fx::asymmetric()}) {
    for (int h = 0; h <= 2; ++h) {
      Rational s = 0;
      for (const auto& [t, p] : enumerate_truncated_trees(spec, 1, h, 100000)) {
        EXPECT_EQ(p, truncated_tree_probability(spec, t, 1, h));
        s += p;
      }
      EXPECT_EQ(s, 1);
    }
  }
}
