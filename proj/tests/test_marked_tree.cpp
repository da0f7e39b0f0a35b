#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace mtgw;
using fx::tree;

namespace {

// marks are 0-based here: type 1 is mark 0
const Shape kRoot{0, {}};
const Shape kRootChild{0, {{1, {}}}};
const Shape kChain3{0, {{0, {{1, {}}}}}};

std::vector<MarkedTree> random_trees(int count, int d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<MarkedTree> out;
  std::uniform_int_distribution<int> kids(0, 2), mark(0, d - 1);
  while (static_cast<int>(out.size()) < count) {
    std::vector<TypedNode> nodes{TypedNode{{}, mark(gen)}};
    for (std::size_t head = 0; head < nodes.size() && nodes.size() < 12; ++head) {
      int m = nodes[head].depth() < 4 ? kids(gen) : 0;
      for (int c = 1; c <= m; ++c) {
        Address a = nodes[head].address;
        a.push_back(c);
        nodes.push_back(TypedNode{a, mark(gen)});
      }
    }
    out.emplace_back(d, nodes);
  }
  return out;
}

}  // namespace

TEST(Restrict, SingleRootUnchanged) {
  auto t = tree(2, kRoot);
  EXPECT_EQ(restrict(t, 5), t);
}

TEST(Restrict, HeightZeroKeepsRoot) {
  auto r = restrict(tree(2, kRootChild), 0);
  EXPECT_EQ(r, MarkedTree::single(2, 0));
}

TEST(Restrict, ThreeLevelChainToTwo) {
  auto r = restrict(tree(2, kChain3), 1);
  EXPECT_EQ(r, tree(2, Shape{0, {{0, {}}}}));
  EXPECT_EQ(r.height(), 1);
}

TEST(Restrict, IdempotentAndMonotone) {
  for (const auto& t : random_trees(50, 2, 7))
    for (int h = 0; h <= 4; ++h)
      for (int h2 = 0; h2 <= 4; ++h2) EXPECT_EQ(restrict(restrict(t, h), h2), restrict(t, std::min(h, h2)));
}

TEST(LocalDistance, SelfIsZero) {
  auto t = tree(2, kChain3);
  EXPECT_EQ(local_distance(t, t).value, 0);
}

TEST(LocalDistance, AgreeOnlyAtRoot) {
  auto d = local_distance(tree(2, kRoot), tree(2, Shape{0, {{0, {}}}}));
  EXPECT_EQ(d.value, 1);
  EXPECT_FALSE(d.roots_differ);
}

TEST(LocalDistance, DifferentRootsFlagged) {
  auto d = local_distance(MarkedTree::single(2, 0), MarkedTree::single(2, 1));
  EXPECT_EQ(d.value, 1);
  EXPECT_TRUE(d.roots_differ);
}

TEST(LocalDistance, FirstDifferenceAtDepthThree) {
  Shape a{0, {{0, {{0, {{0, {}}}}}}}};
  Shape b{0, {{0, {{0, {{1, {}}}}}}}};
  EXPECT_EQ(local_distance(tree(2, a), tree(2, b)).value, Rational(1, 4));
}

TEST(LocalDistance, Ultrametric) {
  auto ts = random_trees(25, 2, 11);
  for (const auto& a : ts)
    for (const auto& b : ts)
      for (const auto& c : ts) {
        auto ab = local_distance(a, b).value, bc = local_distance(b, c).value, ac = local_distance(a, c).value;
        EXPECT_LE(ac, std::max(ab, bc));
      }
}

TEST(Graft, TrivialTreeIsNoOp) {
  auto t = tree(2, kRootChild);
  TypedNode x{{1}, 1};
  EXPECT_EQ(graft(t, MarkedTree::single(2, 1), x), t);
}

TEST(Graft, AttachChain) {
  auto t = tree(2, kRootChild);
  auto chain = tree(2, Shape{1, {{0, {}}}});
  auto g = graft(t, chain, TypedNode{{1}, 1});
  EXPECT_EQ(g.size(), 3u);
  EXPECT_EQ(g, tree(2, Shape{0, {{1, {{0, {}}}}}}));
}

TEST(Graft, MarkMismatchKeepsBase) {
  auto t = tree(2, kRootChild);
  EXPECT_EQ(graft(t, tree(2, Shape{0, {{0, {}}}}), TypedNode{{1}, 1}), t);
}

TEST(Graft, RejectsNonLeaf) {
  auto t = tree(2, kRootChild);
  EXPECT_THROW(graft(t, MarkedTree::single(2, 0), TypedNode{{}, 0}), std::invalid_argument);
}

TEST(GraftClassMatch, BaseItself) {
  GraftClass g(tree(2, kRootChild), TypedNode{{1}, 1});
  EXPECT_TRUE(matches_graft_class(g.base(), g));
}

TEST(GraftClassMatch, WrongMarkAtLeaf) {
  GraftClass g(tree(2, kRootChild), TypedNode{{1}, 1});
  EXPECT_FALSE(matches_graft_class(tree(2, Shape{0, {{0, {{1, {}}}}}}), g));
}

TEST(GraftClassMatch, GraftedChain) {
  GraftClass g(tree(2, kRootChild), TypedNode{{1}, 1});
  auto t = graft(g.base(), tree(2, Shape{1, {{0, {}}}}), g.leaf());
  EXPECT_TRUE(matches_graft_class(t, g));
}

TEST(GraftClassMatch, ExtraNodeOutsideLeafFails) {
  GraftClass g(tree(2, Shape{0, {{1, {}}, {0, {}}}}), TypedNode{{1}, 1});
  EXPECT_FALSE(matches_graft_class(tree(2, Shape{0, {{1, {}}, {0, {{0, {}}}}}}), g));
}

TEST(GraftProperties, CountsAndMembership) {
  auto ts = random_trees(40, 2, 3);
  for (const auto& t : ts) {
    for (std::size_t leaf : t.leaves()) {
      GraftClass g(t, t.node(leaf));
      for (const auto& other : ts) {
        auto grafted = graft(t, other, g.leaf());
        if (other.root_mark() != g.leaf().mark) {
          EXPECT_EQ(grafted, t);
          continue;
        }
        EXPECT_TRUE(matches_graft_class(grafted, g));
        IntVector expect = sub(add(t.type_counts(), other.type_counts()), unit_vector(2, g.leaf().mark));
        EXPECT_EQ(grafted.type_counts(), expect);
        EXPECT_EQ(grafted.size(), t.size() + other.size() - 1);
      }
    }
  }
}

TEST(TypeCounts, Examples) {
  EXPECT_EQ(type_counts(tree(2, kRoot)), (IntVector{1, 0}));
  EXPECT_EQ(type_counts(tree(2, kRootChild)), (IntVector{1, 1}));
}

TEST(TypeCounts, MatchesTally) {
  for (const auto& t : random_trees(30, 3, 5)) {
    IntVector tally(3, 0);
    for (const auto& n : t.nodes()) ++tally[static_cast<std::size_t>(n.mark)];
    EXPECT_EQ(type_counts(t), tally);
  }
}

TEST(MarkedTreeValidation, RejectsGapsAndOrphans) {
  EXPECT_THROW(MarkedTree(2, {TypedNode{{}, 0}, TypedNode{{2}, 0}}), std::invalid_argument);
  EXPECT_THROW(MarkedTree(2, {TypedNode{{}, 0}, TypedNode{{1, 1}, 0}}), std::invalid_argument);
  EXPECT_THROW(MarkedTree(2, {TypedNode{{}, 0}, TypedNode{{1}, 0}, TypedNode{{1}, 1}}), std::invalid_argument);
  EXPECT_THROW(MarkedTree(2, {TypedNode{{}, 2}}), std::invalid_argument);
}

TEST(MarkedTreeJson, RoundTrip) {
  for (const auto& t : random_trees(20, 2, 9)) {
    auto j = to_json(t);
    EXPECT_EQ(tree_from_json(j, 2), t);
    EXPECT_EQ(to_json(tree_from_json(j, 2)).dump(), j.dump());
  }
  EXPECT_EQ(to_json(tree(2, kRootChild)).dump(), R"([{"addr":[],"mark":1},{"addr":[1],"mark":2}])");
}
