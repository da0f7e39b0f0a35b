#pragma once

// Finite marked (typed) plane trees in Ulam-Harris notation, with the
// restriction maps r_h, the local ultrametric, grafting on a leaf and
// graft-class membership.

#include "mtgw/rational.hpp"

#include <json.hpp>

#include <algorithm>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mtgw {

/// Ulam-Harris word; the root is the empty word, children are 1-based.
using Address = std::vector<int>;

struct TypedNode {
  Address address;
  Type mark = 0;

  int depth() const { return static_cast<int>(address.size()); }
  auto operator<=>(const TypedNode&) const = default;
  bool operator==(const TypedNode&) const = default;
};

/// Nested description, convenient for building trees by hand.
struct Shape {
  Type mark = 0;
  std::vector<Shape> children;
};

class MarkedTree {
 public:
  /// Validates the marked-tree conditions: root present, closed under
  /// ancestors, children numbered 1..k without gaps, one mark per address.
  MarkedTree(int d, std::vector<TypedNode> nodes) : d_(d), nodes_(std::move(nodes)) {
    if (d_ < 1) throw std::invalid_argument("MarkedTree: d must be >= 1");
    std::sort(nodes_.begin(), nodes_.end(),
              [](const TypedNode& a, const TypedNode& b) { return a.address < b.address; });
    if (nodes_.empty() || !nodes_.front().address.empty())
      throw std::invalid_argument("MarkedTree: missing root");
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      if (nodes_[i].address == nodes_[i - 1].address)
        throw std::invalid_argument("MarkedTree: duplicate address");
    std::map<Address, std::size_t> lookup;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      if (n.mark < 0 || n.mark >= d_) throw std::invalid_argument("MarkedTree: mark out of range");
      lookup.emplace(n.address, i);
    }
    parent_.assign(nodes_.size(), kNone);
    children_.assign(nodes_.size(), {});
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
      const auto& addr = nodes_[i].address;
      if (addr.back() < 1) throw std::invalid_argument("MarkedTree: address letters must be positive");
      Address up(addr.begin(), addr.end() - 1);
      auto it = lookup.find(up);
      if (it == lookup.end()) throw std::invalid_argument("MarkedTree: not closed under ancestors");
      parent_[i] = it->second;
      children_[it->second].push_back(i);
    }
    // Lexicographic order lists siblings by increasing letter; check 1..k.
    for (const auto& kids : children_)
      for (std::size_t j = 0; j < kids.size(); ++j)
        if (nodes_[kids[j]].address.back() != static_cast<int>(j + 1))
          throw std::invalid_argument("MarkedTree: children must be numbered 1..k without gaps");
  }

  static MarkedTree single(int d, Type mark) { return MarkedTree(d, {TypedNode{{}, mark}}); }

  static MarkedTree from_shape(int d, const Shape& shape) {
    std::vector<TypedNode> nodes;
    Address addr;
    collect(shape, addr, nodes);
    return MarkedTree(d, std::move(nodes));
  }

  int types() const { return d_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<TypedNode>& nodes() const { return nodes_; }
  const TypedNode& node(std::size_t i) const { return nodes_.at(i); }
  const TypedNode& root() const { return nodes_.front(); }
  Type root_mark() const { return nodes_.front().mark; }

  int height() const {
    int h = 0;
    for (const auto& n : nodes_) h = std::max(h, n.depth());
    return h;
  }

  std::optional<std::size_t> find(const Address& address) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), address,
                               [](const TypedNode& n, const Address& a) { return n.address < a; });
    if (it == nodes_.end() || it->address != address) return std::nullopt;
    return static_cast<std::size_t>(it - nodes_.begin());
  }

  bool contains(const TypedNode& x) const {
    auto i = find(x.address);
    return i && nodes_[*i].mark == x.mark;
  }

  const std::vector<std::size_t>& children(std::size_t i) const { return children_.at(i); }
  std::optional<std::size_t> parent(std::size_t i) const {
    return parent_.at(i) == kNone ? std::nullopt : std::optional<std::size_t>(parent_[i]);
  }
  bool is_leaf(std::size_t i) const { return children_.at(i).empty(); }

  /// k_u(t): number of children of each type.
  IntVector offspring(std::size_t i) const {
    IntVector k(static_cast<std::size_t>(d_), 0);
    for (auto c : children_.at(i)) ++k[static_cast<std::size_t>(nodes_[c].mark)];
    return k;
  }

  std::vector<std::size_t> leaves() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (children_[i].empty()) out.push_back(i);
    return out;
  }

  /// |t| = (|t^(i)|, i in [d]).
  IntVector type_counts() const {
    IntVector k(static_cast<std::size_t>(d_), 0);
    for (const auto& n : nodes_) ++k[static_cast<std::size_t>(n.mark)];
    return k;
  }

  Shape to_shape(std::size_t i = 0) const {
    Shape s{nodes_.at(i).mark, {}};
    for (auto c : children_[i]) s.children.push_back(to_shape(c));
    return s;
  }

  bool operator==(const MarkedTree& o) const { return d_ == o.d_ && nodes_ == o.nodes_; }
  bool operator<(const MarkedTree& o) const {
    if (d_ != o.d_) return d_ < o.d_;
    return nodes_ < o.nodes_;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  static void collect(const Shape& s, Address& addr, std::vector<TypedNode>& out) {
    out.push_back(TypedNode{addr, s.mark});
    for (std::size_t j = 0; j < s.children.size(); ++j) {
      addr.push_back(static_cast<int>(j + 1));
      collect(s.children[j], addr, out);
      addr.pop_back();
    }
  }

  int d_;
  std::vector<TypedNode> nodes_;  // sorted by address: preorder
  std::vector<std::size_t> parent_;
  std::vector<std::vector<std::size_t>> children_;
};

/// r_h(t) = {u in t : |u| <= h}.
inline MarkedTree restrict(const MarkedTree& t, int h) {
  if (h < 0) throw std::invalid_argument("restrict: negative height");
  std::vector<TypedNode> kept;
  for (const auto& n : t.nodes())
    if (n.depth() <= h) kept.push_back(n);
  return MarkedTree(t.types(), std::move(kept));
}

struct LocalDistance {
  /// 2^{-max{h : r_h(t) = r_h(t')}}, 0 when the trees are equal.
  Rational value;
  /// No h satisfies r_h(t) = r_h(t'); value is then set to 1.
  bool roots_differ = false;
};

inline LocalDistance local_distance(const MarkedTree& a, const MarkedTree& b) {
  if (a.types() != b.types()) throw std::invalid_argument("local_distance: type counts differ");
  if (a == b) return {Rational(0), false};
  const int top = std::max(a.height(), b.height());
  for (int h = 0; h <= top; ++h) {
    if (restrict(a, h) == restrict(b, h)) continue;
    if (h == 0) return {Rational(1), true};
    Integer den = 1;
    den <<= static_cast<unsigned long>(h - 1);
    return {Rational(Integer(1), den), false};
  }
  return {Rational(0), false};  // unreachable: equal restrictions at the top height
}

/// t (x) (t', x): attach t' at the leaf x when the marks agree, else t.
inline MarkedTree graft(const MarkedTree& t, const MarkedTree& attached, const TypedNode& x) {
  auto idx = t.find(x.address);
  if (!idx || t.node(*idx).mark != x.mark || !t.is_leaf(*idx))
    throw std::invalid_argument("graft: x is not a leaf of t");
  if (attached.root_mark() != x.mark) return t;
  std::vector<TypedNode> nodes = t.nodes();
  for (const auto& v : attached.nodes()) {
    if (v.address.empty()) continue;
    Address a = x.address;
    a.insert(a.end(), v.address.begin(), v.address.end());
    nodes.push_back(TypedNode{std::move(a), v.mark});
  }
  return MarkedTree(t.types(), std::move(nodes));
}

/// T(t, x): every tree obtained by grafting a finite tree at the leaf x.
class GraftClass {
 public:
  GraftClass(MarkedTree base, TypedNode leaf) : base_(std::move(base)), leaf_(std::move(leaf)) {
    auto idx = base_.find(leaf_.address);
    if (!idx || base_.node(*idx).mark != leaf_.mark || !base_.is_leaf(*idx))
      throw std::invalid_argument("GraftClass: leaf is not a leaf of the base tree");
  }

  const MarkedTree& base() const { return base_; }
  const TypedNode& leaf() const { return leaf_; }

 private:
  MarkedTree base_;
  TypedNode leaf_;
};

inline bool is_prefix(const Address& prefix, const Address& a) {
  return prefix.size() <= a.size() && std::equal(prefix.begin(), prefix.end(), a.begin());
}

/// Prune t at the leaf's address and compare with the base.
inline bool matches_graft_class(const MarkedTree& t, const GraftClass& g) {
  if (t.types() != g.base().types()) return false;
  auto idx = t.find(g.leaf().address);
  if (!idx || t.node(*idx).mark != g.leaf().mark) return false;
  const Address& cut = g.leaf().address;
  std::vector<TypedNode> pruned;
  for (const auto& n : t.nodes())
    if (n.address.size() == cut.size() || !is_prefix(cut, n.address)) pruned.push_back(n);
  return pruned == g.base().nodes();
}

inline IntVector type_counts(const MarkedTree& t) { return t.type_counts(); }

// ---------------------------------------------------------------------------
// Canonical JSON: [{"addr":[...],"mark":m}, ...] sorted by address, marks
// 1-based.

inline nlohmann::json to_json(const MarkedTree& t) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& n : t.nodes()) arr.push_back({{"addr", n.address}, {"mark", n.mark + 1}});
  return arr;
}

inline MarkedTree tree_from_json(const nlohmann::json& j, int d) {
  if (!j.is_array()) throw std::invalid_argument("tree JSON must be an array");
  std::vector<TypedNode> nodes;
  for (const auto& item : j) {
    TypedNode n;
    n.address = item.at("addr").get<Address>();
    n.mark = item.at("mark").get<int>() - 1;
    nodes.push_back(std::move(n));
  }
  return MarkedTree(d, std::move(nodes));
}

}  // namespace mtgw
