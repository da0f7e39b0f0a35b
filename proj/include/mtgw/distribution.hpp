#pragma once

// Finite-support probability laws on Z^D with exact rational masses, and
// exact n-fold convolution tables (the law of S_n = X_1 + ... + X_n).

#include "mtgw/errors.hpp"
#include "mtgw/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mtgw {

class LatticeDistribution {
 public:
  LatticeDistribution() = default;

  /// Zero masses are dropped; masses must be non-negative and sum to 1.
  LatticeDistribution(std::size_t dim, const std::map<IntVector, Rational>& atoms) : dim_(dim) {
    Rational sum = 0;
    for (const auto& [x, p] : atoms) {
      if (x.size() != dim_) throw std::invalid_argument("LatticeDistribution: atom of wrong dimension");
      if (p < 0) throw std::invalid_argument("LatticeDistribution: negative mass");
      if (p == 0) continue;
      Rational c = p;
      c.canonicalize();
      atoms_.emplace(x, c);
      sum += c;
    }
    if (sum != 1)
      throw std::invalid_argument("LatticeDistribution: masses sum to " + sum.get_str());
  }

  static LatticeDistribution point_mass(const IntVector& x) {
    return LatticeDistribution(x.size(), {{x, Rational(1)}});
  }

  /// Uniform law on the given points.
  static LatticeDistribution uniform(const std::vector<IntVector>& points) {
    if (points.empty()) throw std::invalid_argument("uniform: no points");
    std::map<IntVector, Rational> atoms;
    Rational w(1, static_cast<unsigned long>(points.size()));
    for (const auto& p : points) atoms[p] += w;
    return LatticeDistribution(points.front().size(), atoms);
  }

  /// Uniform on {lo, ..., hi}^D.
  static LatticeDistribution uniform_box(std::size_t dim, int lo, int hi) {
    std::vector<IntVector> pts;
    IntVector x(dim, lo);
    while (true) {
      pts.push_back(x);
      std::size_t i = 0;
      while (i < dim && x[i] == hi) x[i++] = lo;
      if (i == dim) break;
      ++x[i];
    }
    return uniform(pts);
  }

  std::size_t dimension() const { return dim_; }
  const std::map<IntVector, Rational>& atoms() const { return atoms_; }
  std::size_t support_size() const { return atoms_.size(); }

  std::vector<IntVector> support() const {
    std::vector<IntVector> s;
    s.reserve(atoms_.size());
    for (const auto& kv : atoms_) s.push_back(kv.first);
    return s;
  }

  Rational mass(const IntVector& x) const {
    auto it = atoms_.find(x);
    return it == atoms_.end() ? Rational(0) : it->second;
  }

  std::vector<Rational> mean() const {
    std::vector<Rational> m(dim_, Rational(0));
    for (const auto& [x, p] : atoms_)
      for (std::size_t j = 0; j < dim_; ++j) m[j] += p * x[j];
    return m;
  }

  std::vector<double> mean_double() const {
    auto m = mean();
    std::vector<double> out(dim_);
    for (std::size_t j = 0; j < dim_; ++j) out[j] = m[j].get_d();
    return out;
  }

  /// Point mass, i.e. no atom with mass in (0,1).
  bool is_degenerate() const { return atoms_.size() <= 1; }

  /// Keep atoms with every |x_j| <= bound and renormalize.
  LatticeDistribution truncate(int bound) const {
    std::map<IntVector, Rational> kept;
    Rational total = 0;
    for (const auto& [x, p] : atoms_) {
      bool inside = std::all_of(x.begin(), x.end(), [&](int v) { return v <= bound && v >= -bound; });
      if (inside) {
        kept.emplace(x, p);
        total += p;
      }
    }
    if (total == 0) throw ZeroMass("truncate: no mass inside the bound");
    for (auto& kv : kept) kv.second /= total;
    return LatticeDistribution(dim_, kept);
  }

  bool operator==(const LatticeDistribution& o) const { return dim_ == o.dim_ && atoms_ == o.atoms_; }

 private:
  std::size_t dim_ = 0;
  std::map<IntVector, Rational> atoms_;
};

/// Exact law of an n-step walk, stored densely on its bounding box with a
/// common denominator so convolution runs on integers.
class WalkAtomTable {
 public:
  /// delta_0 on Z^dim.
  explicit WalkAtomTable(std::size_t dim)
      : dim_(dim), lo_(dim, 0), extent_(dim, 1), numerators_(1, Integer(1)), denominator_(1) {}

  static WalkAtomTable power(const LatticeDistribution& law, int n) {
    if (n < 0) throw std::invalid_argument("WalkAtomTable::power: negative step count");
    WalkAtomTable t(law.dimension());
    for (int i = 0; i < n; ++i) t = t.convolve(law);
    return t;
  }

  /// Law after one more step drawn from `law`.
  WalkAtomTable convolve(const LatticeDistribution& law) const {
    if (law.dimension() != dim_) throw std::invalid_argument("convolve: dimension mismatch");
    return convolve_atoms(law.atoms());
  }

  /// n-fold convolution of a possibly sub-stochastic weight map.
  static WalkAtomTable power_atoms(std::size_t dim, const std::map<IntVector, Rational>& atoms, int n) {
    if (n < 0) throw std::invalid_argument("WalkAtomTable::power_atoms: negative step count");
    WalkAtomTable t(dim);
    for (int i = 0; i < n; ++i) t = t.convolve_atoms(atoms);
    return t;
  }

  /// One more step with weights `atoms` (need not sum to 1; an empty map
  /// yields the zero table).
  WalkAtomTable convolve_atoms(const std::map<IntVector, Rational>& atoms) const {
    Integer base_den = 1;
    for (const auto& kv : atoms) {
      Integer d = kv.second.get_den();
      mpz_lcm(base_den.get_mpz_t(), base_den.get_mpz_t(), d.get_mpz_t());
    }
    std::vector<std::pair<IntVector, Integer>> steps;
    IntVector step_lo(dim_, std::numeric_limits<int>::max());
    IntVector step_hi(dim_, std::numeric_limits<int>::min());
    for (const auto& [x, p] : atoms) {
      if (x.size() != dim_) throw std::invalid_argument("convolve: dimension mismatch");
      if (p == 0) continue;
      Rational scaled = p * base_den;
      steps.emplace_back(x, scaled.get_num());
      for (std::size_t j = 0; j < dim_; ++j) {
        step_lo[j] = std::min(step_lo[j], x[j]);
        step_hi[j] = std::max(step_hi[j], x[j]);
      }
    }
    WalkAtomTable out(dim_);
    out.steps_ = steps_ + 1;
    if (steps.empty()) {
      out.numerators_.assign(1, Integer(0));
      out.denominator_ = denominator_;
      return out;
    }
    out.denominator_ = denominator_ * base_den;
    std::size_t volume = 1;
    for (std::size_t j = 0; j < dim_; ++j) {
      out.lo_[j] = lo_[j] + step_lo[j];
      out.extent_[j] = extent_[j] + (step_hi[j] - step_lo[j]);
      volume *= static_cast<std::size_t>(out.extent_[j]);
      if (volume > kMaxVolume) throw CapExceeded("WalkAtomTable: bounding box too large");
    }
    out.numerators_.assign(volume, Integer(0));
    IntVector point(dim_);
    for (std::size_t cell = 0; cell < numerators_.size(); ++cell) {
      if (numerators_[cell] == 0) continue;
      unflatten(cell, point);
      for (const auto& [x, w] : steps) {
        std::size_t target = 0;
        for (std::size_t j = dim_; j-- > 0;) {
          int coord = point[j] + x[j] - out.lo_[j];
          target = target * static_cast<std::size_t>(out.extent_[j]) + static_cast<std::size_t>(coord);
        }
        mpz_addmul(out.numerators_[target].get_mpz_t(), numerators_[cell].get_mpz_t(), w.get_mpz_t());
      }
    }
    return out;
  }

  std::size_t dimension() const { return dim_; }
  int steps() const { return steps_; }
  const Integer& denominator() const { return denominator_; }
  /// Bounding box of the stored cells: lower corner and side lengths.
  const IntVector& lower() const { return lo_; }
  const IntVector& extent() const { return extent_; }

  /// Numerator over denominator(); zero off the support.
  Integer numerator(const IntVector& x) const {
    auto cell = locate(x);
    return cell ? numerators_[*cell] : Integer(0);
  }

  Rational probability(const IntVector& x) const {
    auto cell = locate(x);
    if (!cell || numerators_[*cell] == 0) return Rational(0);
    Rational q(numerators_[*cell], denominator_);
    q.canonicalize();
    return q;
  }

  double probability_double(const IntVector& x) const { return probability(x).get_d(); }

  /// Visit every atom with positive mass as (point, numerator).
  void for_each_atom(const std::function<void(const IntVector&, const Integer&)>& f) const {
    IntVector point(dim_);
    for (std::size_t cell = 0; cell < numerators_.size(); ++cell) {
      if (numerators_[cell] == 0) continue;
      unflatten(cell, point);
      f(point, numerators_[cell]);
    }
  }

  std::map<IntVector, Rational> atoms() const {
    std::map<IntVector, Rational> out;
    for_each_atom([&](const IntVector& x, const Integer& n) {
      Rational q(n, denominator_);
      q.canonicalize();
      out.emplace(x, q);
    });
    return out;
  }

  std::size_t atom_count() const {
    return static_cast<std::size_t>(
        std::count_if(numerators_.begin(), numerators_.end(), [](const Integer& n) { return n != 0; }));
  }

  Rational total_mass() const {
    Integer s = 0;
    for (const auto& n : numerators_) s += n;
    Rational q(s, denominator_);
    q.canonicalize();
    return q;
  }

 private:
  static constexpr std::size_t kMaxVolume = 50'000'000;

  std::optional<std::size_t> locate(const IntVector& x) const {
    if (x.size() != dim_) throw std::invalid_argument("WalkAtomTable: point of wrong dimension");
    std::size_t cell = 0;
    for (std::size_t j = dim_; j-- > 0;) {
      int c = x[j] - lo_[j];
      if (c < 0 || c >= extent_[j]) return std::nullopt;
      cell = cell * static_cast<std::size_t>(extent_[j]) + static_cast<std::size_t>(c);
    }
    return cell;
  }

  void unflatten(std::size_t cell, IntVector& point) const {
    for (std::size_t j = 0; j < dim_; ++j) {
      auto e = static_cast<std::size_t>(extent_[j]);
      point[j] = lo_[j] + static_cast<int>(cell % e);
      cell /= e;
    }
  }

  std::size_t dim_;
  int steps_ = 0;
  IntVector lo_;
  IntVector extent_;
  std::vector<Integer> numerators_;
  Integer denominator_;
};

}  // namespace mtgw
