#pragma once

// Exact linear algebra over Q and Z: determinants, rank, affine bases and
// the integer row reduction that decides whether a set of vectors
// generates the full lattice Z^D.

#include "mtgw/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mtgw {

using RationalMatrix = std::vector<std::vector<Rational>>;

inline RationalMatrix zero_matrix(std::size_t rows, std::size_t cols) {
  return RationalMatrix(rows, std::vector<Rational>(cols, Rational(0)));
}

/// Determinant by fraction-exact Gaussian elimination.
inline Rational determinant(RationalMatrix a) {
  const std::size_t n = a.size();
  Rational det = 1;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && a[pivot][col] == 0) ++pivot;
    if (pivot == n) return 0;
    if (pivot != col) {
      std::swap(a[pivot], a[col]);
      det = -det;
    }
    det *= a[col][col];
    for (std::size_t row = col + 1; row < n; ++row) {
      if (a[row][col] == 0) continue;
      Rational factor = a[row][col] / a[col][col];
      for (std::size_t j = col; j < n; ++j) a[row][j] -= factor * a[col][j];
    }
  }
  return det;
}

/// Reduced row echelon form in place; returns pivot columns.
inline std::vector<std::size_t> row_reduce(RationalMatrix& a) {
  std::vector<std::size_t> pivots;
  if (a.empty()) return pivots;
  const std::size_t rows = a.size();
  const std::size_t cols = a[0].size();
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t p = r;
    while (p < rows && a[p][c] == 0) ++p;
    if (p == rows) continue;
    std::swap(a[p], a[r]);
    Rational inv = 1 / a[r][c];
    for (auto& x : a[r]) x *= inv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r || a[i][c] == 0) continue;
      Rational f = a[i][c];
      for (std::size_t j = c; j < cols; ++j) a[i][j] -= f * a[r][j];
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

inline std::size_t rank(RationalMatrix a) { return row_reduce(a).size(); }

/// Affine coordinates of a point set: picks a maximal linearly independent
/// subset of {p - origin} as a basis and expresses any vector in it.
class AffineFrame {
 public:
  AffineFrame(const std::vector<IntVector>& points) {
    if (points.empty()) throw std::invalid_argument("AffineFrame: empty point set");
    dim_ = points.front().size();
    origin_ = points.front();
    RationalMatrix rows;
    for (const auto& p : points) {
      std::vector<Rational> row(dim_);
      for (std::size_t j = 0; j < dim_; ++j) row[j] = p[j] - origin_[j];
      RationalMatrix trial = basis_;
      trial.push_back(row);
      if (rank(trial) > basis_.size()) basis_.push_back(row);
    }
  }

  std::size_t ambient_dimension() const { return dim_; }
  std::size_t dimension() const { return basis_.size(); }
  const IntVector& origin() const { return origin_; }
  const RationalMatrix& basis() const { return basis_; }

  /// Coordinates of x - origin in the basis, or nullopt when x is off the
  /// affine hull.
  template <class Vec>
  std::optional<std::vector<Rational>> coordinates(const Vec& x) const {
    const std::size_t k = basis_.size();
    // Solve basis^T c = x - origin via an augmented system.
    RationalMatrix aug = zero_matrix(dim_, k + 1);
    for (std::size_t i = 0; i < dim_; ++i) {
      for (std::size_t j = 0; j < k; ++j) aug[i][j] = basis_[j][i];
      aug[i][k] = Rational(x[i]) - origin_[i];
    }
    auto piv = row_reduce(aug);
    if (!piv.empty() && piv.back() == k) return std::nullopt;
    std::vector<Rational> c(k, Rational(0));
    for (std::size_t r = 0; r < piv.size(); ++r) c[piv[r]] = aug[r][k];
    return c;
  }

 private:
  std::size_t dim_ = 0;
  IntVector origin_;
  RationalMatrix basis_;
};

struct LatticeReduction {
  std::size_t rank = 0;
  /// Index of the generated lattice in Z^D when rank == D, 0 otherwise.
  Integer index = 0;

  bool is_full_lattice(std::size_t dim) const { return rank == dim && index == 1; }
};

/// Integer echelon reduction (Hermite-style, gcd row operations) of the
/// generator rows.
inline LatticeReduction reduce_lattice(std::vector<std::vector<Integer>> rows, std::size_t dim) {
  LatticeReduction out;
  std::size_t r = 0;
  Integer index = 1;
  for (std::size_t c = 0; c < dim && r < rows.size(); ++c) {
    // Euclid on column c among rows r..end until one nonzero remains.
    while (true) {
      std::size_t best = rows.size();
      for (std::size_t i = r; i < rows.size(); ++i) {
        if (rows[i][c] == 0) continue;
        if (best == rows.size() || abs(rows[i][c]) < abs(rows[best][c])) best = i;
      }
      if (best == rows.size()) break;
      std::swap(rows[best], rows[r]);
      bool others = false;
      for (std::size_t i = r + 1; i < rows.size(); ++i) {
        if (rows[i][c] == 0) continue;
        Integer q;
        mpz_fdiv_q(q.get_mpz_t(), rows[i][c].get_mpz_t(), rows[r][c].get_mpz_t());
        for (std::size_t j = c; j < dim; ++j) rows[i][j] -= q * rows[r][j];
        if (rows[i][c] != 0) others = true;
      }
      if (!others) break;
    }
    if (r < rows.size() && rows[r][c] != 0) {
      index *= abs(rows[r][c]);
      ++r;
    }
  }
  out.rank = r;
  out.index = (r == dim) ? index : Integer(0);
  return out;
}

/// Does the subgroup generated by (support - support) equal Z^D?
/// Differences against one base point generate the same group as all
/// pairwise differences.
inline LatticeReduction difference_lattice(const std::vector<IntVector>& support, std::size_t dim,
                                           std::size_t base_index = 0) {
  std::vector<std::vector<Integer>> rows;
  if (!support.empty()) {
    const auto& base = support.at(base_index);
    for (const auto& s : support) {
      std::vector<Integer> row(dim);
      for (std::size_t j = 0; j < dim; ++j) row[j] = s[j] - base[j];
      rows.push_back(std::move(row));
    }
  }
  return reduce_lattice(std::move(rows), dim);
}

}  // namespace mtgw
