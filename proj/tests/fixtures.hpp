#pragma once

#include "mtgw/mtgw.hpp"

#include <map>
#include <random>
#include <vector>

namespace fx {

using namespace mtgw;

inline Rational q(const char* s) { return parse_rational(s); }

// both laws uniform on {0,1}^2
inline OffspringSpec e1() {
  std::map<IntVector, Rational> u{{{0, 0}, q("1/4")}, {{1, 0}, q("1/4")}, {{0, 1}, q("1/4")}, {{1, 1}, q("1/4")}};
  return OffspringSpec::from_atoms(2, {u, u});
}

// critical, a = (2/3,1/3), a* = (3/4,3/2)
inline OffspringSpec asymmetric() {
  return OffspringSpec::from_atoms(
      2, {{{{0, 0}, q("1/2")}, {{1, 0}, q("1/4")}, {{1, 1}, q("1/4")}}, {{{1, 0}, q("1/2")}, {{1, 1}, q("1/2")}}});
}

inline OffspringSpec binary() { return OffspringSpec::from_atoms(1, {{{{0}, q("1/2")}, {{2}, q("1/2")}}}); }

inline MarkedTree tree(int d, const Shape& s) { return MarkedTree::from_shape(d, s); }

// Random spec with supports in {0,1,2}^d, scaled down until rho <= 1.
inline OffspringSpec random_spec(int d, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> coin(0, 2), weight(1, 6);
  while (true) {
    std::vector<std::map<IntVector, Rational>> laws(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      std::map<IntVector, int> raw;
      int atoms = 1 + coin(gen) + coin(gen);
      for (int a = 0; a < atoms; ++a) {
        IntVector k(static_cast<std::size_t>(d));
        for (auto& v : k) v = coin(gen);
        raw[k] += weight(gen);
      }
      raw[IntVector(static_cast<std::size_t>(d), 0)] += weight(gen);  // extinction possible
      int tot = 0;
      for (auto& kv : raw) tot += kv.second;
      for (auto& [k, w] : raw) {
        Rational m(w, tot);
        m.canonicalize();
        laws[static_cast<std::size_t>(i)][k] = m;
      }
    }
    auto spec = OffspringSpec::from_atoms(d, laws);
    Eigen::EigenSolver<Eigen::MatrixXd> es(to_eigen(mean_matrix(spec)));
    if (es.eigenvalues().cwiseAbs().maxCoeff() <= 1 + 1e-12) return spec;
  }
}

}  // namespace fx
