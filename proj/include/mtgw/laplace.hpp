#pragma once

// Legendre-Laplace toolbox for finite-support lattice laws:
//   phi(theta) = log E[e^{<theta, X>}],  psi(x) = sup_theta <theta,x> - phi(theta),
// exponential tilting P_theta, inversion of theta -> m_theta, and the exact
// geometry of the convex hull of the support.

#include "mtgw/distribution.hpp"
#include "mtgw/errors.hpp"
#include "mtgw/linalg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mtgw {

namespace detail {

/// Masses and points as doubles, in some coordinate system.
struct FloatLaw {
  std::vector<Eigen::VectorXd> points;
  std::vector<double> masses;
  Eigen::Index dim = 0;
};

inline FloatLaw float_law(const LatticeDistribution& f) {
  FloatLaw out;
  out.dim = static_cast<Eigen::Index>(f.dimension());
  for (const auto& [x, p] : f.atoms()) {
    Eigen::VectorXd v(out.dim);
    for (Eigen::Index j = 0; j < out.dim; ++j) v(j) = x[static_cast<std::size_t>(j)];
    out.points.push_back(std::move(v));
    out.masses.push_back(p.get_d());
  }
  return out;
}

struct TiltMoments {
  double log_normalizer = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::vector<double> tilted;  // tilted masses, aligned with FloatLaw::points
};

inline TiltMoments tilt_moments(const FloatLaw& law, const Eigen::VectorXd& theta) {
  TiltMoments out;
  const std::size_t n = law.points.size();
  std::vector<double> expo(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    expo[i] = theta.dot(law.points[i]) + std::log(law.masses[i]);
    top = std::max(top, expo[i]);
  }
  double z = 0;
  for (std::size_t i = 0; i < n; ++i) z += std::exp(expo[i] - top);
  out.log_normalizer = top + std::log(z);
  out.tilted.resize(n);
  out.mean = Eigen::VectorXd::Zero(law.dim);
  for (std::size_t i = 0; i < n; ++i) {
    out.tilted[i] = std::exp(expo[i] - out.log_normalizer);
    out.mean += out.tilted[i] * law.points[i];
  }
  out.covariance = Eigen::MatrixXd::Zero(law.dim, law.dim);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd c = law.points[i] - out.mean;
    out.covariance += out.tilted[i] * c * c.transpose();
  }
  return out;
}

struct NewtonResult {
  Eigen::VectorXd theta;
  double residual = 0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes phi(theta) - <theta, target> by damped Newton from theta = 0.
inline NewtonResult newton_tilt(const FloatLaw& law, const Eigen::VectorXd& target, double tol = 1e-10,
                                int max_iter = 1000) {
  NewtonResult res;
  res.theta = Eigen::VectorXd::Zero(law.dim);
  auto objective = [&](const TiltMoments& m, const Eigen::VectorXd& th) {
    return m.log_normalizer - th.dot(target);
  };
  TiltMoments m = tilt_moments(law, res.theta);
  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    Eigen::VectorXd grad = m.mean - target;
    res.residual = grad.norm();
    if (res.residual <= tol) {
      res.converged = true;
      return res;
    }
    Eigen::VectorXd step = m.covariance.ldlt().solve(-grad);
    if (!step.allFinite()) step = -grad;
    const double current = objective(m, res.theta);
    double scale = 1.0;
    bool moved = false;
    for (int halving = 0; halving <= 60; ++halving, scale *= 0.5) {
      Eigen::VectorXd trial = res.theta + scale * step;
      TiltMoments mt = tilt_moments(law, trial);
      // near the optimum the objective is flat to rounding; fall back to the gradient norm
      if (objective(mt, trial) < current - 1e-15 * std::max(1.0, std::fabs(current)) ||
          (mt.mean - target).norm() < res.residual) {
        res.theta = trial;
        m = std::move(mt);
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  res.residual = (m.mean - target).norm();
  res.converged = res.residual <= tol;
  return res;
}

inline Rational exact_rational(double x) { return Rational(x); }

}  // namespace detail

/// phi(theta) = log sum_x e^{<theta,x>} F(x), evaluated with a max shift.
inline double log_laplace(const LatticeDistribution& f, const Eigen::VectorXd& theta) {
  return detail::tilt_moments(detail::float_law(f), theta).log_normalizer;
}

/// P_theta(x) = e^{<theta,x> - phi(theta)} F(x) with its first two moments.
struct TiltedView {
  Eigen::VectorXd theta;
  double log_normalizer = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::vector<std::pair<IntVector, double>> masses;

  double covariance_determinant() const { return covariance.determinant(); }
};

inline TiltedView tilt(const LatticeDistribution& f, const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != f.dimension()) throw std::invalid_argument("tilt: dimension mismatch");
  auto law = detail::float_law(f);
  auto m = detail::tilt_moments(law, theta);
  TiltedView v;
  v.theta = theta;
  v.log_normalizer = m.log_normalizer;
  v.mean = m.mean;
  v.covariance = m.covariance;
  std::size_t i = 0;
  for (const auto& kv : f.atoms()) v.masses.emplace_back(kv.first, m.tilted[i++]);
  return v;
}

// ---------------------------------------------------------------------------
// Hull geometry

enum class HullPosition { interior, boundary, outside };

inline std::string to_string(HullPosition p) {
  switch (p) {
    case HullPosition::interior: return "interior";
    case HullPosition::boundary: return "boundary";
    case HullPosition::outside: return "outside";
  }
  return "?";
}

namespace detail {

struct Facet {
  std::vector<Rational> normal;  // outward, in frame coordinates
  Rational offset;               // <normal, s> <= offset on the support
};

/// Facets of the full-dimensional hull of `pts` in Q^k: every hyperplane
/// through k affinely independent points that leaves all points on one side.
inline std::vector<Facet> facets(const std::vector<std::vector<Rational>>& pts, std::size_t k) {
  std::vector<Facet> out;
  const std::size_t n = pts.size();
  if (k == 0) return out;
  // Guard against combinatorial blow-up.
  double combos = 1;
  for (std::size_t i = 0; i < k; ++i) combos = combos * static_cast<double>(n - i) / static_cast<double>(i + 1);
  if (combos > 5e6) throw DimensionTooLarge("hull: too many candidate facets");

  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  auto dot = [](const std::vector<Rational>& a, const std::vector<Rational>& b) {
    Rational s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  while (true) {
    RationalMatrix diffs;
    for (std::size_t i = 1; i < k; ++i) {
      std::vector<Rational> row(k);
      for (std::size_t j = 0; j < k; ++j) row[j] = pts[idx[i]][j] - pts[idx[0]][j];
      diffs.push_back(std::move(row));
    }
    std::vector<Rational> normal(k, Rational(0));
    bool ok = true;
    if (diffs.empty()) {
      normal[0] = 1;
    } else {
      auto piv = row_reduce(diffs);
      if (piv.size() != k - 1) {
        ok = false;
      } else {
        std::size_t free = 0;
        while (std::find(piv.begin(), piv.end(), free) != piv.end()) ++free;
        normal[free] = 1;
        for (std::size_t r = 0; r < piv.size(); ++r) normal[piv[r]] = -diffs[r][free];
      }
    }
    if (ok) {
      Rational b = dot(normal, pts[idx[0]]);
      bool le = true, ge = true;
      for (const auto& p : pts) {
        Rational v = dot(normal, p);
        if (v > b) le = false;
        if (v < b) ge = false;
      }
      if (le) out.push_back({normal, b});
      if (ge && !le) {
        for (auto& c : normal) c = -c;
        out.push_back({normal, -b});
      }
    }
    // next combination
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

struct HullAnalysis {
  HullPosition position = HullPosition::outside;
  /// Support points on the smallest face containing x (empty when outside).
  std::vector<IntVector> face;
  bool full_dimensional = false;
};

inline HullAnalysis analyze_hull(const LatticeDistribution& f, std::vector<Rational> x) {
  for (auto& v : x) v.canonicalize();
  HullAnalysis out;
  auto support = f.support();
  AffineFrame frame(support);
  auto cx = frame.coordinates(x);
  if (!cx) return out;
  const std::size_t k = frame.dimension();
  out.full_dimensional = (k == f.dimension());
  if (k == 0) {
    out.position = HullPosition::boundary;
    out.face = support;
    return out;
  }
  std::vector<std::vector<Rational>> pts;
  for (const auto& s : support) pts.push_back(*frame.coordinates(s));
  auto fs = facets(pts, k);
  auto dot = [](const std::vector<Rational>& a, const std::vector<Rational>& b) {
    Rational s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  std::vector<bool> on_face(support.size(), true);
  bool tight_any = false;
  for (const auto& fc : fs) {
    Rational v = dot(fc.normal, *cx);
    if (v > fc.offset) {
      out.position = HullPosition::outside;
      out.face.clear();
      return out;
    }
    if (v == fc.offset) {
      tight_any = true;
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (dot(fc.normal, pts[i]) != fc.offset) on_face[i] = false;
    }
  }
  for (std::size_t i = 0; i < support.size(); ++i)
    if (on_face[i]) out.face.push_back(support[i]);
  if (tight_any || !out.full_dimensional)
    out.position = HullPosition::boundary;
  else
    out.position = HullPosition::interior;
  return out;
}

/// psi of the law restricted to points whose affine hull contains x in its
/// relative interior, computed in affine coordinates.
inline double relative_legendre(const LatticeDistribution& f, const std::vector<Rational>& x) {
  auto support = f.support();
  AffineFrame frame(support);
  const auto k = static_cast<Eigen::Index>(frame.dimension());
  if (k == 0) return 0.0;
  FloatLaw law;
  law.dim = k;
  for (const auto& [s, p] : f.atoms()) {
    auto c = *frame.coordinates(s);
    Eigen::VectorXd v(k);
    for (Eigen::Index j = 0; j < k; ++j) v(j) = c[static_cast<std::size_t>(j)].get_d();
    law.points.push_back(std::move(v));
    law.masses.push_back(p.get_d());
  }
  auto cx = *frame.coordinates(x);
  Eigen::VectorXd target(k);
  for (Eigen::Index j = 0; j < k; ++j) target(j) = cx[static_cast<std::size_t>(j)].get_d();
  auto res = newton_tilt(law, target);
  if (!res.converged) throw NoConvergence("legendre: Newton did not converge", res.residual);
  auto m = tilt_moments(law, res.theta);
  return res.theta.dot(target) - m.log_normalizer;
}

}  // namespace detail

inline HullPosition hull_membership(const LatticeDistribution& f, const std::vector<Rational>& x) {
  if (x.size() != f.dimension()) throw std::invalid_argument("hull_membership: dimension mismatch");
  return detail::analyze_hull(f, x).position;
}

inline HullPosition hull_membership(const LatticeDistribution& f, const Eigen::VectorXd& x) {
  std::vector<Rational> q;
  for (Eigen::Index j = 0; j < x.size(); ++j) q.push_back(detail::exact_rational(x(j)));
  return hull_membership(f, q);
}

/// psi(x): finite on cv(F), +inf outside. On the boundary the supremum is
/// attained in the limit along the outward normal of the smallest face
/// containing x, giving psi_face(x) - log F(face).
inline double legendre(const LatticeDistribution& f, const std::vector<Rational>& x) {
  auto hull = detail::analyze_hull(f, x);
  if (hull.position == HullPosition::outside) return std::numeric_limits<double>::infinity();
  if (hull.position == HullPosition::interior) return detail::relative_legendre(f, x);
  std::map<IntVector, Rational> face;
  Rational mass = 0;
  for (const auto& s : hull.face) {
    face.emplace(s, f.mass(s));
    mass += f.mass(s);
  }
  for (auto& kv : face) kv.second /= mass;
  LatticeDistribution conditional(f.dimension(), face);
  return detail::relative_legendre(conditional, x) - std::log(mass.get_d());
}

inline double legendre(const LatticeDistribution& f, const Eigen::VectorXd& x) {
  std::vector<Rational> q;
  for (Eigen::Index j = 0; j < x.size(); ++j) q.push_back(detail::exact_rational(x(j)));
  return legendre(f, q);
}

/// theta with m_theta = target, for target in the interior of cv(F).
inline Eigen::VectorXd solve_tilt(const LatticeDistribution& f, const Eigen::VectorXd& target, double tol = 1e-10) {
  if (static_cast<std::size_t>(target.size()) != f.dimension())
    throw std::invalid_argument("solve_tilt: dimension mismatch");
  if (hull_membership(f, target) != HullPosition::interior)
    throw NotInteriorPoint("solve_tilt: target is not in the interior of the support hull");
  auto res = detail::newton_tilt(detail::float_law(f), target, tol);
  if (!res.converged) throw NoConvergence("solve_tilt: no convergence", res.residual);
  return res.theta;
}

/// Strong aperiodicity: supp(F) - supp(F) generates Z^D. The group
/// generated by supp(F) - x is computed for two base points x and checked
/// to agree.
inline bool lattice_aperiodic(const LatticeDistribution& f) {
  auto support = f.support();
  const std::size_t dim = f.dimension();
  auto first = difference_lattice(support, dim, 0);
  auto last = difference_lattice(support, dim, support.size() - 1);
  if (first.rank != last.rank || first.index != last.index)
    throw std::logic_error("lattice_aperiodic: generated group depends on the base point");
  return first.is_full_lattice(dim);
}

}  // namespace mtgw
