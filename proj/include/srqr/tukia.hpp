// Tukia's invariant measurable conformal structure: the det-1 SPD symmetric
// space S = SL(d,R)/SO(d), normalized derivative Grams along orbits,
// Riemannian Chebyshev centers, and the invariance residual
//     (det f_p)^{-2/d} f_p^t s_{f p} f_p = s_p.
#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "srqr/distortion.hpp"
#include "srqr/trap.hpp"

namespace srqr {

/// Determinant-one symmetric positive-definite matrix (d = 2 here; the
/// formulas keep d symbolic through dimensions of the argument).
class SPDPoint {
 public:
  explicit SPDPoint(Eigen::MatrixXd m) : m_(0.5 * (m + m.transpose())) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_);
    if (es.eigenvalues().minCoeff() <= 0)
      throw ContractViolation("SPDPoint: matrix is not positive definite");
    const double det = m_.determinant();
    m_ /= std::pow(det, 1.0 / m_.rows());  // renormalize to det 1
  }

  const Eigen::MatrixXd& m() const { return m_; }
  int d() const { return int(m_.rows()); }

  static SPDPoint identity(int d = 2) {
    return SPDPoint(Eigen::MatrixXd::Identity(d, d));
  }

 private:
  Eigen::MatrixXd m_;
};

namespace detail_spd {

inline Eigen::MatrixXd power(const Eigen::MatrixXd& a, double t) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  Eigen::VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) ev[i] = std::pow(ev[i], t);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline Eigen::MatrixXd logm(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  Eigen::VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) ev[i] = std::log(ev[i]);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  Eigen::VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) ev[i] = std::exp(ev[i]);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail_spd

/// Affine-invariant distance ||log(A^{-1/2} B A^{-1/2})||_F.
inline double spd_distance(const SPDPoint& a, const SPDPoint& b) {
  const Eigen::MatrixXd ah = detail_spd::power(a.m(), -0.5);
  return detail_spd::logm(ah * b.m() * ah).norm();
}

/// Geodesic A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}, det-renormalized.
inline SPDPoint spd_geodesic(const SPDPoint& a, const SPDPoint& b, double t) {
  const Eigen::MatrixXd ah = detail_spd::power(a.m(), 0.5);
  const Eigen::MatrixXd aih = detail_spd::power(a.m(), -0.5);
  return SPDPoint(ah * detail_spd::power(aih * b.m() * aih, t) * ah);
}

/// Congruence action M . X = (det M)^{-2/d} M^t X M (an isometry of S).
inline SPDPoint spd_congruence(const Eigen::MatrixXd& m, const SPDPoint& x) {
  if (std::abs(m.determinant()) < 1e-12)
    throw ContractViolation("spd_congruence: singular matrix");
  return SPDPoint(m.transpose() * x.m() * m);  // SPDPoint renormalizes det
}

/// Normalized Gram (det D)^{-2/d} D^t D; |det| for sense-reversing inputs,
/// where the paper's formula (stated for sense-preserving derivatives) would
/// flip the sign.  det(D^t D) is positive either way, so the det-1
/// renormalization in SPDPoint realizes exactly this.
inline SPDPoint normalized_gram(const Eigen::MatrixXd& d) {
  if (std::abs(d.determinant()) < 1e-12)
    throw ContractViolation("normalized_gram: matrix determinant below 1e-12");
  return SPDPoint(d.transpose() * d);
}

struct ChebyshevResult {
  SPDPoint center;
  double radius = 0;
  int iterations = 0;
};

/// Riemannian 1-center: farthest-point geodesic stepping (step 1/(k+1), 500
/// iterations or radius improvement < 1e-9) followed by an exact polish over
/// the candidate support sets -- on this 2-dimensional uniquely geodesic
/// space the minimum ball is supported by at most three elements, so the
/// candidates are the elements themselves, pair midpoints, and triple
/// equidistant points (2-D Newton in a tangent chart).
inline ChebyshevResult chebyshev_center(const std::vector<SPDPoint>& set) {
  if (set.empty()) throw ContractViolation("chebyshev_center: empty set");
  auto radius_of = [&](const SPDPoint& c) {
    double r = 0;
    for (const auto& s : set) r = std::max(r, spd_distance(c, s));
    return r;
  };
  SPDPoint center = set.front();
  double radius = radius_of(center);
  int iters = 0;
  if (set.size() == 1 || radius < 1e-12) return {std::move(center), radius, 0};

  // Farthest-point stepping.
  for (int k = 1; k <= 500; ++k) {
    ++iters;
    std::size_t far = 0;
    double worst = -1;
    for (std::size_t i = 0; i < set.size(); ++i) {
      const double d = spd_distance(center, set[i]);
      if (d > worst) {
        worst = d;
        far = i;
      }
    }
    SPDPoint next = spd_geodesic(center, set[far], 1.0 / (k + 1));
    const double r_next = radius_of(next);
    const double improvement = radius - r_next;
    center = std::move(next);
    radius = r_next;
    if (k > 8 && std::abs(improvement) < 1e-9) break;
  }

  // Exact support enumeration.
  auto consider = [&](const SPDPoint& c) {
    const double r = radius_of(c);
    if (r < radius - 1e-14) {
      center = c;
      radius = r;
    }
  };
  for (const auto& e : set) consider(e);
  for (std::size_t i = 0; i < set.size(); ++i)
    for (std::size_t j = i + 1; j < set.size(); ++j)
      consider(spd_geodesic(set[i], set[j], 0.5));
  // Triple circumcenters: Newton on the equidistance system in the tangent
  // chart at the pair-midpoint average.
  for (std::size_t i = 0; i < set.size(); ++i)
    for (std::size_t j = i + 1; j < set.size(); ++j)
      for (std::size_t k = j + 1; k < set.size(); ++k) {
        SPDPoint guess = spd_geodesic(spd_geodesic(set[i], set[j], 0.5), set[k], 1.0 / 3.0);
        const Eigen::MatrixXd gh = detail_spd::power(guess.m(), 0.5);
        Eigen::Matrix2d e1, e2;
        e1 << 1, 0, 0, -1;
        e2 << 0, 1, 1, 0;
        auto at = [&](const Eigen::Vector2d& u) {
          return SPDPoint(gh * detail_spd::expm(Eigen::Matrix2d(u[0] * e1 + u[1] * e2)) * gh);
        };
        Eigen::Vector2d u = Eigen::Vector2d::Zero();
        bool ok = false;
        for (int it = 0; it < 40; ++it) {
          const SPDPoint x = at(u);
          const double da = spd_distance(x, set[i]);
          const double db = spd_distance(x, set[j]);
          const double dc = spd_distance(x, set[k]);
          const Eigen::Vector2d f{da - db, db - dc};
          if (f.norm() < 1e-12) {
            ok = true;
            break;
          }
          const double h = 1e-6;
          Eigen::Matrix2d jac;
          for (int col = 0; col < 2; ++col) {
            Eigen::Vector2d up = u, um = u;
            up[col] += h;
            um[col] -= h;
            const SPDPoint xp = at(up), xm = at(um);
            jac(0, col) = ((spd_distance(xp, set[i]) - spd_distance(xp, set[j])) -
                           (spd_distance(xm, set[i]) - spd_distance(xm, set[j]))) /
                          (2 * h);
            jac(1, col) = ((spd_distance(xp, set[j]) - spd_distance(xp, set[k])) -
                           (spd_distance(xm, set[j]) - spd_distance(xm, set[k]))) /
                          (2 * h);
          }
          if (std::abs(jac.determinant()) < 1e-14) break;
          const Eigen::Vector2d du = jac.colPivHouseholderQr().solve(-f);
          if (!du.allFinite() || du.norm() > 10.0) break;
          u += du;
        }
        if (ok) consider(at(u));
      }
  return {std::move(center), radius, iters};
}

struct OrbitSet {
  std::vector<SPDPoint> elements;   // normalized Grams, n = 0 first
  std::vector<int> iterate_index;
  bool truncated = false;
};

/// Orbit set S(p) = { gram((f^n)_p) : 0 <= n <= N } via chain-ruled
/// horizontal matrices (the first layer of the MM derivative for these
/// smooth contact maps).
template <class State>
OrbitSet orbit_set_from_step(
    const std::function<std::pair<State, Eigen::Matrix2d>(const State&)>& step, State p,
    int n_iterates) {
  OrbitSet out;
  out.elements.push_back(SPDPoint::identity(2));
  out.iterate_index.push_back(0);
  // The chain is rescaled to unit determinant after every step: normalized
  // Grams are scale-free, and the trap map's true determinant decays
  // geometrically (strong conformal contraction), which would otherwise
  // underflow long products.
  Eigen::Matrix2d acc = Eigen::Matrix2d::Identity();
  State cur = std::move(p);
  for (int n = 1; n <= n_iterates; ++n) {
    try {
      auto [next, d] = step(cur);
      acc = d * acc;
      cur = std::move(next);
    } catch (const DomainError&) {
      out.truncated = true;
      break;
    }
    const double det = std::abs(acc.determinant());
    if (!(det > 1e-240) || !acc.allFinite()) {
      out.truncated = true;
      break;
    }
    acc /= std::sqrt(det);
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(acc);
    if (svd.singularValues()[1] < 1e-10 * svd.singularValues()[0]) {
      out.truncated = true;  // chain numerically degenerate
      break;
    }
    out.elements.push_back(normalized_gram(acc));
    out.iterate_index.push_back(n);
  }
  return out;
}

inline OrbitSet orbit_set(const MapHandle& m, const SpherePoint& p, int n_iterates) {
  std::function<std::pair<SpherePoint, Eigen::Matrix2d>(const SpherePoint&)> step =
      [&m](const SpherePoint& x) {
        if (!m.in_smooth_domain(x)) throw DomainError("orbit_set: branch locus");
        return std::make_pair(m(x), horizontal_matrix(m, x));
      };
  return orbit_set_from_step<SpherePoint>(step, p, n_iterates);
}

inline OrbitSet orbit_set(const UQRMap& u, const LensPoint& p, int n_iterates) {
  std::function<std::pair<LensPoint, Eigen::Matrix2d>(const LensPoint&)> step =
      [&u](const LensPoint& x) { return u.step_with_matrix(x); };
  return orbit_set_from_step<LensPoint>(step, p, n_iterates);
}

/// Grid-sampled invariant conformal structure on the lens space.
struct ConformalStructure {
  std::vector<LensPoint> grid;
  std::vector<SPDPoint> s;             // per-point center (frame at the lift)
  std::vector<double> orbit_radius;
  std::vector<bool> valid;
  std::vector<Region> region;
  int n_iterates = 0;
  bool exclusion_warning = false;      // > 20% of the grid excluded
  int m_nu = 0, m_theta = 0;           // product-grid dimensions (0: unstructured)

  std::size_t flat_index(int i_nu, int j, int k) const {
    const int jm = ((j % m_theta) + m_theta) % m_theta;
    const int km = ((k % m_theta) + m_theta) % m_theta;
    const int im = std::clamp(i_nu, 0, m_nu - 1);
    return (std::size_t(im) * m_theta + jm) * m_theta + km;
  }
};

/// Structured build over the default product grid.
inline ConformalStructure build_structure_grid(const UQRMap& u, int m_nu, int m_theta,
                                               int n_iterates, unsigned threads = 0);

/// Product grid in lens polar coordinates (nu, theta1, theta2) with
/// r1 = cos(nu), r2 = sin(nu); orbit-duplicate classes are kept (their values
/// coincide, and keeping them preserves the product structure for lookups).
inline std::vector<LensPoint> lens_polar_grid(const LensSpec& spec, int m_nu, int m_theta) {
  std::vector<LensPoint> out;
  out.reserve(std::size_t(m_nu) * m_theta * m_theta);
  for (int i = 0; i < m_nu; ++i) {
    const double nu = kPi / 2 * (i + 0.5) / m_nu;
    for (int j = 0; j < m_theta; ++j)
      for (int k = 0; k < m_theta; ++k) {
        const double t1 = -kPi + kTwoPi * (j + 0.5) / m_theta;
        const double t2 = -kPi + kTwoPi * (k + 0.5) / m_theta;
        CVec z(2);
        z << std::polar(std::cos(nu), t1), std::polar(std::sin(nu), t2);
        out.emplace_back(SpherePoint(std::move(z)), spec);
      }
  }
  return out;
}

/// Orbit validity: the forward orbit stays at least `thr` away from the
/// branch locus (min coordinate radius as the locus-distance surrogate) for
/// depth+1 steps.
inline bool orbit_avoids_branch(const UQRMap& u, const LensPoint& p, int depth,
                                double thr = 1e-3) {
  LensPoint cur = p;
  for (int n = 0; n <= depth; ++n) {
    if (cur.representative().min_radius() < thr) return false;
    if (n < depth) cur = u.eval(cur);
  }
  return true;
}

/// Build the structure: per valid grid point, orbit_set then
/// chebyshev_center.  Boundedness certificate: the maximum orbit radius is
/// reported by the caller from orbit_radius.
inline ConformalStructure build_structure(const UQRMap& u, std::vector<LensPoint> grid,
                                          int n_iterates, unsigned threads = 0,
                                          int m_nu = 0, int m_theta = 0) {
  ConformalStructure cs;
  cs.n_iterates = n_iterates;
  cs.m_nu = m_nu;
  cs.m_theta = m_theta;
  cs.grid = std::move(grid);
  const std::size_t n = cs.grid.size();
  cs.s.assign(n, SPDPoint::identity(2));
  cs.orbit_radius.assign(n, 0.0);
  cs.valid.assign(n, false);
  cs.region.assign(n, Region::Transit);

  parallel_for(
      n,
      [&](std::size_t i) {
        const LensPoint& p = cs.grid[i];
        cs.region[i] = u.region(p);
        try {
          if (!orbit_avoids_branch(u, p, n_iterates)) return;
          auto os = orbit_set(u, p, n_iterates);
          if (os.truncated) return;
          auto c = chebyshev_center(os.elements);
          cs.s[i] = c.center;
          cs.orbit_radius[i] = c.radius;
          cs.valid[i] = true;
        } catch (const std::exception&) {
          // excluded; the validity flag and exclusion warning report it
        }
      },
      threads);

  std::size_t excluded = 0;
  for (bool v : cs.valid)
    if (!v) ++excluded;
  cs.exclusion_warning = excluded * 5 > n;
  return cs;
}

/// Karcher-style blend of up to 4 nearest grid values (weights 1/(d+eps),
/// a few fixed-point geodesic-averaging sweeps).  On product grids the
/// candidate neighbours come from cell-index arithmetic over all orbit
/// rotations of the query point; unstructured grids fall back to a scan.
inline SPDPoint blend_nearest(const ConformalStructure& cs, const LensPoint& at, int k_max = 4) {
  auto chord = [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < cs.grid[i].spec().p; ++k)
      best = std::min(best, (cs.grid[i].spec().rotate(at.representative(), k).z() -
                             cs.grid[i].representative().z())
                                .norm());
    return best;
  };
  std::vector<std::pair<double, std::size_t>> near;
  if (cs.m_nu > 0 && cs.m_theta > 0) {
    std::vector<std::size_t> cand;
    const LensSpec& spec = at.spec();
    for (int k = 0; k < spec.p; ++k) {
      const SpherePoint w = spec.rotate(at.representative(), k);
      const double nu = std::atan2(w.r(1), w.r(0));
      const double fi = nu / (kPi / 2) * cs.m_nu - 0.5;
      const double fj = (w.theta(0) + kPi) / kTwoPi * cs.m_theta - 0.5;
      const double fk = (w.theta(1) + kPi) / kTwoPi * cs.m_theta - 0.5;
      for (int di = 0; di <= 1; ++di)
        for (int dj = 0; dj <= 1; ++dj)
          for (int dk = 0; dk <= 1; ++dk) {
            const std::size_t idx =
                cs.flat_index(int(std::floor(fi)) + di, int(std::floor(fj)) + dj,
                              int(std::floor(fk)) + dk);
            if (cs.valid[idx] && std::find(cand.begin(), cand.end(), idx) == cand.end())
              cand.push_back(idx);
          }
    }
    for (auto i : cand) near.emplace_back(chord(i), i);
  }
  if (near.empty()) {
    for (std::size_t i = 0; i < cs.grid.size(); ++i)
      if (cs.valid[i]) near.emplace_back(chord(i), i);
  }
  if (near.empty()) throw NumericalError("blend_nearest: no valid grid values");
  std::partial_sort(near.begin(), near.begin() + std::min<std::size_t>(k_max, near.size()),
                    near.end());
  near.resize(std::min<std::size_t>(k_max, near.size()));

  double wsum = 0;
  std::vector<double> w;
  for (auto& [d, i] : near) {
    w.push_back(1.0 / (d + 1e-9));
    wsum += w.back();
  }
  for (auto& x : w) x /= wsum;

  SPDPoint mean = cs.s[near[0].second];
  for (int sweep = 0; sweep < 4; ++sweep) {
    const Eigen::MatrixXd mh = detail_spd::power(mean.m(), 0.5);
    const Eigen::MatrixXd mih = detail_spd::power(mean.m(), -0.5);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2, 2);
    for (std::size_t j = 0; j < near.size(); ++j)
      acc += w[j] * detail_spd::logm(mih * cs.s[near[j].second].m() * mih);
    mean = SPDPoint(mh * detail_spd::expm(acc) * mh);
    if (acc.norm() < 1e-13) break;
  }
  return mean;
}

struct ResidualReport {
  std::vector<double> residual;  // per valid grid point (NaN when skipped)
  double trap_mean_positive = 0; // mean positive residual over trap points
  double trap_max = 0;
  int trap_points = 0;
};

/// Invariance residual per grid point: spd distance between
/// (det f)^{-2/d} f^t s_{f p} f and s_p, with s_{f p} interpolated from the
/// nearest grid values.
inline ResidualReport invariance_residual(const ConformalStructure& cs, const UQRMap& u,
                                          unsigned threads = 0) {
  ResidualReport rep;
  const std::size_t n = cs.grid.size();
  rep.residual.assign(n, std::numeric_limits<double>::quiet_NaN());
  parallel_for(
      n,
      [&](std::size_t i) {
        if (!cs.valid[i]) return;
        try {
          auto [next, f] = u.step_with_matrix(cs.grid[i]);
          const SPDPoint s_next = blend_nearest(cs, next);
          rep.residual[i] = spd_distance(spd_congruence(f, s_next), cs.s[i]);
        } catch (const std::exception&) {
          // skipped: outside coverage or on a branch orbit
        }
      },
      threads);
  double acc = 0;
  int cnt = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(rep.residual[i]) || cs.region[i] != Region::Trap) continue;
    ++rep.trap_points;
    rep.trap_max = std::max(rep.trap_max, rep.residual[i]);
    if (rep.residual[i] > 1e-12) {
      acc += rep.residual[i];
      ++cnt;
    }
  }
  rep.trap_mean_positive = cnt ? acc / cnt : 0.0;
  return rep;
}

inline ConformalStructure build_structure_grid(const UQRMap& u, int m_nu, int m_theta,
                                               int n_iterates, unsigned threads) {
  return build_structure(u, lens_polar_grid(u.spec(), m_nu, m_theta), n_iterates, threads,
                         m_nu, m_theta);
}

}  // namespace srqr
