#ifndef GRIPS_TESTS_ORACLES_HPP
#define GRIPS_TESTS_ORACLES_HPP

// Dense reference computations used by the tests. They share no code with
// the library beyond the mesh bookkeeping and plain Eigen.

#include "grips/density.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using grips::Mat;
using grips::Points;
using grips::Vec;

template <class S>
using MatT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VecT = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <class S = double>
S matern(S h, S phi, S nu) {
  if (h == 0) return 1;
  const S x = phi * h;
  return std::pow(S(2), 1 - nu) / std::tgamma(nu) * std::pow(x, nu) * std::cyl_bessel_k(nu, x);
}

// sigma2 rho / phi^(2 nu)
template <class S = double>
MatT<S> cov(const Points& a, const Points& b, double sigma2, double phi, double nu) {
  MatT<S> c(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      S h2 = 0;
      for (Eigen::Index d = 0; d < a.cols(); ++d) {
        const S dx = S(a(i, d)) - S(b(j, d));
        h2 += dx * dx;
      }
      c(i, j) = S(sigma2) * matern<S>(std::sqrt(h2), phi, nu) / std::pow(S(phi), 2 * S(nu));
    }
  return c;
}

template <class S = double>
MatT<S> cov(const Points& a, const Points& b, const grips::MaternParams& f) {
  return cov<S>(a, b, f.sigma2, f.phi, f.nu);
}

template <class S>
MatT<S> rows_of(const MatT<S>& m, const std::vector<int>& r, const std::vector<int>& c) {
  MatT<S> out(r.size(), c.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) out(i, j) = m(r[i], c[j]);
  return out;
}

template <class S>
S log_abs_det(const MatT<S>& m) {
  const Eigen::PartialPivLU<MatT<S>> lu(m);
  return lu.matrixLU().diagonal().array().abs().log().sum();
}

// log N(y; mean, cov) through an explicit inverse.
template <class S>
S gaussian_logpdf_t(const VecT<S>& y, const VecT<S>& mean, const MatT<S>& c) {
  const VecT<S> e = y - mean;
  const S quad = e.dot(c.inverse() * e);
  return -S(0.5) * (S(y.size()) * S(grips::kLog2Pi) + log_abs_det(c) + quad);
}

inline double gaussian_logpdf(const Vec& y, const Vec& mean, const Mat& c) {
  return gaussian_logpdf_t<double>(y, mean, c);
}

// Conditional mean map and covariance of block t given block p of a joint
// covariance, by explicit inversion.
template <class S>
struct BlockT {
  MatT<S> H, R;
};
using Block = BlockT<double>;

template <class S>
BlockT<S> condition(const MatT<S>& joint, const std::vector<int>& t, const std::vector<int>& p) {
  const MatT<S> ctt = rows_of(joint, t, t);
  if (p.empty()) return {MatT<S>(t.size(), 0), ctt};
  const MatT<S> ctp = rows_of(joint, t, p);
  const MatT<S> cpp_inv = rows_of(joint, p, p).inverse();
  const MatT<S> h = ctp * cpp_inv;
  return {h, ctt - h * ctp.transpose()};
}

// Precision of the reference-grid latent vector implied by the DAG, in grid
// index order: (I - H)^T R^-1 (I - H) with H, R from dense conditioning.
template <class S = double>
MatT<S> dag_precision(const grips::Mesh& mesh, const grips::MaternParams& f) {
  const Points& g = mesh.grid.points;
  const Eigen::Index n = g.rows();
  const MatT<S> joint = cov<S>(g, g, f);
  MatT<S> b = MatT<S>::Zero(n, n);
  MatT<S> rinv = MatT<S>::Zero(n, n);
  const auto& dag = mesh.dag;
  for (std::size_t v = 0; v < dag.n_reference(); ++v) {
    const auto& own = dag.own_points[v];
    const auto& par = dag.parent_points[v];
    const BlockT<S> blk = condition(joint, own, par);
    const MatT<S> ri = blk.R.inverse();
    for (std::size_t a = 0; a < own.size(); ++a) {
      b(own[a], own[a]) = 1;
      for (std::size_t c = 0; c < par.size(); ++c) b(own[a], par[c]) = -blk.H(a, c);
      for (std::size_t c = 0; c < own.size(); ++c) rinv(own[a], own[c]) = ri(a, c);
    }
  }
  return b.transpose() * rinv * b;
}

// Computed in extended precision.
inline Mat dag_covariance(const grips::Mesh& mesh, const grips::MaternParams& f) {
  return MatT<long double>(dag_precision<long double>(mesh, f).inverse()).cast<double>();
}

// Sum over factors of log N(r_j; 0, C_j) with C_j the DAG-implied covariance.
inline double latent_logdensity(const grips::LatentField& r, const grips::Mesh& mesh,
                                const grips::Factors& factors) {
  using L = long double;
  L total = 0;
  for (std::size_t j = 0; j < factors.size(); ++j) {
    const MatT<L> c = dag_precision<L>(mesh, factors[j]).inverse();
    total += gaussian_logpdf_t<L>(r.values.col(j).cast<L>(), VecT<L>::Zero(c.rows()), c);
  }
  return static_cast<double>(total);
}

// Per location: loading of the latent grid vector (q x k*n_grid, factor
// major) and residual covariance A R A^T from kriging on the cell's points.
struct ObsTerms {
  std::vector<Mat> Z;
  std::vector<Mat> Sigma;
};

inline ObsTerms obs_terms(const grips::Mesh& mesh, const grips::ObservedData& data,
                          const Mat& A, const grips::Factors& factors) {
  const Points& g = mesh.grid.points;
  const Eigen::Index ng = g.rows();
  const Eigen::Index k = A.cols();
  ObsTerms t;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const int node = mesh.dag.observed_node[i];
    const auto& own = mesh.dag.own_points[node];
    const Points s = grips::gather(g, own);
    const Points l = data.locations.row(i);
    Mat zfac = Mat::Zero(k, k * ng);
    Vec rdiag(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const Mat cls = cov(l, s, factors[j]);
      const Mat h = cls * cov(s, s, factors[j]).inverse();
      rdiag[j] = cov(l, l, factors[j])(0, 0) - (h * cls.transpose())(0, 0);
      for (std::size_t a = 0; a < own.size(); ++a) zfac(j, j * ng + own[a]) = h(0, a);
    }
    t.Z.push_back(A * zfac);
    t.Sigma.push_back(A * rdiag.asDiagonal() * A.transpose());
  }
  return t;
}

inline Vec stack(const grips::LatentField& r) {
  const Eigen::Index ng = r.values.rows();
  Vec v(ng * r.values.cols());
  for (Eigen::Index j = 0; j < r.values.cols(); ++j) v.segment(j * ng, ng) = r.values.col(j);
  return v;
}

// Observed entries stacked location by location.
struct StackedModel {
  Vec y;
  Vec offset;  // X beta part
  Mat Z;       // observed entries x k n_grid
  Mat noise;   // block-diagonal D + Sigma restricted to observed entries
};

inline StackedModel stacked_model(const grips::Mesh& mesh, const grips::ObservedData& data,
                                  const Mat& beta, const Mat& A, const Vec& tau2,
                                  const grips::Factors& factors) {
  const ObsTerms t = obs_terms(mesh, data, A, factors);
  std::vector<std::pair<int, int>> entries;
  for (Eigen::Index i = 0; i < data.n(); ++i)
    for (Eigen::Index j = 0; j < data.q(); ++j)
      if (!std::isnan(data.y(i, j))) entries.push_back({static_cast<int>(i), static_cast<int>(j)});
  const Eigen::Index m = static_cast<Eigen::Index>(entries.size());
  const Eigen::Index cols = t.Z.empty() ? 0 : t.Z[0].cols();
  StackedModel s{Vec(m), Vec(m), Mat(m, cols), Mat::Zero(m, m)};
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto [i, j] = entries[a];
    s.y[a] = data.y(i, j);
    s.offset[a] = data.X.row(i).dot(beta.col(j));
    s.Z.row(a) = t.Z[i].row(j);
    for (Eigen::Index b = 0; b < m; ++b) {
      const auto [i2, j2] = entries[b];
      if (i2 != i) continue;
      s.noise(a, b) = t.Sigma[i](j, j2) + (j == j2 ? tau2[j] : 0.0);
    }
  }
  return s;
}

inline double obs_loglik(const grips::Mesh& mesh, const grips::ObservedData& data,
                         const Mat& beta, const Mat& A, const Vec& tau2,
                         const grips::Factors& factors, const grips::LatentField& r) {
  const StackedModel s = stacked_model(mesh, data, beta, A, tau2, factors);
  return gaussian_logpdf(s.y, s.offset + s.Z * stack(r), s.noise);
}

// Random mesh with up to 8 x 8 grid points and cells.
inline grips::Mesh random_mesh(std::mt19937_64& eng, int n_obs, int max_side = 8) {
  std::uniform_int_distribution<int> side(2, max_side);
  const std::array<int, 2> counts{side(eng), side(eng)};
  const std::array<int, 2> splits{std::uniform_int_distribution<int>(1, counts[0])(eng),
                                  std::uniform_int_distribution<int>(1, counts[1])(eng)};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  grips::Domain d;
  d.lower = {-u(eng), -u(eng)};
  d.upper = {d.lower[0] + 0.5 + 2 * u(eng), d.lower[1] + 0.5 + 2 * u(eng)};
  Points obs(n_obs, 2);
  for (int i = 0; i < n_obs; ++i)
    obs.row(i) << d.lower[0] + u(eng) * d.extent(0), d.lower[1] + u(eng) * d.extent(1);
  return grips::build_mesh(d, counts, splits, obs);
}

} // namespace oracle

#endif
