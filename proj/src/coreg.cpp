#include "grips/coreg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace grips {

void check_lower_pattern(const Mat& m, const char* what) {
  if (m.cols() > m.rows())
    throw std::invalid_argument(std::string(what) + ": needs k <= q");
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (!(m(j, j) > 0) || !std::isfinite(m(j, j)))
      throw std::invalid_argument(std::string(what) + ": diagonal must be positive");
    for (Eigen::Index i = 0; i < j; ++i)
      if (m(i, j) != 0.0)
        throw std::invalid_argument(std::string(what) + ": must be lower-triangular");
  }
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

void LoadingMatrix::validate() const { check_lower_pattern(A, "loading matrix"); }

Vec q_diagonal(const Factors& factors) {
  Vec d(factors.size());
  for (std::size_t j = 0; j < factors.size(); ++j)
    d[j] = std::pow(factors[j].phi, factors[j].nu);
  return d;
}

Vec j_diagonal(const Factors& factors) {
  Vec d(factors.size());
  for (std::size_t j = 0; j < factors.size(); ++j) d[j] = 1.0 / std::sqrt(factors[j].sigma2);
  return d;
}

LoadingMatrix assemble_A(const Mat& lambda, const Factors& factors) {
  check_lower_pattern(lambda, "Lambda");
  if (static_cast<std::size_t>(lambda.cols()) != factors.size())
    throw std::invalid_argument("Lambda columns must match the number of factors");
  for (const auto& f : factors) f.validate();
  const Vec scale = q_diagonal(factors).cwiseProduct(j_diagonal(factors));
  return LoadingMatrix{lambda * scale.asDiagonal()};
}

Mat recover_Lambda(const LoadingMatrix& a, const Factors& factors) {
  const Vec scale = q_diagonal(factors).cwiseProduct(j_diagonal(factors));
  return a.A * scale.cwiseInverse().asDiagonal();
}

OwnFactorCache build_own_factor_cache(const Mesh& mesh, const MaternParams& factor) {
  OwnFactorCache cache;
  cache.reserve(mesh.prototypes.n_own());
  for (int rep : mesh.prototypes.own_rep) {
    const Points pts = gather(mesh.grid.points, mesh.dag.own_points[rep]);
    cache.push_back(factor_spd(cov_matrix(pts, pts, factor), rep, "own-cell covariance"));
  }
  return cache;
}

OwnCovarianceCache::OwnCovarianceCache(const Mesh& mesh, const Factors& factors)
    : own_class_(mesh.prototypes.own_class) {
  by_factor_.reserve(factors.size());
  for (const auto& f : factors) by_factor_.push_back(build_own_factor_cache(mesh, f));
}

int locate_node(const Mesh& mesh, const Point& loc) {
  const auto c = mesh.tess.cell_of(loc);
  const int node = mesh.dag.cell_node[mesh.tess.linear(c[0], c[1])];
  if (node < 0) throw std::invalid_argument("location falls in a cell without reference points");
  return node;
}

int coincident_point(const Mesh& mesh, int node, const Point& loc) {
  const auto& own = mesh.dag.own_points[node];
  for (std::size_t s = 0; s < own.size(); ++s)
    if ((mesh.grid.points.row(own[s]).transpose() - loc).norm() < kZeroLag)
      return static_cast<int>(s);
  return -1;
}

void kriging_weights(const Mesh& mesh, int node, int coincident, const Point& loc,
                     const MaternParams& factor, const SpdFactor& own_factor, Vec& h,
                     double& residual) {
  const auto& own = mesh.dag.own_points[node];
  const Eigen::Index n = static_cast<Eigen::Index>(own.size());
  if (coincident >= 0) {
    h = Vec::Zero(n);
    h[coincident] = 1.0;
    residual = 0.0;
    return;
  }
  const double var = factor.variance();
  Vec k(n);
  for (Eigen::Index s = 0; s < n; ++s) {
    const double d = (mesh.grid.points.row(own[s]).transpose() - loc).norm();
    k[s] = var * matern_correlation(d, factor.phi, factor.nu);
  }
  h = own_factor.llt.solve(k);
  residual = std::max(0.0, var - k.dot(h));
}

LocationConditioning condition_location(const Point& loc, int node, const Mesh& mesh,
                                        const Factors& factors,
                                        const OwnCovarianceCache& cache) {
  LocationConditioning out;
  out.node = node;
  out.coincident = coincident_point(mesh, node, loc);
  out.h.resize(factors.size());
  out.R.resize(static_cast<Eigen::Index>(factors.size()));
  for (std::size_t j = 0; j < factors.size(); ++j)
    kriging_weights(mesh, node, out.coincident, loc, factors[j], cache.get(j, node), out.h[j],
                    out.R[j]);
  return out;
}

LocalProjection project(const LocationConditioning& cond, const LoadingMatrix& a) {
  LocalProjection p;
  p.node = cond.node;
  const Eigen::Index k = a.k();
  const Eigen::Index n = k > 0 ? cond.h[0].size() : 0;
  p.Z.setZero(a.q(), k * n);
  for (Eigen::Index j = 0; j < k; ++j)
    p.Z.middleCols(j * n, n) = a.A.col(j) * cond.h[j].transpose();
  p.Sigma = a.A * cond.R.asDiagonal() * a.A.transpose();
  return p;
}

LocalProjection local_projection(const Point& loc, const Mesh& mesh,
                                 const LoadingMatrix& a, const Factors& factors) {
  a.validate();
  const int node = locate_node(mesh, loc);
  const OwnCovarianceCache cache(mesh, factors);
  return project(condition_location(loc, node, mesh, factors, cache), a);
}

} // namespace grips
