#include "grips/density.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace grips {

std::vector<int> ObservedData::observed_outcomes(Eigen::Index i) const {
  std::vector<int> idx;
  for (Eigen::Index j = 0; j < q(); ++j)
    if (observed(i, j)) idx.push_back(static_cast<int>(j));
  return idx;
}

void ObservedData::validate() const {
  if (y.rows() != n() || X.rows() != n())
    throw std::invalid_argument("data: locations, outcomes and covariates disagree in length");
  if (q() < 1) throw std::invalid_argument("data: need at least one outcome");
  if (!X.allFinite()) throw std::invalid_argument("data: covariates must be finite");
  if (!locations.allFinite()) throw std::invalid_argument("data: locations must be finite");
  for (Eigen::Index i = 0; i < n(); ++i)
    for (Eigen::Index j = 0; j < q(); ++j)
      if (std::isinf(y(i, j))) throw std::invalid_argument("data: infinite outcome");
}

Vec LatentField::block(const std::vector<int>& points, Eigen::Index j) const {
  Vec out(points.size());
  for (std::size_t s = 0; s < points.size(); ++s) out[s] = values(points[s], j);
  return out;
}

NodeConditioning node_conditioning(const Mesh& mesh, int node, const MaternParams& factor) {
  const auto& dag = mesh.dag;
  const Points own = gather(mesh.grid.points, dag.own_points[node]);
  const Points par = gather(mesh.grid.points, dag.parent_points[node]);
  const ConditioningPair cp = conditioning(own, par, factor, node);

  NodeConditioning nc;
  nc.H = cp.H;
  const SpdFactor rf = factor_spd(cp.R, node, "residual covariance");
  nc.R_llt = rf.llt;
  nc.log_det_R = rf.log_det();
  nc.R_inv = rf.llt.solve(Mat::Identity(cp.R.rows(), cp.R.cols()));
  nc.R_inv = 0.5 * (nc.R_inv + nc.R_inv.transpose()).eval();
  nc.Ht_Rinv = nc.H.transpose() * nc.R_inv;
  const auto& pa = dag.parents[node];
  for (std::size_t s = 0; s < pa.size(); ++s) {
    const Eigen::Index off = dag.parent_offset[node][s];
    const Eigen::Index len = static_cast<Eigen::Index>(dag.own_points[pa[s]].size());
    const auto hs = nc.H.middleCols(off, len);
    nc.slot_precision.push_back(hs.transpose() * nc.R_inv * hs);
  }
  return nc;
}

FactorPrior build_factor_prior(const Mesh& mesh, const MaternParams& factor) {
  FactorPrior prior;
  prior.reserve(mesh.prototypes.n_conditioning());
  for (int rep : mesh.prototypes.conditioning_rep)
    prior.push_back(node_conditioning(mesh, rep, factor));
  return prior;
}

LatentPriorCache::LatentPriorCache(const Mesh& mesh, const Factors& factors)
    : cond_class_(mesh.prototypes.conditioning_class) {
  by_factor_.reserve(factors.size());
  for (const auto& f : factors) by_factor_.push_back(build_factor_prior(mesh, f));
}

namespace {

template <class Get>
LatentQuadratic quadratic_impl(const LatentField& r, const Mesh& mesh, std::size_t j,
                               const Get& get) {
  const auto& dag = mesh.dag;
  const int n = static_cast<int>(dag.n_reference());
  std::vector<double> ld(n), qf(n);
#pragma omp parallel for schedule(static)
  for (int v = 0; v < n; ++v) {
    const NodeConditioning& nc = get(v);
    Vec e = r.block(dag.own_points[v], j);
    if (!dag.parents[v].empty()) e -= nc.H * r.block(dag.parent_points[v], j);
    const Vec u = nc.R_llt.matrixL().solve(e);
    ld[v] = nc.log_det_R;
    qf[v] = u.squaredNorm();
  }
  LatentQuadratic out;
  for (int v = 0; v < n; ++v) {
    out.log_det += ld[v];
    out.quad += qf[v];
  }
  out.n = static_cast<double>(mesh.grid.size());
  return out;
}

} // namespace

LatentQuadratic latent_quadratic(const LatentField& r, const Mesh& mesh,
                                 const LatentPriorCache& cache, std::size_t j) {
  return quadratic_impl(r, mesh, j, [&](int v) -> const NodeConditioning& {
    return cache.get(j, v);
  });
}

LatentQuadratic latent_quadratic(const LatentField& r, const Mesh& mesh,
                                 const FactorPrior& prior, const std::vector<int>& cond_class,
                                 std::size_t j) {
  return quadratic_impl(r, mesh, j, [&](int v) -> const NodeConditioning& {
    return prior[cond_class[v]];
  });
}

double latent_logdensity_factor(const LatentField& r, const Mesh& mesh,
                                const LatentPriorCache& cache, std::size_t j) {
  return latent_quadratic(r, mesh, cache, j).logdensity();
}

double latent_logdensity(const LatentField& r, const Mesh& mesh,
                         const LatentPriorCache& cache) {
  double total = 0.0;
  for (std::size_t j = 0; j < cache.n_factors(); ++j)
    total += latent_logdensity_factor(r, mesh, cache, j);
  return total;
}

double latent_logdensity(const LatentField& r, const Mesh& mesh, const Factors& factors) {
  if (static_cast<std::size_t>(r.values.cols()) != factors.size() ||
      static_cast<Eigen::Index>(r.values.rows()) != static_cast<Eigen::Index>(mesh.grid.size()))
    throw std::invalid_argument("latent field dimensions do not match the mesh and factors");
  return latent_logdensity(r, mesh, LatentPriorCache(mesh, factors));
}

bool ObservedConditioning::all_coincident() const {
  for (int c : coincident)
    if (c < 0) return false;
  return true;
}

Mat ObservedConditioning::residual() const {
  Mat out(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(factor.size()));
  for (std::size_t j = 0; j < factor.size(); ++j) out.col(j) = factor[j].R;
  return out;
}

ObservedFactor condition_observed_factor(const Mesh& mesh, const ObservedData& data,
                                         const ObservedConditioning& obs,
                                         const MaternParams& factor,
                                         const OwnFactorCache& own) {
  const int n = static_cast<int>(obs.size());
  ObservedFactor f;
  f.h.resize(n);
  f.R.resize(n);
  const auto& own_class = mesh.prototypes.own_class;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const int v = obs.node[i];
    kriging_weights(mesh, v, obs.coincident[i], data.locations.row(i).transpose(), factor,
                    own[own_class[v]], f.h[i], f.R[i]);
  }
  return f;
}

ObservedConditioning condition_observed(const Mesh& mesh, const ObservedData& data,
                                        const Factors& factors,
                                        const OwnCovarianceCache& cache) {
  if (static_cast<Eigen::Index>(mesh.dag.observed_node.size()) != data.n())
    throw std::invalid_argument("mesh was built for a different set of observed locations");
  ObservedConditioning obs;
  const Eigen::Index n = data.n();
  obs.node.resize(n);
  obs.coincident.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    obs.node[i] = mesh.dag.observed_node[i];
    obs.coincident[i] = coincident_point(mesh, obs.node[i], data.locations.row(i).transpose());
  }
  for (std::size_t j = 0; j < factors.size(); ++j)
    obs.factor.push_back(condition_observed_factor(mesh, data, obs, factors[j], cache.factor(j)));
  return obs;
}

Vec project_latent_factor(const ObservedConditioning& obs, const ObservedFactor& f,
                          const Mesh& mesh, const LatentField& r, Eigen::Index j) {
  Vec u(static_cast<Eigen::Index>(obs.size()));
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto& own = mesh.dag.own_points[obs.node[i]];
    if (obs.coincident[i] >= 0) {
      u[i] = r.values(own[obs.coincident[i]], j);
      continue;
    }
    double acc = 0.0;
    for (std::size_t s = 0; s < own.size(); ++s) acc += f.h[i][s] * r.values(own[s], j);
    u[i] = acc;
  }
  return u;
}

Mat project_latent(const ObservedConditioning& obs, const Mesh& mesh, const LatentField& r) {
  Mat u(static_cast<Eigen::Index>(obs.size()), r.values.cols());
  for (Eigen::Index j = 0; j < r.values.cols(); ++j)
    u.col(j) = project_latent_factor(obs, obs.factor[j], mesh, r, j);
  return u;
}

double obs_loglik_projected(const ObservedData& data, const Mat& beta,
                            const LoadingMatrix& a, const Vec& tau2, const Mat& residual,
                            const Mat& projected) {
  const Eigen::Index n = data.n();
  const Eigen::Index q = data.q();
  const Mat mean = data.X * beta + projected * a.A.transpose();
  double total = 0.0;
  if (q == 1) {
    const Vec a2 = a.A.row(0).transpose().array().square();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!data.observed(i, 0)) continue;
      const double var = tau2[0] + residual.row(i).dot(a2);
      const double e = data.y(i, 0) - mean(i, 0);
      total += -0.5 * (kLog2Pi + std::log(var) + e * e / var);
    }
    return total;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = data.observed_outcomes(i);
    if (idx.empty()) continue;
    const Mat cov_full = Mat(tau2.asDiagonal()) +
                         a.A * residual.row(i).transpose().asDiagonal() * a.A.transpose();
    const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
    Mat cov(m, m);
    Vec e(m);
    for (Eigen::Index s = 0; s < m; ++s) {
      e[s] = data.y(i, idx[s]) - mean(i, idx[s]);
      for (Eigen::Index t = 0; t < m; ++t) cov(s, t) = cov_full(idx[s], idx[t]);
    }
    Eigen::LLT<Mat> llt(cov);
    if (llt.info() != Eigen::Success)
      throw NumericalError("observation covariance is singular at location " + std::to_string(i));
    const Vec u = llt.matrixL().solve(e);
    total += -0.5 * (static_cast<double>(m) * kLog2Pi +
                     2.0 * llt.matrixLLT().diagonal().array().log().sum() + u.squaredNorm());
  }
  return total;
}

double obs_loglik(const ObservedData& data, const Mat& beta, const LoadingMatrix& a,
                  const Vec& tau2, const Factors& factors, const LatentField& r,
                  const Mesh& mesh) {
  data.validate();
  const OwnCovarianceCache cache(mesh, factors);
  const auto obs = condition_observed(mesh, data, factors, cache);
  return obs_loglik_projected(data, beta, a, tau2, obs.residual(), project_latent(obs, mesh, r));
}

double dense_gaussian_loglik(const Vec& y, const Vec& mean, const Mat& cov) {
  if (cov.rows() != y.size() || cov.cols() != y.size() || mean.size() != y.size())
    throw std::invalid_argument("dense_gaussian_loglik: dimension mismatch");
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("dense covariance factorization failed");
  // cov = L F L^T with unit-diagonal L = C diag(C)^-1 and F = diag(C)^2
  const auto c = llt.matrixL();
  const Vec d = llt.matrixLLT().diagonal();
  const Vec z = c.solve(y - mean);
  const Vec u = z.cwiseProduct(d);
  const Vec f = d.array().square();
  const double n = static_cast<double>(y.size());
  return -0.5 * n * kLog2Pi - 0.5 * f.array().log().sum() -
         0.5 * (u.array().square() / f.array()).sum();
}

} // namespace grips
