#ifndef GRIPS_DENSITY_HPP
#define GRIPS_DENSITY_HPP

#include "grips/coreg.hpp"

#include <vector>

namespace grips {

/// Irregularly located q-variate outcomes. Missing outcomes are NaN in `y`.
/// Every outcome shares the covariate row X(l); the coefficients form a
/// p x q matrix with one column per outcome.
struct ObservedData {
  Points locations;
  Mat y;
  Mat X;

  Eigen::Index n() const { return locations.rows(); }
  Eigen::Index q() const { return y.cols(); }
  Eigen::Index p() const { return X.cols(); }
  bool observed(Eigen::Index i, Eigen::Index j) const { return !std::isnan(y(i, j)); }
  /// Indices of the observed outcomes at location i.
  std::vector<int> observed_outcomes(Eigen::Index i) const;
  void validate() const;
};

/// k-variate latent process at the reference grid, one row per grid point.
struct LatentField {
  Mat values;

  /// Values of factor j at the listed grid points.
  Vec block(const std::vector<int>& points, Eigen::Index j) const;
};

/// Conditioning of one prototype class of reference nodes for one factor.
struct NodeConditioning {
  Mat H;                    // n_i x n_parents
  Eigen::LLT<Mat> R_llt;
  Mat R_inv;
  double log_det_R = 0.0;
  Mat Ht_Rinv;              // H^T R^-1
  std::vector<Mat> slot_precision; // per parent slot: H_s^T R^-1 H_s
};

/// Conditioning of every prototype class for one factor.
using FactorPrior = std::vector<NodeConditioning>;

FactorPrior build_factor_prior(const Mesh& mesh, const MaternParams& factor);

/// Conditioning matrices of every reference node, computed once per
/// prototype class and shared by all nodes of that class.
class LatentPriorCache {
public:
  LatentPriorCache() = default;
  LatentPriorCache(const Mesh& mesh, const Factors& factors);

  void set_factor(std::size_t j, FactorPrior prior) { by_factor_[j] = std::move(prior); }
  const NodeConditioning& get(std::size_t factor, int node) const {
    return by_factor_[factor][cond_class_[node]];
  }
  std::size_t n_factors() const { return by_factor_.size(); }

private:
  std::vector<int> cond_class_;
  std::vector<FactorPrior> by_factor_;
};

/// Sum of log-determinants and quadratic forms of the nodal residuals of
/// one factor, with the total number of points.
struct LatentQuadratic {
  double log_det = 0.0;
  double quad = 0.0;
  double n = 0.0;

  double logdensity() const { return -0.5 * (n * kLog2Pi + log_det + quad); }
};

/// Conditioning of reference node `node` computed directly, bypassing the
/// prototype cache.
NodeConditioning node_conditioning(const Mesh& mesh, int node, const MaternParams& factor);

/// Nodal terms of one factor; `prior` may be a trial value for that factor.
LatentQuadratic latent_quadratic(const LatentField& r, const Mesh& mesh,
                                 const LatentPriorCache& cache, std::size_t j);
LatentQuadratic latent_quadratic(const LatentField& r, const Mesh& mesh,
                                 const FactorPrior& prior, const std::vector<int>& cond_class,
                                 std::size_t j);

/// Sum over reference nodes of log N(r_i; H_i r_[i], R_i) for one factor.
double latent_logdensity_factor(const LatentField& r, const Mesh& mesh,
                                const LatentPriorCache& cache, std::size_t j);
double latent_logdensity(const LatentField& r, const Mesh& mesh,
                         const LatentPriorCache& cache);
double latent_logdensity(const LatentField& r, const Mesh& mesh, const Factors& factors);

/// Kriging weights and residual variances of every observed location for one
/// factor.
struct ObservedFactor {
  std::vector<Vec> h;
  Vec R;
};

/// Conditioning of every observed location on its cell's reference points.
struct ObservedConditioning {
  std::vector<int> node;
  std::vector<int> coincident;
  std::vector<ObservedFactor> factor;

  std::size_t size() const { return node.size(); }
  bool all_coincident() const;
  /// n x k residual variances.
  Mat residual() const;
};

ObservedConditioning condition_observed(const Mesh& mesh, const ObservedData& data,
                                        const Factors& factors,
                                        const OwnCovarianceCache& cache);
ObservedFactor condition_observed_factor(const Mesh& mesh, const ObservedData& data,
                                         const ObservedConditioning& obs,
                                         const MaternParams& factor,
                                         const OwnFactorCache& own);

/// h_lj . r_{S_i, j} for every location: the latent part of each observation
/// before loading.
Vec project_latent_factor(const ObservedConditioning& obs, const ObservedFactor& f,
                          const Mesh& mesh, const LatentField& r, Eigen::Index j);
Mat project_latent(const ObservedConditioning& obs, const Mesh& mesh, const LatentField& r);

/// Partially marginalized observation log-likelihood given the projected
/// latent values (n x k) and residual variances (n x k).
double obs_loglik_projected(const ObservedData& data, const Mat& beta,
                            const LoadingMatrix& a, const Vec& tau2, const Mat& residual,
                            const Mat& projected);

/// Sum over observed locations of the Gaussian log density of the observed
/// outcomes with mean X beta + Z r and covariance D + Sigma, restricted to
/// the observed coordinates.
double obs_loglik(const ObservedData& data, const Mat& beta, const LoadingMatrix& a,
                  const Vec& tau2, const Factors& factors, const LatentField& r,
                  const Mesh& mesh);

/// Gaussian log density through a unit-lower-triangular factorization
/// cov = L F L^T: -n/2 log 2pi - 1/2 sum log f_ii - 1/2 sum u_i^2 / f_ii
/// with L u = y - mean.
double dense_gaussian_loglik(const Vec& y, const Vec& mean, const Mat& cov);

} // namespace grips

#endif // GRIPS_DENSITY_HPP
