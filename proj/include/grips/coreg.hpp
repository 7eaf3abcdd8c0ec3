#ifndef GRIPS_COREG_HPP
#define GRIPS_COREG_HPP

#include "grips/geometry.hpp"
#include "grips/kernels.hpp"

#include <vector>

namespace grips {

using Factors = std::vector<MaternParams>;

/// q x k loading matrix with zeros above the diagonal and a positive
/// diagonal.
struct LoadingMatrix {
  Mat A;

  Eigen::Index q() const { return A.rows(); }
  Eigen::Index k() const { return A.cols(); }
  void validate() const;
};

/// Throws std::invalid_argument unless `m` is lower-triangular (q x k, k <= q)
/// with a strictly positive diagonal.
void check_lower_pattern(const Mat& m, const char* what);

/// diag(phi_j^nu_j)
Vec q_diagonal(const Factors& factors);
/// diag(1 / sigma_j)
Vec j_diagonal(const Factors& factors);

/// A = Lambda Q J.
LoadingMatrix assemble_A(const Mat& lambda, const Factors& factors);
/// Lambda = A J^-1 Q^-1.
Mat recover_Lambda(const LoadingMatrix& a, const Factors& factors);

/// Cholesky factors of the own-cell covariance of one factor, one per own
/// prototype class.
using OwnFactorCache = std::vector<SpdFactor>;

OwnFactorCache build_own_factor_cache(const Mesh& mesh, const MaternParams& factor);

/// Own-cell covariance factors for every factor.
class OwnCovarianceCache {
public:
  OwnCovarianceCache() = default;
  OwnCovarianceCache(const Mesh& mesh, const Factors& factors);

  void set_factor(std::size_t j, OwnFactorCache cache) { by_factor_[j] = std::move(cache); }
  const OwnFactorCache& factor(std::size_t j) const { return by_factor_[j]; }
  const SpdFactor& get(std::size_t j, int node) const {
    return by_factor_[j][own_class_[node]];
  }

private:
  std::vector<int> own_class_;
  std::vector<OwnFactorCache> by_factor_;
};

/// Position of `loc` among the own points of `node`, or -1.
int coincident_point(const Mesh& mesh, int node, const Point& loc);

/// Kriging weights of one location on its cell's reference points for one
/// factor: h = K(l, S_i) K(S_i)^-1 and the residual variance
/// K(l, l) - h . K(S_i, l). A coincident location selects its point exactly.
void kriging_weights(const Mesh& mesh, int node, int coincident, const Point& loc,
                     const MaternParams& factor, const SpdFactor& own_factor, Vec& h,
                     double& residual);

/// Conditioning of one location on the reference points of its cell, per
/// factor.
struct LocationConditioning {
  int node = -1;
  int coincident = -1;
  std::vector<Vec> h;
  Vec R;
};

/// Reference node whose cell contains `loc`; throws if there is none.
int locate_node(const Mesh& mesh, const Point& loc);

LocationConditioning condition_location(const Point& loc, int node, const Mesh& mesh,
                                        const Factors& factors,
                                        const OwnCovarianceCache& cache);

/// Z = A H_l (q x k n_i, one column block per factor) and Sigma = A R_l A^T.
struct LocalProjection {
  int node = -1;
  Mat Z;
  Mat Sigma;
};

LocalProjection project(const LocationConditioning& cond, const LoadingMatrix& a);

LocalProjection local_projection(const Point& loc, const Mesh& mesh,
                                 const LoadingMatrix& a, const Factors& factors);

} // namespace grips

#endif // GRIPS_COREG_HPP
