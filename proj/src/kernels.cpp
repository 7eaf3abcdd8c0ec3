#include "grips/kernels.hpp"

namespace grips {

void MaternParams::validate() const {
  if (!std::isfinite(sigma2) || !std::isfinite(phi) || !std::isfinite(nu))
    throw std::invalid_argument("matern parameters must be finite");
  if (sigma2 <= 0 || phi <= 0 || nu <= 0)
    throw std::invalid_argument("matern parameters must be positive");
}

double factor_covariance(double h, const MaternParams& params) {
  params.validate();
  return params.sigma2 * matern_correlation(h, params.phi, params.nu) / params.scale();
}

Mat cov_matrix(const Points& a, const Points& b, const MaternParams& params) {
  params.validate();
  const double var = params.variance();
  Mat c(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double h = (a.row(i) - b.row(j)).norm();
      c(i, j) = var * matern_correlation(h, params.phi, params.nu);
    }
  return c;
}

Points gather(const Points& all, const std::vector<int>& rows) {
  Points out(rows.size(), kDim);
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = all.row(rows[i]);
  return out;
}

double SpdFactor::log_det() const {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

SpdFactor factor_spd(const Mat& c, std::optional<std::size_t> node, const char* what) {
  SpdFactor f;
  f.llt.compute(c);
  if (f.llt.info() == Eigen::Success) return f;
  const double n = static_cast<double>(c.rows());
  f.jitter = 1e-10 * c.trace() / n;
  Mat cj = c;
  cj.diagonal().array() += f.jitter;
  f.llt.compute(cj);
  if (f.llt.info() != Eigen::Success || !(f.jitter > 0))
    throw NumericalError(std::string(what) + " is numerically singular", node);
  return f;
}

ConditioningPair conditioning(const Points& targets, const Points& parents,
                              const MaternParams& params,
                              std::optional<std::size_t> node) {
  ConditioningPair out;
  const Mat ctt = cov_matrix(targets, targets, params);
  if (parents.rows() == 0) {
    out.H.resize(targets.rows(), 0);
    out.R = ctt;
    return out;
  }
  const Mat cpp = cov_matrix(parents, parents, params);
  const Mat cpt = cov_matrix(parents, targets, params);
  const SpdFactor f = factor_spd(cpp, node, "parent covariance");
  out.H = f.llt.solve(cpt).transpose();
  out.R = ctt - out.H * cpt;
  out.R = 0.5 * (out.R + out.R.transpose()).eval();
  return out;
}

} // namespace grips
