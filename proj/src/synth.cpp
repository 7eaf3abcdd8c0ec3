#include "grips/synth.hpp"

#include "grips/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace grips {

void SimulationSpec::validate() const {
  if (q() < 1 || k() < 1 || k() > q()) throw std::invalid_argument("simulate: need 1 <= k <= q");
  if (static_cast<Eigen::Index>(phi.size()) != k() || static_cast<Eigen::Index>(nu.size()) != k())
    throw std::invalid_argument("simulate: need one phi and nu per factor");
  for (Eigen::Index j = 0; j < k(); ++j)
    if (!(phi[j] > 0) || !(nu[j] > 0)) throw std::invalid_argument("simulate: phi and nu must be positive");
  if (tau2.size() != q() || (tau2.array() < 0).any())
    throw std::invalid_argument("simulate: tau2 must be q non-negative values");
  if (beta.cols() != q() || beta.rows() < 1)
    throw std::invalid_argument("simulate: beta must be p x q with p >= 1");
  if (!lambda.allFinite()) throw std::invalid_argument("simulate: non-finite loadings");
  if (layout == Layout::irregular && (n_train < 1 || test_grid < 1))
    throw std::invalid_argument("simulate: need positive training size and test grid");
  if (layout == Layout::grid_with_holes &&
      (grid_side < 2 || !(test_fraction >= 0 && test_fraction < 1) || !(hole_lower <= hole_upper)))
    throw std::invalid_argument("simulate: invalid grid layout");
}

SimulationSpec SimulationSpec::univariate(double sigma2, double phi, double nu, double tau2,
                                          std::uint64_t seed) {
  SimulationSpec s;
  s.lambda = Mat::Constant(1, 1, std::sqrt(sigma2));
  s.phi = {phi};
  s.nu = {nu};
  s.tau2 = Vec::Constant(1, tau2);
  s.seed = seed;
  return s;
}

Points unit_grid(int side) {
  Points p(static_cast<Eigen::Index>(side) * side, kDim);
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) {
      p(i * side + j, 0) = static_cast<double>(i + 1) / side;
      p(i * side + j, 1) = static_cast<double>(j + 1) / side;
    }
  return p;
}

Mat lmc_covariance(const Points& a, const Points& b, const Mat& lambda,
                   const std::vector<double>& phi, const std::vector<double>& nu) {
  const Eigen::Index q = lambda.rows();
  const Eigen::Index k = lambda.cols();
  std::vector<Mat> outer(k);
  for (Eigen::Index j = 0; j < k; ++j) outer[j] = lambda.col(j) * lambda.col(j).transpose();
  Mat c(a.rows() * q, b.rows() * q);
#pragma omp parallel for schedule(static)
  for (int l = 0; l < static_cast<int>(b.rows()); ++l)
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double h = (a.row(i) - b.row(l)).norm();
      Mat blk = Mat::Zero(q, q);
      for (Eigen::Index j = 0; j < k; ++j) blk += matern_correlation(h, phi[j], nu[j]) * outer[j];
      c.block(i * q, l * q, q, q) = blk;
    }
  return c;
}

namespace {

// Draws a unit-variance Matérn field at `pts` by an in-place dense Cholesky.
Vec draw_matern(const Points& pts, double phi, double nu, Rng& rng) {
  const Eigen::Index n = pts.rows();
  Mat c(n, n);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < static_cast<int>(n); ++j)
    for (Eigen::Index i = j; i < n; ++i)
      c(i, j) = matern_correlation((pts.row(i) - pts.row(j)).norm(), phi, nu);
  Eigen::LLT<Eigen::Ref<Mat>> llt(c);
  if (llt.info() != Eigen::Success) {
    // the factorization overwrote the lower triangle; rebuild with jitter
    for (int j = 0; j < static_cast<int>(n); ++j)
      for (Eigen::Index i = j; i < n; ++i)
        c(i, j) = matern_correlation((pts.row(i) - pts.row(j)).norm(), phi, nu) +
                  (i == j ? 1e-10 : 0.0);
    llt.compute(c);
    if (llt.info() != Eigen::Success)
      throw NumericalError("dense simulation covariance is singular after jitter");
  }
  const Vec z = rng.normal(n);
  return llt.matrixL() * z;
}

ObservedData make_observed(const Points& locs, const Mat& w, const SimulationSpec& spec,
                           Rng& rng) {
  const Eigen::Index n = locs.rows();
  const Eigen::Index p = spec.beta.rows();
  ObservedData d;
  d.locations = locs;
  d.X.resize(n, p);
  d.X.col(0).setOnes();
  for (Eigen::Index a = 1; a < p; ++a)
    for (Eigen::Index i = 0; i < n; ++i) d.X(i, a) = rng.normal();
  d.y = d.X * spec.beta + w;
  for (Eigen::Index j = 0; j < spec.q(); ++j) {
    const double sd = std::sqrt(spec.tau2[j]);
    for (Eigen::Index i = 0; i < n; ++i) d.y(i, j) += sd * rng.normal();
  }
  return d;
}

} // namespace

SyntheticData simulate_dataset(const SimulationSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Points train, test;
  if (spec.layout == Layout::irregular) {
    train.resize(spec.n_train, kDim);
    for (Eigen::Index i = 0; i < spec.n_train; ++i) {
      train(i, 0) = rng.uniform();
      train(i, 1) = rng.uniform();
    }
    test = unit_grid(spec.test_grid);
  } else {
    const Points all = unit_grid(spec.grid_side);
    std::vector<int> tr, te;
    for (Eigen::Index i = 0; i < all.rows(); ++i) {
      const bool hole = all(i, 0) >= spec.hole_lower && all(i, 0) <= spec.hole_upper &&
                        all(i, 1) >= spec.hole_lower && all(i, 1) <= spec.hole_upper;
      const bool extra = rng.uniform() < spec.test_fraction;
      (hole || extra ? te : tr).push_back(static_cast<int>(i));
    }
    train = gather(all, tr);
    test = gather(all, te);
  }

  const Eigen::Index nt = train.rows();
  const Eigen::Index ne = test.rows();
  Points all(nt + ne, kDim);
  all.topRows(nt) = train;
  all.bottomRows(ne) = test;
  Mat w = Mat::Zero(nt + ne, spec.q());
  for (Eigen::Index j = 0; j < spec.k(); ++j) {
    const Vec omega = draw_matern(all, spec.phi[j], spec.nu[j], rng);
    w += omega * spec.lambda.col(j).transpose();
  }

  SyntheticData out;
  out.spec = spec;
  out.w_train = w.topRows(nt);
  out.w_test = w.bottomRows(ne);
  out.train = make_observed(train, out.w_train, spec, rng);
  out.test = make_observed(test, out.w_test, spec, rng);
  return out;
}

GaussianPosterior dense_posterior_oracle(const Mat& prior_cov, const Mat& design, const Vec& y,
                                         const Mat& noise_cov) {
  const Eigen::Index m = prior_cov.rows();
  if (prior_cov.cols() != m || design.cols() != m || design.rows() != y.size() ||
      noise_cov.rows() != y.size() || noise_cov.cols() != y.size())
    throw std::invalid_argument("dense_posterior_oracle: dimension mismatch");
  GaussianPosterior out;
  if (y.size() == 0) {
    out.mean = Vec::Zero(m);
    out.cov = prior_cov;
    return out;
  }
  const Mat cdt = prior_cov * design.transpose();
  Mat s = design * cdt + noise_cov;
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success) throw NumericalError("dense marginal covariance is singular");
  const Vec alpha = llt.solve(y);
  out.mean = cdt * alpha;
  out.cov = prior_cov - cdt * llt.solve(cdt.transpose());
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  const Vec u = llt.matrixL().solve(y);
  out.log_marginal = -0.5 * (static_cast<double>(y.size()) * kLog2Pi +
                             2.0 * llt.matrixLLT().diagonal().array().log().sum() +
                             u.squaredNorm());
  return out;
}

KrigingResult dense_kriging(const ObservedData& train, const Points& test_locations,
                            const Mat& test_X, const Vec& beta, double sigma2, double phi,
                            double nu, double tau2) {
  if (train.q() != 1) throw std::invalid_argument("dense_kriging: univariate only");
  std::vector<int> rows;
  for (Eigen::Index i = 0; i < train.n(); ++i)
    if (train.observed(i, 0)) rows.push_back(static_cast<int>(i));
  const Points loc = gather(train.locations, rows);
  Vec e(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t)
    e[t] = train.y(rows[t], 0) - train.X.row(rows[t]).dot(beta);
  const Mat lambda = Mat::Constant(1, 1, std::sqrt(sigma2));
  Mat c = lmc_covariance(loc, loc, lambda, {phi}, {nu});
  c.diagonal().array() += tau2;
  Eigen::LLT<Mat> llt(c);
  if (llt.info() != Eigen::Success) throw NumericalError("kriging covariance is singular");
  const Mat k = lmc_covariance(test_locations, loc, lambda, {phi}, {nu});
  KrigingResult out;
  out.mean = test_X * beta + k * llt.solve(e);
  const Mat v = llt.matrixL().solve(k.transpose());
  out.var = (sigma2 + tau2) - v.colwise().squaredNorm().transpose().array();
  return out;
}

} // namespace grips
