#ifndef GRIPS_SYNTH_HPP
#define GRIPS_SYNTH_HPP

#include "grips/density.hpp"

#include <cstdint>
#include <vector>

namespace grips {

enum class Layout { irregular, grid_with_holes };

/// Generator settings. The latent process is w = Lambda omega with omega_j
/// independent unit-variance Matérn processes.
struct SimulationSpec {
  Layout layout = Layout::irregular;
  Eigen::Index n_train = 5000;   // irregular layout
  int test_grid = 100;           // irregular layout: test grid points per axis
  int grid_side = 125;           // grid layout: points per axis
  double hole_lower = 0.45;
  double hole_upper = 0.55;
  double test_fraction = 0.1;    // grid layout: extra random test share
  Mat lambda = Mat::Ones(1, 1);  // q x k
  std::vector<double> phi{5.0};
  std::vector<double> nu{0.5};
  Vec tau2 = Vec::Constant(1, 0.1);
  Mat beta = (Mat(2, 1) << 1.0, 1.0).finished(); // p x q; rows beyond the intercept use N(0,1) covariates
  std::uint64_t seed = 1;
  // tau2 and beta left at the generator defaults rather than configured
  bool default_tau2 = true;
  bool default_beta = true;

  Eigen::Index q() const { return lambda.rows(); }
  Eigen::Index k() const { return lambda.cols(); }
  void validate() const;
  /// Univariate spec with process variance sigma2.
  static SimulationSpec univariate(double sigma2, double phi, double nu, double tau2,
                                   std::uint64_t seed);
};

struct SyntheticData {
  ObservedData train;
  ObservedData test;  // noisy outcomes at the test locations
  Mat w_train;        // latent values, n x q
  Mat w_test;
  SimulationSpec spec;
};

/// Regular grid lower + j/N * extent, j = 1..N, on the unit square.
Points unit_grid(int side);

/// Dense covariance of w at two location lists under the LMC, ordered
/// location-major (index = location * q + outcome).
Mat lmc_covariance(const Points& a, const Points& b, const Mat& lambda,
                   const std::vector<double>& phi, const std::vector<double>& nu);

/// Draws w at every location of both layouts from the dense process by
/// Cholesky, then adds X beta and Gaussian noise.
SyntheticData simulate_dataset(const SimulationSpec& spec);

/// Exact posterior of w ~ N(0, prior_cov) given y = design w + e,
/// e ~ N(0, noise_cov), and the log marginal density of y.
struct GaussianPosterior {
  Vec mean;
  Mat cov;
  double log_marginal = 0.0;
};

GaussianPosterior dense_posterior_oracle(const Mat& prior_cov, const Mat& design, const Vec& y,
                                         const Mat& noise_cov);

/// Univariate dense kriging with known parameters: predictive mean and
/// variance of y at the test locations (noise included).
struct KrigingResult {
  Vec mean;
  Vec var;
};

KrigingResult dense_kriging(const ObservedData& train, const Points& test_locations,
                            const Mat& test_X, const Vec& beta, double sigma2, double phi,
                            double nu, double tau2);

} // namespace grips

#endif // GRIPS_SYNTH_HPP
