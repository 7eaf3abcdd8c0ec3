#ifndef GRIPS_KERNELS_HPP
#define GRIPS_KERNELS_HPP

#include "grips/core.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace grips {

/// Lags below this are treated as zero.
inline constexpr double kZeroLag = 1e-12;

/// Matérn factor in the rescaled parametrization: the factor covariance is
/// sigma2 * rho(h; phi, nu) / phi^(2 nu).
struct MaternParams {
  double sigma2 = 1.0;
  double phi = 1.0;
  double nu = 0.5;

  void validate() const;
  /// phi^(2 nu)
  double scale() const { return std::pow(phi, 2.0 * nu); }
  /// Covariance at zero lag, sigma2 / phi^(2 nu).
  double variance() const { return sigma2 / scale(); }
};

namespace detail {
template <typename Scalar>
void check_matern_args(Scalar h, Scalar phi, Scalar nu) {
  using std::isfinite;
  if (!isfinite(h) || !isfinite(phi) || !isfinite(nu))
    throw std::invalid_argument("matern: non-finite argument");
  if (h < Scalar(0) || phi <= Scalar(0) || nu <= Scalar(0))
    throw std::invalid_argument("matern: need h >= 0, phi > 0, nu > 0");
}
} // namespace detail

/// Matérn correlation through the modified Bessel function of the second
/// kind, without closed-form shortcuts.
template <typename Scalar>
Scalar matern_correlation_bessel(Scalar h, Scalar phi, Scalar nu) {
  detail::check_matern_args(h, phi, nu);
  if (h < Scalar(kZeroLag)) return Scalar(1);
  using std::exp;
  using std::lgamma;
  using std::log;
  const Scalar x = phi * h;
  const Scalar k = std::cyl_bessel_k(nu, x);
  if (k <= Scalar(0)) return Scalar(0);
  return exp((Scalar(1) - nu) * log(Scalar(2)) - lgamma(nu) + nu * log(x) + log(k));
}

/// Matérn correlation 2^(1-nu)/Gamma(nu) (phi h)^nu K_nu(phi h), with
/// closed forms for nu in {0.5, 1.5, 2.5}.
template <typename Scalar>
Scalar matern_correlation(Scalar h, Scalar phi, Scalar nu) {
  detail::check_matern_args(h, phi, nu);
  if (h < Scalar(kZeroLag)) return Scalar(1);
  using std::exp;
  const Scalar x = phi * h;
  if (nu == Scalar(0.5)) return exp(-x);
  if (nu == Scalar(1.5)) return (Scalar(1) + x) * exp(-x);
  if (nu == Scalar(2.5)) return (Scalar(1) + x + x * x / Scalar(3)) * exp(-x);
  return matern_correlation_bessel(h, phi, nu);
}

double factor_covariance(double h, const MaternParams& params);

/// Pairwise factor covariances between two location lists.
Mat cov_matrix(const Points& a, const Points& b, const MaternParams& params);

/// Gathers the listed rows of `all`.
Points gather(const Points& all, const std::vector<int>& rows);

/// Cholesky factor of a symmetric positive-definite matrix. On failure a
/// jitter of 1e-10 * trace / n is added once; a second failure throws.
struct SpdFactor {
  Eigen::LLT<Mat> llt;
  double jitter = 0.0;

  double log_det() const;
};

SpdFactor factor_spd(const Mat& c, std::optional<std::size_t> node = std::nullopt,
                     const char* what = "covariance");

/// Gaussian conditioning of target locations on parent locations:
/// H = C_tp C_pp^-1 and R = C_tt - H C_pt.
struct ConditioningPair {
  Mat H;
  Mat R;
};

ConditioningPair conditioning(const Points& targets, const Points& parents,
                              const MaternParams& params,
                              std::optional<std::size_t> node = std::nullopt);

} // namespace grips

#endif // GRIPS_KERNELS_HPP
