#ifndef GRIPS_DIAGNOSTICS_HPP
#define GRIPS_DIAGNOSTICS_HPP

#include "grips/core.hpp"

#include <vector>

namespace grips {

struct EssResult {
  double ess = 0.0;
  bool degenerate = false; // zero-variance chain; ess is then the chain length
};

/// T / kappa with kappa = 1 + 2 sum_t rho_t, truncated by Geyer's initial
/// positive sequence of paired autocovariances. Needs at least 10 draws.
EssResult ess(const Vec& chain);

double ess_per_second(double ess, double seconds);

struct AccuracyMetrics {
  double rmse = 0.0;
  double mpe = 0.0;      // mean |est - truth| / |truth| over nonzero truths
  double coverage = 0.0;
  Eigen::Index mpe_excluded = 0;
};

AccuracyMetrics accuracy_metrics(const Vec& truth, const Vec& estimate, const Vec& lower,
                                 const Vec& upper);

struct PredictionMetrics {
  double rmspe = 0.0;
  double crps = 0.0;
  double coverage = 0.0;
};

/// Empirical CRPS of one sample against one outcome:
/// (1/T) sum |x_t - y| - (1/2T^2) sum_t sum_s |x_t - x_s|.
double crps(std::vector<double> samples, double y);

/// `samples` holds one row per draw and one column per test point. Coverage
/// uses the central 95% sample interval.
PredictionMetrics prediction_metrics(const Vec& y, const Eigen::MatrixXf& samples);
PredictionMetrics prediction_metrics(const Vec& y, const Mat& samples);

} // namespace grips

#endif // GRIPS_DIAGNOSTICS_HPP
