#include "grips/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace grips {

EssResult ess(const Vec& chain) {
  const Eigen::Index T = chain.size();
  if (T < 10) throw std::invalid_argument("ess: need at least 10 draws");
  if (!chain.allFinite()) throw std::invalid_argument("ess: non-finite draw");
  const Vec x = chain.array() - chain.mean();
  auto gamma = [&](Eigen::Index lag) {
    return x.head(T - lag).dot(x.tail(T - lag)) / static_cast<double>(T);
  };
  const double g0 = gamma(0);
  if (!(g0 > 1e-300 * static_cast<double>(T))) return {static_cast<double>(T), true};
  double sum = 0.0;
  for (Eigen::Index m = 0; 2 * m + 1 < T; ++m) {
    const double pair = gamma(2 * m) + gamma(2 * m + 1);
    if (pair <= 0.0) break;
    sum += pair;
  }
  const double kappa = -1.0 + 2.0 * sum / g0;
  return {static_cast<double>(T) / kappa, false};
}

double ess_per_second(double ess, double seconds) {
  if (!(seconds > 0)) throw std::invalid_argument("ess_per_second: wall time must be positive");
  return ess / seconds;
}

AccuracyMetrics accuracy_metrics(const Vec& truth, const Vec& est, const Vec& lower,
                                 const Vec& upper) {
  const Eigen::Index n = truth.size();
  if (est.size() != n || lower.size() != n || upper.size() != n)
    throw std::invalid_argument("accuracy_metrics: length mismatch");
  if (n == 0) throw std::invalid_argument("accuracy_metrics: empty input");
  AccuracyMetrics m;
  double se = 0.0, pe = 0.0, cov = 0.0;
  Eigen::Index used = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = est[i] - truth[i];
    se += e * e;
    if (truth[i] == 0.0) {
      ++m.mpe_excluded;
    } else {
      pe += std::abs(e) / std::abs(truth[i]);
      ++used;
    }
    if (lower[i] <= truth[i] && truth[i] <= upper[i]) cov += 1.0;
  }
  m.rmse = std::sqrt(se / static_cast<double>(n));
  m.mpe = used > 0 ? pe / static_cast<double>(used) : 0.0;
  m.coverage = cov / static_cast<double>(n);
  return m;
}

double crps(std::vector<double> s, double y) {
  const std::size_t T = s.size();
  if (T == 0) throw std::invalid_argument("crps: empty sample");
  std::sort(s.begin(), s.end());
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < T; ++i) {
    a += std::abs(s[i] - y);
    // sum over pairs of |x_i - x_j| = 2 sum_i (2i - T + 1) x_(i)
    b += (2.0 * static_cast<double>(i) - static_cast<double>(T) + 1.0) * s[i];
  }
  const double t = static_cast<double>(T);
  return a / t - b / (t * t);
}

namespace {

double sorted_quantile(const std::vector<double>& v, double level) {
  const double h = level * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

template <class M>
PredictionMetrics prediction_impl(const Vec& y, const M& samples) {
  const Eigen::Index n = y.size();
  const Eigen::Index T = samples.rows();
  if (samples.cols() != n) throw std::invalid_argument("prediction_metrics: length mismatch");
  if (T < 2) throw std::invalid_argument("prediction_metrics: need at least 2 samples per point");
  if (n == 0) throw std::invalid_argument("prediction_metrics: empty input");
  std::vector<double> se(n), cr(n), cov(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < static_cast<int>(n); ++i) {
    std::vector<double> v(T);
    double mean = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      v[t] = static_cast<double>(samples(t, i));
      mean += v[t];
    }
    mean /= static_cast<double>(T);
    se[i] = (mean - y[i]) * (mean - y[i]);
    cr[i] = crps(v, y[i]);
    std::sort(v.begin(), v.end());
    const double lo = sorted_quantile(v, 0.025);
    const double hi = sorted_quantile(v, 0.975);
    cov[i] = (lo <= y[i] && y[i] <= hi) ? 1.0 : 0.0;
  }
  PredictionMetrics m;
  double s = 0.0, c = 0.0, k = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    s += se[i];
    c += cr[i];
    k += cov[i];
  }
  const double dn = static_cast<double>(n);
  m.rmspe = std::sqrt(s / dn);
  m.crps = c / dn;
  m.coverage = k / dn;
  return m;
}

} // namespace

PredictionMetrics prediction_metrics(const Vec& y, const Eigen::MatrixXf& samples) {
  return prediction_impl(y, samples);
}

PredictionMetrics prediction_metrics(const Vec& y, const Mat& samples) {
  return prediction_impl(y, samples);
}

} // namespace grips
