#ifndef GRIPS_PREDICT_HPP
#define GRIPS_PREDICT_HPP

#include "grips/mcmc.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace grips {

enum class Link { identity, log, logit };

/// Throws ConfigError for anything but identity, log or logit.
Link parse_link(const std::string& name);
std::string link_name(Link link);
double apply_link(Link link, double x);
double inverse_link(Link link, double x);

/// Type-7 quantile (linear interpolation between order statistics).
double quantile(std::vector<double> values, double level);

struct PredictionRequest {
  Points locations;
  Mat X;                        // one covariate row per location
  std::vector<int> outcomes;    // empty: every outcome
  std::vector<double> levels{0.025, 0.975};
  std::vector<Link> links;      // per outcome; empty: identity
  bool keep_samples = false;
};

struct PredictionSummary {
  Points locations;
  std::vector<int> outcomes;
  std::vector<double> levels;
  Mat mean;                     // locations x outcomes
  std::vector<Mat> quantiles;   // per level: locations x outcomes
  /// Per requested outcome: draws x locations, on the response scale.
  std::vector<Eigen::MatrixXf> samples;
};

/// One posterior predictive draw of every requested location for each
/// stored chain draw. Summaries are taken after inverting the link.
PredictionSummary predict(const ChainStore& chain, const PredictionRequest& request,
                          const Mesh& mesh, std::uint64_t seed);

/// Posterior summaries of w = A r at the reference grid, per outcome.
struct LatentMap {
  std::vector<double> levels;
  Mat mean;                     // grid points x q
  std::vector<Mat> quantiles;   // per level: grid points x q
};

LatentMap latent_map(const ChainStore& chain, const Mesh& mesh,
                     const std::vector<double>& levels = {0.025, 0.5, 0.975});

} // namespace grips

#endif // GRIPS_PREDICT_HPP
