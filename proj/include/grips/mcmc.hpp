#ifndef GRIPS_MCMC_HPP
#define GRIPS_MCMC_HPP

#include "grips/density.hpp"
#include "grips/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace grips {

struct Priors {
  // beta: every coefficient N(beta_mean, beta_var), independently
  double beta_mean = 0.0;
  double beta_var = 100.0;
  double a_offdiag_var = 1.0;
  // diagonal of A: N(0, a_diag_var) truncated below zero
  double a_diag_var = 1.0;
  double sigma2_shape = 1e-3;
  double sigma2_rate = 1e-3;
  double tau2_shape = 2.01;
  double tau2_rate = 1.0;
  double phi_lower = 0.1;
  double phi_upper = 30.0;
  double nu_lower = 0.1;
  double nu_upper = 3.0;
  // sigma2 of the latent comparison sampler
  double baseline_sigma2_shape = 2.01;
  double baseline_sigma2_rate = 1.0;

  /// Throws ConfigError naming the offending "priors.*" key.
  void validate() const;
};

struct ModelState {
  LatentField r;
  Mat beta; // p x q
  LoadingMatrix A;
  Vec tau2;
  Factors factors;

  void validate(const Mesh& mesh, const ObservedData& data) const;
};

/// Proposal scale of one robust adaptive Metropolis block.
struct RamAdaptState {
  Mat S;
  double target_rate = 0.234;
  double decay = 0.7;
  long long steps = 0;
  long long accepted = 0;

  RamAdaptState() = default;
  RamAdaptState(Eigen::Index dim, double scale, double target = 0.234, double decay = 0.7);
  Eigen::Index dim() const { return S.rows(); }
  double acceptance_rate() const {
    return steps > 0 ? static_cast<double>(accepted) / static_cast<double>(steps) : 0.0;
  }
};

struct RamStep {
  bool accepted = false;
  double alpha = 0.0;
};

using LogDensity = std::function<double(const Vec&)>;

/// One proposal x' = x + S u. On acceptance `x` and `logdensity` are
/// replaced. S is then adapted towards the target acceptance rate. The
/// target must already include any log-Jacobian of the unconstrained map.
RamStep ram_metropolis_step(Vec& x, double& logdensity, const LogDensity& target,
                            RamAdaptState& adapt, Rng& rng);

struct SamplerConfig {
  int k = 1;
  std::vector<double> nu{0.5};
  long iterations = 5000;
  long burn_in = 2500;
  long thin = 1;
  std::uint64_t seed = 1;
  double target_accept = 0.234;
  double ram_decay = 0.7;
  double ram_init_scale = 0.1;
  bool update_r = true;
  bool update_beta = true;
  bool update_phi_sigma = true;
  bool update_a_tau = true;
  bool conjugate_a_tau = false;
  // joint rescaling of (A column, r, sigma2) along the direction the data do not see
  bool update_scale = true;
  bool sample_nu = false;
  bool store_r = true;
  int threads = 0; // 0 keeps the OpenMP default
  std::optional<double> init_phi;
  Priors priors;

  void validate() const;
};

struct ChainDraw {
  long iteration = 0;
  Mat beta;
  Mat A;
  Vec tau2;
  Factors factors;
  Mat r; // empty unless the latent field is stored
};

/// Stored draws plus timing and acceptance summaries.
struct ChainStore {
  Eigen::Index q = 0;
  Eigen::Index k = 0;
  Eigen::Index p = 0;
  std::vector<ChainDraw> draws;
  double seconds = 0.0;
  std::vector<std::string> acceptance_names;
  std::vector<double> acceptance;

  std::size_t size() const { return draws.size(); }
  bool empty() const { return draws.empty(); }
  /// beta[a,j], A[i,j], tau2[i], sigma2[j], phi[j], nu[j], Lambda[i,j],
  /// microergodic[j] = Lambda_jj^2 phi_j^(2 nu_j), var[i] = (Lambda Lambda^T)_ii.
  std::vector<std::string> column_names() const;
  /// One row per draw, one column per name.
  Mat table() const;
  Vec column(const std::string& name) const;
};

/// Starting point: least-squares beta, half the residual variance as nugget
/// and half as loading, unit sigma2, r = 0.
ModelState initial_state(const SamplerConfig& cfg, const ObservedData& data, const Mesh& mesh);

/// Gibbs and Metropolis updates of the full model.
class GripsSampler {
public:
  GripsSampler(const Mesh& mesh, const ObservedData& data, const SamplerConfig& cfg,
               ModelState init);

  const ModelState& state() const { return s_; }
  /// Replaces the state and recomputes every cache.
  void set_state(ModelState s);

  /// Precision and linear term of the Gaussian full conditional of r_i (all
  /// factors jointly, factor-major).
  struct NodeConditional {
    Mat precision;
    Vec linear;
  };
  NodeConditional node_conditional(int node) const;
  /// Full conditional of vec(beta), outcome-major.
  NodeConditional beta_conditional() const;

  /// One sweep over the colors. Every node draws from its own stream keyed by
  /// (seed, iteration, node).
  void gibbs_update_r(std::uint64_t iteration, bool parallel = true);
  void gibbs_update_beta(Rng& rng);
  bool update_phi_sigma(std::size_t j, Rng& rng);
  bool update_A_tau_metropolis(Rng& rng);
  /// Requires every observed location to coincide with a reference point.
  void update_A_tau_conjugate(Rng& rng);
  /// Exact draw of c in (A_j c, r_j / c, sigma2_j / c^2), which leaves the
  /// likelihood unchanged. Returns the drawn c.
  double update_scale(std::size_t j, Rng& rng);
  /// r sweep, beta, each {sigma2, phi} block, the scale moves, then the
  /// {A, tau2} block.
  void iterate(std::uint64_t iteration);

  /// Log target of the {sigma2_j, phi_j[, nu_j]} block on the log scale.
  double phi_sigma_target(std::size_t j, const Vec& x) const;
  Vec phi_sigma_coords(std::size_t j) const;
  /// Log target of the {A, tau2} block: free entries of A column by column
  /// (diagonal on the log scale), then log tau2.
  double a_tau_target(const Vec& x) const;
  Vec a_tau_coords() const;

  const RamAdaptState& phi_sigma_adapt(std::size_t j) const { return phi_adapt_[j]; }
  const RamAdaptState& a_tau_adapt() const { return a_tau_adapt_; }
  const ObservedConditioning& observed() const { return obs_; }
  /// n x k projected latent values h_lj . r.
  const Mat& projected() const { return proj_; }
  /// Inverse observation covariance at location i restricted to the
  /// observed outcomes, zero elsewhere (q x q).
  Mat observation_weight(Eigen::Index i) const;

private:
  struct FactorTrial {
    MaternParams factor;
    OwnFactorCache own;
    FactorPrior prior;
    ObservedFactor obs;
    Vec proj;
  };
  double evaluate_phi_sigma(std::size_t j, const Vec& x, FactorTrial* keep) const;
  double phi_sigma_prior(std::size_t j, const Vec& x) const;
  void refresh();
  void unpack_a_tau(const Vec& x, LoadingMatrix& a, Vec& tau2) const;
  void unpack_phi_sigma(std::size_t j, const Vec& x, MaternParams& f) const;

  const Mesh& mesh_;
  const ObservedData& data_;
  SamplerConfig cfg_;
  ModelState s_;
  OwnCovarianceCache own_;
  LatentPriorCache prior_;
  ObservedConditioning obs_;
  Mat proj_;
  Mat resid_;
  std::vector<RamAdaptState> phi_adapt_;
  RamAdaptState a_tau_adapt_;
};

/// Runs the full schedule and stores thinned post-burn-in draws. Numerical
/// failures are rethrown with the iteration index.
ChainStore run_chain(const SamplerConfig& cfg, const ObservedData& data, const Mesh& mesh,
                     std::optional<ModelState> init = std::nullopt);

/// Univariate comparison sampler in the standard parametrization: the latent
/// process is sampled at the reference grid and at every observed location,
/// sigma2 is conjugate given the latent process and phi is updated by
/// adaptive Metropolis. Draws are stored in the same layout as run_chain
/// with A = phi^nu, r = w / phi^nu and sigma2 the process variance.
ChainStore run_baseline_latent(const SamplerConfig& cfg, const ObservedData& data,
                               const Mesh& mesh);

} // namespace grips

#endif // GRIPS_MCMC_HPP
