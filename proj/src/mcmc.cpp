#include "grips/mcmc.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>

namespace grips {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool positive(double x) { return std::isfinite(x) && x > 0; }

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

std::uint64_t block_id(Stream s, std::size_t sub = 0) {
  return static_cast<std::uint64_t>(s) + (static_cast<std::uint64_t>(sub) << 32);
}

// Residuals y - X beta at one location, zero where the outcome is missing.
Vec centered_outcome(const ObservedData& data, const Mat& beta, Eigen::Index i) {
  Vec e(data.q());
  const bool has_x = data.p() > 0;
  for (Eigen::Index j = 0; j < data.q(); ++j) {
    if (!data.observed(i, j)) {
      e[j] = 0.0;
      continue;
    }
    e[j] = data.y(i, j) - (has_x ? data.X.row(i).dot(beta.col(j)) : 0.0);
  }
  return e;
}

template <class F>
void for_each_node(const std::vector<int>& nodes, bool parallel, const F& body) {
  const int n = static_cast<int>(nodes.size());
  if (!parallel) {
    for (int t = 0; t < n; ++t) body(nodes[t]);
    return;
  }
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 4)
  for (int t = 0; t < n; ++t) {
    try {
      body(nodes[t]);
    } catch (...) {
#pragma omp critical(grips_node_error)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

} // namespace

void Priors::validate() const {
  require(std::isfinite(beta_mean), "priors.beta_mean", "must be finite");
  require(positive(beta_var), "priors.beta_var", "must be positive");
  require(positive(a_offdiag_var), "priors.a_offdiag_var", "must be positive");
  require(positive(a_diag_var), "priors.a_diag_var", "must be positive");
  require(positive(sigma2_shape), "priors.sigma2_shape", "must be positive");
  require(positive(sigma2_rate), "priors.sigma2_rate", "must be positive");
  require(positive(tau2_shape), "priors.tau2_shape", "must be positive");
  require(positive(tau2_rate), "priors.tau2_rate", "must be positive");
  require(positive(phi_lower), "priors.phi_lower", "must be positive");
  require(std::isfinite(phi_upper) && phi_upper > phi_lower, "priors.phi_upper",
          "must be finite and above priors.phi_lower");
  require(positive(nu_lower), "priors.nu_lower", "must be positive");
  require(std::isfinite(nu_upper) && nu_upper > nu_lower, "priors.nu_upper",
          "must be finite and above priors.nu_lower");
  require(positive(baseline_sigma2_shape), "priors.baseline_sigma2_shape", "must be positive");
  require(positive(baseline_sigma2_rate), "priors.baseline_sigma2_rate", "must be positive");
}

void SamplerConfig::validate() const {
  require(k >= 1, "model.k", "must be at least 1");
  require(static_cast<int>(nu.size()) == k, "model.nu", "needs one value per factor");
  for (double v : nu) require(positive(v), "model.nu", "must be positive");
  require(iterations >= 0, "mcmc.iterations", "must be non-negative");
  require(burn_in >= 0, "mcmc.burn_in", "must be non-negative");
  require(thin >= 1, "mcmc.thin", "must be at least 1");
  require(target_accept > 0 && target_accept < 1, "mcmc.target_accept", "must lie in (0, 1)");
  require(ram_decay > 0.5 && ram_decay <= 1.0, "mcmc.ram_decay", "must lie in (0.5, 1]");
  require(positive(ram_init_scale), "mcmc.ram_init_scale", "must be positive");
  require(threads >= 0, "mcmc.threads", "must be non-negative");
  priors.validate();
  if (init_phi)
    require(*init_phi > priors.phi_lower && *init_phi < priors.phi_upper, "mcmc.init_phi",
            "must lie inside the phi prior support");
}

void ModelState::validate(const Mesh& mesh, const ObservedData& data) const {
  const Eigen::Index k = static_cast<Eigen::Index>(factors.size());
  if (r.values.rows() != static_cast<Eigen::Index>(mesh.grid.size()) || r.values.cols() != k)
    throw std::invalid_argument("state: latent field does not match the grid and factors");
  if (beta.rows() != data.p() || beta.cols() != data.q())
    throw std::invalid_argument("state: beta must be p x q");
  if (A.q() != data.q() || A.k() != k)
    throw std::invalid_argument("state: loading matrix must be q x k");
  A.validate();
  if (tau2.size() != data.q() || !(tau2.array() > 0).all() || !tau2.allFinite())
    throw std::invalid_argument("state: tau2 must be q positive values");
  for (const auto& f : factors) f.validate();
  if (!r.values.allFinite() || !beta.allFinite())
    throw std::invalid_argument("state: non-finite latent field or beta");
}

RamAdaptState::RamAdaptState(Eigen::Index dim, double scale, double target, double decay_)
    : S(scale * Mat::Identity(dim, dim)), target_rate(target), decay(decay_) {}

RamStep ram_metropolis_step(Vec& x, double& logdensity, const LogDensity& target,
                            RamAdaptState& adapt, Rng& rng) {
  if (!std::isfinite(logdensity))
    throw NumericalError("Metropolis target is not finite at the current state");
  const Eigen::Index d = x.size();
  const Vec u = rng.normal(d);
  const Vec su = adapt.S.triangularView<Eigen::Lower>() * u;
  const Vec prop = x + su;
  const double lp = target(prop);
  RamStep out;
  if (std::isfinite(lp)) out.alpha = lp >= logdensity ? 1.0 : std::exp(lp - logdensity);
  out.accepted = rng.uniform() < out.alpha;
  if (out.accepted) {
    x = prop;
    logdensity = lp;
    ++adapt.accepted;
  }
  ++adapt.steps;

  const double eta =
      std::min(1.0, static_cast<double>(d) * std::pow(static_cast<double>(adapt.steps), -adapt.decay));
  const double un = u.squaredNorm();
  if (un > 0) {
    const Mat lower = adapt.S.triangularView<Eigen::Lower>();
    Mat m = lower * lower.transpose();
    m += (eta * (out.alpha - adapt.target_rate) / un) * (su * su.transpose());
    Eigen::LLT<Mat> llt(m);
    if (llt.info() == Eigen::Success) adapt.S = llt.matrixL();
  }
  return out;
}

ModelState initial_state(const SamplerConfig& cfg, const ObservedData& data, const Mesh& mesh) {
  cfg.validate();
  data.validate();
  const Eigen::Index q = data.q();
  const Eigen::Index p = data.p();
  const Eigen::Index k = cfg.k;
  if (k > q) throw ConfigError("model.k", "must not exceed the number of outcomes");

  ModelState s;
  s.beta = Mat::Zero(p, q);
  Vec v = Vec::Ones(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < data.n(); ++i)
      if (data.observed(i, j)) rows.push_back(i);
    const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
    if (m == 0) continue;
    Mat xo(m, p);
    Vec yo(m);
    for (Eigen::Index t = 0; t < m; ++t) {
      xo.row(t) = data.X.row(rows[t]);
      yo[t] = data.y(rows[t], j);
    }
    if (p > 0 && m > p) {
      const Mat g = xo.transpose() * xo + 1e-8 * Mat::Identity(p, p);
      s.beta.col(j) = g.ldlt().solve(xo.transpose() * yo);
    }
    const Vec e = p > 0 ? Vec(yo - xo * s.beta.col(j)) : Vec(yo);
    if (m >= 2) {
      const double var = (e.array() - e.mean()).square().sum() / static_cast<double>(m - 1);
      if (positive(var)) v[j] = var;
    }
  }

  const Domain& dom = mesh.grid.domain;
  const double diag = std::hypot(dom.extent(0), dom.extent(1));
  const double phi0 = cfg.init_phi ? *cfg.init_phi
                                   : std::clamp(10.0 / diag, cfg.priors.phi_lower * 1.01,
                                                cfg.priors.phi_upper * 0.99);
  for (Eigen::Index j = 0; j < k; ++j) s.factors.push_back(MaternParams{1.0, phi0, cfg.nu[j]});
  Mat lambda = Mat::Zero(q, k);
  for (Eigen::Index j = 0; j < k; ++j) lambda(j, j) = std::sqrt(0.5 * v[j]);
  s.A = assemble_A(lambda, s.factors);
  s.tau2 = (0.5 * v).cwiseMax(1e-6);
  s.r.values = Mat::Zero(static_cast<Eigen::Index>(mesh.grid.size()), k);
  return s;
}

GripsSampler::GripsSampler(const Mesh& mesh, const ObservedData& data, const SamplerConfig& cfg,
                           ModelState init)
    : mesh_(mesh), data_(data), cfg_(cfg), s_(std::move(init)) {
  cfg_.validate();
  data_.validate();
  s_.validate(mesh_, data_);
  if (cfg_.threads > 0) omp_set_num_threads(cfg_.threads);
  const Eigen::Index dim_phi = cfg_.sample_nu ? 3 : 2;
  for (int j = 0; j < cfg_.k; ++j)
    phi_adapt_.emplace_back(dim_phi, cfg_.ram_init_scale, cfg_.target_accept, cfg_.ram_decay);
  const Eigen::Index q = data_.q();
  const Eigen::Index k = cfg_.k;
  const Eigen::Index n_free = k * q - k * (k - 1) / 2;
  a_tau_adapt_ = RamAdaptState(n_free + q, cfg_.ram_init_scale, cfg_.target_accept,
                               cfg_.ram_decay);
  refresh();
}

void GripsSampler::set_state(ModelState s) {
  s.validate(mesh_, data_);
  s_ = std::move(s);
  refresh();
}

void GripsSampler::refresh() {
  own_ = OwnCovarianceCache(mesh_, s_.factors);
  prior_ = LatentPriorCache(mesh_, s_.factors);
  obs_ = condition_observed(mesh_, data_, s_.factors, own_);
  resid_ = obs_.residual();
  proj_ = project_latent(obs_, mesh_, s_.r);
}

Mat GripsSampler::observation_weight(Eigen::Index i) const {
  const Eigen::Index q = data_.q();
  Mat w = Mat::Zero(q, q);
  if (q == 1) {
    if (!data_.observed(i, 0)) return w;
    w(0, 0) = 1.0 / (s_.tau2[0] + resid_.row(i).dot(s_.A.A.row(0).cwiseAbs2()));
    return w;
  }
  const auto idx = data_.observed_outcomes(i);
  if (idx.empty()) return w;
  const Mat full = Mat(s_.tau2.asDiagonal()) +
                   s_.A.A * resid_.row(i).transpose().asDiagonal() * s_.A.A.transpose();
  const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
  Mat sub(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = full(idx[a], idx[b]);
  Eigen::LLT<Mat> llt(sub);
  if (llt.info() != Eigen::Success)
    throw NumericalError("observation covariance is singular at location " + std::to_string(i));
  const Mat inv = llt.solve(Mat::Identity(m, m));
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) w(idx[a], idx[b]) = inv(a, b);
  return w;
}

GripsSampler::NodeConditional GripsSampler::node_conditional(int v) const {
  const auto& dag = mesh_.dag;
  const auto& own = dag.own_points[v];
  const Eigen::Index ni = static_cast<Eigen::Index>(own.size());
  const Eigen::Index k = cfg_.k;
  NodeConditional out;
  out.precision = Mat::Zero(k * ni, k * ni);
  out.linear = Vec::Zero(k * ni);

  for (Eigen::Index j = 0; j < k; ++j) {
    auto pblk = out.precision.block(j * ni, j * ni, ni, ni);
    auto bseg = out.linear.segment(j * ni, ni);
    const NodeConditioning& nc = prior_.get(j, v);
    pblk += nc.R_inv;
    if (!dag.parents[v].empty()) bseg += nc.R_inv * (nc.H * s_.r.block(dag.parent_points[v], j));
    for (int c : dag.children[v]) {
      const NodeConditioning& cc = prior_.get(j, c);
      const int slot = dag.parent_slot(c, v);
      const Eigen::Index off = dag.parent_offset[c][slot];
      pblk += cc.slot_precision[slot];
      const Vec rpc = s_.r.block(dag.parent_points[c], j);
      const Vec e = s_.r.block(dag.own_points[c], j) - cc.H * rpc +
                    cc.H.middleCols(off, ni) * rpc.segment(off, ni);
      bseg += cc.Ht_Rinv.middleRows(off, ni) * e;
    }
  }

  for (int l : dag.observed_of_node[v]) {
    const Mat w = observation_weight(l);
    if (w.isZero(0.0)) continue;
    const Vec yt = centered_outcome(data_, s_.beta, l);
    const Mat g = s_.A.A.transpose() * w * s_.A.A;
    const Vec gl = s_.A.A.transpose() * (w * yt);
    for (Eigen::Index j = 0; j < k; ++j) {
      const Vec& hj = obs_.factor[j].h[l];
      for (Eigen::Index j2 = 0; j2 < k; ++j2)
        out.precision.block(j * ni, j2 * ni, ni, ni) += g(j, j2) * hj * obs_.factor[j2].h[l].transpose();
      out.linear.segment(j * ni, ni) += gl[j] * hj;
    }
  }
  return out;
}

void GripsSampler::gibbs_update_r(std::uint64_t iteration, bool parallel) {
  const auto& dag = mesh_.dag;
  const Eigen::Index k = cfg_.k;
  for (const auto& group : mesh_.coloring.groups) {
    for_each_node(group, parallel, [&](int v) {
      const NodeConditional nc = node_conditional(v);
      Eigen::LLT<Mat> llt(nc.precision);
      if (llt.info() != Eigen::Success)
        throw NumericalError("singular conditional precision of r", static_cast<std::size_t>(v));
      const Vec mean = llt.solve(nc.linear);
      Rng rng = Rng::stream(cfg_.seed, iteration, static_cast<std::uint64_t>(v));
      const Vec draw = draw_from_precision(llt, mean, rng);
      const auto& own = dag.own_points[v];
      const Eigen::Index ni = static_cast<Eigen::Index>(own.size());
      for (Eigen::Index j = 0; j < k; ++j)
        for (Eigen::Index s = 0; s < ni; ++s) s_.r.values(own[s], j) = draw[j * ni + s];
    });
  }
  proj_ = project_latent(obs_, mesh_, s_.r);
}

GripsSampler::NodeConditional GripsSampler::beta_conditional() const {
  const Eigen::Index p = data_.p();
  const Eigen::Index q = data_.q();
  const Eigen::Index d = p * q;
  const Priors& pr = cfg_.priors;
  NodeConditional c{Mat::Identity(d, d) / pr.beta_var, Vec::Constant(d, pr.beta_mean / pr.beta_var)};
  const Mat latent = proj_ * s_.A.A.transpose();
  for (Eigen::Index i = 0; i < data_.n(); ++i) {
    const Mat w = observation_weight(i);
    if (w.isZero(0.0)) continue;
    Vec e(q);
    for (Eigen::Index j = 0; j < q; ++j)
      e[j] = data_.observed(i, j) ? data_.y(i, j) - latent(i, j) : 0.0;
    const Vec we = w * e;
    const Vec x = data_.X.row(i).transpose();
    const Mat xx = x * x.transpose();
    for (Eigen::Index j = 0; j < q; ++j) {
      c.linear.segment(j * p, p) += we[j] * x;
      for (Eigen::Index j2 = 0; j2 < q; ++j2)
        if (w(j, j2) != 0.0) c.precision.block(j * p, j2 * p, p, p) += w(j, j2) * xx;
    }
  }
  return c;
}

void GripsSampler::gibbs_update_beta(Rng& rng) {
  const Eigen::Index p = data_.p();
  if (p == 0) return;
  const NodeConditional c = beta_conditional();
  Eigen::LLT<Mat> llt(c.precision);
  if (llt.info() != Eigen::Success) throw NumericalError("singular posterior precision of beta");
  const Vec draw = draw_from_precision(llt, llt.solve(c.linear), rng);
  s_.beta = Eigen::Map<const Mat>(draw.data(), p, data_.q());
}

Vec GripsSampler::phi_sigma_coords(std::size_t j) const {
  const MaternParams& f = s_.factors[j];
  Vec x(cfg_.sample_nu ? 3 : 2);
  x[0] = std::log(f.sigma2);
  x[1] = std::log(f.phi);
  if (cfg_.sample_nu) x[2] = std::log(f.nu);
  return x;
}

void GripsSampler::unpack_phi_sigma(std::size_t j, const Vec& x, MaternParams& f) const {
  f = s_.factors[j];
  f.sigma2 = std::exp(x[0]);
  f.phi = std::exp(x[1]);
  if (cfg_.sample_nu) f.nu = std::exp(x[2]);
}

// log prior plus log-Jacobian of the log map; -inf outside the support
double GripsSampler::phi_sigma_prior(std::size_t j, const Vec& x) const {
  const Priors& pr = cfg_.priors;
  if (!x.allFinite()) return kNegInf;
  MaternParams f;
  unpack_phi_sigma(j, x, f);
  if (!positive(f.sigma2) || !(f.phi > pr.phi_lower && f.phi < pr.phi_upper)) return kNegInf;
  double lp = -pr.sigma2_shape * x[0] - pr.sigma2_rate / f.sigma2 + x[1];
  if (cfg_.sample_nu) {
    if (!(f.nu > pr.nu_lower && f.nu < pr.nu_upper)) return kNegInf;
    lp += x[2];
  }
  return lp;
}

double GripsSampler::evaluate_phi_sigma(std::size_t j, const Vec& x, FactorTrial* keep) const {
  const double lp = phi_sigma_prior(j, x);
  if (!std::isfinite(lp)) return kNegInf;
  FactorTrial t;
  unpack_phi_sigma(j, x, t.factor);
  try {
    t.own = build_own_factor_cache(mesh_, t.factor);
    t.prior = build_factor_prior(mesh_, t.factor);
    t.obs = condition_observed_factor(mesh_, data_, obs_, t.factor, t.own);
  } catch (const NumericalError&) {
    return kNegInf;
  }
  t.proj = project_latent_factor(obs_, t.obs, mesh_, s_.r, static_cast<Eigen::Index>(j));
  const double latent =
      latent_quadratic(s_.r, mesh_, t.prior, mesh_.prototypes.conditioning_class, j).logdensity();
  Mat resid = resid_;
  Mat proj = proj_;
  resid.col(j) = t.obs.R;
  proj.col(j) = t.proj;
  double obs;
  try {
    obs = obs_loglik_projected(data_, s_.beta, s_.A, s_.tau2, resid, proj);
  } catch (const NumericalError&) {
    return kNegInf;
  }
  const double total = lp + latent + obs;
  if (keep) *keep = std::move(t);
  return std::isfinite(total) ? total : kNegInf;
}

double GripsSampler::phi_sigma_target(std::size_t j, const Vec& x) const {
  return evaluate_phi_sigma(j, x, nullptr);
}

bool GripsSampler::update_phi_sigma(std::size_t j, Rng& rng) {
  Vec x = phi_sigma_coords(j);
  double current = phi_sigma_prior(j, x) + latent_logdensity_factor(s_.r, mesh_, prior_, j) +
                   obs_loglik_projected(data_, s_.beta, s_.A, s_.tau2, resid_, proj_);
  FactorTrial trial;
  const RamStep st = ram_metropolis_step(
      x, current, [&](const Vec& xp) { return evaluate_phi_sigma(j, xp, &trial); },
      phi_adapt_[j], rng);
  if (!st.accepted) return false;
  s_.factors[j] = trial.factor;
  own_.set_factor(j, std::move(trial.own));
  prior_.set_factor(j, std::move(trial.prior));
  obs_.factor[j] = std::move(trial.obs);
  resid_.col(j) = obs_.factor[j].R;
  proj_.col(j) = trial.proj;
  return true;
}

Vec GripsSampler::a_tau_coords() const {
  const Eigen::Index q = data_.q();
  const Eigen::Index k = cfg_.k;
  Vec x(a_tau_adapt_.dim());
  Eigen::Index t = 0;
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = j; i < q; ++i)
      x[t++] = i == j ? std::log(s_.A.A(i, j)) : s_.A.A(i, j);
  for (Eigen::Index i = 0; i < q; ++i) x[t++] = std::log(s_.tau2[i]);
  return x;
}

void GripsSampler::unpack_a_tau(const Vec& x, LoadingMatrix& a, Vec& tau2) const {
  const Eigen::Index q = data_.q();
  const Eigen::Index k = cfg_.k;
  a.A = Mat::Zero(q, k);
  tau2.resize(q);
  Eigen::Index t = 0;
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = j; i < q; ++i) {
      a.A(i, j) = i == j ? std::exp(x[t]) : x[t];
      ++t;
    }
  for (Eigen::Index i = 0; i < q; ++i) tau2[i] = std::exp(x[t++]);
}

double GripsSampler::a_tau_target(const Vec& x) const {
  if (!x.allFinite()) return kNegInf;
  const Priors& pr = cfg_.priors;
  LoadingMatrix a;
  Vec tau2;
  unpack_a_tau(x, a, tau2);
  if (!(a.A.diagonal().array() > 0).all() || !(tau2.array() > 0).all() || !tau2.allFinite())
    return kNegInf;
  const Eigen::Index q = data_.q();
  const Eigen::Index k = cfg_.k;
  double lp = 0.0;
  Eigen::Index t = 0;
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = j; i < q; ++i, ++t) {
      const double v = a.A(i, j);
      lp += i == j ? -0.5 * v * v / pr.a_diag_var + x[t] : -0.5 * v * v / pr.a_offdiag_var;
    }
  for (Eigen::Index i = 0; i < q; ++i, ++t)
    lp += -pr.tau2_shape * x[t] - pr.tau2_rate / tau2[i];
  double obs;
  try {
    obs = obs_loglik_projected(data_, s_.beta, a, tau2, resid_, proj_);
  } catch (const NumericalError&) {
    return kNegInf;
  }
  const double total = lp + obs;
  return std::isfinite(total) ? total : kNegInf;
}

bool GripsSampler::update_A_tau_metropolis(Rng& rng) {
  Vec x = a_tau_coords();
  double current = a_tau_target(x);
  const RamStep st = ram_metropolis_step(
      x, current, [&](const Vec& xp) { return a_tau_target(xp); }, a_tau_adapt_, rng);
  if (st.accepted) unpack_a_tau(x, s_.A, s_.tau2);
  return st.accepted;
}

void GripsSampler::update_A_tau_conjugate(Rng& rng) {
  if (!obs_.all_coincident())
    throw ConfigError("mcmc.conjugate_a_tau",
                      "requires every observed location to lie on the reference grid");
  const Priors& pr = cfg_.priors;
  const Eigen::Index q = data_.q();
  const Eigen::Index k = cfg_.k;
  for (Eigen::Index j = 0; j < q; ++j) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < data_.n(); ++i)
      if (data_.observed(i, j)) rows.push_back(i);
    const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index c = std::min<Eigen::Index>(j + 1, k);
    Mat f(m, c);
    Vec y(m);
    for (Eigen::Index t = 0; t < m; ++t) {
      f.row(t) = proj_.row(rows[t]).head(c);
      y[t] = data_.y(rows[t], j) -
             (data_.p() > 0 ? data_.X.row(rows[t]).dot(s_.beta.col(j)) : 0.0);
    }
    const double tau2 = s_.tau2[j];
    Vec vinv = Vec::Constant(c, 1.0 / pr.a_offdiag_var);
    const bool has_diag = j < k;
    if (has_diag) vinv[c - 1] = 1.0 / pr.a_diag_var;
    Mat prec = f.transpose() * f / tau2;
    prec.diagonal() += vinv;
    Eigen::LLT<Mat> llt(prec);
    if (llt.info() != Eigen::Success) throw NumericalError("singular posterior precision of A");
    const Vec mean = llt.solve(f.transpose() * y / tau2);

    Vec row(c);
    if (!has_diag) {
      row = draw_from_precision(llt, mean, rng);
    } else {
      // diagonal entry from its truncated marginal, then the rest given it
      const Eigen::Index d = c - 1;
      const Mat cov = llt.solve(Mat::Identity(c, c));
      const double ad = rng.positive_normal(mean[d], std::sqrt(cov(d, d)));
      row[d] = ad;
      if (d > 0) {
        const Mat poo = prec.topLeftCorner(d, d);
        Eigen::LLT<Mat> lo(poo);
        const Vec cm = mean.head(d) - lo.solve(prec.topRightCorner(d, 1)) * (ad - mean[d]);
        row.head(d) = draw_from_precision(lo, cm, rng);
      }
    }
    s_.A.A.row(j).head(c) = row.transpose();

    const Vec e = y - f * row;
    s_.tau2[j] = rng.inv_gamma(pr.tau2_shape + 0.5 * static_cast<double>(m),
                               pr.tau2_rate + 0.5 * e.squaredNorm());
  }
}

double GripsSampler::update_scale(std::size_t j, Rng& rng) {
  const Priors& pr = cfg_.priors;
  const Eigen::Index q = data_.q();
  const Eigen::Index col = static_cast<Eigen::Index>(j);
  // t = c^2 is gamma under the Haar measure on c
  double rate = pr.sigma2_rate / s_.factors[j].sigma2;
  for (Eigen::Index i = col; i < q; ++i) {
    const double a = s_.A.A(i, col);
    rate += 0.5 * a * a / (i == col ? pr.a_diag_var : pr.a_offdiag_var);
  }
  const double shape = pr.sigma2_shape + 0.5 * static_cast<double>(q - col);
  const double c = std::sqrt(rng.gamma(shape, 1.0 / rate));
  if (!std::isfinite(c) || c <= 0.0) return 1.0;

  FactorTrial t;
  t.factor = s_.factors[j];
  t.factor.sigma2 /= c * c;
  try {
    t.own = build_own_factor_cache(mesh_, t.factor);
    t.prior = build_factor_prior(mesh_, t.factor);
    t.obs = condition_observed_factor(mesh_, data_, obs_, t.factor, t.own);
  } catch (const NumericalError&) {
    return 1.0;
  }
  s_.factors[j] = t.factor;
  s_.A.A.col(col) *= c;
  s_.r.values.col(col) /= c;
  own_.set_factor(j, std::move(t.own));
  prior_.set_factor(j, std::move(t.prior));
  obs_.factor[j] = std::move(t.obs);
  resid_.col(col) = obs_.factor[j].R;
  proj_.col(col) /= c;
  return c;
}

void GripsSampler::iterate(std::uint64_t it) {
  if (cfg_.update_r) gibbs_update_r(it);
  if (cfg_.update_beta) {
    Rng rng = Rng::stream(cfg_.seed, it, block_id(Stream::beta));
    gibbs_update_beta(rng);
  }
  if (cfg_.update_phi_sigma)
    for (std::size_t j = 0; j < s_.factors.size(); ++j) {
      Rng rng = Rng::stream(cfg_.seed, it, block_id(Stream::phi_sigma, j));
      update_phi_sigma(j, rng);
    }
  if (cfg_.update_scale && cfg_.update_r && cfg_.update_phi_sigma && cfg_.update_a_tau)
    for (std::size_t j = 0; j < s_.factors.size(); ++j) {
      Rng rng = Rng::stream(cfg_.seed, it, block_id(Stream::scale, j));
      update_scale(j, rng);
    }
  if (cfg_.update_a_tau) {
    Rng rng = Rng::stream(cfg_.seed, it, block_id(Stream::a_tau));
    if (cfg_.conjugate_a_tau)
      update_A_tau_conjugate(rng);
    else
      update_A_tau_metropolis(rng);
  }
}

std::vector<std::string> ChainStore::column_names() const {
  std::vector<std::string> names;
  auto idx2 = [](const char* base, Eigen::Index a, Eigen::Index b) {
    return std::string(base) + "[" + std::to_string(a + 1) + "," + std::to_string(b + 1) + "]";
  };
  auto idx1 = [](const char* base, Eigen::Index a) {
    return std::string(base) + "[" + std::to_string(a + 1) + "]";
  };
  for (Eigen::Index j = 0; j < q; ++j)
    for (Eigen::Index a = 0; a < p; ++a) names.push_back(idx2("beta", a, j));
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = j; i < q; ++i) names.push_back(idx2("A", i, j));
  for (Eigen::Index i = 0; i < q; ++i) names.push_back(idx1("tau2", i));
  for (Eigen::Index j = 0; j < k; ++j) names.push_back(idx1("sigma2", j));
  for (Eigen::Index j = 0; j < k; ++j) names.push_back(idx1("phi", j));
  for (Eigen::Index j = 0; j < k; ++j) names.push_back(idx1("nu", j));
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = j; i < q; ++i) names.push_back(idx2("Lambda", i, j));
  for (Eigen::Index j = 0; j < k; ++j) names.push_back(idx1("microergodic", j));
  for (Eigen::Index i = 0; i < q; ++i) names.push_back(idx1("var", i));
  return names;
}

Mat ChainStore::table() const {
  const Eigen::Index ncol = static_cast<Eigen::Index>(column_names().size());
  Mat t(static_cast<Eigen::Index>(draws.size()), ncol);
  for (std::size_t d = 0; d < draws.size(); ++d) {
    const ChainDraw& dr = draws[d];
    const Mat lambda = recover_Lambda(LoadingMatrix{dr.A}, dr.factors);
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < q; ++j)
      for (Eigen::Index a = 0; a < p; ++a) t(d, c++) = dr.beta(a, j);
    for (Eigen::Index j = 0; j < k; ++j)
      for (Eigen::Index i = j; i < q; ++i) t(d, c++) = dr.A(i, j);
    for (Eigen::Index i = 0; i < q; ++i) t(d, c++) = dr.tau2[i];
    for (Eigen::Index j = 0; j < k; ++j) t(d, c++) = dr.factors[j].sigma2;
    for (Eigen::Index j = 0; j < k; ++j) t(d, c++) = dr.factors[j].phi;
    for (Eigen::Index j = 0; j < k; ++j) t(d, c++) = dr.factors[j].nu;
    for (Eigen::Index j = 0; j < k; ++j)
      for (Eigen::Index i = j; i < q; ++i) t(d, c++) = lambda(i, j);
    for (Eigen::Index j = 0; j < k; ++j)
      t(d, c++) = lambda(j, j) * lambda(j, j) * dr.factors[j].scale();
    const Mat ll = lambda * lambda.transpose();
    for (Eigen::Index i = 0; i < q; ++i) t(d, c++) = ll(i, i);
  }
  return t;
}

Vec ChainStore::column(const std::string& name) const {
  const auto names = column_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("no chain column named " + name);
  return table().col(it - names.begin());
}

namespace {

ChainDraw snapshot(const ModelState& s, long it, bool store_r) {
  ChainDraw d;
  d.iteration = it;
  d.beta = s.beta;
  d.A = s.A.A;
  d.tau2 = s.tau2;
  d.factors = s.factors;
  if (store_r) d.r = s.r.values;
  return d;
}

bool stored(long it, const SamplerConfig& cfg) {
  return it > cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0;
}

} // namespace

ChainStore run_chain(const SamplerConfig& cfg, const ObservedData& data, const Mesh& mesh,
                     std::optional<ModelState> init) {
  cfg.validate();
  data.validate();
  ModelState s0 = init ? std::move(*init) : initial_state(cfg, data, mesh);
  const auto t0 = std::chrono::steady_clock::now();
  GripsSampler sampler(mesh, data, cfg, std::move(s0));
  ChainStore store;
  store.q = data.q();
  store.k = cfg.k;
  store.p = data.p();
  for (long it = 1; it <= cfg.iterations; ++it) {
    try {
      sampler.iterate(static_cast<std::uint64_t>(it));
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(it) + ": " + e.what());
    }
    if (stored(it, cfg)) store.draws.push_back(snapshot(sampler.state(), it, cfg.store_r));
  }
  store.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (int j = 0; j < cfg.k; ++j) {
    store.acceptance_names.push_back("phi_sigma[" + std::to_string(j + 1) + "]");
    store.acceptance.push_back(sampler.phi_sigma_adapt(j).acceptance_rate());
  }
  if (!cfg.conjugate_a_tau) {
    store.acceptance_names.push_back("A_tau");
    store.acceptance.push_back(sampler.a_tau_adapt().acceptance_rate());
  }
  return store;
}

} // namespace grips
