#include "grips/mcmc.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

namespace grips {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kResidualFloor = 1e-10;

std::uint64_t block_id(Stream s) { return static_cast<std::uint64_t>(s); }

// Unit-variance Matérn parameters in the rescaled parametrization.
MaternParams correlation_params(double phi, double nu) {
  return MaternParams{std::pow(phi, 2.0 * nu), phi, nu};
}

struct Caches {
  OwnCovarianceCache own;
  LatentPriorCache prior;
  ObservedConditioning obs;
};

class BaselineSampler {
public:
  BaselineSampler(const Mesh& mesh, const ObservedData& data, const SamplerConfig& cfg)
      : mesh_(mesh), data_(data), cfg_(cfg) {
    if (data.q() != 1) throw ConfigError("model.q", "the latent comparison sampler is univariate");
    if (cfg.k != 1) throw ConfigError("model.k", "the latent comparison sampler needs k = 1");
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
    const ModelState init = initial_state(cfg, data, mesh);
    beta_ = init.beta.col(0);
    tau2_ = init.tau2[0];
    nu_ = cfg.nu[0];
    phi_ = init.factors[0].phi;
    const double lam = init.A.A(0, 0) / std::pow(phi_, nu_);
    sigma2_ = lam * lam;
    ws_ = LatentField{Mat::Zero(static_cast<Eigen::Index>(mesh.grid.size()), 1)};
    wu_ = Vec::Zero(data.n());
    adapt_ = RamAdaptState(1, cfg.ram_init_scale, cfg.target_accept, cfg.ram_decay);
    caches_ = build(phi_);
  }

  void iterate(std::uint64_t it) {
    update_ws(it);
    Rng rw = Rng::stream(cfg_.seed, it, block_id(Stream::baseline_w));
    update_wu(rw);
    Rng rb = Rng::stream(cfg_.seed, it, block_id(Stream::beta));
    update_beta(rb);
    Rng rs = Rng::stream(cfg_.seed, it, block_id(Stream::baseline_sigma));
    update_sigma2(rs);
    Rng rp = Rng::stream(cfg_.seed, it, block_id(Stream::phi_sigma));
    update_phi(rp);
    Rng rt = Rng::stream(cfg_.seed, it, block_id(Stream::tau));
    update_tau2(rt);
  }

  ChainDraw snapshot(long it) const {
    ChainDraw d;
    d.iteration = it;
    d.beta = beta_;
    const double a = std::pow(phi_, nu_);
    d.A = Mat::Constant(1, 1, a);
    d.tau2 = Vec::Constant(1, tau2_);
    d.factors = {MaternParams{sigma2_, phi_, nu_}};
    if (cfg_.store_r) d.r = ws_.values / a;
    return d;
  }

  double acceptance() const { return adapt_.acceptance_rate(); }

private:
  Caches build(double phi) const {
    const Factors f{correlation_params(phi, nu_)};
    Caches c;
    c.own = OwnCovarianceCache(mesh_, f);
    c.prior = LatentPriorCache(mesh_, f);
    c.obs = condition_observed(mesh_, data_, f, c.own);
    for (Eigen::Index i = 0; i < c.obs.factor[0].R.size(); ++i)
      if (c.obs.coincident[i] < 0)
        c.obs.factor[0].R[i] = std::max(c.obs.factor[0].R[i], kResidualFloor);
    return c;
  }

  double xb(Eigen::Index i) const {
    return data_.p() > 0 ? data_.X.row(i).dot(beta_) : 0.0;
  }

  double hw(const Caches& c, Eigen::Index i) const {
    const auto& own = mesh_.dag.own_points[c.obs.node[i]];
    const Vec& h = c.obs.factor[0].h[i];
    double acc = 0.0;
    for (std::size_t s = 0; s < own.size(); ++s) acc += h[s] * ws_.values(own[s], 0);
    return acc;
  }

  // latent value entering the likelihood of observation i
  double w_at(Eigen::Index i) const {
    const int c = caches_.obs.coincident[i];
    if (c >= 0) return ws_.values(mesh_.dag.own_points[caches_.obs.node[i]][c], 0);
    return wu_[i];
  }

  void update_ws(std::uint64_t it) {
    for (const auto& group : mesh_.coloring.groups) {
      const int ng = static_cast<int>(group.size());
      std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 4)
      for (int t = 0; t < ng; ++t) {
        try {
          draw_node(group[t], it);
        } catch (...) {
#pragma omp critical(grips_baseline_error)
          if (!err) err = std::current_exception();
        }
      }
      if (err) std::rethrow_exception(err);
    }
  }

  void draw_node(int v, std::uint64_t it) {
    const auto& dag = mesh_.dag;
    const auto& own = dag.own_points[v];
    const Eigen::Index ni = static_cast<Eigen::Index>(own.size());
    const NodeConditioning& nc = caches_.prior.get(0, v);
    Mat prec = nc.R_inv;
    Vec lin = Vec::Zero(ni);
    if (!dag.parents[v].empty()) lin += nc.R_inv * (nc.H * ws_.block(dag.parent_points[v], 0));
    for (int c : dag.children[v]) {
      const NodeConditioning& cc = caches_.prior.get(0, c);
      const int slot = dag.parent_slot(c, v);
      const Eigen::Index off = dag.parent_offset[c][slot];
      prec += cc.slot_precision[slot];
      const Vec rpc = ws_.block(dag.parent_points[c], 0);
      const Vec e = ws_.block(dag.own_points[c], 0) - cc.H * rpc +
                    cc.H.middleCols(off, ni) * rpc.segment(off, ni);
      lin += cc.Ht_Rinv.middleRows(off, ni) * e;
    }
    prec /= sigma2_;
    lin /= sigma2_;
    for (int l : dag.observed_of_node[v]) {
      const int c = caches_.obs.coincident[l];
      if (c >= 0) {
        if (!data_.observed(l, 0)) continue;
        prec(c, c) += 1.0 / tau2_;
        lin[c] += (data_.y(l, 0) - xb(l)) / tau2_;
        continue;
      }
      const Vec& h = caches_.obs.factor[0].h[l];
      const double wgt = 1.0 / (sigma2_ * caches_.obs.factor[0].R[l]);
      prec += wgt * h * h.transpose();
      lin += wgt * wu_[l] * h;
    }
    Eigen::LLT<Mat> llt(prec);
    if (llt.info() != Eigen::Success)
      throw NumericalError("singular conditional precision of w", static_cast<std::size_t>(v));
    Rng rng = Rng::stream(cfg_.seed, it, static_cast<std::uint64_t>(v));
    const Vec draw = draw_from_precision(llt, llt.solve(lin), rng);
    for (Eigen::Index s = 0; s < ni; ++s) ws_.values(own[s], 0) = draw[s];
  }

  void update_wu(Rng& rng) {
    for (Eigen::Index i = 0; i < data_.n(); ++i) {
      if (caches_.obs.coincident[i] >= 0) continue;
      const double pv = sigma2_ * caches_.obs.factor[0].R[i];
      double prec = 1.0 / pv;
      double lin = hw(caches_, i) / pv;
      if (data_.observed(i, 0)) {
        prec += 1.0 / tau2_;
        lin += (data_.y(i, 0) - xb(i)) / tau2_;
      }
      wu_[i] = lin / prec + rng.normal() / std::sqrt(prec);
    }
  }

  void update_beta(Rng& rng) {
    const Eigen::Index p = data_.p();
    if (p == 0) return;
    const Priors& pr = cfg_.priors;
    Mat prec = Mat::Identity(p, p) / pr.beta_var;
    Vec lin = Vec::Constant(p, pr.beta_mean / pr.beta_var);
    for (Eigen::Index i = 0; i < data_.n(); ++i) {
      if (!data_.observed(i, 0)) continue;
      const Vec x = data_.X.row(i).transpose();
      prec += x * x.transpose() / tau2_;
      lin += x * (data_.y(i, 0) - w_at(i)) / tau2_;
    }
    Eigen::LLT<Mat> llt(prec);
    if (llt.info() != Eigen::Success) throw NumericalError("singular posterior precision of beta");
    beta_ = draw_from_precision(llt, llt.solve(lin), rng);
  }

  // sum over non-coincident observations of (w_l - h_l w_S)^2 / R_l
  double unobserved_quad(const Caches& c, double& log_det, double& count) const {
    double quad = 0.0;
    log_det = 0.0;
    count = 0.0;
    for (Eigen::Index i = 0; i < data_.n(); ++i) {
      if (c.obs.coincident[i] >= 0) continue;
      const double r = c.obs.factor[0].R[i];
      const double e = wu_[i] - hw(c, i);
      quad += e * e / r;
      log_det += std::log(r);
      count += 1.0;
    }
    return quad;
  }

  void update_sigma2(Rng& rng) {
    const LatentQuadratic lq = latent_quadratic(ws_, mesh_, caches_.prior, 0);
    double ld, cnt;
    const double qu = unobserved_quad(caches_, ld, cnt);
    const Priors& pr = cfg_.priors;
    sigma2_ = rng.inv_gamma(pr.baseline_sigma2_shape + 0.5 * (lq.n + cnt),
                            pr.baseline_sigma2_rate + 0.5 * (lq.quad + qu));
  }

  double phi_target(double x, const Caches& c) const {
    const LatentQuadratic lq = latent_quadratic(ws_, mesh_, c.prior, 0);
    double ld, cnt;
    const double qu = unobserved_quad(c, ld, cnt);
    const double n = lq.n + cnt;
    const double total = x - 0.5 * (n * (kLog2Pi + std::log(sigma2_)) + lq.log_det + ld +
                                    (lq.quad + qu) / sigma2_);
    return std::isfinite(total) ? total : kNegInf;
  }

  void update_phi(Rng& rng) {
    const Priors& pr = cfg_.priors;
    Vec x(1);
    x[0] = std::log(phi_);
    double current = phi_target(x[0], caches_);
    Caches trial;
    auto target = [&](const Vec& xp) {
      const double phi = std::exp(xp[0]);
      if (!(phi > pr.phi_lower && phi < pr.phi_upper)) return kNegInf;
      try {
        trial = build(phi);
      } catch (const NumericalError&) {
        return kNegInf;
      }
      return phi_target(xp[0], trial);
    };
    const RamStep st = ram_metropolis_step(x, current, target, adapt_, rng);
    if (st.accepted) {
      phi_ = std::exp(x[0]);
      caches_ = std::move(trial);
    }
  }

  void update_tau2(Rng& rng) {
    double ss = 0.0;
    double n = 0.0;
    for (Eigen::Index i = 0; i < data_.n(); ++i) {
      if (!data_.observed(i, 0)) continue;
      const double e = data_.y(i, 0) - xb(i) - w_at(i);
      ss += e * e;
      n += 1.0;
    }
    const Priors& pr = cfg_.priors;
    tau2_ = rng.inv_gamma(pr.tau2_shape + 0.5 * n, pr.tau2_rate + 0.5 * ss);
  }

  const Mesh& mesh_;
  const ObservedData& data_;
  SamplerConfig cfg_;
  Vec beta_;
  double tau2_ = 1.0;
  double sigma2_ = 1.0;
  double phi_ = 1.0;
  double nu_ = 0.5;
  LatentField ws_;
  Vec wu_;
  Caches caches_;
  RamAdaptState adapt_;
};

} // namespace

ChainStore run_baseline_latent(const SamplerConfig& cfg, const ObservedData& data,
                               const Mesh& mesh) {
  cfg.validate();
  data.validate();
  const auto t0 = std::chrono::steady_clock::now();
  BaselineSampler sampler(mesh, data, cfg);
  ChainStore store;
  store.q = 1;
  store.k = 1;
  store.p = data.p();
  for (long it = 1; it <= cfg.iterations; ++it) {
    try {
      sampler.iterate(static_cast<std::uint64_t>(it));
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(it) + ": " + e.what());
    }
    if (it > cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0)
      store.draws.push_back(sampler.snapshot(it));
  }
  store.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  store.acceptance_names = {"phi"};
  store.acceptance = {sampler.acceptance()};
  return store;
}

} // namespace grips
