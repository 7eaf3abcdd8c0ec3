// Acceptance checks 1-8. Each prints its measurements followed by one
// "PASS criterion N" or "FAIL criterion N" line.

#include "oracles.hpp"

#include "grips/diagnostics.hpp"
#include "grips/mcmc.hpp"
#include "grips/predict.hpp"
#include "grips/synth.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <random>

using namespace grips;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool report(int n, bool ok, const std::string& summary, Clock::time_point t0) {
  std::printf("%s criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", n, summary.c_str(), since(t0));
  std::fflush(stdout);
  return ok;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Monte Carlo standard error of a mean through its effective sample size.
double mcse(const Vec& x) {
  const double m = x.mean();
  const double sd = std::sqrt((x.array() - m).square().sum() / static_cast<double>(x.size() - 1));
  const EssResult e = ess(x);
  return e.degenerate ? 0.0 : sd / std::sqrt(e.ess);
}

// 1 -------------------------------------------------------------------------

bool criterion1() {
  const auto t0 = Clock::now();
  std::mt19937_64 eng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z;
  double worst_latent = 0.0, worst_obs = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int n_obs = 5 + static_cast<int>(u(eng) * 25);
    const Mesh mesh = oracle::random_mesh(eng, n_obs);
    const Eigen::Index q = 1 + (rep % 2);
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(u(eng) * static_cast<double>(q));
    Factors f;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double nus[] = {0.5, 1.5, 0.3 + 1.5 * u(eng)};
      f.push_back({0.3 + 2.0 * u(eng), 0.5 + 6.0 * u(eng), nus[static_cast<int>(u(eng) * 3)]});
    }
    Mat lam = Mat::Zero(q, k);
    for (Eigen::Index j = 0; j < k; ++j) {
      lam(j, j) = 0.3 + u(eng);
      for (Eigen::Index i = j + 1; i < q; ++i) lam(i, j) = z(eng);
    }
    const LoadingMatrix a = assemble_A(lam, f);
    // r drawn from its DAG prior
    LatentField r{Mat(mesh.grid.points.rows(), k)};
    for (Eigen::Index j = 0; j < k; ++j) {
      Vec e(r.values.rows());
      for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = z(eng);
      const Eigen::LLT<Mat> llt(oracle::dag_covariance(mesh, f[j]));
      r.values.col(j) = llt.matrixL() * e;
    }

    ObservedData d;
    d.locations = mesh.observed;
    d.X.resize(n_obs, 2);
    d.y.resize(n_obs, q);
    for (int i = 0; i < n_obs; ++i) {
      d.X.row(i) << 1.0, z(eng);
      for (Eigen::Index j = 0; j < q; ++j) d.y(i, j) = u(eng) < 0.15 ? std::nan("") : z(eng);
    }
    Mat beta(2, q);
    for (Eigen::Index i = 0; i < beta.size(); ++i) beta.data()[i] = z(eng);
    Vec tau2(q);
    for (Eigen::Index j = 0; j < q; ++j) tau2[j] = 0.05 + u(eng);

    const double lat = latent_logdensity(r, mesh, f);
    const double lat_ref = oracle::latent_logdensity(r, mesh, f);
    const double obs = obs_loglik(d, beta, a, tau2, f, r, mesh);
    const double obs_ref = oracle::obs_loglik(mesh, d, beta, a.A, tau2, f, r);
    worst_latent = std::max(worst_latent, std::abs(lat - lat_ref));
    worst_obs = std::max(worst_obs, std::abs(obs - obs_ref));
    std::printf("  draw %2d: grid %dx%d cells %dx%d q=%ld k=%ld phi1 %.2f nu1 %.2f  latent %.6g diff %.2e"
                "  obs %.6g diff %.2e\n",
                rep, mesh.grid.counts[0], mesh.grid.counts[1], mesh.tess.splits[0],
                mesh.tess.splits[1], static_cast<long>(q), static_cast<long>(k), f[0].phi, f[0].nu,
                lat, std::abs(lat - lat_ref), obs, std::abs(obs - obs_ref));
  }
  const bool ok = worst_latent <= 1e-8 && worst_obs <= 1e-8;
  return report(1, ok,
                "max |latent - dense| = " + fmt("%.2e", worst_latent) +
                    ", max |obs - dense| = " + fmt("%.2e", worst_obs),
                t0);
}

// 2 -------------------------------------------------------------------------

bool criterion2() {
  const auto t0 = Clock::now();
  std::mt19937_64 eng(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int nt = 1 + static_cast<int>(u(eng) * 6);
    const int np = 1 + static_cast<int>(u(eng) * 12);
    Points all(nt + np, 2);
    for (int i = 0; i < nt + np; ++i) all.row(i) << u(eng), u(eng);
    const double nus[] = {0.5, 1.5, 0.3 + 1.2 * u(eng)};
    const MaternParams f{0.5 + 2.0 * u(eng), 1.0 + 9.0 * u(eng), nus[rep % 3]};
    std::vector<int> ti(nt), pi(np);
    for (int i = 0; i < nt; ++i) ti[i] = i;
    for (int i = 0; i < np; ++i) pi[i] = nt + i;
    const auto blk = oracle::condition(oracle::cov(all, all, f), ti, pi);
    const auto cp = conditioning(all.topRows(nt), all.bottomRows(np), f);
    worst = std::max({worst, (cp.H - blk.H).cwiseAbs().maxCoeff(),
                      (cp.R - blk.R).cwiseAbs().maxCoeff()});
  }
  return report(2, worst <= 1e-10, "max entry difference " + fmt("%.2e", worst), t0);
}

// 3 -------------------------------------------------------------------------

bool criterion3() {
  const auto t0 = Clock::now();
  std::mt19937_64 eng(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z;
  Points p(30, 2);
  for (int i = 0; i < 30; ++i) p.row(i) << u(eng), u(eng);
  const Mesh mesh = build_mesh(Domain{}, {4, 4}, {2, 2}, p);
  ObservedData d{p, Mat(30, 1), Mat(30, 2)};
  for (int i = 0; i < 30; ++i) {
    d.X.row(i) << 1.0, z(eng);
    d.y(i, 0) = 0.5 + d.X(i, 1) + z(eng);
  }
  ModelState s;
  s.r.values = Mat::Zero(16, 1);
  s.beta = (Mat(2, 1) << 0.5, 1.0).finished();
  s.factors = {{1.0, 2.0, 0.5}};
  s.A.A = Mat::Constant(1, 1, 1.4);
  s.tau2 = Vec::Constant(1, 0.3);
  SamplerConfig cfg;
  cfg.update_beta = cfg.update_phi_sigma = cfg.update_a_tau = false;
  cfg.seed = 7;
  GripsSampler g(mesh, d, cfg, s);

  const long sweeps = 200000;
  Mat draws(sweeps, 16);
  for (long t = 0; t < sweeps; ++t) {
    g.gibbs_update_r(static_cast<std::uint64_t>(t + 1));
    draws.row(t) = g.state().r.values.col(0).transpose();
  }

  const Mat prior = oracle::dag_covariance(mesh, s.factors[0]);
  const auto sm = oracle::stacked_model(mesh, d, s.beta, s.A.A, s.tau2, s.factors);
  const auto post = dense_posterior_oracle(prior, sm.Z, sm.y - sm.offset, sm.noise);

  const Vec mean = draws.colwise().mean().transpose();
  const Mat centered = draws.rowwise() - mean.transpose();
  int checked = 0, outside = 0;
  double worst = 0.0;
  for (int a = 0; a < 16; ++a) {
    const double zs = std::abs(mean[a] - post.mean[a]) / mcse(draws.col(a));
    worst = std::max(worst, zs);
    ++checked;
    outside += zs > 3.0;
  }
  for (int a = 0; a < 16; ++a)
    for (int b = a; b < 16; ++b) {
      const Vec prod = centered.col(a).cwiseProduct(centered.col(b));
      const double zs = std::abs(prod.mean() - post.cov(a, b)) / mcse(prod);
      worst = std::max(worst, zs);
      ++checked;
      outside += zs > 3.0;
    }
  std::printf("  posterior sd range %.3f..%.3f, largest standardized error %.2f\n",
              post.cov.diagonal().cwiseSqrt().minCoeff(), post.cov.diagonal().cwiseSqrt().maxCoeff(),
              worst);
  return report(3, outside == 0,
                std::to_string(outside) + " of " + std::to_string(checked) +
                    " mean and covariance entries beyond 3 MC standard errors",
                t0);
}

// 4 -------------------------------------------------------------------------

bool criterion4() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (double phi = 0.1; phi <= 50.0; phi *= 1.37)
    for (double h = 0.0; h <= 3.0; h += 0.01) {
      const double x = phi * h;
      const double e05 = std::exp(-x), e15 = (1 + x) * std::exp(-x);
      worst = std::max({worst, std::abs(matern_correlation(h, phi, 0.5) - e05),
                        std::abs(matern_correlation(h, phi, 1.5) - e15),
                        std::abs(matern_correlation_bessel(h, phi, 0.5) - e05),
                        std::abs(matern_correlation_bessel(h, phi, 1.5) - e15)});
    }
  return report(4, worst <= 1e-10, "max difference " + fmt("%.2e", worst), t0);
}

// 5 -------------------------------------------------------------------------

bool criterion5() {
  const auto t0 = Clock::now();
  struct Target {
    std::string name;
    Mat cov;
  };
  std::vector<Target> targets;
  targets.push_back({"1-d standard normal", Mat::Identity(1, 1)});
  Mat c2(2, 2);
  c2 << 1.0, 0.9, 0.9, 1.0;
  targets.push_back({"2-d correlated normal", c2});
  Vec sc(5);
  sc << 0.01, 0.1, 1.0, 10.0, 100.0;
  targets.push_back({"5-d badly scaled normal", Mat(sc.asDiagonal())});
  bool ok = true;
  for (const auto& t : targets) {
    const Mat prec = t.cov.inverse();
    LogDensity f = [&](const Vec& x) { return -0.5 * x.dot(prec * x); };
    RamAdaptState ad(t.cov.rows(), 0.1);
    Vec x = Vec::Zero(t.cov.rows());
    double lp = f(x);
    Rng rng(55);
    const long steps = 200000;
    long acc = 0;
    for (long s = 0; s < steps; ++s) acc += ram_metropolis_step(x, lp, f, ad, rng).accepted;
    const double rate = static_cast<double>(acc) / steps;
    std::printf("  %-24s acceptance %.4f\n", t.name.c_str(), rate);
    ok = ok && std::abs(rate - 0.234) <= 0.03;
  }
  return report(5, ok, "long-run acceptance within 0.234 +/- 0.03 on every target", t0);
}

// 6 and 7 share the simulated scenario ---------------------------------------

struct Scenario {
  Mesh mesh;
  SyntheticData data;
};

SamplerConfig scenario_sampler(std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.iterations = 5000;
  cfg.burn_in = 2500;
  cfg.seed = seed;
  cfg.nu = {0.5};
  return cfg;
}

Scenario scenario(std::uint64_t seed) {
  SimulationSpec spec = SimulationSpec::univariate(1.0, 5.0, 0.5, 0.1, seed);
  spec.n_train = 5000;
  spec.test_grid = 100;
  Scenario s{Mesh{}, simulate_dataset(spec)};
  s.mesh = build_mesh(Domain{}, {100, 100}, {25, 25}, s.data.train.locations);
  return s;
}

double rmspe_of(const ChainStore& chain, const Mesh& mesh, const ObservedData& test,
                double* coverage) {
  PredictionRequest req;
  req.locations = test.locations;
  req.X = test.X;
  req.keep_samples = true;
  const auto pred = predict(chain, req, mesh, 99);
  const auto m = prediction_metrics(test.y.col(0), pred.samples[0]);
  if (coverage) *coverage = m.coverage;
  return m.rmspe;
}

bool criterion6() {
  const auto t0 = Clock::now();
  const std::vector<std::string> params{"var[1]", "phi[1]", "tau2[1]"};
  const double truth[] = {1.0, 5.0, 0.1};
  std::map<std::string, int> covered;
  int coverage_ok = 0, rmspe_ok = 0;
  const int datasets = 5;
  for (int ds = 0; ds < datasets; ++ds) {
    const auto td = Clock::now();
    const std::uint64_t seed = 600 + static_cast<std::uint64_t>(ds);
    const Scenario s = scenario(seed);
    const double t_sim = since(td);
    const ChainStore chain = run_chain(scenario_sampler(seed), s.data.train, s.mesh);
    double cov = 0.0;
    const double rmspe = rmspe_of(chain, s.mesh, s.data.test, &cov);
    const bool cov_ok = cov >= 0.90 && cov <= 0.98;
    coverage_ok += cov_ok;

    std::string ci;
    for (std::size_t j = 0; j < params.size(); ++j) {
      std::vector<double> v;
      const Vec col = chain.column(params[j]);
      v.assign(col.data(), col.data() + col.size());
      const double lo = quantile(v, 0.025), hi = quantile(v, 0.975);
      const bool in = lo <= truth[j] && truth[j] <= hi;
      covered[params[j]] += in;
      char buf[96];
      std::snprintf(buf, sizeof buf, " %s [%.3f, %.3f]%s", params[j].c_str(), lo, hi, in ? "" : "*");
      ci += buf;
    }

    // subsample scenario: the first 1000 training locations are a uniform draw
    std::vector<int> sub(1000);
    for (int i = 0; i < 1000; ++i) sub[i] = i;
    ObservedData small{gather(s.data.train.locations, sub), Mat(1000, 1), Mat(1000, 2)};
    for (int i = 0; i < 1000; ++i) {
      small.y.row(i) = s.data.train.y.row(i);
      small.X.row(i) = s.data.train.X.row(i);
    }
    const Mesh small_mesh = build_mesh(Domain{}, {100, 100}, {25, 25}, small.locations);
    const ChainStore small_chain = run_chain(scenario_sampler(seed), small, small_mesh);
    const double rmspe_small = rmspe_of(small_chain, small_mesh, s.data.test, nullptr);
    const auto kr = dense_kriging(small, s.data.test.locations, s.data.test.X,
                                  s.data.spec.beta.col(0), 1.0, 5.0, 0.5, 0.1);
    const double rmspe_dense =
        std::sqrt((kr.mean - s.data.test.y.col(0)).squaredNorm() / static_cast<double>(kr.mean.size()));
    const double ratio = rmspe_small / rmspe_dense;
    const bool r_ok = std::abs(ratio - 1.0) <= 0.10;
    rmspe_ok += r_ok;

    std::printf("  dataset %d: coverage %.4f%s  rmspe %.4f  n=1000 rmspe %.4f vs dense %.4f "
                "(ratio %.3f%s)%s  [simulate %.0f s, fit %.0f s, total %.0f s]\n",
                ds + 1, cov, cov_ok ? "" : "*", rmspe, rmspe_small, rmspe_dense, ratio,
                r_ok ? "" : "*", ci.c_str(), t_sim, chain.seconds, since(td));
    std::fflush(stdout);
  }
  bool ok = coverage_ok == datasets && rmspe_ok == datasets;
  std::string summary = "coverage in [0.90, 0.98] for " + std::to_string(coverage_ok) + "/5, RMSPE within 10% of dense kriging for " +
                        std::to_string(rmspe_ok) + "/5, interval coverage of truth:";
  for (const auto& name : params) {
    summary += " " + name + " " + std::to_string(covered[name]) + "/5";
    ok = ok && covered[name] >= 3;
  }
  return report(6, ok, summary, t0);
}

bool criterion7() {
  const auto t0 = Clock::now();
  const Scenario s = scenario(700);
  const SamplerConfig cfg = scenario_sampler(700);
  const ChainStore g = run_chain(cfg, s.data.train, s.mesh);
  const ChainStore b = run_baseline_latent(cfg, s.data.train, s.mesh);
  bool ok = true;
  std::string summary;
  for (const char* name : {"var[1]", "phi[1]"}) {
    const double eg = ess(g.column(name)).ess, eb = ess(b.column(name)).ess;
    std::printf("  %-7s ESS grips %.1f (%.2f/s)  latent %.1f (%.2f/s)  ratio %.1f\n", name, eg,
                eg / g.seconds, eb, eb / b.seconds, eg / eb);
    ok = ok && eg >= 5.0 * eb;
    summary += std::string(summary.empty() ? "" : ", ") + name + " ESS ratio " + fmt("%.1f", eg / eb);
  }
  std::printf("  wall time grips %.1f s, latent %.1f s for %ld iterations\n", g.seconds, b.seconds,
              cfg.iterations);
  return report(7, ok, summary + " (floor 5)", t0);
}

// 8 -------------------------------------------------------------------------

bool criterion8() {
  const auto t0 = Clock::now();
  SimulationSpec spec;
  spec.layout = Layout::grid_with_holes;
  spec.grid_side = 30;
  spec.hole_lower = 0.4;
  spec.hole_upper = 0.6;
  spec.test_fraction = 0.1;
  spec.lambda = (Mat(2, 2) << 1.0, 0.0, 0.6, 0.7).finished();
  spec.phi = {4.0, 8.0};
  spec.nu = {0.5, 0.5};
  spec.tau2 = (Vec(2) << 0.1, 0.2).finished();
  spec.beta = (Mat(2, 2) << 1.0, -0.5, 1.0, 0.5).finished();
  spec.seed = 808;
  const auto data = simulate_dataset(spec);
  const Mesh mesh = build_mesh(Domain{}, {30, 30}, {10, 10}, data.train.locations);

  SamplerConfig cfg;
  cfg.k = 2;
  cfg.nu = {0.5, 0.5};
  cfg.iterations = 25000;
  cfg.burn_in = 5000;
  cfg.store_r = false;
  cfg.seed = 81;
  SamplerConfig conj = cfg;
  conj.conjugate_a_tau = true;
  conj.seed = 82;
  const ChainStore m = run_chain(cfg, data.train, mesh);
  const ChainStore c = run_chain(conj, data.train, mesh);

  bool ok = true;
  double worst = 0.0;
  for (const char* name : {"A[1,1]", "A[2,1]", "A[2,2]", "tau2[1]", "tau2[2]"}) {
    const Vec a = m.column(name), b = c.column(name);
    const double se = std::sqrt(std::pow(mcse(a), 2) + std::pow(mcse(b), 2));
    const double zs = std::abs(a.mean() - b.mean()) / se;
    worst = std::max(worst, zs);
    std::printf("  %-8s metropolis %.4f  conjugate %.4f  combined MC se %.4f  z %.2f\n", name,
                a.mean(), b.mean(), se, zs);
    ok = ok && zs <= 3.0;
  }
  std::printf("  wall time metropolis %.1f s, conjugate %.1f s\n", m.seconds, c.seconds);
  return report(8, ok, "largest standardized difference " + fmt("%.2f", worst), t0);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> which;
  app.add_option("--criterion", which, "criteria to run (default: all)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);
  if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8};
  bool all = true;
  for (int c : which) {
    bool ok = false;
    try {
      switch (c) {
        case 1: ok = criterion1(); break;
        case 2: ok = criterion2(); break;
        case 3: ok = criterion3(); break;
        case 4: ok = criterion4(); break;
        case 5: ok = criterion5(); break;
        case 6: ok = criterion6(); break;
        case 7: ok = criterion7(); break;
        case 8: ok = criterion8(); break;
      }
    } catch (const std::exception& e) {
      std::printf("FAIL criterion %d: %s\n", c, e.what());
    }
    all = all && ok;
  }
  return all ? 0 : 1;
}
