#include "grips/cli.hpp"

#include "grips/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace grips {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json to_json(const ParameterSummary& p) {
  return json{{"name", p.name},       {"mean", num(p.mean)},   {"sd", num(p.sd)},
              {"q02.5", num(p.lower)}, {"q97.5", num(p.upper)}, {"ess", num(p.ess)},
              {"ess_per_s", num(p.ess_per_s)}, {"degenerate", p.degenerate}};
}

std::vector<Link> resolve_links(const std::vector<Link>& links, Eigen::Index q) {
  if (links.size() == 1) return std::vector<Link>(q, links[0]);
  if (static_cast<Eigen::Index>(links.size()) != q)
    throw ConfigError("model.link", "needs one link per outcome or a single link");
  return links;
}

void transform_outcomes(ObservedData& d, const std::vector<Link>& links) {
  for (Eigen::Index j = 0; j < d.q(); ++j) {
    if (links[j] == Link::identity) continue;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
      if (!d.observed(i, j)) continue;
      const double v = d.y(i, j);
      const bool ok = links[j] == Link::log ? v > 0 : (v > 0 && v < 1);
      if (!ok)
        throw ConfigError("model.link", "outcome y" + std::to_string(j + 1) +
                                            " has values outside the domain of the " +
                                            link_name(links[j]) + " link");
      d.y(i, j) = apply_link(links[j], v);
    }
  }
}

json eigen_version() {
  return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
}

} // namespace

std::vector<ParameterSummary> summarize_chain(const ChainStore& chain) {
  std::vector<ParameterSummary> out;
  if (chain.empty()) return out;
  const auto names = chain.column_names();
  const Mat t = chain.table();
  for (std::size_t c = 0; c < names.size(); ++c) {
    const Vec x = t.col(c);
    ParameterSummary p;
    p.name = names[c];
    p.mean = x.mean();
    p.sd = x.size() > 1 ? std::sqrt((x.array() - p.mean).square().sum() / (x.size() - 1)) : 0.0;
    std::vector<double> v(x.data(), x.data() + x.size());
    p.lower = quantile(v, 0.025);
    p.upper = quantile(v, 0.975);
    if (x.size() >= 10) {
      const EssResult e = ess(x);
      p.ess = e.ess;
      p.degenerate = e.degenerate;
      p.ess_per_s = chain.seconds > 0 ? ess_per_second(e.ess, chain.seconds)
                                      : std::numeric_limits<double>::quiet_NaN();
    } else {
      p.ess = p.ess_per_s = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(p);
  }
  return out;
}

MethodReport evaluate_method(const std::string& method, const ChainStore& chain,
                             const SyntheticData& data, const Mesh& mesh, std::uint64_t seed) {
  if (data.spec.q() != 1) throw std::invalid_argument("evaluate_method: univariate data only");
  MethodReport r;
  r.method = method;
  r.seconds = chain.seconds;
  for (const auto& p : summarize_chain(chain)) {
    if (p.name == "var[1]") r.sigma2 = p;
    if (p.name == "phi[1]") r.phi = p;
    if (p.name == "tau2[1]") r.tau2 = p;
    if (p.name == "microergodic[1]") r.microergodic = p;
  }
  const double s2 = data.spec.lambda(0, 0) * data.spec.lambda(0, 0);
  const Vec truth = (Vec(3) << s2, data.spec.phi[0], data.spec.tau2[0]).finished();
  const Vec est = (Vec(3) << r.sigma2.mean, r.phi.mean, r.tau2.mean).finished();
  const Vec lo = (Vec(3) << r.sigma2.lower, r.phi.lower, r.tau2.lower).finished();
  const Vec hi = (Vec(3) << r.sigma2.upper, r.phi.upper, r.tau2.upper).finished();
  r.accuracy = accuracy_metrics(truth, est, lo, hi);

  PredictionRequest req;
  req.locations = data.test.locations;
  req.X = data.test.X;
  req.keep_samples = true;
  const PredictionSummary pred = predict(chain, req, mesh, seed);
  r.prediction = prediction_metrics(data.test.y.col(0), pred.samples[0]);
  return r;
}

void fit_command(const std::string& config_path, std::ostream& log) {
  const auto t_all = std::chrono::steady_clock::now();
  const FitSettings s = load_fit_config(config_path);
  make_dir(s.output.dir);

  ObservedData train = read_data_csv(s.train_path);
  train.validate();
  const auto links = resolve_links(s.links, train.q());
  transform_outcomes(train, links);
  log << "fit: " << train.n() << " locations, q=" << train.q() << ", p=" << train.p() << '\n';

  auto t0 = std::chrono::steady_clock::now();
  const Mesh mesh = build_mesh(s.mesh.domain, s.mesh.grid, s.mesh.partition, train.locations);
  const double t_mesh = seconds_since(t0);
  log << "fit: mesh with " << mesh.dag.n_reference() << " reference nodes, "
      << mesh.coloring.count() << " colors\n";

  SamplerConfig cfg = s.mcmc;
  cfg.store_r = !s.test_path.empty() || s.mesh.predict_grid;
  const ChainStore chain = run_chain(cfg, train, mesh);
  log << "fit: " << cfg.iterations << " iterations in " << chain.seconds << " s, "
      << chain.size() << " stored draws\n";
  write_chain_csv(s.output.path(s.output.chain), chain);

  json diag;
  diag["draws"] = chain.size();
  diag["seconds"] = chain.seconds;
  json acc = json::object();
  for (std::size_t i = 0; i < chain.acceptance.size(); ++i)
    acc[chain.acceptance_names[i]] = chain.acceptance[i];
  diag["acceptance"] = acc;
  json params = json::array();
  for (const auto& p : summarize_chain(chain)) params.push_back(to_json(p));
  diag["parameters"] = params;

  json outputs{{"chain", s.output.path(s.output.chain)}};
  double t_pred = 0.0;
  if (!s.test_path.empty() && !chain.empty()) {
    const ObservedData test = read_data_csv(s.test_path);
    if (test.p() != train.p() || test.q() != train.q())
      throw ConfigError("data.test", "test file must have the same outcome and covariate columns");
    t0 = std::chrono::steady_clock::now();
    PredictionRequest req;
    req.locations = test.locations;
    req.X = test.X;
    req.levels = s.output.levels;
    req.links = links;
    req.keep_samples = true;
    const PredictionSummary pred = predict(chain, req, mesh, cfg.seed + 0x5eed);
    t_pred = seconds_since(t0);
    write_predictions_csv(s.output.path(s.output.predictions), pred);
    outputs["predictions"] = s.output.path(s.output.predictions);
    json scores = json::array();
    for (Eigen::Index j = 0; j < test.q(); ++j) {
      std::vector<int> rows;
      for (Eigen::Index i = 0; i < test.n(); ++i)
        if (test.observed(i, j)) rows.push_back(static_cast<int>(i));
      if (rows.empty() || chain.size() < 2) continue;
      Vec y(rows.size());
      Eigen::MatrixXf smp(pred.samples[j].rows(), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t t = 0; t < rows.size(); ++t) {
        y[t] = test.y(rows[t], j);
        smp.col(t) = pred.samples[j].col(rows[t]);
      }
      const PredictionMetrics m = prediction_metrics(y, smp);
      scores.push_back({{"outcome", j + 1}, {"n", rows.size()}, {"rmspe", m.rmspe},
                        {"crps", m.crps}, {"coverage", m.coverage}});
    }
    diag["prediction"] = scores;
  }
  if (s.mesh.predict_grid && !chain.empty()) {
    const LatentMap map = latent_map(chain, mesh, s.output.levels);
    write_latent_map_csv(s.output.path(s.output.latent_map), map, mesh);
    outputs["latent_map"] = s.output.path(s.output.latent_map);
  }
  write_text(s.output.path(s.output.diagnostics), diag.dump(2) + "\n");
  outputs["diagnostics"] = s.output.path(s.output.diagnostics);
  outputs["manifest"] = s.output.path(s.output.manifest);

  json manifest{
      {"program", "grips"},
      {"version", kVersion},
      {"command", "fit"},
      {"config", fs::absolute(config_path).string()},
      {"seed", cfg.seed},
      {"eigen", eigen_version()},
      {"compiler", __VERSION__},
      {"threads", omp_get_max_threads()},
      {"inputs", {{"train", s.train_path}, {"test", s.test_path}, {"n", train.n()},
                  {"q", train.q()}, {"p", train.p()}}},
      {"mcmc", {{"iterations", cfg.iterations}, {"burn_in", cfg.burn_in}, {"thin", cfg.thin},
                {"k", cfg.k}, {"nu", cfg.nu}, {"conjugate_a_tau", cfg.conjugate_a_tau}, {"update_scale", cfg.update_scale}}},
      {"timings", {{"mesh", t_mesh}, {"mcmc", chain.seconds}, {"predict", t_pred},
                   {"total", seconds_since(t_all)}}},
      {"outputs", outputs}};
  write_text(s.output.path(s.output.manifest), manifest.dump(2) + "\n");
  log << "fit: outputs written to " << s.output.dir << '\n';
}

void simulate_command(const std::string& config_path, std::ostream& log) {
  const SimulateSettings s = load_simulate_config(config_path);
  make_dir(s.output.dir);
  const SyntheticData d = simulate_dataset(s.spec);
  write_data_csv(s.output.path(s.output.train), d.train);
  write_data_csv(s.output.path(s.output.test), d.test);
  const auto& sp = s.spec;
  std::vector<double> lam(sp.lambda.data(), sp.lambda.data() + sp.lambda.size());
  json truth{
      {"layout", sp.layout == Layout::irregular ? "irregular" : "grid"},
      {"seed", sp.seed},
      {"n_train", d.train.n()},
      {"n_test", d.test.n()},
      {"q", sp.q()},
      {"k", sp.k()},
      {"lambda_colmajor", lam},
      {"phi", sp.phi},
      {"nu", sp.nu},
      {"tau2", std::vector<double>(sp.tau2.data(), sp.tau2.data() + sp.tau2.size())},
      {"tau2_source", sp.default_tau2 ? "generator default" : "configured"},
      {"beta_colmajor", std::vector<double>(sp.beta.data(), sp.beta.data() + sp.beta.size())},
      {"beta_source", sp.default_beta ? "generator default" : "configured"}};
  write_text(s.output.path(s.output.truth), truth.dump(2) + "\n");
  log << "simulate: " << d.train.n() << " training and " << d.test.n()
      << " test locations written to " << s.output.dir << '\n';
}

void benchmark_command(const std::string& config_path, std::ostream& log) {
  const BenchmarkSettings s = load_benchmark_config(config_path);
  make_dir(s.output.dir);
  std::ostringstream csv;
  csv << "scenario,seed,method,seconds";
  for (const char* p : {"sigma2", "phi", "tau2"})
    csv << ',' << p << "_mean," << p << "_ess," << p << "_ess_per_s," << p << "_relative";
  csv << ",rmse,mpe,coverage,rmspe,crps,pred_coverage,tau2_beta_source\n";

  auto row = [&](const std::string& scen, std::uint64_t seed, const MethodReport& r,
                 const MethodReport* ref, const SimulationSpec& spec) {
    csv << scen << ',' << seed << ',' << r.method << ',' << format_double(r.seconds);
    const ParameterSummary* mine[3] = {&r.sigma2, &r.phi, &r.tau2};
    const ParameterSummary* base[3] = {nullptr, nullptr, nullptr};
    if (ref) base[0] = &ref->sigma2, base[1] = &ref->phi, base[2] = &ref->tau2;
    for (int i = 0; i < 3; ++i) {
      csv << ',' << format_double(mine[i]->mean) << ',' << format_double(mine[i]->ess) << ','
          << format_double(mine[i]->ess_per_s) << ',';
      if (base[i]) csv << format_double(mine[i]->ess_per_s / base[i]->ess_per_s);
    }
    csv << ',' << format_double(r.accuracy.rmse) << ',' << format_double(r.accuracy.mpe) << ','
        << format_double(r.accuracy.coverage) << ',' << format_double(r.prediction.rmspe) << ','
        << format_double(r.prediction.crps) << ',' << format_double(r.prediction.coverage) << ','
        << (spec.default_tau2 || spec.default_beta ? "generator default" : "configured") << '\n';
  };

  for (const auto& sc : s.scenarios) {
    for (std::uint64_t seed : s.seeds) {
      SimulationSpec spec = sc.spec;
      spec.seed = seed;
      const SyntheticData d = simulate_dataset(spec);
      const Mesh mesh = build_mesh(s.mesh.domain, s.mesh.grid, s.mesh.partition, d.train.locations);
      SamplerConfig cfg = s.mcmc;
      cfg.nu = {spec.nu[0]};
      cfg.seed = seed;
      cfg.store_r = true;
      const ChainStore g = run_chain(cfg, d.train, mesh);
      const MethodReport rg = evaluate_method("grips", g, d, mesh, seed + 0x5eed);
      log << "benchmark: " << sc.name << " seed " << seed << " grips " << g.seconds << " s\n";
      if (s.run_baseline) {
        const ChainStore b = run_baseline_latent(cfg, d.train, mesh);
        const MethodReport rb = evaluate_method("latent", b, d, mesh, seed + 0x5eed);
        log << "benchmark: " << sc.name << " seed " << seed << " latent " << b.seconds << " s\n";
        row(sc.name, seed, rg, &rb, spec);
        row(sc.name, seed, rb, &rb, spec);
      } else {
        row(sc.name, seed, rg, nullptr, spec);
      }
    }
  }
  write_text(s.output.path(s.output.report), csv.str());
  log << "benchmark: report written to " << s.output.path(s.output.report) << '\n';
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Spatial regression with gridded meshed Gaussian processes"};
  app.set_version_flag("--version", std::string("grips ") + kVersion);
  app.require_subcommand(1);
  std::string config;
  auto* fit = app.add_subcommand("fit", "fit a model and write chains, predictions and diagnostics");
  fit->add_option("config", config, "INI configuration file")->required();
  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  sim->add_option("config", config, "INI configuration file")->required();
  auto* bench = app.add_subcommand("benchmark", "compare samplers on simulated scenarios");
  bench->add_option("config", config, "INI configuration file")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (fit->parsed()) fit_command(config, std::cerr);
    else if (sim->parsed()) simulate_command(config, std::cerr);
    else benchmark_command(config, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

} // namespace grips
