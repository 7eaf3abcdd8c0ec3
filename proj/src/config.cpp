#include "grips/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace grips {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

std::string OutputSettings::path(const std::string& name) const {
  return (fs::path(dir) / name).string();
}

namespace {

using KeySet = std::map<std::string, std::set<std::string>>;

const std::set<std::string> kPriorKeys{
    "beta_mean",    "beta_var",     "a_offdiag_var", "a_diag_var",
    "sigma2_shape", "sigma2_rate",  "tau2_shape",    "tau2_rate",
    "phi_lower",    "phi_upper",    "nu_lower",      "nu_upper",
    "baseline_sigma2_shape",        "baseline_sigma2_rate"};
const std::set<std::string> kMcmcKeys{
    "iterations",  "burn_in",      "thin",           "seed",         "target_accept",
    "ram_decay",   "ram_init_scale", "update_r",     "update_beta",  "update_phi_sigma",
    "update_a_tau", "conjugate_a_tau", "update_scale", "sample_nu",  "threads",      "init_phi"};
const std::set<std::string> kSimKeys{
    "layout", "n_train", "test_grid", "grid_side", "hole_lower", "hole_upper", "test_fraction",
    "q",      "k",       "sigma2",    "lambda",    "phi",        "nu",         "tau2",
    "beta",   "seed"};
const std::set<std::string> kDomainKeys{"lon_min", "lon_max", "lat_min", "lat_max"};
const std::set<std::string> kGridKeys{"n_lon", "n_lat", "predict_grid"};
const std::set<std::string> kPartitionKeys{"m_lon", "m_lat"};

class Ini {
public:
  explicit Ini(const std::string& path) : path_(path) {
    if (!fs::exists(path)) throw IoError("cannot open config " + path);
    try {
      pt::read_ini(path, tree_);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError("", std::string("malformed config: ") + e.what());
    }
    base_ = fs::absolute(fs::path(path)).parent_path();
  }

  void check(const KeySet& allowed, const std::string& prefix_section = "") const {
    for (const auto& [section, body] : tree_) {
      if (body.empty()) throw ConfigError(section, "keys must appear inside a section");
      auto it = allowed.find(section);
      const std::set<std::string>* keys = nullptr;
      if (it != allowed.end()) {
        keys = &it->second;
      } else if (!prefix_section.empty() && section.rfind(prefix_section + ".", 0) == 0) {
        keys = &kSimKeys;
      } else {
        throw ConfigError(section, "unknown section");
      }
      for (const auto& [key, value] : body)
        if (!keys->count(key)) throw ConfigError(section + "." + key, "unknown key");
    }
  }

  std::vector<std::string> sections() const {
    std::vector<std::string> out;
    for (const auto& [s, body] : tree_) out.push_back(s);
    return out;
  }

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto s = tree_.find(section);
    if (s == tree_.not_found()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.not_found()) return std::nullopt;
    return k->second.data();
  }

  double real(const std::string& section, const std::string& key, double def) const {
    const auto r = raw(section, key);
    return r ? to_double(*r, section + "." + key) : def;
  }
  std::optional<double> real_opt(const std::string& section, const std::string& key) const {
    const auto r = raw(section, key);
    if (!r) return std::nullopt;
    return to_double(*r, section + "." + key);
  }
  long integer(const std::string& section, const std::string& key, long def) const {
    const auto r = raw(section, key);
    if (!r) return def;
    long v = 0;
    const auto s = trim(*r);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ConfigError(section + "." + key, "expected an integer, got '" + *r + "'");
    return v;
  }
  bool flag(const std::string& section, const std::string& key, bool def) const {
    const auto r = raw(section, key);
    if (!r) return def;
    const auto s = trim(*r);
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw ConfigError(section + "." + key, "expected true or false, got '" + *r + "'");
  }
  std::string text(const std::string& section, const std::string& key,
                   const std::string& def) const {
    const auto r = raw(section, key);
    return r ? trim(*r) : def;
  }
  std::vector<double> reals(const std::string& section, const std::string& key,
                            const std::vector<double>& def) const {
    const auto r = raw(section, key);
    if (!r) return def;
    std::vector<double> out;
    for (const auto& w : words(*r)) out.push_back(to_double(w, section + "." + key));
    if (out.empty()) throw ConfigError(section + "." + key, "empty list");
    return out;
  }
  std::vector<std::string> texts(const std::string& section, const std::string& key,
                                 const std::vector<std::string>& def) const {
    const auto r = raw(section, key);
    return r ? words(*r) : def;
  }
  std::string file(const std::string& section, const std::string& key, bool required) const {
    const auto r = raw(section, key);
    if (!r || trim(*r).empty()) {
      if (required) throw ConfigError(section + "." + key, "required");
      return "";
    }
    return resolve(trim(*r));
  }
  std::string resolve(const std::string& p) const {
    const fs::path fp(p);
    return fp.is_absolute() ? p : (base_ / fp).lexically_normal().string();
  }

private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\"");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\"");
    return s.substr(a, b - a + 1);
  }
  static std::vector<std::string> words(const std::string& s) {
    std::string t = s;
    for (char& c : t)
      if (c == ',' || c == ';') c = ' ';
    std::istringstream in(trim(t));
    std::vector<std::string> out;
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
  }
  static double to_double(const std::string& raw, const std::string& key) {
    const auto s = trim(raw);
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
      throw ConfigError(key, "expected a finite number, got '" + raw + "'");
    return v;
  }

  std::string path_;
  pt::ptree tree_;
  fs::path base_;
};

void read_mesh(const Ini& ini, MeshSettings& m) {
  m.domain.lower = {ini.real("domain", "lon_min", 0.0), ini.real("domain", "lat_min", 0.0)};
  m.domain.upper = {ini.real("domain", "lon_max", 1.0), ini.real("domain", "lat_max", 1.0)};
  if (!(m.domain.upper[0] > m.domain.lower[0])) throw ConfigError("domain.lon_max", "must exceed domain.lon_min");
  if (!(m.domain.upper[1] > m.domain.lower[1])) throw ConfigError("domain.lat_max", "must exceed domain.lat_min");
  const long gx = ini.integer("grid", "n_lon", 100);
  const long gy = ini.integer("grid", "n_lat", 100);
  if (gx < 1 || gx > 100000) throw ConfigError("grid.n_lon", "must lie in [1, 100000]");
  if (gy < 1 || gy > 100000) throw ConfigError("grid.n_lat", "must lie in [1, 100000]");
  m.grid = {static_cast<int>(gx), static_cast<int>(gy)};
  m.predict_grid = ini.flag("grid", "predict_grid", false);
  const long px = ini.integer("partition", "m_lon", std::min<long>(25, gx));
  const long py = ini.integer("partition", "m_lat", std::min<long>(25, gy));
  if (px < 1 || px > gx) throw ConfigError("partition.m_lon", "must lie in [1, grid.n_lon]");
  if (py < 1 || py > gy) throw ConfigError("partition.m_lat", "must lie in [1, grid.n_lat]");
  m.partition = {static_cast<int>(px), static_cast<int>(py)};
}

void read_priors(const Ini& ini, Priors& p) {
  p.beta_mean = ini.real("priors", "beta_mean", p.beta_mean);
  p.beta_var = ini.real("priors", "beta_var", p.beta_var);
  p.a_offdiag_var = ini.real("priors", "a_offdiag_var", p.a_offdiag_var);
  p.a_diag_var = ini.real("priors", "a_diag_var", p.a_diag_var);
  p.sigma2_shape = ini.real("priors", "sigma2_shape", p.sigma2_shape);
  p.sigma2_rate = ini.real("priors", "sigma2_rate", p.sigma2_rate);
  p.tau2_shape = ini.real("priors", "tau2_shape", p.tau2_shape);
  p.tau2_rate = ini.real("priors", "tau2_rate", p.tau2_rate);
  p.phi_lower = ini.real("priors", "phi_lower", p.phi_lower);
  p.phi_upper = ini.real("priors", "phi_upper", p.phi_upper);
  p.nu_lower = ini.real("priors", "nu_lower", p.nu_lower);
  p.nu_upper = ini.real("priors", "nu_upper", p.nu_upper);
  p.baseline_sigma2_shape = ini.real("priors", "baseline_sigma2_shape", p.baseline_sigma2_shape);
  p.baseline_sigma2_rate = ini.real("priors", "baseline_sigma2_rate", p.baseline_sigma2_rate);
}

void read_mcmc(const Ini& ini, SamplerConfig& c) {
  c.iterations = ini.integer("mcmc", "iterations", c.iterations);
  c.burn_in = ini.integer("mcmc", "burn_in", c.burn_in);
  c.thin = ini.integer("mcmc", "thin", c.thin);
  const long seed = ini.integer("mcmc", "seed", static_cast<long>(c.seed));
  if (seed < 0) throw ConfigError("mcmc.seed", "must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.target_accept = ini.real("mcmc", "target_accept", c.target_accept);
  c.ram_decay = ini.real("mcmc", "ram_decay", c.ram_decay);
  c.ram_init_scale = ini.real("mcmc", "ram_init_scale", c.ram_init_scale);
  c.update_r = ini.flag("mcmc", "update_r", c.update_r);
  c.update_beta = ini.flag("mcmc", "update_beta", c.update_beta);
  c.update_phi_sigma = ini.flag("mcmc", "update_phi_sigma", c.update_phi_sigma);
  c.update_a_tau = ini.flag("mcmc", "update_a_tau", c.update_a_tau);
  c.conjugate_a_tau = ini.flag("mcmc", "conjugate_a_tau", c.conjugate_a_tau);
  c.update_scale = ini.flag("mcmc", "update_scale", c.update_scale);
  c.sample_nu = ini.flag("mcmc", "sample_nu", c.sample_nu);
  c.threads = static_cast<int>(ini.integer("mcmc", "threads", c.threads));
  c.init_phi = ini.real_opt("mcmc", "init_phi");
  read_priors(ini, c.priors);
}

void read_model(const Ini& ini, SamplerConfig& c) {
  c.k = static_cast<int>(ini.integer("model", "k", 1));
  if (c.k < 1) throw ConfigError("model.k", "must be at least 1");
  c.nu = ini.reals("model", "nu", {0.5});
  if (c.nu.size() == 1) c.nu.assign(c.k, c.nu[0]);
  if (static_cast<int>(c.nu.size()) != c.k) throw ConfigError("model.nu", "needs one value per factor");
}

void read_output(const Ini& ini, OutputSettings& o) {
  o.dir = ini.file("output", "dir", false);
  if (o.dir.empty()) o.dir = ini.resolve("out");
  o.chain = ini.text("output", "chain", o.chain);
  o.predictions = ini.text("output", "predictions", o.predictions);
  o.diagnostics = ini.text("output", "diagnostics", o.diagnostics);
  o.manifest = ini.text("output", "manifest", o.manifest);
  o.latent_map = ini.text("output", "latent_map", o.latent_map);
  o.train = ini.text("output", "train", o.train);
  o.test = ini.text("output", "test", o.test);
  o.truth = ini.text("output", "truth", o.truth);
  o.report = ini.text("output", "report", o.report);
  o.levels = ini.reals("output", "quantiles", o.levels);
  for (double l : o.levels)
    if (!(l > 0 && l < 1)) throw ConfigError("output.quantiles", "levels must lie in (0, 1)");
  for (std::size_t i = 1; i < o.levels.size(); ++i)
    if (!(o.levels[i] > o.levels[i - 1]))
      throw ConfigError("output.quantiles", "levels must be increasing");
}

SimulationSpec read_spec(const Ini& ini, const std::string& s, SimulationSpec spec) {
  const std::string layout = ini.text(s, "layout", "irregular");
  if (layout == "irregular") spec.layout = Layout::irregular;
  else if (layout == "grid") spec.layout = Layout::grid_with_holes;
  else throw ConfigError(s + ".layout", "expected irregular or grid");
  spec.n_train = ini.integer(s, "n_train", spec.n_train);
  spec.test_grid = static_cast<int>(ini.integer(s, "test_grid", spec.test_grid));
  spec.grid_side = static_cast<int>(ini.integer(s, "grid_side", spec.grid_side));
  spec.hole_lower = ini.real(s, "hole_lower", spec.hole_lower);
  spec.hole_upper = ini.real(s, "hole_upper", spec.hole_upper);
  spec.test_fraction = ini.real(s, "test_fraction", spec.test_fraction);
  const long q = ini.integer(s, "q", 1);
  const long k = ini.integer(s, "k", 1);
  if (q < 1) throw ConfigError(s + ".q", "must be at least 1");
  if (k < 1 || k > q) throw ConfigError(s + ".k", "must lie in [1, q]");
  if (ini.raw(s, "lambda")) {
    const auto l = ini.reals(s, "lambda", {});
    if (static_cast<long>(l.size()) != q * k)
      throw ConfigError(s + ".lambda", "needs q * k values in row-major order");
    spec.lambda = Mat::Zero(q, k);
    for (long i = 0; i < q; ++i)
      for (long j = 0; j < k; ++j) spec.lambda(i, j) = l[i * k + j];
  } else {
    const double sigma2 = ini.real(s, "sigma2", 1.0);
    if (!(sigma2 > 0)) throw ConfigError(s + ".sigma2", "must be positive");
    if (q != 1 || k != 1) throw ConfigError(s + ".lambda", "required when q > 1");
    spec.lambda = Mat::Constant(1, 1, std::sqrt(sigma2));
  }
  auto per_factor = [&](const char* key, std::vector<double> def) {
    auto v = ini.reals(s, key, def);
    if (v.size() == 1) v.assign(k, v[0]);
    if (static_cast<long>(v.size()) != k) throw ConfigError(s + "." + key, "needs one value per factor");
    for (double x : v)
      if (!(x > 0)) throw ConfigError(s + "." + key, "must be positive");
    return v;
  };
  spec.phi = per_factor("phi", {5.0});
  spec.nu = per_factor("nu", {0.5});
  spec.default_tau2 = !ini.raw(s, "tau2");
  spec.default_beta = !ini.raw(s, "beta");
  auto tau = ini.reals(s, "tau2", {0.1});
  if (tau.size() == 1) tau.assign(q, tau[0]);
  if (static_cast<long>(tau.size()) != q) throw ConfigError(s + ".tau2", "needs one value per outcome");
  spec.tau2 = Eigen::Map<const Vec>(tau.data(), q);
  if ((spec.tau2.array() < 0).any()) throw ConfigError(s + ".tau2", "must be non-negative");
  auto beta = ini.reals(s, "beta", {1.0, 1.0});
  if (beta.size() % q != 0) throw ConfigError(s + ".beta", "needs p * q values in row-major order");
  const long p = static_cast<long>(beta.size()) / q;
  spec.beta.resize(p, q);
  for (long a = 0; a < p; ++a)
    for (long j = 0; j < q; ++j) spec.beta(a, j) = beta[a * q + j];
  const long seed = ini.integer(s, "seed", static_cast<long>(spec.seed));
  if (seed < 0) throw ConfigError(s + ".seed", "must be non-negative");
  spec.seed = static_cast<std::uint64_t>(seed);
  if (spec.layout == Layout::irregular && spec.n_train < 1) throw ConfigError(s + ".n_train", "must be positive");
  if (spec.test_grid < 1) throw ConfigError(s + ".test_grid", "must be positive");
  if (spec.grid_side < 2) throw ConfigError(s + ".grid_side", "must be at least 2");
  if (!(spec.test_fraction >= 0 && spec.test_fraction < 1))
    throw ConfigError(s + ".test_fraction", "must lie in [0, 1)");
  return spec;
}

} // namespace

FitSettings load_fit_config(const std::string& path) {
  Ini ini(path);
  ini.check({{"data", {"train", "test"}},
             {"domain", kDomainKeys},
             {"grid", kGridKeys},
             {"partition", kPartitionKeys},
             {"model", {"k", "nu", "link"}},
             {"priors", kPriorKeys},
             {"mcmc", kMcmcKeys},
             {"output", {"dir", "chain", "predictions", "diagnostics", "manifest", "latent_map",
                         "quantiles"}}});
  FitSettings s;
  s.config_path = path;
  s.train_path = ini.file("data", "train", true);
  s.test_path = ini.file("data", "test", false);
  read_mesh(ini, s.mesh);
  read_model(ini, s.mcmc);
  read_mcmc(ini, s.mcmc);
  for (const auto& l : ini.texts("model", "link", {"identity"})) s.links.push_back(parse_link(l));
  read_output(ini, s.output);
  s.mcmc.validate();
  return s;
}

SimulateSettings load_simulate_config(const std::string& path) {
  Ini ini(path);
  ini.check({{"simulate", kSimKeys}, {"output", {"dir", "train", "test", "truth"}}});
  SimulateSettings s;
  s.config_path = path;
  s.spec = read_spec(ini, "simulate", SimulationSpec{});
  read_output(ini, s.output);
  return s;
}

BenchmarkSettings load_benchmark_config(const std::string& path) {
  Ini ini(path);
  ini.check({{"benchmark", {"seeds", "scenarios", "baseline"}},
             {"domain", kDomainKeys},
             {"grid", kGridKeys},
             {"partition", kPartitionKeys},
             {"priors", kPriorKeys},
             {"mcmc", kMcmcKeys},
             {"output", {"dir", "report", "quantiles"}}},
            "scenario");
  BenchmarkSettings s;
  s.config_path = path;
  s.seeds.clear();
  for (double v : ini.reals("benchmark", "seeds", {1.0})) {
    if (!(v >= 0) || v != std::floor(v)) throw ConfigError("benchmark.seeds", "must be non-negative integers");
    s.seeds.push_back(static_cast<std::uint64_t>(v));
  }
  s.run_baseline = ini.flag("benchmark", "baseline", true);
  read_mesh(ini, s.mesh);
  read_mcmc(ini, s.mcmc);
  read_output(ini, s.output);
  std::vector<std::string> names = ini.texts("benchmark", "scenarios", {});
  if (names.empty())
    for (const auto& sec : ini.sections())
      if (sec.rfind("scenario.", 0) == 0) names.push_back(sec.substr(9));
  if (names.empty()) throw ConfigError("benchmark.scenarios", "no scenario sections found");
  for (const auto& n : names) {
    const std::string sec = "scenario." + n;
    bool found = false;
    for (const auto& have : ini.sections()) found |= have == sec;
    if (!found) throw ConfigError("benchmark.scenarios", "missing section [" + sec + "]");
    Scenario sc;
    sc.name = n;
    sc.spec = read_spec(ini, sec, SimulationSpec{});
    if (sc.spec.q() != 1) throw ConfigError(sec + ".q", "benchmarks are univariate");
    s.scenarios.push_back(sc);
  }
  s.mcmc.k = 1;
  s.mcmc.nu = {s.scenarios.front().spec.nu[0]};
  s.mcmc.validate();
  return s;
}

} // namespace grips
