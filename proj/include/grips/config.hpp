#ifndef GRIPS_CONFIG_HPP
#define GRIPS_CONFIG_HPP

#include "grips/mcmc.hpp"
#include "grips/predict.hpp"
#include "grips/synth.hpp"

#include <array>
#include <string>
#include <vector>

namespace grips {

struct OutputSettings {
  std::string dir = "out";
  std::string chain = "chain.csv";
  std::string predictions = "predictions.csv";
  std::string diagnostics = "diagnostics.json";
  std::string manifest = "manifest.json";
  std::string latent_map = "latent_map.csv";
  std::string train = "train.csv";
  std::string test = "test.csv";
  std::string truth = "truth.json";
  std::string report = "benchmark.csv";
  std::vector<double> levels{0.025, 0.975};

  /// dir/name
  std::string path(const std::string& name) const;
};

/// Reference grid and tessellation shared by fit and benchmark.
struct MeshSettings {
  Domain domain;
  std::array<int, kDim> grid{100, 100};
  std::array<int, kDim> partition{25, 25};
  bool predict_grid = false;
};

struct FitSettings {
  std::string config_path;
  std::string train_path;
  std::string test_path; // optional
  MeshSettings mesh;
  SamplerConfig mcmc;
  std::vector<Link> links; // one per outcome, or a single value for all
  OutputSettings output;
};

struct SimulateSettings {
  std::string config_path;
  SimulationSpec spec;
  OutputSettings output;
};

struct Scenario {
  std::string name;
  SimulationSpec spec; // seed is replaced per run
};

struct BenchmarkSettings {
  std::string config_path;
  std::vector<Scenario> scenarios;
  std::vector<std::uint64_t> seeds{1};
  bool run_baseline = true;
  MeshSettings mesh;
  SamplerConfig mcmc;
  OutputSettings output;
};

/// Each loader throws ConfigError naming the key ("section.key") for
/// missing, malformed, unknown or out-of-range entries, and IoError when the
/// file cannot be read. Relative paths resolve against the config file.
FitSettings load_fit_config(const std::string& path);
SimulateSettings load_simulate_config(const std::string& path);
BenchmarkSettings load_benchmark_config(const std::string& path);

} // namespace grips

#endif // GRIPS_CONFIG_HPP
