#ifndef GRIPS_CLI_HPP
#define GRIPS_CLI_HPP

#include "grips/config.hpp"
#include "grips/diagnostics.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace grips {

inline constexpr const char* kVersion = "0.1.0";

/// Posterior summary and efficiency of one scalar chain column.
struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double lower = 0.0; // 2.5%
  double upper = 0.0; // 97.5%
  double ess = 0.0;
  double ess_per_s = 0.0;
  bool degenerate = false;
};

std::vector<ParameterSummary> summarize_chain(const ChainStore& chain);

/// One univariate method run on one synthetic dataset.
struct MethodReport {
  std::string method;
  double seconds = 0.0;
  ParameterSummary sigma2, phi, tau2, microergodic;
  AccuracyMetrics accuracy;     // posterior means and intervals of sigma2, phi, tau2 vs truth
  PredictionMetrics prediction; // at the test locations
};

/// Posterior summaries, parameter accuracy and predictive scores of a
/// univariate chain against simulated truth.
MethodReport evaluate_method(const std::string& method, const ChainStore& chain,
                             const SyntheticData& data, const Mesh& mesh, std::uint64_t seed);

/// Subcommands. Each returns normally on success and throws ConfigError,
/// NumericalError or IoError on failure. Progress goes to `log`.
void fit_command(const std::string& config_path, std::ostream& log);
void simulate_command(const std::string& config_path, std::ostream& log);
void benchmark_command(const std::string& config_path, std::ostream& log);

/// argv-level entry point returning the process exit code: 0 success,
/// 2 configuration error, 3 numerical failure, 4 I/O error.
int run_cli(int argc, char** argv);

} // namespace grips

#endif // GRIPS_CLI_HPP
