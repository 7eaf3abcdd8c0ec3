#ifndef GRIPS_CORE_HPP
#define GRIPS_CORE_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace grips {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Point = Eigen::Vector2d;

/// Row-major list of 2-d locations, one location per row.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

inline constexpr int kDim = 2;
inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// Invalid user-supplied settings. `key` names the offending configuration
/// entry when one exists.
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

/// Factorization or sampling failure. Carries the DAG node when known.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what,
                          std::optional<std::size_t> node = std::nullopt)
      : std::runtime_error(node ? what + " (node " + std::to_string(*node) + ")"
                                : what),
        node_(node) {}
  std::optional<std::size_t> node() const noexcept { return node_; }

private:
  std::optional<std::size_t> node_;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace grips

#endif // GRIPS_CORE_HPP
