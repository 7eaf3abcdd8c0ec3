#ifndef GRIPS_RNG_HPP
#define GRIPS_RNG_HPP

#include "grips/core.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace grips {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named streams for parameter blocks, disjoint from node ids.
enum class Stream : std::uint64_t {
  beta = 1ULL << 40,
  phi_sigma,
  a_tau,
  tau,
  baseline_w,
  baseline_sigma,
  predict,
  synth,
  scale,
};

class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  /// Independent stream keyed by (seed, iteration, id). Results do not depend
  /// on the order in which streams are created.
  static Rng stream(std::uint64_t seed, std::uint64_t iteration, std::uint64_t id) {
    return Rng(splitmix64(splitmix64(seed) ^ splitmix64(iteration + 0x632be59bd9b4e019ULL)) ^
               splitmix64(id * 0xd1b54a32d192ed03ULL + 1));
  }
  static Rng stream(std::uint64_t seed, std::uint64_t iteration, Stream id) {
    return stream(seed, iteration, static_cast<std::uint64_t>(id));
  }

  double normal() { return normal_(eng_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
  Vec normal(Eigen::Index n) {
    Vec z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal();
    return z;
  }
  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(eng_);
  }
  /// Inverse-gamma with density proportional to x^(-shape-1) exp(-rate/x).
  double inv_gamma(double shape, double rate) { return 1.0 / gamma(shape, 1.0 / rate); }
  double exponential(double rate) { return std::exponential_distribution<double>(rate)(eng_); }

  /// N(mean, sd^2) restricted to (0, inf).
  double positive_normal(double mean, double sd) {
    const double lo = -mean / sd;
    double z;
    if (lo < 0.45) {
      do z = normal(); while (z <= lo);
    } else {
      const double rate = 0.5 * (lo + std::sqrt(lo * lo + 4.0));
      for (;;) {
        z = lo + exponential(rate);
        if (uniform() <= std::exp(-0.5 * (z - rate) * (z - rate))) break;
      }
    }
    return mean + sd * z;
  }

  std::mt19937_64& engine() { return eng_; }

private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_;
};

/// x + L^-T z: a draw from N(mean, P^-1) given the Cholesky factor of P.
inline Vec draw_from_precision(const Eigen::LLT<Mat>& p, const Vec& mean, Rng& rng) {
  const Vec z = rng.normal(mean.size());
  return mean + p.matrixU().solve(z);
}

} // namespace grips

#endif // GRIPS_RNG_HPP
