#include "grips/diagnostics.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace grips;

TEST_SUITE("diagnostics") {

TEST_CASE("ESS of independent draws") {
  std::mt19937_64 eng(1);
  std::normal_distribution<double> z;
  Vec x(10000);
  for (auto& v : x) v = z(eng);
  const auto e = ess(x);
  CHECK(!e.degenerate);
  CHECK(std::abs(e.ess - 10000.0) < 1500.0);
}

TEST_CASE("ESS of an AR(1) chain") {
  std::mt19937_64 eng(2);
  std::normal_distribution<double> z;
  const double rho = 0.9;
  const int n = 100000;
  Vec x(n);
  x[0] = z(eng) / std::sqrt(1 - rho * rho);
  for (int t = 1; t < n; ++t) x[t] = rho * x[t - 1] + z(eng);
  const double want = n * (1 - rho) / (1 + rho);
  CHECK(std::abs(ess(x).ess - want) < 0.25 * want);
}

TEST_CASE("constant chain is flagged") {
  const auto e = ess(Vec::Constant(50, 3.0));
  CHECK(e.degenerate);
  CHECK(e.ess == 50.0);
  CHECK_THROWS_AS(ess(Vec::Zero(5)), std::invalid_argument);
}

TEST_CASE("ESS per second") { CHECK(ess_per_second(100.0, 10.0) == doctest::Approx(10.0)); }

TEST_CASE("parameter accuracy") {
  const Vec t = (Vec(3) << 1.0, 2.0, 3.0).finished();
  auto m = accuracy_metrics(t, t, t.array() - 0.1, t.array() + 0.1);
  CHECK(m.rmse == 0.0);
  CHECK(m.mpe == 0.0);
  CHECK(m.coverage == 1.0);

  const Vec two = Vec::Constant(4, 2.0);
  m = accuracy_metrics(two, two.array() + 1.0, two.array() - 5.0, two.array() - 4.0);
  CHECK(m.rmse == doctest::Approx(1.0));
  CHECK(m.mpe == doctest::Approx(0.5));
  CHECK(m.coverage == 0.0);

  const Vec with_zero = (Vec(2) << 0.0, 2.0).finished();
  m = accuracy_metrics(with_zero, with_zero.array() + 1.0, with_zero, with_zero);
  CHECK(m.mpe_excluded == 1);
  CHECK(m.mpe == doctest::Approx(0.5));
}

TEST_CASE("CRPS") {
  CHECK(crps({1.0, 1.0, 1.0}, 1.0) == 0.0);
  CHECK(crps({0.0, 2.0}, 1.0) == doctest::Approx(0.5));
  const Mat s = Mat::Constant(4, 3, 2.0);
  const auto m = prediction_metrics(Vec::Constant(3, 2.0), s);
  CHECK(m.crps == 0.0);
  CHECK(m.rmspe == 0.0);
  CHECK(m.coverage == 1.0);
}

TEST_CASE("CRPS of Gaussian samples against the closed form") {
  std::mt19937_64 eng(3);
  std::normal_distribution<double> z;
  const int pts = 1000, draws = 400;
  const double sd = 1.7;
  Mat s(draws, pts);
  Vec y(pts);
  double closed = 0.0;
  for (int i = 0; i < pts; ++i) {
    y[i] = 0.5 * z(eng);
    for (int t = 0; t < draws; ++t) s(t, i) = sd * z(eng);
    const double u = y[i] / sd;
    const double pdf = std::exp(-0.5 * u * u) / std::sqrt(2 * M_PI);
    const double cdf = 0.5 * std::erfc(-u / std::sqrt(2.0));
    closed += sd * (u * (2 * cdf - 1) + 2 * pdf - 1 / std::sqrt(M_PI));
  }
  closed /= pts;
  // the empirical estimator is biased by sd / (sqrt(pi) T) per point
  CHECK(prediction_metrics(y, s).crps == doctest::Approx(closed).epsilon(0.02));
}

}
