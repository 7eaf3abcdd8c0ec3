#include "oracles.hpp"

#include "grips/kernels.hpp"

#include <doctest.h>

#include <random>

using namespace grips;

TEST_SUITE("kernels") {

TEST_CASE("matern correlation values") {
  for (double nu : {0.3, 0.5, 1.5, 2.5}) CHECK(matern_correlation(0.0, 3.0, nu) == 1.0);
  CHECK(matern_correlation(0.2, 5.0, 0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(matern_correlation(0.2, 5.0, 1.5) == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(matern_correlation(0.2, 5.0, 0.5) == doctest::Approx(0.367879).epsilon(1e-6));
  CHECK(matern_correlation(0.2, 5.0, 1.5) == doctest::Approx(0.735759).epsilon(1e-6));
}

TEST_CASE("closed forms agree with the bessel evaluation") {
  for (double nu : {0.5, 1.5, 2.5})
    for (double phi : {0.5, 2.0, 10.0})
      for (double h : {0.01, 0.1, 0.5, 1.0})
        CHECK(matern_correlation(h, phi, nu) ==
              doctest::Approx(matern_correlation_bessel(h, phi, nu)).epsilon(1e-9));
  CHECK(matern_correlation(0.3, 2.0, 0.8) == doctest::Approx(oracle::matern(0.3, 2.0, 0.8)));
}

TEST_CASE("bad kernel arguments") {
  CHECK_THROWS_AS(matern_correlation(-0.1, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(matern_correlation(0.1, 0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(matern_correlation(0.1, 1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(matern_correlation(std::nan(""), 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("rescaled factor covariance") {
  CHECK(factor_covariance(0.0, {1.0, 4.0, 0.5}) == doctest::Approx(0.25));
  for (double nu : {0.5, 1.2, 2.5}) CHECK(factor_covariance(0.0, {1.0, 1.0, nu}) == doctest::Approx(1.0));
  CHECK(factor_covariance(0.2, {2.0, 5.0, 0.5}) == doctest::Approx(2.0 * std::exp(-1.0) / 5.0));
  CHECK(factor_covariance(0.2, {2.0, 5.0, 0.5}) == doctest::Approx(0.147152).epsilon(1e-6));
}

TEST_CASE("covariance matrices") {
  const MaternParams f{1.0, 2.0, 1.5};
  Points one(1, 2);
  one << 0.3, 0.4;
  CHECK(cov_matrix(one, one, f)(0, 0) == doctest::Approx(1.0 / 8.0));

  Points two(2, 2);
  two << 0.3, 0.4, 0.3, 0.4;
  Points other(3, 2);
  other << 0.0, 0.0, 1.0, 0.5, 0.2, 0.9;
  const Mat c = cov_matrix(two, other, f);
  CHECK((c.row(0) - c.row(1)).norm() == 0.0);

  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Points five(5, 2);
  for (int i = 0; i < 5; ++i) five.row(i) << u(eng), u(eng);
  const Mat s = cov_matrix(five, five, f);
  CHECK((s - s.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  Eigen::LLT<Mat> llt(s);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("conditioning on itself") {
  Points p(3, 2);
  p << 0.1, 0.2, 0.5, 0.5, 0.9, 0.1;
  const auto cp = conditioning(p, p, {1.0, 3.0, 0.5});
  CHECK((cp.H - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(cp.R.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("conditioning matches dense block inversion") {
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Points all(7, 2);
  for (int i = 0; i < 7; ++i) all.row(i) << u(eng), u(eng);
  const MaternParams f{1.7, 4.0, 0.5};
  const Mat joint = oracle::cov(all, all, f);
  const auto blk = oracle::condition(joint, {0, 1, 2}, {3, 4, 5, 6});
  const auto cp = conditioning(all.topRows(3), all.bottomRows(4), f);
  CHECK((cp.H - blk.H).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((cp.R - blk.R).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("singular covariance names the node") {
  const Mat bad = -Mat::Identity(2, 2);
  try {
    factor_spd(bad, 17, "parent covariance");
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    REQUIRE(e.node().has_value());
    CHECK(*e.node() == 17);
  }
  Mat rank_one = Mat::Ones(3, 3);
  const SpdFactor f = factor_spd(rank_one);
  CHECK(f.jitter > 0.0);
}

}
