#include "oracles.hpp"

#include "grips/synth.hpp"

#include <doctest.h>

using namespace grips;

TEST_SUITE("synth") {

TEST_CASE("unit grid") {
  const Points g = unit_grid(4);
  CHECK(g.rows() == 16);
  CHECK(g(0, 0) == doctest::Approx(0.25));
  CHECK(g(15, 1) == doctest::Approx(1.0));
}

TEST_CASE("noise-free outcomes") {
  SimulationSpec s = SimulationSpec::univariate(1.0, 5.0, 0.5, 0.0, 3);
  s.n_train = 50;
  s.test_grid = 3;
  const auto d = simulate_dataset(s);
  CHECK((d.train.y - (d.train.X * s.beta + d.w_train)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.test.n() == 9);
  CHECK(d.train.X.col(0).isOnes());
}

TEST_CASE("same seed, same data") {
  SimulationSpec s = SimulationSpec::univariate(1.0, 5.0, 0.5, 0.1, 4);
  s.n_train = 30;
  s.test_grid = 2;
  CHECK(simulate_dataset(s).train.y == simulate_dataset(s).train.y);
  s.seed = 5;
  const auto other = simulate_dataset(s);
  s.seed = 4;
  CHECK(other.train.y != simulate_dataset(s).train.y);
}

TEST_CASE("grid layout keeps the hole out of training") {
  SimulationSpec s = SimulationSpec::univariate(1.0, 5.0, 0.5, 0.1, 6);
  s.layout = Layout::grid_with_holes;
  s.grid_side = 20;
  s.hole_lower = 0.3;
  s.hole_upper = 0.6;
  s.test_fraction = 0.1;
  const auto d = simulate_dataset(s);
  CHECK(d.train.n() + d.test.n() == 400);
  for (Eigen::Index i = 0; i < d.train.n(); ++i) {
    const auto p = d.train.locations.row(i);
    CHECK(!(p[0] >= 0.3 && p[0] <= 0.6 && p[1] >= 0.3 && p[1] <= 0.6));
  }
}

TEST_CASE("coregionalized covariance") {
  Points a(3, 2);
  a << 0.1, 0.2, 0.5, 0.5, 0.9, 0.3;
  Mat lam(2, 2);
  lam << 1.0, 0.0, 0.5, 0.8;
  const std::vector<double> phi{3.0, 7.0}, nu{0.5, 1.5};
  const Mat c = lmc_covariance(a, a, lam, phi, nu);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double h = (a.row(i) - a.row(j)).norm();
      const Vec rho = (Vec(2) << oracle::matern(h, 3.0, 0.5), oracle::matern(h, 7.0, 1.5)).finished();
      const Mat blk = lam * rho.asDiagonal() * lam.transpose();
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) CHECK(c(i * 2 + x, j * 2 + y) == doctest::Approx(blk(x, y)));
    }
}

TEST_CASE("simulated latent values have the target covariance") {
  SimulationSpec s = SimulationSpec::univariate(2.0, 3.0, 0.5, 0.1, 0);
  s.n_train = 2;
  s.test_grid = 1;
  const int reps = 4000;
  Mat acc = Mat::Zero(3, 3);
  Mat target = Mat::Zero(3, 3);
  for (int r = 0; r < reps; ++r) {
    s.seed = static_cast<std::uint64_t>(r + 100);
    const auto d = simulate_dataset(s);
    Vec w(3);
    w << d.w_train(0, 0), d.w_train(1, 0), d.w_test(0, 0);
    acc += w * w.transpose();
    Points all(3, 2);
    all << d.train.locations, d.test.locations;
    target += oracle::cov(all, all, 2.0, 3.0, 0.5) * 3.0;
  }
  acc /= reps;
  target /= reps;
  // each entry is an average of products with variance at most 2 * 2^2
  CHECK((acc - target).cwiseAbs().maxCoeff() < 4 * std::sqrt(8.0 / reps));
}

TEST_CASE("dense posterior oracle") {
  const Mat prior = Mat::Constant(1, 1, 2.0);
  const Mat design = Mat::Constant(1, 1, 1.5);
  const Vec y = Vec::Constant(1, 0.8);
  const Mat noise = Mat::Constant(1, 1, 0.3);
  const auto post = dense_posterior_oracle(prior, design, y, noise);
  const double pv = 1.0 / (1.0 / 2.0 + 1.5 * 1.5 / 0.3);
  CHECK(post.cov(0, 0) == doctest::Approx(pv));
  CHECK(post.mean[0] == doctest::Approx(pv * 1.5 * 0.8 / 0.3));
  const double mv = 1.5 * 1.5 * 2.0 + 0.3;
  CHECK(post.log_marginal == doctest::Approx(-0.5 * (kLog2Pi + std::log(mv) + 0.64 / mv)));

  Mat p2(2, 2);
  p2 << 1.0, 0.4, 0.4, 2.0;
  const auto vague = dense_posterior_oracle(p2, Mat::Identity(2, 2), Vec::Ones(2), 1e12 * Mat::Identity(2, 2));
  CHECK((vague.cov - p2).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(vague.mean.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("dense kriging is the conditional of the joint") {
  SimulationSpec s = SimulationSpec::univariate(1.3, 4.0, 0.5, 0.2, 8);
  s.n_train = 40;
  s.test_grid = 3;
  const auto d = simulate_dataset(s);
  const Vec beta = s.beta.col(0);
  const auto kr = dense_kriging(d.train, d.test.locations, d.test.X, beta, 1.3, 4.0, 0.5, 0.2);

  const Eigen::Index n = d.train.n(), m = d.test.n();
  Points all(n + m, 2);
  all << d.train.locations, d.test.locations;
  const Mat prior = oracle::cov(all, all, 1.3, 4.0, 0.5) * 4.0;
  Mat design = Mat::Zero(n, n + m);
  design.leftCols(n).setIdentity();
  const Vec e = d.train.y.col(0) - d.train.X * beta;
  const auto post = dense_posterior_oracle(prior, design, e, 0.2 * Mat::Identity(n, n));
  for (Eigen::Index i = 0; i < m; ++i) {
    CHECK(kr.mean[i] == doctest::Approx(d.test.X.row(i).dot(beta) + post.mean[n + i]).epsilon(1e-8));
    CHECK(kr.var[i] == doctest::Approx(post.cov(n + i, n + i) + 0.2).epsilon(1e-8));
  }
}

}
