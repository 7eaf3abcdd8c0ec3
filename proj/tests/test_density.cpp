#include "oracles.hpp"

#include "grips/density.hpp"

#include <doctest.h>

#include <random>

using namespace grips;

namespace {

LatentField random_field(const Mesh& mesh, Eigen::Index k, std::mt19937_64& eng) {
  std::normal_distribution<double> z;
  LatentField r{Mat(mesh.grid.points.rows(), k)};
  for (Eigen::Index i = 0; i < r.values.size(); ++i) r.values.data()[i] = z(eng);
  return r;
}

} // namespace

TEST_SUITE("density") {

TEST_CASE("root node with a single point at zero") {
  const auto mesh = build_mesh(Domain{}, {2, 2}, {2, 2}, Points(0, 2));
  const MaternParams f{2.0, 3.0, 0.5};
  const double v = 2.0 / 3.0;
  const auto nc = node_conditioning(mesh, 0, f);
  CHECK(nc.H.cols() == 0);
  CHECK(-0.5 * (kLog2Pi + nc.log_det_R) == doctest::Approx(-0.5 * std::log(2 * M_PI * v)));

  const auto one = build_mesh(Domain{}, {2, 2}, {1, 1}, Points(0, 2));
  const Mat c = oracle::cov(one.grid.points, one.grid.points, f);
  CHECK(latent_logdensity(LatentField{Mat::Zero(4, 1)}, one, Factors{f}) ==
        doctest::Approx(oracle::gaussian_logpdf(Vec::Zero(4), Vec::Zero(4), c)));
}

TEST_CASE("two-node chain matches the sparse precision identity") {
  std::mt19937_64 eng(4);
  const auto mesh = build_mesh(Domain{}, {4, 2}, {2, 1}, Points(0, 2));
  REQUIRE(mesh.dag.n_reference() == 2);
  const MaternParams f{1.2, 2.5, 1.5};
  for (int rep = 0; rep < 5; ++rep) {
    const auto r = random_field(mesh, 1, eng);
    CHECK(latent_logdensity(r, mesh, Factors{f}) ==
          doctest::Approx(oracle::latent_logdensity(r, mesh, {f})).epsilon(1e-10));
  }
}

TEST_CASE("16-point grid with 2x2 cells") {
  std::mt19937_64 eng(8);
  const auto mesh = build_mesh(Domain{}, {4, 4}, {2, 2}, Points(0, 2));
  const Factors f{{0.9, 6.0, 0.5}, {1.4, 3.0, 1.5}};
  const auto r = random_field(mesh, 2, eng);
  const double got = latent_logdensity(r, mesh, f);
  CHECK(std::abs(got - oracle::latent_logdensity(r, mesh, f)) < 1e-8);
  const LatentPriorCache cache(mesh, f);
  CHECK(latent_logdensity(r, mesh, cache) == doctest::Approx(got).epsilon(1e-14));
}

TEST_CASE("observation density at a reference point") {
  const auto mesh = build_mesh(Domain{}, {4, 4}, {2, 2}, [] {
    Points p(1, 2);
    p << 0.75, 0.5;
    return p;
  }());
  ObservedData d{mesh.observed, Mat::Constant(1, 1, 2.3), (Mat(1, 2) << 1.0, 0.4).finished()};
  std::mt19937_64 eng(2);
  const auto r = random_field(mesh, 1, eng);
  const Mat beta = (Mat(2, 1) << 0.5, -1.0).finished();
  const LoadingMatrix a{Mat::Constant(1, 1, 1.6)};
  const Vec tau2 = Vec::Constant(1, 0.3);
  int idx = -1;
  for (int i = 0; i < 16; ++i)
    if ((mesh.grid.points.row(i) - d.locations.row(0)).norm() == 0.0) idx = i;
  REQUIRE(idx >= 0);
  const double mean = 0.5 - 0.4 + 1.6 * r.values(idx, 0);
  const double want = -0.5 * (kLog2Pi + std::log(0.3) + (2.3 - mean) * (2.3 - mean) / 0.3);
  CHECK(obs_loglik(d, beta, a, tau2, {{1.0, 4.0, 0.5}}, r, mesh) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("missing outcome marginalizes") {
  Points p(1, 2);
  p << 0.31, 0.62;
  const auto mesh = build_mesh(Domain{}, {4, 4}, {2, 2}, p);
  const Factors f{{1.0, 3.0, 0.5}, {2.0, 5.0, 0.5}};
  Mat lam(2, 2);
  lam << 1.0, 0.0, 0.4, 0.8;
  const auto a = assemble_A(lam, f);
  std::mt19937_64 eng(3);
  const auto r = random_field(mesh, 2, eng);
  const Mat beta = Mat::Zero(1, 2);
  const Vec tau2 = (Vec(2) << 0.2, 0.5).finished();
  ObservedData both{p, (Mat(1, 2) << 0.7, std::nan("")).finished(), Mat::Ones(1, 1)};
  const auto terms = oracle::obs_terms(mesh, both, a.A, f);
  const double mean = (terms.Z[0] * oracle::stack(r))[0];
  const double var = terms.Sigma[0](0, 0) + 0.2;
  const double want = -0.5 * (kLog2Pi + std::log(var) + (0.7 - mean) * (0.7 - mean) / var);
  CHECK(obs_loglik(both, beta, a, tau2, f, r, mesh) == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("bivariate observations match the dense oracle") {
  std::mt19937_64 eng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z;
  Points p(20, 2);
  for (int i = 0; i < 20; ++i) p.row(i) << u(eng), u(eng);
  const auto mesh = build_mesh(Domain{}, {6, 6}, {3, 2}, p);
  const Factors f{{1.0, 3.0, 0.5}, {0.7, 6.0, 1.5}};
  Mat lam(2, 2);
  lam << 1.1, 0.0, -0.5, 0.6;
  const auto a = assemble_A(lam, f);
  Mat y(20, 2), x(20, 2);
  for (int i = 0; i < 20; ++i) {
    y.row(i) << z(eng), z(eng);
    x.row(i) << 1.0, z(eng);
  }
  y(3, 0) = std::nan("");
  y(7, 1) = std::nan("");
  ObservedData d{p, y, x};
  const Mat beta = (Mat(2, 2) << 0.3, -0.2, 1.0, 0.5).finished();
  const Vec tau2 = (Vec(2) << 0.25, 0.4).finished();
  const auto r = random_field(mesh, 2, eng);
  const double got = obs_loglik(d, beta, a, tau2, f, r, mesh);
  CHECK(std::abs(got - oracle::obs_loglik(mesh, d, beta, a.A, tau2, f, r)) < 1e-8);
}

TEST_CASE("dense gaussian log density") {
  CHECK(dense_gaussian_loglik(Vec::Constant(1, 2.0), Vec::Constant(1, 2.0), Mat::Identity(1, 1)) ==
        doctest::Approx(-0.5 * kLog2Pi));
  CHECK(dense_gaussian_loglik(Vec::Ones(2), Vec::Zero(2), Mat::Identity(2, 2)) ==
        doctest::Approx(-kLog2Pi - 1.0));
  std::mt19937_64 eng(6);
  std::normal_distribution<double> z;
  Mat b(50, 50);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = z(eng);
  const Mat c = b * b.transpose() / 50.0 + Mat::Identity(50, 50);
  Vec y(50), m(50);
  for (int i = 0; i < 50; ++i) y[i] = z(eng), m[i] = z(eng);
  const Vec e = y - m;
  const double want = -0.5 * (50 * kLog2Pi + std::log(c.determinant()) + e.dot(c.inverse() * e));
  CHECK(std::abs(dense_gaussian_loglik(y, m, c) - want) < 1e-9);
  CHECK_THROWS_AS(dense_gaussian_loglik(y, m, Mat::Identity(3, 3)), std::invalid_argument);
}

}
