#include "oracles.hpp"

#include "grips/coreg.hpp"

#include <doctest.h>

#include <random>

using namespace grips;

TEST_SUITE("coreg") {

TEST_CASE("assemble A") {
  const Mat lam = Mat::Constant(1, 1, 2.0);
  CHECK(assemble_A(lam, {{1.0, 4.0, 0.5}}).A(0, 0) == doctest::Approx(4.0));
  for (double phi : {0.5, 3.0})
    for (double nu : {0.5, 1.5}) {
      const MaternParams f{2.25, phi, nu};
      CHECK(assemble_A(Mat::Constant(1, 1, 1.5), {f}).A(0, 0) ==
            doctest::Approx(std::pow(phi, nu)));
    }
  const auto a = assemble_A(Mat::Identity(2, 2), {{1.0, 4.0, 0.5}, {4.0, 9.0, 0.5}});
  CHECK(a.A(0, 0) == doctest::Approx(2.0));
  CHECK(a.A(1, 1) == doctest::Approx(1.5));
  CHECK(a.A(0, 1) == 0.0);
  CHECK(a.A(1, 0) == 0.0);
}

TEST_CASE("recover Lambda inverts assemble") {
  CHECK(recover_Lambda({Mat::Constant(1, 1, 4.0)}, {{1.0, 4.0, 0.5}})(0, 0) == doctest::Approx(2.0));
  Mat lam(3, 2);
  lam << 1.2, 0.0, -0.4, 0.7, 0.3, 2.0;
  const Factors f{{1.4, 3.0, 0.5}, {0.6, 8.0, 1.5}};
  CHECK((recover_Lambda(assemble_A(lam, f), f) - lam).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("loading pattern is enforced") {
  Mat upper(2, 2);
  upper << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(check_lower_pattern(upper, "A"), std::invalid_argument);
  CHECK_THROWS_AS(check_lower_pattern(Mat::Identity(2, 3), "A"), std::invalid_argument);
  Mat neg = Mat::Identity(2, 2);
  neg(1, 1) = -1.0;
  CHECK_THROWS_AS(check_lower_pattern(neg, "A"), std::invalid_argument);
}

TEST_CASE("projection at a reference point") {
  const auto mesh = build_mesh(Domain{}, {4, 4}, {2, 2}, Points(0, 2));
  const Point loc(0.5, 0.75);
  const LoadingMatrix a{Mat::Constant(1, 1, 1.7)};
  const auto lp = local_projection(loc, mesh, a, {{1.0, 3.0, 0.5}});
  const auto& own = mesh.dag.own_points[lp.node];
  int hit = -1;
  for (std::size_t s = 0; s < own.size(); ++s)
    if ((mesh.grid.points.row(own[s]).transpose() - loc).norm() == 0.0) hit = static_cast<int>(s);
  REQUIRE(hit >= 0);
  for (Eigen::Index s = 0; s < lp.Z.cols(); ++s) CHECK(lp.Z(0, s) == doctest::Approx(s == hit ? 1.7 : 0.0));
  CHECK(lp.Sigma(0, 0) == 0.0);
}

TEST_CASE("projection with a single reference point") {
  const auto mesh = build_mesh(Domain{}, {2, 2}, {2, 2}, Points(0, 2));
  const double phi = 4.0, s2 = 1.3, a = 0.8, h = 0.2;
  const auto lp = local_projection(Point(0.3, 0.5), mesh, {Mat::Constant(1, 1, a)}, {{s2, phi, 0.5}});
  REQUIRE(lp.Z.cols() == 1);
  CHECK(lp.Z(0, 0) == doctest::Approx(a * std::exp(-phi * h)));
  CHECK(lp.Sigma(0, 0) == doctest::Approx(a * a * s2 / phi * (1 - std::exp(-2 * phi * h))));
}

TEST_CASE("bivariate projection matches dense composition") {
  std::mt19937_64 eng(21);
  for (int rep = 0; rep < 10; ++rep) {
    const auto mesh = oracle::random_mesh(eng, 4);
    Mat lam(2, 2);
    std::normal_distribution<double> z;
    lam << std::abs(z(eng)) + 0.2, 0.0, z(eng), std::abs(z(eng)) + 0.2;
    const Factors f{{1.0, 2.0, 0.5}, {1.5, 5.0, 1.5}};
    const auto a = assemble_A(lam, f);
    ObservedData d;
    d.locations = mesh.observed;
    d.y = Mat::Zero(4, 2);
    d.X = Mat::Ones(4, 1);
    const auto terms = oracle::obs_terms(mesh, d, a.A, f);
    const Eigen::Index ng = mesh.grid.points.rows();
    for (int i = 0; i < 4; ++i) {
      const auto lp = local_projection(mesh.observed.row(i).transpose(), mesh, a, f);
      CHECK((lp.Sigma - terms.Sigma[i]).cwiseAbs().maxCoeff() < 1e-12);
      const auto& own = mesh.dag.own_points[lp.node];
      const Eigen::Index ni = static_cast<Eigen::Index>(own.size());
      for (Eigen::Index j = 0; j < 2; ++j)
        for (Eigen::Index s = 0; s < ni; ++s)
          for (Eigen::Index o = 0; o < 2; ++o)
            CHECK(lp.Z(o, j * ni + s) == doctest::Approx(terms.Z[i](o, j * ng + own[s])).epsilon(1e-9));
    }
  }
}

}
