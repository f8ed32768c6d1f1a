#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "pgcov/errors.hpp"
#include "pgcov/pcov.hpp"

using namespace pgcov;

namespace {

FitResult qfit(const VectorXd& coef, double intercept) {
  FitResult f;
  f.coef = coef;
  f.intercept = intercept;
  return f;
}

struct Draw {
  VectorXd y, xk;
  MatrixXd z;
  VectorXd theta, gamma;
};

Draw draw(oracle::Gen& g, bool ties) {
  Draw d;
  const int n = g.integer(2, 60);
  const int q = g.integer(1, 6);
  d.z = ties ? MatrixXd::Zero(n, q) : g.mat(n, q);
  d.y = ties ? g.tied(n, 3) : g.vec(n);
  d.xk = g.vec(n);
  d.theta = ties ? VectorXd::Zero(q) : g.vec(q);
  d.gamma = g.vec(q) * 0.3;
  return d;
}

}  // namespace

TEST_SUITE("pcov") {

TEST_CASE("method names") {
  for (Method m : {Method::kGini, Method::kPearson, Method::kPearsonModified, Method::kQuantile}) {
    CHECK(parse_method(method_name(m)) == m);
  }
  CHECK(parse_method("gini") == Method::kGini);
  CHECK(parse_method("Pearson") == Method::kPearson);
  CHECK(parse_method("pearson-modified") == Method::kPearsonModified);
  CHECK(parse_method("quantile") == Method::kQuantile);
  CHECK_THROWS_AS(parse_method("spearman"), InputError);
}

TEST_CASE("pgcov: two-observation example and degenerate residuals") {
  const MatrixXd z = MatrixXd::Zero(2, 1);
  const VectorXd zero = VectorXd::Zero(1);
  const PartialCov pc = pgcov_hat(Eigen::Vector2d(1, 2), Eigen::Vector2d(0, 4), z, zero, zero);
  CHECK(pc.value(0) == 1.0);
  CHECK(pc.variance(0, 0) == doctest::Approx(16.0 / 24.0).epsilon(1e-15));
  CHECK(pc.kind == Method::kGini);

  const PartialCov deg = pgcov_hat(Eigen::Vector2d(1, 2), Eigen::Vector2d(0, 0), z, zero, zero);
  CHECK(deg.value(0) == 0.0);
  CHECK(deg.variance(0, 0) == 0.0);
}

TEST_CASE("pgcov: rank form equals the double-sum form exactly, ties included") {
  oracle::Gen g(31);
  for (int t = 0; t < 100; ++t) {
    const Draw d = draw(g, t % 2 == 0);
    const PartialCov pc = pgcov_hat(d.y, d.xk, d.z, d.theta, d.gamma);
    const VectorXd u = d.xk - d.z * d.gamma;
    const VectorXd e = d.y - d.z * d.theta;
    CHECK(pc.value(0) == pgcov_double_sum(u, e));
  }
}

TEST_CASE("pgcov: bounded by half the largest residual") {
  oracle::Gen g(32);
  for (int t = 0; t < 100; ++t) {
    const Draw d = draw(g, t % 3 == 0);
    const PartialCov pc = pgcov_hat(d.y, d.xk, d.z, d.theta, d.gamma);
    const VectorXd u = d.xk - d.z * d.gamma;
    CHECK(std::abs(pc.value(0)) <= 0.5 * u.cwiseAbs().maxCoeff() + 1e-15);
  }
}

TEST_CASE("pgcov: invariant to shifting Y and to reordering observations") {
  oracle::Gen g(33);
  for (int t = 0; t < 30; ++t) {
    const int n = g.integer(3, 40);
    const MatrixXd z = MatrixXd::Zero(n, 2);
    VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = g.integer(-20, 20) / 4.0;
    const VectorXd x = g.vec(n);
    const VectorXd zero = VectorXd::Zero(2);
    const PartialCov a = pgcov_hat(y, x, z, zero, zero);
    const PartialCov b = pgcov_hat((y.array() + 5.0).matrix(), x, z, zero, zero);
    CHECK(a.value(0) == b.value(0));

    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[g.integer(0, i)]);
    VectorXd yp(n), xp(n);
    for (int i = 0; i < n; ++i) {
      yp(i) = y(perm[i]);
      xp(i) = x(perm[i]);
    }
    const PartialCov c = pgcov_hat(yp, xp, z, zero, zero);
    CHECK(c.value(0) == doctest::Approx(a.value(0)).epsilon(1e-12));
    CHECK(c.variance(0, 0) == doctest::Approx(a.variance(0, 0)).epsilon(1e-12));
  }
}

TEST_CASE("pgcov_multi: d = 1 reproduces the univariate estimate bit for bit") {
  oracle::Gen g(34);
  for (int t = 0; t < 50; ++t) {
    const Draw d = draw(g, t % 2 == 0);
    const PartialCov uni = pgcov_hat(d.y, d.xk, d.z, d.theta, d.gamma);
    const PartialCov multi = pgcov_multi_hat(d.y, d.xk, d.z, d.theta, d.gamma);
    CHECK(multi.value(0) == uni.value(0));
    CHECK(multi.variance(0, 0) == uni.variance(0, 0));
  }
}

TEST_CASE("pgcov_multi: covariance by direct summation, symmetric PSD") {
  oracle::Gen g(35);
  for (int t = 0; t < 100; ++t) {
    const int n = g.integer(5, 50);
    const int d = g.integer(1, std::min(4, n - 1));
    const int q = g.integer(1, 5);
    const MatrixXd xs = g.mat(n, d), zs = g.mat(n, q);
    const VectorXd theta = g.vec(q);
    const MatrixXd gamma = g.mat(q, d) * 0.2;
    const PartialCov pc = pgcov_multi_hat(g.vec(n), xs, zs, theta, gamma);
    const MatrixXd u = xs - zs * gamma;
    MatrixXd direct = MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i) direct += u.row(i).transpose() * u.row(i);
    direct /= 12.0 * n;
    CHECK((pc.variance - direct).cwiseAbs().maxCoeff() <= 1e-12 * (1 + direct.cwiseAbs().maxCoeff()));
    CHECK(pc.variance == pc.variance.transpose());
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(pc.variance);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12 * eig.eigenvalues().cwiseAbs().maxCoeff());
  }
  CHECK_THROWS_AS(pgcov_multi_hat(VectorXd::Random(3), MatrixXd::Random(3, 3),
                                  MatrixXd::Random(3, 1), VectorXd::Zero(1),
                                  MatrixXd::Zero(1, 3)),
                  InputError);
  CHECK_THROWS_AS(pgcov_hat(VectorXd::Random(3), VectorXd::Random(4), MatrixXd::Random(3, 1),
                            VectorXd::Zero(1), VectorXd::Zero(1)),
                  InputError);
}

TEST_CASE("ppcov: examples and bilinearity") {
  const MatrixXd z = MatrixXd::Zero(2, 1);
  const VectorXd zero = VectorXd::Zero(1);
  const PartialCov pc = ppcov_hat(Eigen::Vector2d(1, -1), Eigen::Vector2d(2, 2), z, zero, zero);
  CHECK(pc.value(0) == 0.0);
  CHECK(pc.variance(0, 0) == 4.0);
  CHECK(pc.kind == Method::kPearson);

  oracle::Gen g(36);
  for (int t = 0; t < 30; ++t) {
    const Draw d = draw(g, false);
    const PartialCov a = ppcov_hat(d.y, d.xk, d.z, d.theta, d.gamma);
    const PartialCov b = ppcov_hat(2.0 * d.y, d.xk, d.z, 2.0 * d.theta, d.gamma);
    CHECK(b.value(0) == doctest::Approx(2.0 * a.value(0)).epsilon(1e-12));
    CHECK(b.variance(0, 0) == doctest::Approx(4.0 * a.variance(0, 0)).epsilon(1e-12));
    const VectorXd e = d.y - d.z * d.theta, u = d.xk - d.z * d.gamma;
    const double n = static_cast<double>(e.size());
    CHECK(a.value(0) == doctest::Approx(e.dot(u) / n).epsilon(1e-12));
    CHECK(a.variance(0, 0) ==
          doctest::Approx(e.squaredNorm() / n * u.squaredNorm() / n).epsilon(1e-12));

    const PartialCov m = ppcov_modified_hat(d.y, d.xk, d.z, d.theta, d.gamma);
    CHECK(m.value(0) == a.value(0));
    CHECK(m.variance(0, 0) == a.variance(0, 0));
    CHECK(m.kind == Method::kPearsonModified);
  }
  const PartialCov deg =
      ppcov_modified_hat(Eigen::Vector2d(1, 3), Eigen::Vector2d(0, 0), z, zero, zero);
  CHECK(deg.value(0) == 0.0);
}

TEST_CASE("pqcov: examples") {
  const MatrixXd z = MatrixXd::Zero(2, 1);
  const VectorXd zero = VectorXd::Zero(1);
  const PartialCov a =
      pqcov_hat(Eigen::Vector2d(1, -1), Eigen::Vector2d(1, 1), z, 0.5, qfit(zero, 0.0), zero);
  CHECK(a.value(0) == 0.0);
  CHECK(a.variance(0, 0) == 0.25);
  CHECK(a.kind == Method::kQuantile);

  const Eigen::Vector3d u(1, 2, 6);
  const PartialCov b =
      pqcov_hat(Eigen::Vector3d(1, 2, 3), u, MatrixXd::Zero(3, 1), 0.5, qfit(zero, 0.0), zero);
  CHECK(b.value(0) == doctest::Approx(0.5 * u.mean()).epsilon(1e-15));
  CHECK(b.variance(0, 0) == doctest::Approx(0.25 * u.squaredNorm() / 3).epsilon(1e-15));

  // A residual of exactly zero scores tau.
  const PartialCov c =
      pqcov_hat(Eigen::Vector2d(2, 0), Eigen::Vector2d(1, 1), z, 0.3, qfit(zero, 2.0), zero);
  CHECK(c.value(0) == doctest::Approx((0.3 + (0.3 - 1.0)) / 2).epsilon(1e-15));

  CHECK_THROWS_AS(pqcov_hat(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 1), z, 1.0,
                            qfit(zero, 0.0), zero),
                  InputError);
}

}
