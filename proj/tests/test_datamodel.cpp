#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "pgcov/datamodel.hpp"
#include "pgcov/errors.hpp"

using namespace pgcov;

namespace {

std::vector<Index> direct_ranks(const VectorXd& v) {
  std::vector<Index> r(static_cast<std::size_t>(v.size()), 0);
  for (Index i = 0; i < v.size(); ++i)
    for (Index j = 0; j < v.size(); ++j)
      if (v(j) <= v(i)) ++r[static_cast<std::size_t>(i)];
  return r;
}

double median(VectorXd v) {
  std::sort(v.data(), v.data() + v.size());
  const Index n = v.size();
  return n % 2 ? v(n / 2) : 0.5 * (v(n / 2 - 1) + v(n / 2));
}

}  // namespace

TEST_SUITE("datamodel") {

TEST_CASE("dataset invariants") {
  const MatrixXd x = MatrixXd::Random(5, 3);
  const VectorXd y = VectorXd::Random(5);
  CHECK_NOTHROW(Dataset(y, x, {"a", "b", "c"}));
  CHECK_THROWS_AS(Dataset(y, x, {"a", "b"}), InputError);
  CHECK_THROWS_AS(Dataset(y, x, {"a", "b", "a"}), InputError);
  CHECK_THROWS_AS(Dataset(VectorXd::Random(4), x, {"a", "b", "c"}), InputError);
  CHECK_THROWS_AS(Dataset(y.head(1), x.topRows(1), {"a", "b", "c"}), InputError);
  CHECK_THROWS_AS(Dataset(y, x.leftCols(1), {"a"}), InputError);
  MatrixXd bad = x;
  bad(2, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Dataset(y, bad, {"a", "b", "c"}), InputError);
  VectorXd ybad = y;
  ybad(0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(Dataset(ybad, x, {"a", "b", "c"}), InputError);

  const Dataset d(y, x, {"a", "b", "c"});
  CHECK(d.column("c") == 2);
  CHECK_THROWS_WITH_AS(d.column("zz"), doctest::Contains("zz"), InputError);
}

TEST_CASE("split_design partitions the columns") {
  oracle::Gen g(3);
  const MatrixXd x = g.mat(6, 5);
  const SplitDesign s = split_design(x, {3, 1});
  CHECK(s.targets.cols() == 2);
  CHECK(s.rest.cols() == 3);
  CHECK(s.targets.col(0) == x.col(3));
  CHECK(s.targets.col(1) == x.col(1));
  CHECK(s.rest_idx == std::vector<Index>{0, 2, 4});
  for (std::size_t j = 0; j < s.rest_idx.size(); ++j) {
    CHECK(s.rest.col(static_cast<Index>(j)) == x.col(s.rest_idx[j]));
  }
  CHECK_THROWS_AS(split_design(x, {5}), InputError);
  CHECK_THROWS_AS(split_design(x, {1, 1}), InputError);
  CHECK_THROWS_AS(split_design(x, {}), InputError);
}

TEST_CASE("ranks: examples") {
  CHECK(ranks(Eigen::Vector3d(2.0, -1.0, 5.0)) == std::vector<Index>{2, 1, 3});
  CHECK(ranks(Eigen::Vector3d(3, 2, 1)) == std::vector<Index>{3, 2, 1});
  CHECK(ranks(Eigen::Vector3d(1, 1, 2)) == std::vector<Index>{2, 2, 3});
  CHECK_THROWS_AS(ranks(VectorXd(0)), InputError);
  CHECK_THROWS_AS(ranks(Eigen::Vector2d(1.0, std::nan(""))), InputError);
}

TEST_CASE("ranks: agree with the direct count, including ties") {
  oracle::Gen g(11);
  for (int t = 0; t < 200; ++t) {
    const int n = g.integer(1, 40);
    const VectorXd v = t % 2 ? g.tied(n, 4) : g.vec(n);
    CHECK(ranks(v) == direct_ranks(v));
  }
}

TEST_CASE("ranks: distinct values give a permutation invariant under increasing maps") {
  oracle::Gen g(12);
  for (int t = 0; t < 100; ++t) {
    const int n = g.integer(1, 50);
    const VectorXd v = g.vec(n);
    const auto r = ranks(v);
    std::vector<Index> sorted = r;
    std::sort(sorted.begin(), sorted.end());
    std::vector<Index> expect(static_cast<std::size_t>(n));
    std::iota(expect.begin(), expect.end(), 1);
    CHECK(sorted == expect);
    CHECK(std::accumulate(r.begin(), r.end(), Index{0}) == n * (n + 1) / 2);
    const VectorXd w = v.array().exp() * 3.0 + v.array().cube();
    CHECK(ranks(w) == r);
  }
}

TEST_CASE("center_columns") {
  Eigen::MatrixXd m(2, 1);
  m << 1, 3;
  CHECK(center_columns(m) == Eigen::MatrixXd((Eigen::MatrixXd(2, 1) << -1, 1).finished()));
  const MatrixXd c = MatrixXd::Constant(4, 2, 2.5);
  CHECK(center_columns(c).isZero(0.0));
  oracle::Gen g(4);
  for (int t = 0; t < 50; ++t) {
    const MatrixXd x = g.mat(g.integer(2, 30), g.integer(1, 6)) * 10.0;
    const MatrixXd once = center_columns(x);
    CHECK(once.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    CHECK((center_columns(once) - once).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("standardize_columns: zero mean, unit population sd, constants left at zero") {
  oracle::Gen g(5);
  MatrixXd x = g.mat(30, 3) * 4.0;
  x.col(1).setConstant(7.0);
  const MatrixXd s = standardize_columns(x);
  CHECK(s.col(1).isZero(0.0));
  for (Index j : {0, 2}) {
    CHECK(std::abs(s.col(j).mean()) < 1e-12);
    CHECK(std::abs(s.col(j).squaredNorm() / 30.0 - 1.0) < 1e-12);
  }
}

TEST_CASE("error distributions: closed forms and quadrature oracle for f0") {
  const double e = std::exp(1.0);
  CHECK(error_distribution("normal").variance == 1.0);
  CHECK(error_distribution("Uniform").variance == doctest::Approx(1.0 / 12));
  CHECK(error_distribution("t3").variance == 3.0);
  CHECK(error_distribution("exp").variance == 1.0);
  CHECK(error_distribution("lognormal").variance == doctest::Approx((e - 1) * e));
  CHECK(std::isinf(error_distribution("t2").variance));
  CHECK(std::isinf(error_distribution("CAUCHY").variance));
  CHECK_FALSE(error_distribution("cauchy").finite_variance());
  CHECK_THROWS_AS(error_distribution("laplace"), InputError);

  for (ErrorLaw law : all_error_laws()) {
    const ErrorDistribution d = error_distribution(law);
    CHECK(d.f0 > 0.0);
    double lo = -200.0, hi = 200.0;
    if (law == ErrorLaw::kUniform) lo = 0.0, hi = 1.0;
    if (law == ErrorLaw::kExp) lo = 0.0, hi = 60.0;
    double f0;
    if (law == ErrorLaw::kLogNormal) {
      f0 = oracle::simpson([&](double t) {
        const double x = std::exp(t);
        return d.pdf(x) * d.pdf(x) * x;
      }, -20.0, 20.0, 200000);
    } else if (law == ErrorLaw::kCauchy || law == ErrorLaw::kT2) {
      // Tail beyond |x| = 200 is O(200^-3) for both laws.
      f0 = oracle::simpson([&](double x) { return d.pdf(x) * d.pdf(x); }, lo, hi, 400000);
    } else {
      f0 = oracle::simpson([&](double x) { return d.pdf(x) * d.pdf(x); }, lo, hi, 400000);
    }
    CHECK_MESSAGE(std::abs(f0 - d.f0) < 1e-6, d.name);
  }
}

TEST_CASE("sample_error examples") {
  const VectorXd z = sample_error(error_distribution("normal"), 100000, Seed{1, 0});
  CHECK(std::abs(z.mean()) < 0.02);
  const VectorXd c = sample_error(error_distribution("cauchy"), 100000, Seed{2, 0});
  CHECK(std::abs(median(c)) < 0.02);
  const VectorXd u = sample_error(error_distribution("uniform"), 5000, Seed{3, 0});
  CHECK(u.minCoeff() >= 0.0);
  CHECK(u.maxCoeff() <= 1.0);
  const VectorXd ex = sample_error(error_distribution("exp"), 100000, Seed{4, 0});
  CHECK(ex.minCoeff() >= 0.0);
  CHECK(std::abs(ex.mean() - 1.0) < 0.02);
  const VectorXd t3 = sample_error(error_distribution("t3"), 100000, Seed{5, 0});
  CHECK(std::abs(t3.squaredNorm() / 1e5 - 3.0) < 0.5);
}

TEST_CASE("sample_error and generate_ar1_gaussian are reproducible per seed") {
  const auto d = error_distribution("t2");
  CHECK(sample_error(d, 50, Seed{7, 3}) == sample_error(d, 50, Seed{7, 3}));
  CHECK(sample_error(d, 50, Seed{7, 3}) != sample_error(d, 50, Seed{7, 4}));
  CHECK(generate_ar1_gaussian(20, 5, 0.5, Seed{7, 3}) ==
        generate_ar1_gaussian(20, 5, 0.5, Seed{7, 3}));
  CHECK(generate_ar1_gaussian(20, 5, 0.5, Seed{7, 3}) !=
        generate_ar1_gaussian(20, 5, 0.5, Seed{7, 4}));
}

TEST_CASE("generate_ar1_gaussian: covariance structure") {
  CHECK_THROWS_AS(generate_ar1_gaussian(10, 3, 1.0, Seed{}), InputError);
  CHECK_THROWS_AS(generate_ar1_gaussian(10, 3, -0.1, Seed{}), InputError);
  CHECK_THROWS_AS(generate_ar1_gaussian(0, 3, 0.5, Seed{}), InputError);

  const MatrixXd two = generate_ar1_gaussian(50000, 2, 0.5, Seed{11, 0});
  const MatrixXd c2 = oracle::centered(two);
  const double corr = c2.col(0).dot(c2.col(1)) / (c2.col(0).norm() * c2.col(1).norm());
  CHECK(std::abs(corr - 0.5) < 0.01);

  const MatrixXd x = generate_ar1_gaussian(40000, 4, 0.5, Seed{12, 0});
  const MatrixXd s = x.transpose() * x / 40000.0;
  CHECK(std::abs(s(0, 2) - 0.25) < 0.02);
  CHECK(std::abs(s(1, 3) - 0.25) < 0.02);
  CHECK(std::abs(s(0, 3) - 0.125) < 0.02);
  for (Index j = 0; j < 4; ++j) CHECK(std::abs(s(j, j) - 1.0) < 0.03);

  const MatrixXd ind = generate_ar1_gaussian(40000, 3, 0.0, Seed{13, 0});
  const MatrixXd si = ind.transpose() * ind / 40000.0;
  CHECK((si - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.03);
}

TEST_CASE("csv: round trip, quoting and errors") {
  std::istringstream in(
      "\"x, one\",y,\"x \"\"two\"\"\"\n"
      "1.5,2,3\n"
      "-4,5e-1,6\n"
      "7,8,9\n");
  const Dataset d = read_csv(in, "y");
  CHECK(d.n() == 3);
  CHECK(d.p() == 2);
  CHECK(d.names() == std::vector<std::string>{"x, one", "x \"two\""});
  CHECK(d.y()(1) == 0.5);
  CHECK(d.x()(1, 0) == -4.0);

  std::ostringstream out;
  write_csv(out, d, "y");
  std::istringstream back(out.str());
  const Dataset e = read_csv(back, "y");
  CHECK(e.names() == d.names());
  CHECK(e.x() == d.x());
  CHECK(e.y() == d.y());

  std::istringstream missing("a,b,c\n1,2,3\n4,5,6\n");
  CHECK_THROWS_WITH_AS(read_csv(missing, "resp"), doctest::Contains("resp"), InputError);
  std::istringstream ragged("y,a,b\n1,2,3\n4,5\n");
  CHECK_THROWS_AS(read_csv(ragged, "y"), InputError);
  std::istringstream text("y,a,b\n1,2,3\n4,five,6\n");
  CHECK_THROWS_WITH_AS(read_csv(text, "y"), doctest::Contains("a"), InputError);
  std::istringstream open("y,a,b\n1,\"2,3\n");
  CHECK_THROWS_AS(read_csv(open, "y"), InputError);
  CHECK_THROWS_AS(read_csv_file("/nonexistent/file.csv", "y"), InputError);
}

TEST_CASE("csv: numbers survive the round trip bit for bit") {
  oracle::Gen g(21);
  const VectorXd y = g.vec(8) * 1e3;
  const MatrixXd x = g.mat(8, 3) * 1e-7;
  const Dataset d(y, x, {"a", "b", "c"});
  std::ostringstream out;
  write_csv(out, d, "resp");
  std::istringstream back(out.str());
  const Dataset e = read_csv(back, "resp");
  CHECK(e.x() == x);
  CHECK(e.y() == y);
}

}
