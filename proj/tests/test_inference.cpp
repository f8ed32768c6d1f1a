#include <cmath>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "pgcov/errors.hpp"
#include "pgcov/inference.hpp"

using namespace pgcov;

namespace {

double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Dataset synthetic(std::uint64_t seed, const std::string& law, int n = 120, int p = 20,
                  double beta_target = 0.0) {
  const MatrixXd x = generate_ar1_gaussian(n, p, 0.5, Seed{seed, 0});
  VectorXd y = x.col(0) + 0.5 * x.col(1) + beta_target * x.col(4);
  y += sample_error(error_distribution(law), n, Seed{seed, 1});
  std::vector<std::string> names;
  for (int j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return Dataset(y, x, names);
}

bool has_note(const TestResult& r, const std::string& needle) {
  for (const auto& s : r.notes)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("chi-square upper tail") {
  CHECK(chisq_pvalue(0.0, 1) == 1.0);
  CHECK(chisq_pvalue(0.0, 4) == 1.0);
  CHECK(std::abs(chisq_pvalue(3.8415, 1) - 0.05) < 1e-3);
  for (double w : {0.1, 1.0, 2.5, 7.0, 30.0}) {
    CHECK(chisq_pvalue(w, 2) == std::exp(-w / 2));
  }
  for (int d = 1; d <= 5; ++d) {
    for (double w : {0.3, 1.0, 4.0, 9.0}) {
      CHECK_MESSAGE(std::abs(chisq_pvalue(w, d) - oracle::chisq_upper(w, d)) < 1e-8,
                    "d=" << d << " w=" << w);
    }
  }
}

TEST_CASE("two-sided normal p-value") {
  CHECK(normal_pvalue_two_sided(0.0) == 1.0);
  CHECK(std::abs(normal_pvalue_two_sided(1.959964) - 0.05) < 1e-4);
  CHECK(std::abs(normal_pvalue_two_sided(-1.959964) - 0.05) < 1e-4);
  double prev = 1.0;
  for (double z = 0.25; z < 40.0; z += 0.25) {
    const double p = normal_pvalue_two_sided(z);
    CHECK(p <= prev);
    prev = p;
  }
  CHECK(prev < 1e-300);
  for (double z : {0.5, 1.0, 2.0, 3.0}) {
    const double tail = 1.0 - oracle::simpson([](double t) {
      return std::exp(-t * t / 2) / std::sqrt(2 * 3.141592653589793);
    }, -z, z, 20000);
    CHECK(std::abs(normal_pvalue_two_sided(z) - tail) < 1e-12);
  }
}

TEST_CASE("asymptotic relative efficiency") {
  const double pi = 3.141592653589793;
  const AREResult normal = are_gini_vs_pearson(error_distribution("normal"));
  CHECK(std::abs(normal.are - 3.0 / pi) < 1e-9);
  CHECK(std::abs(normal.are - 0.955) < 5e-4);
  CHECK(std::abs(are_gini_vs_pearson(error_distribution("uniform")).are - 1.0) < 1e-6);
  CHECK(std::abs(are_gini_vs_pearson(error_distribution("exp")).are - 3.0) < 5e-4);
  CHECK(std::abs(are_gini_vs_pearson(error_distribution("t3")).are - 1.901) < 5e-3);
  const AREResult ln = are_gini_vs_pearson(error_distribution("lognormal"));
  CHECK(std::abs(ln.are - 7.353) < 5e-3);
  const double e = std::exp(1.0);
  CHECK(std::abs(ln.f0_used - std::exp(0.25) / (2 * std::sqrt(pi))) < 1e-10);
  CHECK(ln.var_used == doctest::Approx((e - 1) * e).epsilon(1e-15));
  for (const char* name : {"normal", "uniform", "t3", "exp", "lognormal"}) {
    const AREResult r = are_gini_vs_pearson(error_distribution(name));
    CHECK(r.are == 12.0 * r.var_used * r.f0_used * r.f0_used);
    CHECK(std::abs(r.f0_used - r.distribution.f0) < 1e-9);
  }
  CHECK_THROWS_WITH_AS(are_gini_vs_pearson(error_distribution("cauchy")),
                       doctest::Contains("ARE undefined: infinite variance"), InputError);
  CHECK_THROWS_WITH_AS(are_gini_vs_pearson(error_distribution("t2")),
                       doctest::Contains("ARE undefined: infinite variance"), InputError);
}

TEST_CASE("predicted local power") {
  const MatrixXd sigma = (MatrixXd(2, 2) << 0.1, 0.02, 0.02, 0.08).finished();
  CHECK(predicted_local_power(VectorXd::Zero(2), sigma, 0.28, 2, 0.05) ==
        doctest::Approx(0.05).epsilon(1e-12));
  const VectorXd dir = Eigen::Vector2d(0.6, -0.3);
  double prev = 0.0;
  for (double t = 0.0; t <= 10.0; t += 0.25) {
    const double p = predicted_local_power(t * dir, sigma, 0.28, 2, 0.05);
    CHECK(p >= prev - 1e-12);
    prev = p;
  }
  CHECK(prev > 0.99);

  // d = 1 with a mean shift equal to the critical value: power one half.
  const double zc = 1.959963984540054;
  const double p = predicted_local_power(Eigen::VectorXd::Constant(1, zc),
                                         MatrixXd::Identity(1, 1), 1.0 / 12.0, 1, 0.05);
  CHECK(std::abs(p - 0.5) < 1e-3);

  // d = 1 agreement with the normal-shift route: mean f0 beta E u^2 / sd.
  for (double beta : {0.05, 0.1, 0.2}) {
    const double s = 1.7, f0 = 0.28;  // s = E u^2, Sigma = s / 12
    const double mu = f0 * beta * s / std::sqrt(s / 12.0);
    const double normal = phi_cdf(mu - zc) + phi_cdf(-mu - zc);
    const double chi = predicted_local_power(Eigen::VectorXd::Constant(1, beta),
                                             MatrixXd::Constant(1, 1, s / 12.0), f0, 1, 0.05);
    CHECK(std::abs(chi - normal) < 1e-8);
  }
}

TEST_CASE("statistic, p-value and decision from an estimate") {
  PartialCov pc;
  pc.value = VectorXd::Constant(1, 0.0);
  pc.variance = MatrixXd::Constant(1, 1, 0.5);
  const TestResult zero = univariate_from_pcov(pc, 100, 0.05);
  CHECK(zero.statistic == 0.0);
  CHECK(zero.p_value == 1.0);
  CHECK_FALSE(zero.reject);

  pc.value(0) = 0.2;
  const TestResult r = univariate_from_pcov(pc, 100, 0.05);
  CHECK(r.statistic == doctest::Approx(std::sqrt(100.0) * 0.2 / std::sqrt(0.5)).epsilon(1e-14));
  CHECK(r.df == 0);
  CHECK(std::abs(r.p_value - normal_pvalue_two_sided(r.statistic)) < 1e-10);
  CHECK(r.reject == (r.p_value < 0.05));
  const TestResult g = group_from_pcov(pc, 100, 0.05);
  CHECK(g.statistic == r.statistic * r.statistic);
  CHECK(g.df == 1);

  PartialCov deg = pc;
  deg.variance(0, 0) = 0.0;
  CHECK_THROWS_WITH_AS(univariate_from_pcov(deg, 100, 0.05),
                       doctest::Contains("degenerate target residual"), NumericalError);

  PartialCov two;
  two.value = VectorXd::Zero(2);
  two.variance = MatrixXd::Identity(2, 2) * 0.3;
  const TestResult z2 = group_from_pcov(two, 50, 0.05);
  CHECK(z2.statistic == 0.0);
  CHECK(z2.p_value == 1.0);
  two.variance << 1, 1, 1, 1;
  CHECK_THROWS_WITH_AS(group_from_pcov(two, 50, 0.05), doctest::Contains("singular"),
                       NumericalError);
}

TEST_CASE("univariate test under the null") {
  const Dataset d = synthetic(1, "normal");
  TestOptions opts;
  opts.seed = Seed{5, 0};
  for (Method m : {Method::kGini, Method::kPearson, Method::kPearsonModified, Method::kQuantile}) {
    const TestResult r = test_univariate(d, 4, m, opts);
    CHECK(r.method == m);
    CHECK(r.df == 0);
    CHECK(r.p_value > 0.0);
    CHECK(r.p_value < 1.0);
    CHECK(r.reject == (r.p_value < opts.alpha));
    CHECK(std::abs(r.p_value - normal_pvalue_two_sided(r.statistic)) < 1e-10);
    CHECK(r.targets == std::vector<Index>{4});
    CHECK(r.n == 120);
    CHECK(r.lambdas.target.size() == 1);
    CHECK(r.lambdas.response > 0.0);
  }
  CHECK_THROWS_AS(test_univariate(d, 20, Method::kGini, opts), InputError);
}

TEST_CASE("multi-method call agrees with single-method calls") {
  const Dataset d = synthetic(2, "t3");
  TestOptions opts;
  opts.seed = Seed{6, 0};
  const std::vector<Method> all{Method::kGini, Method::kQuantile, Method::kPearson,
                                Method::kPearsonModified};
  const auto many = test_univariate(d, 7, all, opts);
  REQUIRE(many.size() == 4);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const TestResult one = test_univariate(d, 7, all[i], opts);
    CHECK(one.statistic == many[i].statistic);
    CHECK(one.p_value == many[i].p_value);
  }
}

TEST_CASE("alternative is detected") {
  const Dataset d = synthetic(3, "cauchy", 200, 20, 1.0);
  TestOptions opts;
  opts.seed = Seed{7, 0};
  CHECK(test_univariate(d, 4, Method::kGini, opts).reject);
}

TEST_CASE("group test at |S| = 1 is the squared univariate statistic") {
  for (std::uint64_t s : {4, 5, 6}) {
    const Dataset d = synthetic(s, s == 5 ? "cauchy" : "normal");
    TestOptions opts;
    opts.seed = Seed{s, 0};
    const TestResult uni = test_univariate(d, 3, Method::kGini, opts);
    const TestResult grp = group_test(d, {3}, opts);
    CHECK(grp.df == 1);
    CHECK(grp.statistic == uni.statistic * uni.statistic);
  }
}

TEST_CASE("group test under the null and the alternative") {
  TestOptions opts;
  opts.seed = Seed{8, 0};
  const Dataset null = synthetic(7, "normal");
  const TestResult r = group_test(null, {4, 5, 6}, opts);
  CHECK(r.df == 3);
  CHECK(r.targets == std::vector<Index>{4, 5, 6});
  CHECK(r.p_value > 0.0);
  CHECK(std::abs(r.p_value - chisq_pvalue(r.statistic, 3)) < 1e-10);
  CHECK(r.pcov.variance == r.pcov.variance.transpose());

  const Dataset alt = synthetic(8, "normal", 200, 20, 0.8);
  CHECK(group_test(alt, {4, 5, 6}, opts).reject);
  CHECK_THROWS_AS(group_test(alt, {}, opts), InputError);
}

TEST_CASE("degenerate target residual is reported") {
  const Dataset base = synthetic(9, "normal");
  MatrixXd x = base.x();
  x.col(5) = x.col(2);  // duplicate column: the x_k fit leaves no residual
  const Dataset d(base.y(), x, base.names());
  TestOptions opts;
  opts.seed = Seed{1, 0};
  opts.lambda_target = 0.0;
  CHECK_THROWS_AS(test_univariate(d, 5, Method::kGini, opts), NumericalError);
}

TEST_CASE("pivotal lambda does not depend on the response") {
  const Dataset a = synthetic(10, "normal");
  const Dataset b(a.y().array().cube() * 7.0 + 1.0, a.x(), a.names());
  TestOptions opts;
  opts.seed = Seed{3, 0};
  const double la = test_univariate(a, 2, Method::kGini, opts).lambdas.response;
  const double lb = test_univariate(b, 2, Method::kGini, opts).lambdas.response;
  CHECK(la == lb);
}

TEST_CASE("decision is invariant to a common rescaling of the covariates") {
  for (std::uint64_t s : {11, 12, 13}) {
    const Dataset a = synthetic(s, "t3", 120, 20, s == 12 ? 0.4 : 0.0);
    const Dataset b(a.y(), a.x() * 3.5, a.names());
    TestOptions opts;
    opts.seed = Seed{s, 0};
    const TestResult ra = test_univariate(a, 4, Method::kGini, opts);
    const TestResult rb = test_univariate(b, 4, Method::kGini, opts);
    CHECK(ra.reject == rb.reject);
    CHECK(rb.statistic == doctest::Approx(ra.statistic).epsilon(1e-6));
  }
}

TEST_CASE("diagnostic notes") {
  const Dataset d = synthetic(14, "cauchy", 200, 20);
  TestOptions opts;
  opts.seed = Seed{2, 0};
  CHECK(has_note(test_univariate(d, 4, Method::kPearson, opts), "heavy-tailed"));
  CHECK(has_note(test_univariate(d, 4, Method::kQuantile, opts), "local alternatives"));
  CHECK(test_univariate(d, 4, Method::kGini, opts).notes.empty());
}

TEST_CASE("tuning overrides and cross-validated target fits") {
  const Dataset d = synthetic(15, "normal");
  TestOptions opts;
  opts.seed = Seed{2, 0};
  opts.lambda_response = 0.123;
  opts.lambda_target = 0.0456;
  const TestResult r = test_univariate(d, 4, Method::kGini, opts);
  CHECK(r.lambdas.response == 0.123);
  CHECK(r.lambdas.target == std::vector<double>{0.0456});
  TestOptions cv;
  cv.seed = Seed{2, 0};
  cv.lambda_target_cv = true;
  const TestResult c = test_univariate(d, 4, Method::kGini, cv);
  CHECK(c.lambdas.target[0] > 0.0);
  CHECK(c.lambdas.target[0] != test_univariate(d, 4, Method::kGini, TestOptions{}).lambdas.target[0]);
}

TEST_CASE("Hill tail index") {
  Rng rng(Seed{17, 0});
  VectorXd v(20000);
  for (Index i = 0; i < v.size(); ++i) v(i) = std::pow(rng.uniform_open(), -1.0 / 1.5);
  CHECK(std::abs(hill_tail_index(v, 500) - 1.5) < 0.2);
  VectorXd g(20000);
  for (Index i = 0; i < g.size(); ++i) g(i) = rng.normal();
  CHECK(hill_tail_index(g) > 2.0);
}

TEST_CASE("json serialization") {
  const Dataset d = synthetic(16, "normal");
  TestOptions opts;
  opts.seed = Seed{2, 0};
  const TestResult r = test_univariate(d, 4, Method::kQuantile, opts);
  const nlohmann::json j = to_json(r);
  CHECK(j.at("schema_version") == kSchemaVersion);
  CHECK(j.at("method") == "pqcov");
  CHECK(j.at("reference") == "normal");
  CHECK(j.at("tau") == 0.5);
  CHECK(j.at("p_value").get<double>() == r.p_value);
  CHECK(j.at("fits").at("target").size() == 1);
  CHECK(j.at("variance").size() == 1);
  const nlohmann::json a = to_json(are_gini_vs_pearson(error_distribution("exp")));
  CHECK(a.at("distribution") == "exp");
  CHECK(std::abs(a.at("are").get<double>() - 3.0) < 1e-9);
}

}
