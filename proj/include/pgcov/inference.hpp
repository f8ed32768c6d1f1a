#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pgcov/datamodel.hpp"
#include "pgcov/pcov.hpp"
#include "pgcov/solvers.hpp"

namespace pgcov {

struct PivotalOptions {
  double alpha0 = 0.1;
  double c = 1.1;
  int draws = 500;
};

struct TestOptions {
  double alpha = 0.05;
  double tau = 0.5;
  SolverOptions solver;
  PivotalOptions pivotal;
  Seed seed;  // pivotal simulation and cross-validation folds
  std::optional<double> lambda_response;  // replaces the default for the Y fit
  std::optional<double> lambda_target;    // replaces the default for x_k fits
  bool lambda_target_cv = false;          // 5-fold CV for the x_k fits
};

struct Lambdas {
  double response = 0.0;
  std::vector<double> target;
};

struct TestResult {
  Method method = Method::kGini;
  double statistic = 0.0;
  int df = 0;  // 0: two-sided standard normal reference; d: chi-square_d
  double p_value = 1.0;
  double alpha = 0.05;
  bool reject = false;
  PartialCov pcov;
  Lambdas lambdas;
  Index n = 0;
  std::vector<Index> targets;
  bool converged = true;  // every nuisance fit met its tolerance
  std::vector<std::string> notes;
};

struct AREResult {
  ErrorDistribution distribution;
  double are = 0.0;
  double var_used = 0.0;
  double f0_used = 0.0;
  double f0_error = 0.0;  // quadrature error estimate
};

// Univariate test of H0: beta_k = 0 (k zero-based) for one method. The data
// are prepared by centering Y and standardizing the covariates.
TestResult test_univariate(const Dataset& data, Index k, Method method,
                           const TestOptions& opts = {});

// Same test for several methods at once; the x_k fit is shared by all
// methods and the rank-Lasso fit by pgcov and ppcov_m.
std::vector<TestResult> test_univariate(const Dataset& data, Index k,
                                        const std::vector<Method>& methods,
                                        const TestOptions& opts = {});

// Chi-square group test of H0: beta_S = 0 with the Gini statistic.
TestResult group_test(const Dataset& data, const std::vector<Index>& s,
                      const TestOptions& opts = {});

// Statistic, p-value and decision from a ready estimate. The univariate
// statistic is sqrt(n) L^-1 v for the Cholesky factor L of the variance and
// the group statistic is the squared norm of the same vector, so a d = 1
// group statistic is the square of the univariate one bit for bit.
TestResult univariate_from_pcov(PartialCov pcov, Index n, double alpha);
TestResult group_from_pcov(PartialCov pcov, Index n, double alpha);

double chisq_pvalue(double w, int d);
double normal_pvalue_two_sided(double z);

// 12 var f0^2 with f0 = integral of f^2 by adaptive Gauss-Kronrod
// quadrature. Infinite-variance laws are rejected.
AREResult are_gini_vs_pearson(const ErrorDistribution& dist);

// Power of the level-alpha chi-square_d test under noncentrality
// 144 f0^2 beta0^T Sigma beta0.
double predicted_local_power(const VectorXd& beta0, const MatrixXd& sigma,
                             double f0, int d, double alpha);

// Hill estimate of the tail index of |v| from the k largest values
// (k = 0 picks max(10, sqrt(n))).
double hill_tail_index(const VectorXd& v, Index k = 0);

inline constexpr int kSchemaVersion = 1;

nlohmann::json to_json(const FitResult& fit);
nlohmann::json to_json(const TestResult& result);
nlohmann::json to_json(const AREResult& result);

}  // namespace pgcov
