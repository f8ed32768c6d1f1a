#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

#include "pgcov/solvers.hpp"

namespace pgcov {

enum class Method { kGini, kPearson, kPearsonModified, kQuantile };

// "pgcov", "ppcov", "ppcov_m", "pqcov".
std::string_view method_name(Method m);
// Accepts the names above and the aliases "gini", "pearson",
// "pearson-modified", "quantile" (case-insensitive).
Method parse_method(std::string_view name);

// A partial-covariance estimate with its variance. For a d-target estimate
// `value` has length d and `variance` is d x d; a univariate estimate is the
// d = 1 case. The nuisance fits are attached by the inference layer.
struct PartialCov {
  Method kind = Method::kGini;
  double tau = 0.5;  // quantile level, meaningful for kQuantile only
  VectorXd value;
  MatrixXd variance;
  FitResult response_fit;
  std::vector<FitResult> target_fits;

  Index dim() const { return value.size(); }
};

// n^-1 sum_i u_i (R(e_i)/n - 1/2) with u = xk - Z gamma, e = Y - Z theta and
// max ranks; variance (12 n)^-1 sum_i u_i^2.
PartialCov pgcov_hat(const VectorXd& y, const VectorXd& xk, const MatrixXd& z,
                     const VectorXd& theta, const VectorXd& gamma);

// Column-wise version for a target block: u_i = x_{S,i} - Gamma^T z_i and
// variance (12 n)^-1 sum_i u_i u_i^T. Identical arithmetic to pgcov_hat
// column by column, so d = 1 reproduces it bit for bit.
PartialCov pgcov_multi_hat(const VectorXd& y, const MatrixXd& xs,
                           const MatrixXd& zs, const VectorXd& theta,
                           const MatrixXd& gamma);

// n^-1 sum (Y - Z theta)(xk - Z gamma); variance mean(e^2) * mean(u^2).
PartialCov ppcov_hat(const VectorXd& y, const VectorXd& xk, const MatrixXd& z,
                     const VectorXd& theta_ls, const VectorXd& gamma);

// ppcov_hat with the rank-Lasso coefficients in place of the least-squares
// ones.
PartialCov ppcov_modified_hat(const VectorXd& y, const VectorXd& xk,
                              const MatrixXd& z, const VectorXd& theta_rank,
                              const VectorXd& gamma);

// n^-1 sum psi_tau(Y - Z theta - eta)(xk - Z gamma), psi_tau(w) = tau - 1(w < 0);
// variance (tau - tau^2) mean(u^2). theta and eta come from qfit.
PartialCov pqcov_hat(const VectorXd& y, const VectorXd& xk, const MatrixXd& z,
                     double tau, const FitResult& qfit, const VectorXd& gamma);

// Test oracle: n^-2 sum_i sum_j u_i {1(e_i >= e_j) - 1/2}, O(n^2).
double pgcov_double_sum(const VectorXd& u, const VectorXd& e);

}  // namespace pgcov
