#pragma once

#include <Eigen/Dense>

#include "pgcov/rng.hpp"

namespace pgcov {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Index = Eigen::Index;

// Shared tuning knobs. For ADMM, tol bounds the certified duality gap (in
// objective units) or, failing a certificate, the relative primal and dual
// residuals; for coordinate descent it is the absolute KKT tolerance.
// admm_rho is the initial penalty relative to the per-residual loss weight.
// `restart` switches ADMM to the accelerated variant with adaptive restart
// (Goldstein et al. 2014).
struct SolverOptions {
  int max_iter = 5000;
  double tol = 1e-6;
  double admm_rho = 1.0;
  bool restart = false;
};

struct FitResult {
  VectorXd coef;
  double intercept = 0.0;  // quantile fit only
  double lambda = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  Index support_size = 0;
  // Stopping diagnostics: ADMM primal/dual residual norms, or the final KKT
  // violation for coordinate descent (dual_residual = 0).
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  // Certified objective gap of an ADMM fit; negative when not computed.
  double duality_gap = -1.0;
};

// Exact objectives, evaluated directly (O(n^2) pairs for the rank loss).
double rank_lasso_objective(const VectorXd& y, const MatrixXd& z,
                            const VectorXd& theta, double lambda);
double lasso_ls_objective(const VectorXd& x, const MatrixXd& z,
                          const VectorXd& gamma, double lambda);
double quantile_lasso_objective(const VectorXd& y, const MatrixXd& z,
                                double tau, double intercept,
                                const VectorXd& theta, double lambda);

// Rank Lasso: minimizes {n(n-1)}^-1 sum_{i != j} |e_i - e_j| + lambda |theta|_1
// with e = y - z theta, by ADMM on the pairwise-differenced LAD form.
// Non-convergence returns the best iterate with converged = false.
FitResult rank_lasso_fit(const VectorXd& y, const MatrixXd& z, double lambda,
                         const SolverOptions& opts = {});

// c times the empirical (1 - alpha0) quantile (type 7) of ||s_n||_inf over
// B draws, s_n = -2 {n(n-1)}^-1 sum_i z_i r_i with r a uniform permutation of
// 1..n. Depends on z and seed only.
double pivotal_lambda(const MatrixXd& z, double alpha0 = 0.1, double c = 1.1,
                      int draws = 500, Seed seed = {});

// Least-squares Lasso (2n)^-1 |x - z gamma|^2 + lambda |gamma|_1 by cyclic
// coordinate descent, run until the KKT violation is at most opts.tol.
FitResult lasso_ls_fit(const VectorXd& x, const MatrixXd& z, double lambda,
                       const SolverOptions& opts = {});

// 1.1 * sd(x) * sqrt(2 log q / n), q = number of columns of z.
double lasso_lambda_default(const MatrixXd& z, const VectorXd& x);

// Same rate with the noise scale in place of sd(x): sigma is re-estimated
// from the residuals of the fit at the current lambda, sigma^2 =
// |x - z gamma|^2 / (n - support), until it settles (scaled-Lasso fixed
// point). Used for responses, whose marginal sd includes the signal.
double lasso_lambda_scaled(const MatrixXd& z, const VectorXd& x,
                           const SolverOptions& opts = {});

// K-fold cross-validated lambda over a log-spaced grid from lambda_max down
// to 1e-3 lambda_max; folds are assigned from `seed`.
double lasso_lambda_cv(const MatrixXd& z, const VectorXd& x, Seed seed,
                       int folds = 5, int grid_size = 40);

// Penalized quantile regression n^-1 sum rho_tau(y - z theta - eta) +
// lambda |theta|_1, eta unpenalized. ADMM followed by an exact update of the
// intercept for the final theta.
FitResult quantile_lasso_fit(const VectorXd& y, const MatrixXd& z, double tau,
                             double lambda, const SolverOptions& opts = {});

// 1.1 * sqrt(tau (1 - tau)) * sqrt(2 log q / n) for standardized z: the
// least-squares default rate with the check-loss score scale in place of
// sd(x).
double quantile_lambda_default(const MatrixXd& z, double tau);

// Exact minimizer of the rank Lasso objective by a simplex solve of the
// pairwise LAD-Lasso linear program. Test oracle; n <= 30, p <= 6.
FitResult oracle_pairwise_lad(const VectorXd& y, const MatrixXd& z,
                              double lambda);

// Same linear-programming route for the penalized quantile objective.
// Test oracle; n <= 60, p <= 6.
FitResult oracle_quantile_lad(const VectorXd& y, const MatrixXd& z, double tau,
                              double lambda);

}  // namespace pgcov
