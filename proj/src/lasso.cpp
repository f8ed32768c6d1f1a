#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "pgcov/errors.hpp"
#include "pgcov/solvers.hpp"

namespace pgcov {
namespace {

double soft(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// Largest violation of the subgradient optimality conditions.
double kkt_violation(const MatrixXd& z, const VectorXd& resid,
                     const VectorXd& gamma, double lambda, VectorXd& grad) {
  const double n = static_cast<double>(z.rows());
  grad.noalias() = z.transpose() * resid / n;
  double worst = 0.0;
  for (Index j = 0; j < gamma.size(); ++j) {
    const double v = gamma(j) != 0.0
                         ? std::abs(grad(j) - lambda * (gamma(j) > 0 ? 1.0 : -1.0))
                         : std::max(std::abs(grad(j)) - lambda, 0.0);
    worst = std::max(worst, v);
  }
  return worst;
}

// Cyclic coordinate descent from `init`. Alternates sweeps over the active
// set with full sweeps; stops once the KKT violation on a freshly computed
// residual is at most tol. max_iter bounds the number of full sweeps and,
// separately, the active-set sweeps between two full ones.
FitResult lasso_cd(const VectorXd& x, const MatrixXd& z, double lambda,
                   const SolverOptions& opts, VectorXd init) {
  const Index n = z.rows();
  const Index q = z.cols();
  const double nd = static_cast<double>(n);

  FitResult fit;
  fit.lambda = lambda;
  VectorXd gamma = std::move(init);
  VectorXd col_sq(q);
  for (Index j = 0; j < q; ++j) col_sq(j) = z.col(j).squaredNorm() / nd;

  VectorXd resid = x - z * gamma;
  VectorXd grad(q);
  double violation = kkt_violation(z, resid, gamma, lambda, grad);
  int sweeps = 0;
  int full = 0;

  auto update = [&](Index j) {
    if (col_sq(j) <= 0.0) {
      gamma(j) = 0.0;
      return 0.0;
    }
    const double old = gamma(j);
    const double rho = z.col(j).dot(resid) / nd + col_sq(j) * old;
    const double next = soft(rho, lambda) / col_sq(j);
    if (next != old) {
      resid.noalias() -= (next - old) * z.col(j);
      gamma(j) = next;
    }
    return std::abs(next - old) * std::sqrt(col_sq(j));
  };

  std::vector<Index> active;
  while (violation > opts.tol && full < opts.max_iter) {
    for (Index j = 0; j < q; ++j) update(j);
    ++sweeps;
    ++full;

    active.clear();
    for (Index j = 0; j < q; ++j) {
      if (gamma(j) != 0.0) active.push_back(j);
    }
    double inner = std::numeric_limits<double>::infinity();
    for (int k = 0; !active.empty() && inner > 0.1 * opts.tol && k < opts.max_iter; ++k) {
      inner = 0.0;
      for (Index j : active) inner = std::max(inner, update(j));
      ++sweeps;
    }

    resid = x - z * gamma;
    violation = kkt_violation(z, resid, gamma, lambda, grad);
  }

  fit.coef = std::move(gamma);
  fit.iterations = sweeps;
  fit.converged = violation <= opts.tol;
  fit.primal_residual = violation;
  fit.objective = lasso_ls_objective(x, z, fit.coef, lambda);
  fit.support_size = (fit.coef.array() != 0.0).count();
  return fit;
}

double lambda_max(const MatrixXd& z, const VectorXd& x) {
  if (z.cols() == 0) return 0.0;
  return (z.transpose() * x).cwiseAbs().maxCoeff() / static_cast<double>(z.rows());
}

}  // namespace

double lasso_ls_objective(const VectorXd& x, const MatrixXd& z,
                          const VectorXd& gamma, double lambda) {
  const double n = static_cast<double>(z.rows());
  return (x - z * gamma).squaredNorm() / (2.0 * n) + lambda * gamma.lpNorm<1>();
}

FitResult lasso_ls_fit(const VectorXd& x, const MatrixXd& z, double lambda,
                       const SolverOptions& opts) {
  if (x.size() != z.rows()) throw InputError("lasso_ls_fit: dimension mismatch");
  if (z.rows() < 1) throw InputError("lasso_ls_fit: empty design");
  if (!(lambda >= 0.0)) throw InputError("lasso_ls_fit: lambda must be >= 0");
  return lasso_cd(x, z, lambda, opts, VectorXd::Zero(z.cols()));
}

double lasso_lambda_default(const MatrixXd& z, const VectorXd& x) {
  const Index n = x.size();
  const Index q = z.cols();
  if (n < 2 || q < 1) return 0.0;
  const double mean = x.mean();
  const double sd =
      std::sqrt((x.array() - mean).square().sum() / static_cast<double>(n - 1));
  // log q is zero at q = 1; the single-column fit is then unpenalized.
  return 1.1 * sd *
         std::sqrt(2.0 * std::log(static_cast<double>(q)) / static_cast<double>(n));
}

double lasso_lambda_scaled(const MatrixXd& z, const VectorXd& x,
                           const SolverOptions& opts) {
  const Index n = x.size();
  const Index q = z.cols();
  if (n < 2 || q < 2) return lasso_lambda_default(z, x);
  const double rate =
      1.1 * std::sqrt(2.0 * std::log(static_cast<double>(q)) / static_cast<double>(n));
  double lambda = lasso_lambda_default(z, x);
  VectorXd warm = VectorXd::Zero(q);
  for (int it = 0; it < 20; ++it) {
    FitResult fit = lasso_cd(x, z, lambda, opts, warm);
    const double dof = static_cast<double>(std::max<Index>(n - fit.support_size, 1));
    const double sigma = std::sqrt((x - z * fit.coef).squaredNorm() / dof);
    const double next = rate * sigma;
    warm = std::move(fit.coef);
    if (std::abs(next - lambda) <= 1e-3 * lambda) return next;
    lambda = next;
  }
  return lambda;
}

double lasso_lambda_cv(const MatrixXd& z, const VectorXd& x, Seed seed,
                       int folds, int grid_size) {
  const Index n = z.rows();
  if (x.size() != n) throw InputError("lasso_lambda_cv: dimension mismatch");
  if (folds < 2 || folds > n) throw InputError("lasso_lambda_cv: need 2 <= folds <= n");
  if (grid_size < 1) throw InputError("lasso_lambda_cv: grid_size must be >= 1");

  const double top = lambda_max(z, x);
  if (!(top > 0.0)) return 0.0;

  std::vector<double> grid(static_cast<std::size_t>(grid_size));
  for (int g = 0; g < grid_size; ++g) {
    const double frac = grid_size == 1 ? 0.0 : static_cast<double>(g) / (grid_size - 1);
    grid[static_cast<std::size_t>(g)] = top * std::pow(1e-3, frac);
  }

  // Balanced fold labels in random order.
  std::vector<int> label(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) label[static_cast<std::size_t>(i)] = static_cast<int>(i % folds);
  Rng rng(seed, Lane::kFolds);
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(label[static_cast<std::size_t>(i)], label[static_cast<std::size_t>(j)]);
  }

  SolverOptions opts;
  opts.tol = 1e-5;
  std::vector<double> cv_err(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<Index> train, test;
    for (Index i = 0; i < n; ++i) {
      (label[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    }
    const MatrixXd zt = z(train, Eigen::all);
    const VectorXd xt = x(train);
    const MatrixXd zv = z(test, Eigen::all);
    const VectorXd xv = x(test);
    VectorXd warm = VectorXd::Zero(z.cols());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      FitResult fit = lasso_cd(xt, zt, grid[g], opts, warm);
      cv_err[g] += (xv - zv * fit.coef).squaredNorm();
      warm = std::move(fit.coef);
    }
  }
  const auto best = std::min_element(cv_err.begin(), cv_err.end()) - cv_err.begin();
  return grid[static_cast<std::size_t>(best)];
}

}  // namespace pgcov
