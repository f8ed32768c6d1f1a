// Exact l1-regression oracles by the primal simplex method.
//
// LP:  min  sum_i (cpos_i r+_i + cneg_i r-_i) + lambda sum_{j pen} (t+_j + t-_j)
//      s.t. A (t+ - t-) + r+ - r- = y,  all variables >= 0.
// Choosing r+_i (y_i >= 0) or r-_i (y_i < 0) as initial basis gives a
// feasible start, so no phase one is needed. Bland's rule rules out cycling
// on the heavily degenerate pairwise problems.

#include <cmath>
#include <limits>
#include <vector>

#include "pgcov/errors.hpp"
#include "pgcov/solvers.hpp"

namespace pgcov {
namespace {

struct L1Program {
  MatrixXd a;
  VectorXd y;
  VectorXd cost_pos;
  VectorXd cost_neg;
  std::vector<bool> penalized;
  double lambda = 0.0;
};

VectorXd solve_l1_program(const L1Program& lp, int& pivots) {
  const Index m = lp.a.rows();
  const Index q = lp.a.cols();
  const Index ncols = 2 * q + 2 * m;
  constexpr double kTol = 1e-11;

  MatrixXd tab(m, ncols);
  VectorXd rhs(m);
  VectorXd cost(ncols);
  for (Index j = 0; j < q; ++j) {
    const double cj = lp.penalized[static_cast<std::size_t>(j)] ? lp.lambda : 0.0;
    cost(j) = cj;
    cost(q + j) = cj;
  }
  cost.segment(2 * q, m) = lp.cost_pos;
  cost.segment(2 * q + m, m) = lp.cost_neg;

  std::vector<Index> basis(static_cast<std::size_t>(m));
  tab.setZero();
  for (Index i = 0; i < m; ++i) {
    const double sign = lp.y(i) >= 0.0 ? 1.0 : -1.0;
    tab.row(i).head(q) = sign * lp.a.row(i);
    tab.row(i).segment(q, q) = -sign * lp.a.row(i);
    tab(i, 2 * q + i) = sign;
    tab(i, 2 * q + m + i) = -sign;
    rhs(i) = std::abs(lp.y(i));
    basis[static_cast<std::size_t>(i)] = sign > 0 ? 2 * q + i : 2 * q + m + i;
  }

  // Reduced costs d = c - c_B^T T.
  VectorXd cb(m);
  for (Index i = 0; i < m; ++i) cb(i) = cost(basis[static_cast<std::size_t>(i)]);
  VectorXd reduced = cost - tab.transpose() * cb;

  pivots = 0;
  const int max_pivots = 200000;
  while (pivots < max_pivots) {
    Index enter = -1;
    for (Index j = 0; j < ncols; ++j) {
      if (reduced(j) < -kTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;

    Index leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < m; ++i) {
      const double coeff = tab(i, enter);
      if (coeff > kTol) {
        const double ratio = rhs(i) / coeff;
        if (ratio < best_ratio - kTol ||
            (std::abs(ratio - best_ratio) <= kTol && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] <
                 basis[static_cast<std::size_t>(leave)])) {
          best_ratio = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) throw NumericalError("l1 oracle: unbounded program");

    const double piv = tab(leave, enter);
    tab.row(leave) /= piv;
    rhs(leave) /= piv;
    for (Index i = 0; i < m; ++i) {
      if (i == leave) continue;
      const double f = tab(i, enter);
      if (f != 0.0) {
        tab.row(i) -= f * tab.row(leave);
        rhs(i) -= f * rhs(leave);
        if (rhs(i) < 0.0 && rhs(i) > -kTol) rhs(i) = 0.0;
      }
    }
    const double fr = reduced(enter);
    reduced -= fr * tab.row(leave).transpose();
    basis[static_cast<std::size_t>(leave)] = enter;
    ++pivots;
  }
  if (pivots >= max_pivots) throw NumericalError("l1 oracle: pivot limit");

  VectorXd theta = VectorXd::Zero(q);
  for (Index i = 0; i < m; ++i) {
    const Index var = basis[static_cast<std::size_t>(i)];
    if (var < q) theta(var) += rhs(i);
    else if (var < 2 * q) theta(var - q) -= rhs(i);
  }
  return theta;
}

FitResult finish(VectorXd coef, double intercept, double lambda, double obj,
                 int pivots) {
  FitResult fit;
  fit.support_size = (coef.array() != 0.0).count();
  fit.coef = std::move(coef);
  fit.intercept = intercept;
  fit.lambda = lambda;
  fit.objective = obj;
  fit.iterations = pivots;
  fit.converged = true;
  return fit;
}

}  // namespace

FitResult oracle_pairwise_lad(const VectorXd& y, const MatrixXd& z,
                              double lambda) {
  const Index n = z.rows();
  const Index q = z.cols();
  if (y.size() != n) throw InputError("oracle_pairwise_lad: dimension mismatch");
  if (n < 2 || n > 30 || q > 6) {
    throw InputError("oracle_pairwise_lad: requires 2 <= n <= 30 and p <= 6");
  }
  if (lambda < 0.0) throw InputError("oracle_pairwise_lad: lambda < 0");
  const Index pairs = n * (n - 1) / 2;
  L1Program lp;
  lp.a.resize(pairs, q);
  lp.y.resize(pairs);
  Index row = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j, ++row) {
      lp.a.row(row) = z.row(i) - z.row(j);
      lp.y(row) = y(i) - y(j);
    }
  }
  const double w = 2.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
  lp.cost_pos = VectorXd::Constant(pairs, w);
  lp.cost_neg = VectorXd::Constant(pairs, w);
  lp.penalized.assign(static_cast<std::size_t>(q), true);
  lp.lambda = lambda;
  int pivots = 0;
  VectorXd theta = solve_l1_program(lp, pivots);
  const double obj = rank_lasso_objective(y, z, theta, lambda);
  return finish(std::move(theta), 0.0, lambda, obj, pivots);
}

FitResult oracle_quantile_lad(const VectorXd& y, const MatrixXd& z, double tau,
                              double lambda) {
  const Index n = z.rows();
  const Index q = z.cols();
  if (y.size() != n) throw InputError("oracle_quantile_lad: dimension mismatch");
  if (n < 1 || n > 60 || q > 6) {
    throw InputError("oracle_quantile_lad: requires n <= 60 and p <= 6");
  }
  if (!(tau > 0.0 && tau < 1.0)) throw InputError("oracle_quantile_lad: tau");
  if (lambda < 0.0) throw InputError("oracle_quantile_lad: lambda < 0");
  L1Program lp;
  lp.a.resize(n, q + 1);
  lp.a.col(0).setOnes();
  lp.a.rightCols(q) = z;
  lp.y = y;
  lp.cost_pos = VectorXd::Constant(n, tau / static_cast<double>(n));
  lp.cost_neg = VectorXd::Constant(n, (1.0 - tau) / static_cast<double>(n));
  lp.penalized.assign(static_cast<std::size_t>(q + 1), true);
  lp.penalized[0] = false;
  lp.lambda = lambda;
  int pivots = 0;
  const VectorXd sol = solve_l1_program(lp, pivots);
  VectorXd theta = sol.tail(q);
  const double eta = sol(0);
  const double obj = quantile_lasso_objective(y, z, tau, eta, theta, lambda);
  return finish(std::move(theta), eta, lambda, obj, pivots);
}

}  // namespace pgcov
