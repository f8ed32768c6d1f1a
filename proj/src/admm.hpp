#pragma once

// Two-block ADMM for  min_x  w * sum_i h(r_i) + lambda * sum_{j pen} |x_j|
// subject to  r = y - A x.
//
// A copy b of x carries the l1 term, linked through the scaled constraint
// c (x - b) = 0 with c^2 = mean diag(A^T A), so both constraint blocks have
// comparable weight. The x-update solves (A^T A + c^2 I) x = rhs with a
// factorization computed once; the penalty rho never enters that system.
//
// Problem concept:
//   Index rows() const; Index cols() const;
//   void apply(const VectorXd& x, VectorXd& out) const;    // out = A x
//   void apply_t(const VectorXd& r, VectorXd& out) const;  // out = A^T r
//   const VectorXd& target() const;                        // y
//   const MatrixXd& gram_factor() const;                   // G, A^T A = G^T G
//   void prox(const VectorXd& v, double t, VectorXd& out) const;  // prox of t*h
//   double loss(const VectorXd& r) const;                  // sum_i h(r_i)
//   double loss_weight() const;                            // w
//   bool penalized(Index j) const;
//   double dual_bound(const VectorXd& r, const VectorXd& x,
//                     const VectorXd& nu, double pen) const;
//
// dual_bound returns a lower bound on the unit-weight objective
//   sum_i h(r_i) + pen * |x|_1
// from a dual-feasible point built near the multiplier nu, or -inf when the
// problem offers no certificate. With a finite bound the run stops as soon
// as the duality gap, in objective units, is at most tol.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "pgcov/solvers.hpp"

namespace pgcov::detail {

// Solves (G^T G + c2 I) x = rhs. Uses the q x q Cholesky factor when q does
// not exceed the number of rows of G, otherwise the Woodbury identity with a
// k x k factor.
class RidgeSystem {
 public:
  RidgeSystem(const MatrixXd& g, double c2) : g_(g), c2_(c2) {
    woodbury_ = g.cols() > g.rows();
    if (woodbury_) {
      MatrixXd k = g * g.transpose();
      k.diagonal().array() += c2;
      llt_.compute(k);
    } else {
      MatrixXd m = g.transpose() * g;
      m.diagonal().array() += c2;
      llt_.compute(m);
    }
  }

  void solve(const VectorXd& rhs, VectorXd& out) const {
    if (!woodbury_) {
      out = llt_.solve(rhs);
      return;
    }
    const VectorXd inner = llt_.solve(g_ * rhs);
    out = (rhs - g_.transpose() * inner) / c2_;
  }

 private:
  const MatrixXd& g_;
  double c2_;
  bool woodbury_ = false;
  Eigen::LLT<MatrixXd> llt_;
};

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

struct AdmmOutcome {
  VectorXd coef;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = std::numeric_limits<double>::infinity();
};

template <class Problem>
double admm_objective(const Problem& prob, const VectorXd& coef, double lambda,
                      VectorXd& scratch) {
  prob.apply(coef, scratch);
  scratch = prob.target() - scratch;
  double penalty = 0.0;
  for (Index j = 0; j < coef.size(); ++j) {
    if (prob.penalized(j)) penalty += std::abs(coef(j));
  }
  return prob.loss_weight() * prob.loss(scratch) + lambda * penalty;
}

template <class Problem>
AdmmOutcome admm_l1(const Problem& prob, double lambda,
                    const SolverOptions& opts) {
  const Index m = prob.rows();
  const Index q = prob.cols();
  const VectorXd& y = prob.target();
  const MatrixXd& g = prob.gram_factor();

  double c2 = g.squaredNorm() / static_cast<double>(std::max<Index>(q, 1));
  if (!(c2 > 0.0)) c2 = 1.0;
  const double c = std::sqrt(c2);
  const RidgeSystem system(g, c2);

  // Internal scaling: unit loss weight, penalty lambda / w.
  const double pen = lambda / prob.loss_weight();
  const bool accelerate = opts.restart;
  double rho = opts.admm_rho;

  VectorXd aty(q);
  prob.apply_t(y, aty);

  VectorXd x = VectorXd::Zero(q);
  VectorXd ax = VectorXd::Zero(m);
  VectorXd r = y, r_hat = y, r_prev = y;
  VectorXd u = VectorXd::Zero(m), u_hat = u, u_prev = u;
  VectorXd b = VectorXd::Zero(q), b_hat = b, b_prev = b;
  VectorXd v = VectorXd::Zero(q), v_hat = v, v_prev = v;
  VectorXd atr = aty, atr_hat = aty, atr_prev = aty;
  VectorXd atu = VectorXd::Zero(q), atu_hat = atu, atu_prev = atu;

  VectorXd rhs(q), work(m), scratch(m), dual_vec(q);

  AdmmOutcome best;
  best.coef = VectorXd::Zero(q);
  best.objective = admm_objective(prob, best.coef, lambda, scratch);

  double alpha = 1.0;
  double combined_prev = std::numeric_limits<double>::infinity();
  constexpr double kRestartEta = 0.999;
  constexpr int kCheckEvery = 10;

  const double sqrt_dim_pri = std::sqrt(static_cast<double>(m + q));
  const double sqrt_dim_dual = std::sqrt(static_cast<double>(q));
  const double y_norm = y.norm();

  double best_dual = -std::numeric_limits<double>::infinity();
  bool certified = false;

  double primal = 0.0, dual = 0.0;
  bool converged = false;
  int iter = 0;
  for (iter = 1; iter <= opts.max_iter; ++iter) {
    rhs = aty - atr_hat - atu_hat + c * (c * b_hat - v_hat);
    system.solve(rhs, x);
    prob.apply(x, ax);

    work = y - ax - u_hat;
    r_prev = r;
    prob.prox(work, 1.0 / rho, r);

    b_prev = b;
    const double shrink = pen / (rho * c2);
    for (Index j = 0; j < q; ++j) {
      const double t = x(j) + v_hat(j) / c;
      b(j) = prob.penalized(j) ? soft_threshold(t, shrink) : t;
    }

    u_prev = u;
    v_prev = v;
    u = u_hat + ax + r - y;
    v = v_hat + c * (x - b);

    atr_prev = atr;
    atu_prev = atu;
    prob.apply_t(r, atr);
    prob.apply_t(u, atu);

    primal = std::sqrt((ax + r - y).squaredNorm() + c2 * (x - b).squaredNorm());
    dual_vec = (atr - atr_hat) - c2 * (b - b_hat);
    dual = rho * dual_vec.norm();

    const double eps_pri =
        sqrt_dim_pri * opts.tol +
        opts.tol * std::max({std::sqrt(ax.squaredNorm() + c2 * x.squaredNorm()),
                             std::sqrt(r.squaredNorm() + c2 * b.squaredNorm()),
                             y_norm});
    const double eps_dual =
        sqrt_dim_dual * opts.tol + opts.tol * rho * (atu + c * v).norm();

    if (!certified && primal <= eps_pri && dual <= eps_dual) {
      converged = true;
      break;
    }

    if (iter % kCheckEvery == 0) {
      const double obj = admm_objective(prob, b, lambda, scratch);
      if (obj < best.objective) {
        best.objective = obj;
        best.coef = b;
      }
      // The multiplier of r = y - A x is -rho u.
      const double bound = prob.dual_bound(r, b, -rho * u, pen);
      certified = std::isfinite(bound);
      if (certified) {
        best_dual = std::max(best_dual, prob.loss_weight() * bound);
        best.gap = best.objective - best_dual;
        if (best.gap <= opts.tol) {
          converged = true;
          break;
        }
      }
    }

    if (accelerate) {
      const double combined =
          rho * ((u - u_hat).squaredNorm() + (v - v_hat).squaredNorm()) +
          rho * ((r - r_hat).squaredNorm() + c2 * (b - b_hat).squaredNorm());
      if (combined < kRestartEta * combined_prev) {
        const double alpha_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * alpha * alpha));
        const double mom = (alpha - 1.0) / alpha_next;
        r_hat = r + mom * (r - r_prev);
        b_hat = b + mom * (b - b_prev);
        u_hat = u + mom * (u - u_prev);
        v_hat = v + mom * (v - v_prev);
        atr_hat = atr + mom * (atr - atr_prev);
        atu_hat = atu + mom * (atu - atu_prev);
        alpha = alpha_next;
        combined_prev = combined;
      } else {
        alpha = 1.0;
        r_hat = r_prev;
        b_hat = b_prev;
        u_hat = u_prev;
        v_hat = v_prev;
        atr_hat = atr_prev;
        atu_hat = atu_prev;
        combined_prev /= kRestartEta;
      }
    } else {
      r_hat = r;
      b_hat = b;
      u_hat = u;
      v_hat = v;
      atr_hat = atr;
      atu_hat = atu;
      // Residual balancing, only while no gap certificate is available.
      if (!certified && iter % kCheckEvery == 0) {
        constexpr double kMu = 10.0;
        if (primal > kMu * dual) {
          rho *= 2.0;
          u /= 2.0; v /= 2.0; atu /= 2.0;
          u_hat = u; v_hat = v; atu_hat = atu;
        } else if (dual > kMu * primal) {
          rho /= 2.0;
          u *= 2.0; v *= 2.0; atu *= 2.0;
          u_hat = u; v_hat = v; atu_hat = atu;
        }
      }
    }
  }

  const double final_obj = admm_objective(prob, b, lambda, scratch);
  if (final_obj <= best.objective) {
    best.objective = final_obj;
    best.coef = b;
  }
  best.iterations = std::min(iter, opts.max_iter);
  best.converged = converged;
  best.primal_residual = primal;
  best.dual_residual = dual;
  return best;
}

}  // namespace pgcov::detail
