#include <algorithm>
#include <cmath>
#include <vector>

#include "admm.hpp"
#include "pgcov/errors.hpp"
#include "pgcov/solvers.hpp"

namespace pgcov {
namespace {

// Pairwise-difference operator: row (i, j), i < j, is z_i - z_j. Never
// materialized; A x and A^T r cost O(nq + n^2).
class PairwiseProblem {
 public:
  PairwiseProblem(const VectorXd& y, const MatrixXd& z) : z_(z) {
    const Index n = z.rows();
    n_ = n;
    pairs_ = n * (n - 1) / 2;
    target_.resize(pairs_);
    first_.resize(static_cast<std::size_t>(pairs_));
    second_.resize(static_cast<std::size_t>(pairs_));
    Index row = 0;
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        first_[static_cast<std::size_t>(row)] = i;
        second_[static_cast<std::size_t>(row)] = j;
        target_(row++) = y(i) - y(j);
      }
    }
    // D^T D = n Z^T Z - Z^T 1 1^T Z = (sqrt(n) Zc)^T (sqrt(n) Zc).
    gram_ = (z.rowwise() - z.colwise().mean()) * std::sqrt(static_cast<double>(n));
    weight_ = 2.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
    fitted_.resize(n);
    acc_.resize(n);
  }

  Index rows() const { return pairs_; }
  Index cols() const { return z_.cols(); }
  const VectorXd& target() const { return target_; }
  const MatrixXd& gram_factor() const { return gram_; }
  double loss_weight() const { return weight_; }
  bool penalized(Index) const { return true; }
  double dual_bound(const VectorXd& r, const VectorXd& x, const VectorXd& nu,
                    double pen) const;

  void apply(const VectorXd& x, VectorXd& out) const {
    fitted_.noalias() = z_ * x;
    out.resize(pairs_);
    Index row = 0;
    for (Index i = 0; i < n_; ++i) {
      const double fi = fitted_(i);
      const Index len = n_ - i - 1;
      out.segment(row, len) = fi - fitted_.tail(len).array();
      row += len;
    }
  }

  void apply_t(const VectorXd& r, VectorXd& out) const {
    acc_.setZero();
    Index row = 0;
    for (Index i = 0; i < n_; ++i) {
      const Index len = n_ - i - 1;
      const auto seg = r.segment(row, len);
      acc_(i) += seg.sum();
      acc_.tail(len) -= seg;
      row += len;
    }
    out.noalias() = z_.transpose() * acc_;
  }

  void prox(const VectorXd& v, double t, VectorXd& out) const {
    out = v.array().sign() * (v.array().abs() - t).max(0.0);
  }

  double loss(const VectorXd& r) const { return r.lpNorm<1>(); }

 private:
  const MatrixXd& z_;
  Index n_ = 0;
  Index pairs_ = 0;
  VectorXd target_;
  MatrixXd gram_;
  double weight_ = 1.0;
  std::vector<Index> first_, second_;
  mutable VectorXd fitted_;
  mutable VectorXd acc_;
};

// Dual of  min |d - D x|_1 + pen |x|_1  is  max nu^T d  subject to
// |nu|_inf <= 1 and |D^T nu|_inf <= pen. Pairs with nonzero residual get
// nu = sign(r). On the zero-residual pairs N, nu starts from the ADMM
// multiplier and receives the least-norm correction that makes the support
// equations (D^T nu)_S = pen sign(x_S) hold; the result is clipped to the box
// and shrunk until the second constraint holds.
double PairwiseProblem::dual_bound(const VectorXd& r, const VectorXd& x,
                                   const VectorXd& nu, double pen) const {
  constexpr Index kMaxZeroSet = 4000;
  std::vector<Index> zero_set;
  VectorXd cand(pairs_);
  for (Index k = 0; k < pairs_; ++k) {
    if (r(k) == 0.0) {
      zero_set.push_back(k);
      cand(k) = std::clamp(nu(k), -1.0, 1.0);
    } else {
      cand(k) = r(k) > 0.0 ? 1.0 : -1.0;
    }
  }

  std::vector<Index> support;
  for (Index j = 0; j < x.size(); ++j) {
    if (x(j) != 0.0) support.push_back(j);
  }

  VectorXd grad(z_.cols());
  const auto nz = static_cast<Index>(zero_set.size());
  if (!support.empty() && nz > 0 && nz <= kMaxZeroSet) {
    apply_t(cand, grad);
    const auto ns = static_cast<Index>(support.size());
    MatrixXd mt(ns, nz);  // D_{N,S}^T
    VectorXd resid(ns);
    for (Index a = 0; a < ns; ++a) {
      const Index j = support[static_cast<std::size_t>(a)];
      resid(a) = pen * (x(j) > 0.0 ? 1.0 : -1.0) - grad(j);
      for (Index b = 0; b < nz; ++b) {
        const auto k = static_cast<std::size_t>(zero_set[static_cast<std::size_t>(b)]);
        mt(a, b) = z_(first_[k], j) - z_(second_[k], j);
      }
    }
    const VectorXd step = mt.completeOrthogonalDecomposition().solve(resid);
    for (Index b = 0; b < nz; ++b) {
      const Index k = zero_set[static_cast<std::size_t>(b)];
      cand(k) = std::clamp(cand(k) + step(b), -1.0, 1.0);
    }
  }

  apply_t(cand, grad);
  const double worst = grad.cwiseAbs().maxCoeff();
  const double shrink = worst > pen ? pen / worst : 1.0;
  return shrink * cand.dot(target_);
}

}  // namespace

double rank_lasso_objective(const VectorXd& y, const MatrixXd& z,
                            const VectorXd& theta, double lambda) {
  const Index n = z.rows();
  const VectorXd e = y - z * theta;
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (j != i) total += std::abs(e(i) - e(j));
    }
  }
  return total / (static_cast<double>(n) * static_cast<double>(n - 1)) +
         lambda * theta.lpNorm<1>();
}

FitResult rank_lasso_fit(const VectorXd& y, const MatrixXd& z, double lambda,
                         const SolverOptions& opts) {
  if (y.size() != z.rows()) throw InputError("rank_lasso_fit: dimension mismatch");
  if (z.rows() < 2) throw InputError("rank_lasso_fit: need n >= 2");
  if (!(lambda >= 0.0)) throw InputError("rank_lasso_fit: lambda must be >= 0");

  FitResult fit;
  fit.lambda = lambda;
  if (z.cols() == 0) {
    fit.coef = VectorXd::Zero(0);
    fit.objective = rank_lasso_objective(y, z, fit.coef, lambda);
    fit.converged = true;
    return fit;
  }

  const PairwiseProblem problem(y, z);
  detail::AdmmOutcome out = detail::admm_l1(problem, lambda, opts);
  fit.coef = std::move(out.coef);
  fit.objective = out.objective;
  fit.iterations = out.iterations;
  fit.converged = out.converged;
  fit.primal_residual = out.primal_residual;
  fit.dual_residual = out.dual_residual;
  if (std::isfinite(out.gap)) fit.duality_gap = out.gap;
  fit.support_size = (fit.coef.array() != 0.0).count();
  return fit;
}

}  // namespace pgcov
