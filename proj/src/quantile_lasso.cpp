#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "admm.hpp"
#include "pgcov/errors.hpp"
#include "pgcov/solvers.hpp"

namespace pgcov {
namespace {

inline double check_loss(double r, double tau) {
  return r * (tau - (r < 0.0 ? 1.0 : 0.0));
}

// Design [1, Z]; coordinate 0 is the unpenalized intercept.
class QuantileProblem {
 public:
  QuantileProblem(const VectorXd& y, const MatrixXd& z, double tau)
      : y_(y), tau_(tau) {
    design_.resize(z.rows(), z.cols() + 1);
    design_.col(0).setOnes();
    design_.rightCols(z.cols()) = z;
    weight_ = 1.0 / static_cast<double>(z.rows());
  }

  Index rows() const { return design_.rows(); }
  Index cols() const { return design_.cols(); }
  const VectorXd& target() const { return y_; }
  const MatrixXd& gram_factor() const { return design_; }
  double loss_weight() const { return weight_; }
  bool penalized(Index j) const { return j > 0; }
  double dual_bound(const VectorXd& r, const VectorXd& x, const VectorXd& nu,
                    double pen) const;

  void apply(const VectorXd& x, VectorXd& out) const { out.noalias() = design_ * x; }
  void apply_t(const VectorXd& r, VectorXd& out) const {
    out.noalias() = design_.transpose() * r;
  }

  void prox(const VectorXd& v, double t, VectorXd& out) const {
    const double upper = t * tau_;
    const double lower = t * (1.0 - tau_);
    out.resize(v.size());
    for (Index i = 0; i < v.size(); ++i) {
      const double vi = v(i);
      out(i) = vi > upper ? vi - upper : (vi < -lower ? vi + lower : 0.0);
    }
  }

  double loss(const VectorXd& r) const {
    double s = 0.0;
    for (Index i = 0; i < r.size(); ++i) s += check_loss(r(i), tau_);
    return s;
  }

 private:
  const VectorXd& y_;
  double tau_;
  MatrixXd design_;
  double weight_ = 1.0;
};

// Dual: max nu^T y  s.t.  tau - 1 <= nu_i <= tau, 1^T nu = 0 and
// |z_j^T nu| <= pen. Nonzero residuals fix nu_i at the matching bound; the
// zero-residual set N takes the ADMM multiplier plus the least-norm
// correction that satisfies the equations for the intercept and the support.
// After clipping, any leftover imbalance in 1^T nu is absorbed by entries
// with room in the box, and a final shrink enforces the penalty constraint.
double QuantileProblem::dual_bound(const VectorXd& r, const VectorXd& x,
                                   const VectorXd& nu, double pen) const {
  constexpr Index kMaxZeroSet = 4000;
  const double lo = tau_ - 1.0;
  const double hi = tau_;
  const Index m = design_.rows();
  std::vector<Index> zero_set;
  VectorXd cand(m);
  for (Index i = 0; i < m; ++i) {
    if (r(i) == 0.0) {
      zero_set.push_back(i);
      cand(i) = std::clamp(nu(i), lo, hi);
    } else {
      cand(i) = r(i) > 0.0 ? hi : lo;
    }
  }

  std::vector<Index> eq{0};
  for (Index j = 1; j < x.size(); ++j) {
    if (x(j) != 0.0) eq.push_back(j);
  }
  const auto nz = static_cast<Index>(zero_set.size());
  if (nz > 0 && nz <= kMaxZeroSet) {
    const VectorXd grad = design_.transpose() * cand;
    const auto ne = static_cast<Index>(eq.size());
    MatrixXd mt(ne, nz);
    VectorXd resid(ne);
    for (Index a = 0; a < ne; ++a) {
      const Index j = eq[static_cast<std::size_t>(a)];
      resid(a) = (j == 0 ? 0.0 : pen * (x(j) > 0.0 ? 1.0 : -1.0)) - grad(j);
      for (Index b = 0; b < nz; ++b) {
        mt(a, b) = design_(zero_set[static_cast<std::size_t>(b)], j);
      }
    }
    const VectorXd step = mt.completeOrthogonalDecomposition().solve(resid);
    for (Index b = 0; b < nz; ++b) {
      const Index i = zero_set[static_cast<std::size_t>(b)];
      cand(i) = std::clamp(cand(i) + step(b), lo, hi);
    }
  }

  double excess = cand.sum();
  for (int pass = 0; pass < 2 && excess != 0.0; ++pass) {
    // Pass 0 adjusts the zero set only, pass 1 anything with room.
    for (Index i = 0; i < m && excess != 0.0; ++i) {
      if (pass == 0 && r(i) != 0.0) continue;
      const double room = excess > 0.0 ? cand(i) - lo : hi - cand(i);
      const double moved = std::min(room, std::abs(excess));
      cand(i) += excess > 0.0 ? -moved : moved;
      excess += excess > 0.0 ? -moved : moved;
    }
  }
  // Left at rounding level the imbalance is ignored; anything larger means
  // the box could not absorb it.
  if (std::abs(cand.sum()) > 1e-12 * static_cast<double>(m)) {
    return -std::numeric_limits<double>::infinity();
  }

  const VectorXd grad = design_.rightCols(design_.cols() - 1).transpose() * cand;
  const double worst = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  const double shrink = worst > pen ? pen / worst : 1.0;
  return shrink * cand.dot(y_);
}

// argmin_eta sum_i rho_tau(e_i - eta): the ceil(n tau)-th order statistic.
double exact_intercept(const VectorXd& e, double tau) {
  std::vector<double> sorted(e.data(), e.data() + e.size());
  const auto n = static_cast<double>(sorted.size());
  auto m = static_cast<std::size_t>(std::ceil(n * tau - 1e-12));
  m = std::clamp<std::size_t>(m, 1, sorted.size());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(m - 1),
                   sorted.end());
  return sorted[m - 1];
}

}  // namespace

double quantile_lasso_objective(const VectorXd& y, const MatrixXd& z,
                                double tau, double intercept,
                                const VectorXd& theta, double lambda) {
  const VectorXd e = (y - z * theta).array() - intercept;
  double s = 0.0;
  for (Index i = 0; i < e.size(); ++i) s += check_loss(e(i), tau);
  return s / static_cast<double>(e.size()) + lambda * theta.lpNorm<1>();
}

FitResult quantile_lasso_fit(const VectorXd& y, const MatrixXd& z, double tau,
                             double lambda, const SolverOptions& opts) {
  if (y.size() != z.rows()) {
    throw InputError("quantile_lasso_fit: dimension mismatch");
  }
  if (y.size() < 1) throw InputError("quantile_lasso_fit: empty response");
  if (!(tau > 0.0 && tau < 1.0)) {
    throw InputError("quantile_lasso_fit: tau must lie in (0, 1)");
  }
  if (!(lambda >= 0.0)) throw InputError("quantile_lasso_fit: lambda must be >= 0");

  FitResult fit;
  fit.lambda = lambda;
  VectorXd theta = VectorXd::Zero(z.cols());
  if (z.cols() > 0) {
    const QuantileProblem problem(y, z, tau);
    detail::AdmmOutcome out = detail::admm_l1(problem, lambda, opts);
    theta = out.coef.tail(z.cols());
    fit.iterations = out.iterations;
    fit.converged = out.converged;
    fit.primal_residual = out.primal_residual;
    fit.dual_residual = out.dual_residual;
    if (std::isfinite(out.gap)) fit.duality_gap = out.gap;
  } else {
    fit.converged = true;
  }
  fit.intercept = exact_intercept(y - z * theta, tau);
  fit.coef = std::move(theta);
  fit.objective =
      quantile_lasso_objective(y, z, tau, fit.intercept, fit.coef, lambda);
  fit.support_size = (fit.coef.array() != 0.0).count();
  return fit;
}

double quantile_lambda_default(const MatrixXd& z, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw InputError("quantile_lambda_default: tau must lie in (0, 1)");
  }
  const Index n = z.rows();
  const Index q = z.cols();
  if (q < 2 || n < 1) return 0.0;
  double scale = 0.0;
  for (Index j = 0; j < q; ++j) {
    scale = std::max(scale, std::sqrt(z.col(j).squaredNorm() / static_cast<double>(n)));
  }
  return 1.1 * std::sqrt(tau * (1.0 - tau)) * scale *
         std::sqrt(2.0 * std::log(static_cast<double>(q)) / static_cast<double>(n));
}

}  // namespace pgcov
