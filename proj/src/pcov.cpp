#include "pgcov/pcov.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "pgcov/datamodel.hpp"
#include "pgcov/errors.hpp"

namespace pgcov {
namespace {

void check_rows(const char* who, Index n, const VectorXd& y, const MatrixXd& x,
                const MatrixXd& z) {
  if (y.size() != n || x.rows() != n || z.rows() != n) {
    throw InputError(std::string(who) + ": dimension mismatch");
  }
}

void check_coef(const char* who, const MatrixXd& z, Index len) {
  if (z.cols() != len) {
    throw InputError(std::string(who) + ": coefficient length does not match Z");
  }
}

// Evaluated as n^-2 sum_i u_i (R_i - n/2). The weights are exact in binary
// floating point, so the rank form agrees bit for bit with the double sum.
double rank_score(const VectorXd& u, const std::vector<Index>& r) {
  const Index n = u.size();
  const double nd = static_cast<double>(n);
  double s = 0.0;
  for (Index i = 0; i < n; ++i) {
    s += u(i) * (static_cast<double>(r[static_cast<std::size_t>(i)]) - 0.5 * nd);
  }
  return s / (nd * nd);
}

double cross_moment(const VectorXd& a, const VectorXd& b) {
  double s = 0.0;
  for (Index i = 0; i < a.size(); ++i) s += a(i) * b(i);
  return s;
}

MatrixXd scalar_matrix(double v) { return MatrixXd::Constant(1, 1, v); }

PartialCov pearson(Method kind, const VectorXd& y, const VectorXd& xk,
                   const MatrixXd& z, const VectorXd& theta,
                   const VectorXd& gamma) {
  const char* who = kind == Method::kPearson ? "ppcov_hat" : "ppcov_modified_hat";
  check_rows(who, xk.size(), y, xk, z);
  check_coef(who, z, theta.size());
  check_coef(who, z, gamma.size());
  const double n = static_cast<double>(y.size());
  const VectorXd e = y - z * theta;
  const VectorXd u = xk - z * gamma;
  PartialCov out;
  out.kind = kind;
  out.value = VectorXd::Constant(1, cross_moment(e, u) / n);
  out.variance = scalar_matrix((cross_moment(e, e) / n) * (cross_moment(u, u) / n));
  return out;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kGini: return "pgcov";
    case Method::kPearson: return "ppcov";
    case Method::kPearsonModified: return "ppcov_m";
    case Method::kQuantile: return "pqcov";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "pgcov" || s == "gini") return Method::kGini;
  if (s == "ppcov" || s == "pearson") return Method::kPearson;
  if (s == "ppcov_m" || s == "ppcov-m" || s == "pearson-modified") {
    return Method::kPearsonModified;
  }
  if (s == "pqcov" || s == "quantile") return Method::kQuantile;
  throw InputError("unknown method '" + std::string(name) + "'");
}

PartialCov pgcov_hat(const VectorXd& y, const VectorXd& xk, const MatrixXd& z,
                     const VectorXd& theta, const VectorXd& gamma) {
  MatrixXd xs = xk;
  MatrixXd g = gamma;
  return pgcov_multi_hat(y, xs, z, theta, g);
}

PartialCov pgcov_multi_hat(const VectorXd& y, const MatrixXd& xs,
                           const MatrixXd& zs, const VectorXd& theta,
                           const MatrixXd& gamma) {
  const Index n = y.size();
  const Index d = xs.cols();
  check_rows("pgcov_hat", n, y, xs, zs);
  check_coef("pgcov_hat", zs, theta.size());
  if (gamma.rows() != zs.cols() || gamma.cols() != d) {
    throw InputError("pgcov_hat: Gamma must be (p - d) x d");
  }
  if (d < 1) throw InputError("pgcov_hat: empty target set");
  if (d >= n) throw InputError("pgcov_hat: need d < n");

  const std::vector<Index> r = ranks(y - zs * theta);
  MatrixXd u(n, d);
  for (Index j = 0; j < d; ++j) {
    u.col(j) = xs.col(j) - zs * gamma.col(j);
  }

  PartialCov out;
  out.kind = Method::kGini;
  out.value.resize(d);
  out.variance.resize(d, d);
  const double scale = 12.0 * static_cast<double>(n);
  for (Index j = 0; j < d; ++j) {
    const VectorXd uj = u.col(j);
    out.value(j) = rank_score(uj, r);
    for (Index k = 0; k <= j; ++k) {
      const double v = cross_moment(uj, u.col(k)) / scale;
      out.variance(j, k) = v;
      out.variance(k, j) = v;
    }
  }
  return out;
}

PartialCov ppcov_hat(const VectorXd& y, const VectorXd& xk, const MatrixXd& z,
                     const VectorXd& theta_ls, const VectorXd& gamma) {
  return pearson(Method::kPearson, y, xk, z, theta_ls, gamma);
}

PartialCov ppcov_modified_hat(const VectorXd& y, const VectorXd& xk,
                              const MatrixXd& z, const VectorXd& theta_rank,
                              const VectorXd& gamma) {
  return pearson(Method::kPearsonModified, y, xk, z, theta_rank, gamma);
}

PartialCov pqcov_hat(const VectorXd& y, const VectorXd& xk, const MatrixXd& z,
                     double tau, const FitResult& qfit, const VectorXd& gamma) {
  if (!(tau > 0.0 && tau < 1.0)) throw InputError("pqcov_hat: tau must lie in (0, 1)");
  check_rows("pqcov_hat", xk.size(), y, xk, z);
  check_coef("pqcov_hat", z, qfit.coef.size());
  check_coef("pqcov_hat", z, gamma.size());
  const double n = static_cast<double>(y.size());
  const VectorXd e = (y - z * qfit.coef).array() - qfit.intercept;
  const VectorXd u = xk - z * gamma;
  double s = 0.0;
  for (Index i = 0; i < e.size(); ++i) s += (tau - (e(i) < 0.0 ? 1.0 : 0.0)) * u(i);
  PartialCov out;
  out.kind = Method::kQuantile;
  out.tau = tau;
  out.value = VectorXd::Constant(1, s / n);
  out.variance = scalar_matrix((tau - tau * tau) * (cross_moment(u, u) / n));
  out.response_fit = qfit;
  return out;
}

double pgcov_double_sum(const VectorXd& u, const VectorXd& e) {
  const Index n = u.size();
  if (e.size() != n) throw InputError("pgcov_double_sum: dimension mismatch");
  double s = 0.0;
  for (Index i = 0; i < n; ++i) {
    double c = 0.0;
    for (Index j = 0; j < n; ++j) c += (e(i) >= e(j) ? 1.0 : 0.0) - 0.5;
    s += u(i) * c;
  }
  const double nd = static_cast<double>(n);
  return s / (nd * nd);
}

}  // namespace pgcov
