#include "pgcov/inference.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "pgcov/errors.hpp"

namespace pgcov {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Prepared {
  VectorXd y;
  SplitDesign split;
};

Prepared prepare(const Dataset& data, const std::vector<Index>& targets) {
  Prepared p;
  p.y = data.y().array() - data.y().mean();
  p.split = split_design(standardize_columns(data.x()), targets);
  return p;
}

double target_lambda(const MatrixXd& z, const VectorXd& x, const TestOptions& o) {
  if (o.lambda_target) return *o.lambda_target;
  if (o.lambda_target_cv && z.cols() > 0) return lasso_lambda_cv(z, x, o.seed);
  return lasso_lambda_default(z, x);
}

std::string fit_note(const char* what, const FitResult& fit) {
  char buf[192];
  std::snprintf(buf, sizeof buf,
                "%s fit stopped at %d iterations without meeting the tolerance "
                "(primal %.3g, dual %.3g)",
                what, fit.iterations, fit.primal_residual, fit.dual_residual);
  return buf;
}

void heavy_tail_note(TestResult& r, const VectorXd& resid) {
  const double alpha = hill_tail_index(resid);
  if (alpha < 2.0) {
    char buf[192];
    std::snprintf(buf, sizeof buf,
                  "response residuals look heavy-tailed (Hill tail index %.2f < 2); "
                  "the finite-variance assumption of this test is doubtful",
                  alpha);
    r.notes.emplace_back(buf);
  }
}

// sqrt(n) L^-1 v with variance = L L^T.
VectorXd standardized_score(const PartialCov& pcov, Index n) {
  const Eigen::LLT<MatrixXd> llt(pcov.variance);
  if (llt.info() != Eigen::Success) {
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(pcov.variance);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    std::ostringstream msg;
    msg << "singular covariance estimate (eigenvalues in [" << lo << ", " << hi
        << "], condition number " << (lo > 0.0 ? hi / lo : kInf) << ")";
    throw NumericalError(msg.str());
  }
  VectorXd s = llt.matrixL().solve(pcov.value);
  return std::sqrt(static_cast<double>(n)) * s;
}

// A target explained by the other covariates up to rounding leaves a
// residual carrying no information; its scale is then meaningless.
void check_target_residual(const VectorXd& x, const MatrixXd& z, const VectorXd& gamma,
                           const std::string& name) {
  const double scale = x.norm();
  if (!(scale > 0.0) || (x - z * gamma).norm() <= 1e-6 * scale) {
    throw NumericalError("degenerate target residual: " + name +
                         " is numerically a combination of the other covariates");
  }
}

}  // namespace

double normal_pvalue_two_sided(double z) {
  if (std::isnan(z)) return std::numeric_limits<double>::quiet_NaN();
  return std::erfc(std::abs(z) / std::numbers::sqrt2);
}

double chisq_pvalue(double w, int d) {
  if (d < 1) throw InputError("chisq_pvalue: d must be >= 1");
  if (!(w >= 0.0)) throw InputError("chisq_pvalue: w must be >= 0");
  if (w == 0.0) return 1.0;
  if (std::isinf(w)) return 0.0;
  if (d == 2) return std::exp(-0.5 * w);
  return boost::math::gamma_q(0.5 * d, 0.5 * w);
}

TestResult univariate_from_pcov(PartialCov pcov, Index n, double alpha) {
  if (pcov.dim() != 1) throw InputError("univariate test needs a scalar estimate");
  if (!(pcov.variance(0, 0) > 0.0)) {
    throw NumericalError("degenerate target residual");
  }
  TestResult r;
  r.method = pcov.kind;
  r.statistic = standardized_score(pcov, n)(0);
  r.df = 0;
  r.p_value = normal_pvalue_two_sided(r.statistic);
  r.alpha = alpha;
  r.reject = r.p_value < alpha;
  r.n = n;
  r.pcov = std::move(pcov);
  return r;
}

TestResult group_from_pcov(PartialCov pcov, Index n, double alpha) {
  TestResult r;
  r.method = pcov.kind;
  r.statistic = standardized_score(pcov, n).squaredNorm();
  r.df = static_cast<int>(pcov.dim());
  r.p_value = chisq_pvalue(r.statistic, r.df);
  r.alpha = alpha;
  r.reject = r.p_value < alpha;
  r.n = n;
  r.pcov = std::move(pcov);
  return r;
}

std::vector<TestResult> test_univariate(const Dataset& data, Index k,
                                        const std::vector<Method>& methods,
                                        const TestOptions& opts) {
  if (k < 0 || k >= data.p()) {
    throw InputError("target index " + std::to_string(k) + " out of range");
  }
  if (!(opts.alpha > 0.0 && opts.alpha < 1.0)) {
    throw InputError("alpha must lie in (0, 1)");
  }
  std::vector<TestResult> out;
  if (methods.empty()) return out;

  const Prepared prep = prepare(data, {k});
  const VectorXd& y = prep.y;
  const VectorXd xk = prep.split.targets.col(0);
  const MatrixXd& z = prep.split.rest;
  const Index n = data.n();

  const double lam_x = target_lambda(z, xk, opts);
  const FitResult gamma = lasso_ls_fit(xk, z, lam_x, opts.solver);
  check_target_residual(xk, z, gamma.coef, data.names()[static_cast<std::size_t>(k)]);

  std::optional<FitResult> rank_fit;
  double lam_rank = 0.0;
  auto need_rank = [&] {
    if (!rank_fit) {
      lam_rank = opts.lambda_response
                     ? *opts.lambda_response
                     : pivotal_lambda(z, opts.pivotal.alpha0, opts.pivotal.c,
                                      opts.pivotal.draws, opts.seed);
      rank_fit = rank_lasso_fit(y, z, lam_rank, opts.solver);
    }
    return *rank_fit;
  };

  for (Method m : methods) {
    PartialCov pc;
    FitResult resp;
    double lam_y = 0.0;
    switch (m) {
      case Method::kGini:
        resp = need_rank();
        lam_y = lam_rank;
        pc = pgcov_hat(y, xk, z, resp.coef, gamma.coef);
        break;
      case Method::kPearsonModified:
        resp = need_rank();
        lam_y = lam_rank;
        pc = ppcov_modified_hat(y, xk, z, resp.coef, gamma.coef);
        break;
      case Method::kPearson:
        lam_y = opts.lambda_response ? *opts.lambda_response
                                     : lasso_lambda_scaled(z, y, opts.solver);
        resp = lasso_ls_fit(y, z, lam_y, opts.solver);
        pc = ppcov_hat(y, xk, z, resp.coef, gamma.coef);
        break;
      case Method::kQuantile:
        lam_y = opts.lambda_response ? *opts.lambda_response
                                     : quantile_lambda_default(z, opts.tau);
        resp = quantile_lasso_fit(y, z, opts.tau, lam_y, opts.solver);
        pc = pqcov_hat(y, xk, z, opts.tau, resp, gamma.coef);
        break;
    }
    pc.response_fit = resp;
    pc.target_fits = {gamma};

    TestResult r = univariate_from_pcov(std::move(pc), n, opts.alpha);
    r.lambdas.response = lam_y;
    r.lambdas.target = {lam_x};
    r.targets = {k};
    r.converged = resp.converged && gamma.converged;
    if (!resp.converged) r.notes.push_back(fit_note("response", resp));
    if (!gamma.converged) r.notes.push_back(fit_note("target", gamma));
    if (m == Method::kPearson || m == Method::kPearsonModified) {
      heavy_tail_note(r, y - z * resp.coef);
    }
    if (m == Method::kQuantile) {
      r.notes.emplace_back(
          "the quantile score depends on the response only through residual "
          "signs; its statistic can be small under local alternatives");
    }
    out.push_back(std::move(r));
  }
  return out;
}

TestResult test_univariate(const Dataset& data, Index k, Method method,
                           const TestOptions& opts) {
  return test_univariate(data, k, std::vector<Method>{method}, opts).front();
}

TestResult group_test(const Dataset& data, const std::vector<Index>& s,
                      const TestOptions& opts) {
  if (!(opts.alpha > 0.0 && opts.alpha < 1.0)) {
    throw InputError("alpha must lie in (0, 1)");
  }
  if (static_cast<Index>(s.size()) >= data.n()) {
    throw InputError("group test needs |S| < n");
  }
  const Prepared prep = prepare(data, s);
  const MatrixXd& xs = prep.split.targets;
  const MatrixXd& z = prep.split.rest;
  const Index d = xs.cols();

  MatrixXd gamma(z.cols(), d);
  std::vector<FitResult> fits;
  std::vector<double> lams;
  bool converged = true;
  for (Index j = 0; j < d; ++j) {
    const VectorXd xj = xs.col(j);
    const double lam = target_lambda(z, xj, opts);
    FitResult f = lasso_ls_fit(xj, z, lam, opts.solver);
    check_target_residual(xj, z, f.coef,
                          data.names()[static_cast<std::size_t>(s[static_cast<std::size_t>(j)])]);
    gamma.col(j) = f.coef;
    converged = converged && f.converged;
    lams.push_back(lam);
    fits.push_back(std::move(f));
  }
  const double lam_y = opts.lambda_response
                           ? *opts.lambda_response
                           : pivotal_lambda(z, opts.pivotal.alpha0, opts.pivotal.c,
                                            opts.pivotal.draws, opts.seed);
  const FitResult theta = rank_lasso_fit(prep.y, z, lam_y, opts.solver);

  PartialCov pc = pgcov_multi_hat(prep.y, xs, z, theta.coef, gamma);
  pc.response_fit = theta;
  pc.target_fits = std::move(fits);
  TestResult r = group_from_pcov(std::move(pc), data.n(), opts.alpha);
  r.lambdas.response = lam_y;
  r.lambdas.target = std::move(lams);
  r.targets = s;
  r.converged = converged && theta.converged;
  if (!theta.converged) r.notes.push_back(fit_note("response", theta));
  if (!converged) r.notes.emplace_back("a target fit did not meet the tolerance");
  return r;
}

AREResult are_gini_vs_pearson(const ErrorDistribution& dist) {
  if (!dist.finite_variance()) {
    throw InputError("ARE undefined: infinite variance (" + dist.name + ")");
  }
  using boost::math::quadrature::gauss_kronrod;
  constexpr double kTol = 1e-12;
  constexpr unsigned kDepth = 20;
  double err = 0.0;
  double f0 = 0.0;
  switch (dist.law) {
    case ErrorLaw::kUniform:
      f0 = gauss_kronrod<double, 61>::integrate(
          [&](double x) { return dist.pdf(x) * dist.pdf(x); }, 0.0, 1.0, kDepth,
          kTol, &err);
      break;
    case ErrorLaw::kExp:
      f0 = gauss_kronrod<double, 61>::integrate(
          [&](double x) { return dist.pdf(x) * dist.pdf(x); }, 0.0, kInf, kDepth,
          kTol, &err);
      break;
    case ErrorLaw::kLogNormal:
      // x = e^t: f(e^t)^2 e^t = exp(-t^2 - t) / (2 pi), which stays finite
      // where e^t overflows.
      f0 = gauss_kronrod<double, 61>::integrate(
          [](double t) { return std::exp(-t * t - t) / (2.0 * std::numbers::pi); },
          -kInf, kInf, kDepth, kTol, &err);
      break;
    default:
      f0 = gauss_kronrod<double, 61>::integrate(
          [&](double x) { return dist.pdf(x) * dist.pdf(x); }, -kInf, kInf,
          kDepth, kTol, &err);
      break;
  }
  AREResult r;
  r.distribution = dist;
  r.var_used = dist.variance;
  r.f0_used = f0;
  r.f0_error = err;
  r.are = 12.0 * r.var_used * r.f0_used * r.f0_used;
  return r;
}

double predicted_local_power(const VectorXd& beta0, const MatrixXd& sigma,
                             double f0, int d, double alpha) {
  if (d < 1) throw InputError("predicted_local_power: d must be >= 1");
  if (beta0.size() != d || sigma.rows() != d || sigma.cols() != d) {
    throw InputError("predicted_local_power: dimension mismatch");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InputError("predicted_local_power: alpha must lie in (0, 1)");
  }
  const double ncp = 144.0 * f0 * f0 * beta0.dot(sigma * beta0);
  if (!(ncp >= 0.0)) throw InputError("predicted_local_power: Sigma must be PSD");
  const boost::math::chi_squared central(d);
  const double crit = boost::math::quantile(boost::math::complement(central, alpha));
  if (ncp == 0.0) return alpha;
  const boost::math::non_central_chi_squared shifted(d, ncp);
  return boost::math::cdf(boost::math::complement(shifted, crit));
}

double hill_tail_index(const VectorXd& v, Index k) {
  std::vector<double> a(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) a[static_cast<std::size_t>(i)] = std::abs(v(i));
  std::sort(a.begin(), a.end(), std::greater<>());
  const auto n = static_cast<Index>(a.size());
  if (k <= 0) {
    k = std::max<Index>(10, static_cast<Index>(std::sqrt(static_cast<double>(n))));
  }
  k = std::min(k, n - 1);
  if (k < 1) return kInf;
  const double ref = a[static_cast<std::size_t>(k)];
  if (!(ref > 0.0)) return kInf;
  double s = 0.0;
  for (Index i = 0; i < k; ++i) s += std::log(a[static_cast<std::size_t>(i)] / ref);
  return s > 0.0 ? static_cast<double>(k) / s : kInf;
}

nlohmann::json to_json(const FitResult& fit) {
  nlohmann::json j;
  j["lambda"] = fit.lambda;
  j["objective"] = fit.objective;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["support_size"] = fit.support_size;
  j["intercept"] = fit.intercept;
  j["primal_residual"] = fit.primal_residual;
  j["dual_residual"] = fit.dual_residual;
  if (fit.duality_gap >= 0.0) j["duality_gap"] = fit.duality_gap;
  return j;
}

nlohmann::json to_json(const TestResult& r) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["method"] = std::string(method_name(r.method));
  j["statistic"] = r.statistic;
  j["reference"] = r.df == 0 ? "normal" : "chisq";
  j["df"] = r.df;
  j["p_value"] = r.p_value;
  j["alpha"] = r.alpha;
  j["reject"] = r.reject;
  j["n"] = r.n;
  j["targets"] = r.targets;
  if (r.pcov.kind == Method::kQuantile) j["tau"] = r.pcov.tau;
  j["estimate"] = std::vector<double>(r.pcov.value.data(),
                                      r.pcov.value.data() + r.pcov.value.size());
  nlohmann::json var = nlohmann::json::array();
  for (Index a = 0; a < r.pcov.variance.rows(); ++a) {
    std::vector<double> row(static_cast<std::size_t>(r.pcov.variance.cols()));
    for (Index b = 0; b < r.pcov.variance.cols(); ++b) {
      row[static_cast<std::size_t>(b)] = r.pcov.variance(a, b);
    }
    var.push_back(row);
  }
  j["variance"] = var;
  j["lambdas"] = {{"response", r.lambdas.response}, {"target", r.lambdas.target}};
  j["fits"]["response"] = to_json(r.pcov.response_fit);
  j["fits"]["target"] = nlohmann::json::array();
  for (const auto& f : r.pcov.target_fits) j["fits"]["target"].push_back(to_json(f));
  j["converged"] = r.converged;
  j["notes"] = r.notes;
  return j;
}

nlohmann::json to_json(const AREResult& r) {
  return {{"schema_version", kSchemaVersion},
          {"distribution", r.distribution.name},
          {"are", r.are},
          {"variance", r.var_used},
          {"f0", r.f0_used},
          {"f0_error", r.f0_error}};
}

}  // namespace pgcov
