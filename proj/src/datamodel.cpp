#include "pgcov/datamodel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <unordered_set>

#include "pgcov/errors.hpp"

namespace pgcov {

Dataset::Dataset(VectorXd y, MatrixXd x, std::vector<std::string> names)
    : y_(std::move(y)), x_(std::move(x)), names_(std::move(names)) {
  if (x_.rows() != y_.size()) {
    throw InputError("dataset: response has " + std::to_string(y_.size()) +
                     " rows but covariates have " +
                     std::to_string(x_.rows()));
  }
  if (x_.rows() < 2) throw InputError("dataset: need at least 2 observations");
  if (x_.cols() < 2) throw InputError("dataset: need at least 2 covariates");
  if (static_cast<Index>(names_.size()) != x_.cols()) {
    throw InputError("dataset: one name per covariate column required");
  }
  if (!y_.allFinite() || !x_.allFinite()) {
    throw InputError("dataset: non-finite entries");
  }
  std::unordered_set<std::string> seen;
  for (const auto& name : names_) {
    if (!seen.insert(name).second) {
      throw InputError("dataset: duplicate column name '" + name + "'");
    }
  }
}

Index Dataset::column(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) {
    throw InputError("unknown column '" + std::string(name) + "'");
  }
  return static_cast<Index>(it - names_.begin());
}

SplitDesign split_design(const MatrixXd& x, const std::vector<Index>& targets) {
  const Index p = x.cols();
  std::vector<bool> is_target(static_cast<std::size_t>(p), false);
  for (Index k : targets) {
    if (k < 0 || k >= p) {
      throw InputError("target index " + std::to_string(k) + " out of range");
    }
    if (is_target[static_cast<std::size_t>(k)]) {
      throw InputError("duplicate target index " + std::to_string(k));
    }
    is_target[static_cast<std::size_t>(k)] = true;
  }
  if (targets.empty()) throw InputError("empty target set");

  SplitDesign out;
  out.target_idx = targets;
  for (Index j = 0; j < p; ++j) {
    if (!is_target[static_cast<std::size_t>(j)]) out.rest_idx.push_back(j);
  }
  out.targets.resize(x.rows(), static_cast<Index>(targets.size()));
  for (std::size_t t = 0; t < targets.size(); ++t) {
    out.targets.col(static_cast<Index>(t)) = x.col(targets[t]);
  }
  out.rest.resize(x.rows(), static_cast<Index>(out.rest_idx.size()));
  for (std::size_t t = 0; t < out.rest_idx.size(); ++t) {
    out.rest.col(static_cast<Index>(t)) = x.col(out.rest_idx[t]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Error laws
// ---------------------------------------------------------------------------

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double student_t_pdf(double x, double nu) {
  const double log_norm = std::lgamma((nu + 1.0) / 2.0) -
                          std::lgamma(nu / 2.0) - 0.5 * std::log(nu * kPi);
  return std::exp(log_norm - (nu + 1.0) / 2.0 * std::log1p(x * x / nu));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

bool ErrorDistribution::finite_variance() const {
  return std::isfinite(variance);
}

double ErrorDistribution::pdf(double x) const {
  switch (law) {
    case ErrorLaw::kNormal:
      return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
    case ErrorLaw::kUniform:
      return (x >= 0.0 && x <= 1.0) ? 1.0 : 0.0;
    case ErrorLaw::kT2:
      return student_t_pdf(x, 2.0);
    case ErrorLaw::kT3:
      return student_t_pdf(x, 3.0);
    case ErrorLaw::kCauchy:
      return 1.0 / (kPi * (1.0 + x * x));
    case ErrorLaw::kExp:
      return x >= 0.0 ? std::exp(-x) : 0.0;
    case ErrorLaw::kLogNormal: {
      if (x <= 0.0) return 0.0;
      const double l = std::log(x);
      return std::exp(-0.5 * l * l) / (x * std::sqrt(2.0 * kPi));
    }
  }
  return 0.0;
}

ErrorDistribution error_distribution(ErrorLaw law) {
  const double e = std::numbers::e;
  switch (law) {
    case ErrorLaw::kNormal:
      return {law, "normal", 1.0, 1.0 / (2.0 * std::sqrt(kPi))};
    case ErrorLaw::kUniform:
      return {law, "uniform", 1.0 / 12.0, 1.0};
    case ErrorLaw::kT2:
      return {law, "t2", kInf, 3.0 * std::sqrt(2.0) * kPi / 64.0};
    case ErrorLaw::kT3:
      return {law, "t3", 3.0, 5.0 * std::sqrt(3.0) / (12.0 * kPi)};
    case ErrorLaw::kCauchy:
      return {law, "cauchy", kInf, 1.0 / (2.0 * kPi)};
    case ErrorLaw::kExp:
      return {law, "exp", 1.0, 0.5};
    case ErrorLaw::kLogNormal:
      return {law, "lognormal", (e - 1.0) * e,
              std::exp(0.25) / (2.0 * std::sqrt(kPi))};
  }
  throw InputError("unsupported error law");
}

ErrorDistribution error_distribution(std::string_view name) {
  const std::string key = lower(name);
  for (ErrorLaw law : all_error_laws()) {
    if (error_distribution(law).name == key) return error_distribution(law);
  }
  throw InputError("unsupported error distribution '" + std::string(name) +
                   "' (expected normal, uniform, t2, t3, cauchy, exp, "
                   "lognormal)");
}

const std::vector<ErrorLaw>& all_error_laws() {
  static const std::vector<ErrorLaw> laws = {
      ErrorLaw::kNormal, ErrorLaw::kUniform, ErrorLaw::kT2,
      ErrorLaw::kT3,     ErrorLaw::kCauchy,  ErrorLaw::kExp,
      ErrorLaw::kLogNormal};
  return laws;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

MatrixXd generate_ar1_gaussian(Index n, Index p, double rho, Seed seed) {
  if (n < 1 || p < 1) throw InputError("generate_ar1_gaussian: n, p >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw InputError("generate_ar1_gaussian: rho must lie in [0, 1)");
  }
  Rng rng(seed, Lane::kDesign);
  const double innovation = std::sqrt(1.0 - rho * rho);
  MatrixXd x(n, p);
  // Row-major draw order so that a prefix of rows does not depend on p.
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = rng.normal();
    for (Index t = 1; t < p; ++t) {
      x(i, t) = rho * x(i, t - 1) + innovation * rng.normal();
    }
  }
  return x;
}

VectorXd sample_error(const ErrorDistribution& dist, Index n, Seed seed) {
  Rng rng(seed, Lane::kError);
  VectorXd out(n);
  auto chi_square = [&rng](int dof) {
    double s = 0.0;
    for (int k = 0; k < dof; ++k) {
      const double z = rng.normal();
      s += z * z;
    }
    return s;
  };
  for (Index i = 0; i < n; ++i) {
    switch (dist.law) {
      case ErrorLaw::kNormal:
        out(i) = rng.normal();
        break;
      case ErrorLaw::kUniform:
        out(i) = rng.uniform();
        break;
      case ErrorLaw::kT2: {
        const double z = rng.normal();
        out(i) = z / std::sqrt(chi_square(2) / 2.0);
        break;
      }
      case ErrorLaw::kT3: {
        const double z = rng.normal();
        out(i) = z / std::sqrt(chi_square(3) / 3.0);
        break;
      }
      case ErrorLaw::kCauchy:
        out(i) = std::tan(kPi * (rng.uniform_open() - 0.5));
        break;
      case ErrorLaw::kExp:
        out(i) = -std::log(rng.uniform_open());
        break;
      case ErrorLaw::kLogNormal:
        out(i) = std::exp(rng.normal());
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ranks and centering
// ---------------------------------------------------------------------------

std::vector<Index> ranks(const VectorXd& v) {
  const Index n = v.size();
  if (n < 1) throw InputError("ranks: empty input");
  if (!v.allFinite()) throw InputError("ranks: non-finite entries");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&v](Index a, Index b) { return v(a) < v(b); });
  std::vector<Index> out(static_cast<std::size_t>(n));
  // Walk tie groups; every member gets the position of the group's last
  // element (max-rank convention).
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t stop = start + 1;
    while (stop < order.size() && v(order[stop]) == v(order[start])) ++stop;
    for (std::size_t t = start; t < stop; ++t) {
      out[static_cast<std::size_t>(order[t])] = static_cast<Index>(stop);
    }
    start = stop;
  }
  return out;
}

MatrixXd center_columns(const MatrixXd& m) {
  MatrixXd out = m;
  const Index n = m.rows();
  if (n == 0) return out;
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  for (Index j = 0; j < out.cols(); ++j) {
    auto col = out.col(j);
    if ((col.array() == col(0)).all()) {
      col.setZero();
      continue;
    }
    // Up to two passes; a column whose mean is already zero to rounding
    // precision is left untouched, which makes the operation idempotent.
    for (int pass = 0; pass < 2; ++pass) {
      const double mean = col.sum() / static_cast<double>(n);
      const double scale = col.cwiseAbs().sum() / static_cast<double>(n);
      if (std::abs(mean) <= 8.0 * kEps * scale) break;
      col.array() -= mean;
    }
  }
  return out;
}

MatrixXd standardize_columns(const MatrixXd& m) {
  MatrixXd out = center_columns(m);
  const double n = static_cast<double>(m.rows());
  for (Index j = 0; j < out.cols(); ++j) {
    const double sd = std::sqrt(out.col(j).squaredNorm() / n);
    if (sd > 0.0) out.col(j) /= sd;
  }
  return out;
}

}  // namespace pgcov
