#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "pgcov/rng.hpp"

namespace pgcov {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Index = Eigen::Index;

// Response vector, covariate matrix and column labels.
// Invariants (checked on construction): n >= 2, p >= 2, all entries finite,
// one label per column, labels unique.
class Dataset {
 public:
  Dataset(VectorXd y, MatrixXd x, std::vector<std::string> names);

  const VectorXd& y() const { return y_; }
  const MatrixXd& x() const { return x_; }
  const std::vector<std::string>& names() const { return names_; }
  Index n() const { return x_.rows(); }
  Index p() const { return x_.cols(); }

  // Zero-based column index of `name`; throws InputError naming the column.
  Index column(std::string_view name) const;

 private:
  VectorXd y_;
  MatrixXd x_;
  std::vector<std::string> names_;
};

// Target block x_S and the remaining columns z_S of a design.
struct SplitDesign {
  MatrixXd targets;            // n x d
  MatrixXd rest;               // n x (p - d)
  std::vector<Index> target_idx;
  std::vector<Index> rest_idx;  // original column of each column of `rest`
};

// Partition the columns of `x` into `targets` (zero-based, distinct, in
// range) and the complement, preserving column order.
SplitDesign split_design(const MatrixXd& x, const std::vector<Index>& targets);

enum class ErrorLaw { kNormal, kUniform, kT2, kT3, kCauchy, kExp, kLogNormal };

// A supported error law. `variance` is +inf for T2 and Cauchy. `f0` is the
// closed-form density of e1 - e2 at zero, i.e. the integral of f^2.
struct ErrorDistribution {
  ErrorLaw law;
  std::string name;
  double variance;
  double f0;

  bool finite_variance() const;
  double pdf(double x) const;
};

ErrorDistribution error_distribution(ErrorLaw law);
// Accepts the canonical names ("normal", "uniform", "t2", "t3", "cauchy",
// "exp", "lognormal"), case-insensitive.
ErrorDistribution error_distribution(std::string_view name);
const std::vector<ErrorLaw>& all_error_laws();

// Rows i.i.d. N(0, Sigma) with Sigma_{st} = rho^{|s-t|}, built column by
// column with the AR(1) recursion.
MatrixXd generate_ar1_gaussian(Index n, Index p, double rho, Seed seed);

VectorXd sample_error(const ErrorDistribution& dist, Index n, Seed seed);

// R_i = #{j : v_j <= v_i}. O(n log n).
std::vector<Index> ranks(const VectorXd& v);

MatrixXd center_columns(const MatrixXd& m);

// Center each column and scale it to unit (population) standard deviation.
// Constant columns are left at zero.
MatrixXd standardize_columns(const MatrixXd& m);

// Reads a header-bearing CSV (RFC 4180 quoting). `response` names the
// response column; every other column becomes a covariate.
Dataset read_csv(std::istream& in, std::string_view response);
Dataset read_csv_file(const std::string& path, std::string_view response);
void write_csv(std::ostream& out, const Dataset& data,
               std::string_view response_name);

}  // namespace pgcov
