#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "pgcov/datamodel.hpp"
#include "pgcov/inference.hpp"

namespace pgcov {

enum class StudyKind { kSize, kPower, kGroup };

std::string_view study_kind_name(StudyKind k);

struct StudyConfig {
  StudyKind kind = StudyKind::kSize;
  Index n = 200;
  Index p = 100;
  double rho = 0.5;
  std::vector<double> beta;  // leading coefficients; the rest are zero
  ErrorDistribution error = error_distribution(ErrorLaw::kNormal);
  std::vector<Method> methods{Method::kGini, Method::kQuantile, Method::kPearson,
                              Method::kPearsonModified};
  int reps = 500;
  double alpha = 0.05;
  std::vector<Index> target{10};  // zero-based
  std::vector<double> grid;       // signal values for power/group studies
  std::uint64_t seed = 0;
  bool seed_given = false;  // set by the parser when the file names a seed
  int threads = 1;
  double tau = 0.5;
  PivotalOptions pivotal;
  SolverOptions solver;
  bool lambda_target_cv = false;  // cross-validate the x_k Lasso fits
};

// Plain-text "key = value" configuration; '#' starts a comment. Indices in
// `target` are one-based. `beta` and `grid` are comma lists where "v*k"
// repeats v k times. Unknown keys and malformed values throw InputError.
StudyConfig parse_study_config(std::istream& in);
StudyConfig read_study_config(const std::string& path);

// "desk" leaves the configuration as written; "paper" sets (n, p) = (200, 2000).
void apply_profile(StudyConfig& cfg, std::string_view profile);

void validate(const StudyConfig& cfg);

struct StudyCell {
  Method method = Method::kGini;
  double signal = 0.0;
  int reps = 0;
  int rejections = 0;
  int failures = 0;
  int unconverged = 0;
  double rate = 0.0;
  double se = 0.0;  // binomial standard error sqrt(rate (1 - rate) / reps)
};

struct StudyRecord {
  int rep = 0;
  double signal = 0.0;
  Method method = Method::kGini;
  bool failed = false;
  std::string error;
  double statistic = 0.0;
  double p_value = 1.0;
  bool reject = false;
  bool converged = true;
};

struct StudyReport {
  int format_version = 1;
  StudyConfig config;
  std::vector<StudyCell> cells;
  std::vector<StudyRecord> records;
  double failure_rate = 0.0;
  bool valid = true;  // false when more than 2% of the tests failed
  std::vector<std::string> notes;
  double runtime_seconds = 0.0;  // informational, never serialized
};

// Y = X beta + eps with X ~ AR(1) Gaussian and eps from the configured law.
// Replication r draws X and eps from Seed{seed, r} (separate lanes), reused
// for every grid value, so grid point 0 of a power study reproduces the size
// study exactly. Results do not depend on cfg.threads.
StudyReport run_size_study(const StudyConfig& cfg);
StudyReport run_power_study(const StudyConfig& cfg, const std::vector<double>& grid);
StudyReport run_group_study(const StudyConfig& cfg, const std::vector<Index>& s,
                            const std::vector<double>& grid);
// Dispatches on cfg.kind with cfg.grid and cfg.target.
StudyReport run_study(const StudyConfig& cfg);

// Appends m row-permuted copies of the covariate block; copy c uses one
// permutation for all its columns and names them "<name>_perm<c>".
// identity_for_tests replaces every permutation by the identity.
Dataset augment_with_permutations(const Dataset& data, int m, Seed seed,
                                  bool identity_for_tests = false);

struct AuditRow {
  Method method = Method::kGini;
  double alpha = 0.05;
  int tested = 0;
  int rejections = 0;
  int failures = 0;
  double proportion = 0.0;
};

// Rejection proportions over the known-null columns `cols` (zero-based),
// per method and alpha. Column k uses Seed{opts.seed.value, k} for its
// pivotal simulation; columns run on `threads` workers.
std::vector<AuditRow> rejection_audit(const Dataset& data,
                                      const std::vector<Index>& cols,
                                      const std::vector<Method>& methods,
                                      const std::vector<double>& alphas,
                                      const TestOptions& opts = {}, int threads = 1);

enum class ReportFormat { kCsv, kJson, kSvg };

void write_report(const StudyReport& report, ReportFormat format, std::ostream& out);
// Writes to `path`; throws InputError if the file cannot be written.
void emit_report(const StudyReport& report, ReportFormat format,
                 const std::string& path);

nlohmann::json to_json(const StudyConfig& cfg);
nlohmann::json to_json(const StudyReport& report);
nlohmann::json to_json(const std::vector<AuditRow>& rows);
StudyReport report_from_json(const nlohmann::json& j);

// Runs fn(i) for i in [0, count) on up to `threads` workers. Exceptions are
// rethrown after all workers finish.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace pgcov
