// pgcov: command-line front end for partial Gini covariance tests, Monte
// Carlo studies, efficiency tables and permutation audits.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pgcov/datamodel.hpp"
#include "pgcov/errors.hpp"
#include "pgcov/inference.hpp"
#include "pgcov/simharness.hpp"

namespace {

using namespace pgcov;
using nlohmann::json;

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitInvalidStudy = 4;

struct Common {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool json = false;
};

struct Tuning {
  double alpha = 0.05;
  double tau = 0.5;
  double pivotal_c = 1.1;
  double pivotal_alpha0 = 0.1;
  int pivotal_draws = 500;
  int max_iter = 5000;
  double tol = 1e-6;
  double admm_rho = 1.0;
  bool restart = false;
  std::optional<double> lambda_response;
  std::optional<double> lambda_target;
  bool lambda_target_cv = false;
};

int resolved_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t s = ((static_cast<std::uint64_t>(rd()) << 32) | rd()) >> 1;
  std::cerr << "seed: " << s << " (generated; pass --seed " << s
            << " to reproduce)\n";
  return s;
}

void add_common(CLI::App* cmd, Common& c, bool randomized) {
  if (randomized) {
    cmd->add_option("--seed", c.seed,
                    "RNG seed; a fresh seed is generated and printed when omitted");
  }
  cmd->add_option("--threads", c.threads,
                  "worker threads (default: number of logical cores)");
  cmd->add_flag("--json", c.json, "machine-readable JSON on stdout");
}

void add_tuning(CLI::App* cmd, Tuning& t) {
  cmd->add_option("--alpha", t.alpha, "test level")->capture_default_str();
  cmd->add_option("--tau", t.tau, "quantile level for pqcov")->capture_default_str();
  cmd->add_option("--pivotal-c", t.pivotal_c,
                  "multiplier c of the pivotal rank-Lasso lambda (c > 1)")
      ->capture_default_str();
  cmd->add_option("--pivotal-alpha0", t.pivotal_alpha0,
                  "upper quantile level alpha0 of the pivotal simulation")
      ->capture_default_str();
  cmd->add_option("--pivotal-draws", t.pivotal_draws,
                  "number B of pivotal permutation draws")
      ->capture_default_str();
  cmd->add_option("--max-iter", t.max_iter, "solver iteration cap")->capture_default_str();
  cmd->add_option("--tol", t.tol, "solver tolerance (ADMM duality gap, CD KKT)")
      ->capture_default_str();
  cmd->add_option("--admm-rho", t.admm_rho, "ADMM penalty parameter")
      ->capture_default_str();
  cmd->add_flag("--restart", t.restart, "adaptive restart of the ADMM iteration");
  cmd->add_option("--lambda-response", t.lambda_response,
                  "override the response-fit lambda (default: pivotal for the "
                  "rank Lasso, scaled Lasso for least squares, "
                  "1.1 sqrt(tau(1-tau)) max-col-rms sqrt(2 log q / n) for quantile)");
  cmd->add_option("--lambda-target", t.lambda_target,
                  "override the x_k Lasso lambda (default: 1.1 sd(x_k) sqrt(2 log q / n))");
  cmd->add_flag("--lambda-target-cv", t.lambda_target_cv,
                "choose the x_k Lasso lambda by 5-fold cross-validation");
}

TestOptions test_options(const Tuning& t, std::uint64_t seed) {
  TestOptions o;
  o.alpha = t.alpha;
  o.tau = t.tau;
  o.pivotal = {t.pivotal_alpha0, t.pivotal_c, t.pivotal_draws};
  o.solver.max_iter = t.max_iter;
  o.solver.tol = t.tol;
  o.solver.admm_rho = t.admm_rho;
  o.solver.restart = t.restart;
  o.seed = Seed{seed, 0};
  o.lambda_response = t.lambda_response;
  o.lambda_target = t.lambda_target;
  o.lambda_target_cv = t.lambda_target_cv;
  return o;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(parse_method(n));
  return out;
}

std::vector<Index> columns(const Dataset& d, const std::vector<std::string>& names) {
  std::vector<Index> out;
  for (const auto& n : names) out.push_back(d.column(n));
  return out;
}

void print_test(const TestResult& r, const Dataset& d) {
  std::string tgt;
  for (Index k : r.targets) tgt += (tgt.empty() ? "" : ",") + d.names()[static_cast<std::size_t>(k)];
  std::printf("method      %s\n", std::string(method_name(r.method)).c_str());
  std::printf("target      %s\n", tgt.c_str());
  if (r.df == 0) {
    std::printf("statistic   %.6f (two-sided N(0,1))\n", r.statistic);
  } else {
    std::printf("statistic   %.6f (chi-square, df %d)\n", r.statistic, r.df);
  }
  std::printf("p-value     %.6g\n", r.p_value);
  std::printf("decision    %s at alpha %.3g\n", r.reject ? "reject" : "retain", r.alpha);
  std::printf("lambda      response %.6g, target", r.lambdas.response);
  for (double l : r.lambdas.target) std::printf(" %.6g", l);
  std::printf("\n");
  for (const auto& note : r.notes) std::printf("note        %s\n", note.c_str());
}

void warn_notes(const TestResult& r) {
  for (const auto& note : r.notes) std::cerr << "warning: " << note << '\n';
}

int cmd_test(const std::string& path, const std::string& response,
             const std::string& target, const std::vector<std::string>& method_names,
             const Tuning& t, const Common& c) {
  const Dataset d = read_csv_file(path, response);
  const Index k = d.column(target);
  const auto methods = parse_methods(method_names);
  const std::uint64_t seed = resolve_seed(c.seed);
  const auto results = test_univariate(d, k, methods, test_options(t, seed));
  if (c.json) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = seed;
    j["results"] = json::array();
    for (const auto& r : results) j["results"].push_back(to_json(r));
    std::cout << j.dump(2) << '\n';
    for (const auto& r : results) warn_notes(r);
  } else {
    std::printf("seed        %llu\n", static_cast<unsigned long long>(seed));
    bool first = true;
    for (const auto& r : results) {
      if (!first) std::printf("\n");
      first = false;
      print_test(r, d);
    }
  }
  return 0;
}

int cmd_group(const std::string& path, const std::string& response,
              const std::vector<std::string>& targets, const Tuning& t, const Common& c) {
  const Dataset d = read_csv_file(path, response);
  const auto s = columns(d, targets);
  const std::uint64_t seed = resolve_seed(c.seed);
  const TestResult r = group_test(d, s, test_options(t, seed));
  if (c.json) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = seed;
    j["results"] = json::array({to_json(r)});
    std::cout << j.dump(2) << '\n';
    warn_notes(r);
  } else {
    std::printf("seed        %llu\n", static_cast<unsigned long long>(seed));
    print_test(r, d);
  }
  return 0;
}

int cmd_are(const std::vector<std::string>& dists, const Common& c) {
  std::vector<ErrorDistribution> list;
  if (dists.empty()) {
    for (ErrorLaw law : all_error_laws()) {
      const auto e = error_distribution(law);
      if (e.finite_variance()) list.push_back(e);
    }
  } else {
    for (const auto& n : dists) list.push_back(error_distribution(n));
  }
  std::vector<AREResult> res;
  for (const auto& e : list) res.push_back(are_gini_vs_pearson(e));
  if (c.json) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["results"] = json::array();
    for (const auto& r : res) j["results"].push_back(to_json(r));
    std::cout << j.dump(2) << '\n';
  } else {
    std::printf("%-10s %10s %12s %12s\n", "law", "are", "variance", "f0");
    for (const auto& r : res) {
      std::printf("%-10s %10.3f %12.6g %12.6g\n", r.distribution.name.c_str(),
                  r.are, r.var_used, r.f0_used);
    }
  }
  return 0;
}

StudyKind kind_for(const std::string& sub) {
  if (sub == "simulate-size") return StudyKind::kSize;
  if (sub == "simulate-power") return StudyKind::kPower;
  return StudyKind::kGroup;
}

int cmd_simulate(const std::string& sub, const std::string& config_path,
                 const std::string& out_dir, const std::string& profile,
                 const Common& c) {
  StudyConfig cfg = read_study_config(config_path);
  if (cfg.kind != kind_for(sub)) {
    throw InputError("config declares study = " + std::string(study_kind_name(cfg.kind)) +
                     ", which does not match " + sub);
  }
  apply_profile(cfg, profile);
  if (c.seed) {
    cfg.seed = *c.seed;
  } else if (!cfg.seed_given) {
    cfg.seed = resolve_seed(std::nullopt);
  }
  cfg.threads = resolved_threads(c.threads);
  validate(cfg);
  std::cerr << "seed: " << cfg.seed << '\n';

  const StudyReport report = run_study(cfg);

  std::filesystem::create_directories(out_dir);
  const std::string stem = (std::filesystem::path(out_dir) /
                            std::string(study_kind_name(cfg.kind))).string();
  emit_report(report, ReportFormat::kCsv, stem + ".csv");
  emit_report(report, ReportFormat::kJson, stem + ".json");
  if (cfg.kind != StudyKind::kSize) emit_report(report, ReportFormat::kSvg, stem + ".svg");

  if (c.json) {
    json j = to_json(report);
    j.erase("records");
    std::cout << j.dump(2) << '\n';
  } else {
    std::printf("%-10s %8s %6s %8s %8s %8s\n", "method", "signal", "reps", "rate", "se",
                "failed");
    for (const auto& cell : report.cells) {
      std::printf("%-10s %8.3f %6d %8.3f %8.3f %8d\n",
                  std::string(method_name(cell.method)).c_str(), cell.signal, cell.reps,
                  cell.rate, cell.se, cell.failures);
    }
    for (const auto& note : report.notes) std::printf("note: %s\n", note.c_str());
    std::printf("reports written to %s.{csv,json%s}\n", stem.c_str(),
                cfg.kind != StudyKind::kSize ? ",svg" : "");
  }
  if (!report.valid) {
    std::cerr << "error: study flagged invalid (failure rate " << report.failure_rate
              << ")\n";
    return kExitInvalidStudy;
  }
  return 0;
}

int cmd_augment(const std::string& path, const std::string& response, int m,
                const std::string& out_path, const Common& c) {
  const Dataset d = read_csv_file(path, response);
  const std::uint64_t seed = resolve_seed(c.seed);
  const Dataset aug = augment_with_permutations(d, m, Seed{seed, 0});
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + out_path + "'");
  write_csv(out, aug, response);
  if (!out) throw InputError("failed writing '" + out_path + "'");
  if (c.json) {
    json j{{"schema_version", kSchemaVersion},
           {"seed", seed},
           {"n", aug.n()},
           {"p_original", d.p()},
           {"p_augmented", aug.p()},
           {"output", out_path}};
    std::cout << j.dump(2) << '\n';
  } else {
    std::printf("seed %llu: %lld predictors -> %lld, written to %s\n",
                static_cast<unsigned long long>(seed), static_cast<long long>(d.p()),
                static_cast<long long>(aug.p()), out_path.c_str());
  }
  return 0;
}

int cmd_audit(const std::string& path, const std::string& response, int m,
              bool pre_augmented, const std::vector<std::string>& method_names,
              const std::vector<double>& alphas, const Tuning& t, const Common& c) {
  const Dataset d = read_csv_file(path, response);
  const std::uint64_t seed = resolve_seed(c.seed);
  std::optional<Dataset> aug;
  std::vector<Index> cols;
  if (pre_augmented) {
    for (Index k = 0; k < d.p(); ++k) {
      if (d.names()[static_cast<std::size_t>(k)].find("_perm") != std::string::npos) {
        cols.push_back(k);
      }
    }
    if (cols.empty()) throw InputError("no columns named *_perm* in " + path);
    aug.emplace(d);
  } else {
    aug.emplace(augment_with_permutations(d, m, Seed{seed, 0}));
    for (Index k = d.p(); k < aug->p(); ++k) cols.push_back(k);
  }
  const auto rows = rejection_audit(*aug, cols, parse_methods(method_names), alphas,
                                    test_options(t, seed), resolved_threads(c.threads));
  if (c.json) {
    json j = to_json(rows);
    j["seed"] = seed;
    j["null_columns"] = cols.size();
    std::cout << j.dump(2) << '\n';
  } else {
    std::printf("seed %llu, %zu null columns\n", static_cast<unsigned long long>(seed),
                cols.size());
    std::printf("%-10s %8s %8s %10s %8s %10s\n", "method", "alpha", "tested",
                "rejected", "failed", "proportion");
    for (const auto& r : rows) {
      std::printf("%-10s %8.3f %8d %10d %8d %10.4f\n",
                  std::string(method_name(r.method)).c_str(), r.alpha, r.tested,
                  r.rejections, r.failures, r.proportion);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const auto start = std::chrono::steady_clock::now();

  CLI::App app{
      "pgcov: partial Gini covariance tests for high-dimensional linear models.\n"
      "Defaults: pivotal lambda c=1.1, alpha0=0.1, B=500 draws; solver tol=1e-6,\n"
      "max_iter=5000, admm_rho=1. Exit status: 0 ok, 2 input error,\n"
      "3 numerical failure, 4 study flagged invalid."};
  app.require_subcommand(1);

  Common common;
  Tuning tuning;
  std::string data, response, target, config, out_dir = ".", profile = "desk", out_path;
  std::vector<std::string> methods{"pgcov"};
  std::vector<std::string> targets, dists;
  std::vector<double> alphas{0.01, 0.05, 0.1};
  int m = 20;
  bool pre_augmented = false;

  auto* test = app.add_subcommand("test", "test H0: beta_k = 0 for one covariate");
  test->add_option("--data", data, "CSV file with a header row")->required();
  test->add_option("--response", response, "response column")->required();
  test->add_option("--target", target, "covariate to test")->required();
  test->add_option("--method", methods,
                   "pgcov, pqcov, ppcov or ppcov_m (repeatable)")
      ->capture_default_str();
  add_tuning(test, tuning);
  add_common(test, common, true);

  auto* group = app.add_subcommand("group-test", "chi-square test of H0: beta_S = 0");
  group->add_option("--data", data, "CSV file with a header row")->required();
  group->add_option("--response", response, "response column")->required();
  group->add_option("--targets", targets, "covariates in S (comma separated)")
      ->required()
      ->delimiter(',');
  add_tuning(group, tuning);
  add_common(group, common, true);

  std::vector<CLI::App*> sims;
  for (const char* name : {"simulate-size", "simulate-power", "simulate-group"}) {
    auto* sim = app.add_subcommand(name, "run a Monte Carlo study from a config file");
    sim->add_option("--config", config, "key = value study configuration")->required();
    sim->add_option("--out", out_dir, "directory for the csv/json/svg reports")
        ->capture_default_str();
    sim->add_option("--profile", profile, "desk (config as written) or paper (n=200, p=2000)")
        ->check(CLI::IsMember({"desk", "paper"}))
        ->capture_default_str();
    add_common(sim, common, true);
    sims.push_back(sim);
  }

  auto* are = app.add_subcommand("are", "asymptotic relative efficiency of pgcov vs ppcov");
  are->add_option("--dist", dists,
                  "normal, uniform, t3, exp, lognormal (default: all finite-variance laws)");
  add_common(are, common, false);

  auto* augment = app.add_subcommand("augment", "append row-permuted predictor copies");
  augment->add_option("--data", data, "CSV file with a header row")->required();
  augment->add_option("--response", response, "response column")->required();
  augment->add_option("-m,--copies", m, "number of permuted copies")->capture_default_str();
  augment->add_option("--output", out_path, "CSV to write")->required();
  add_common(augment, common, true);

  auto* audit = app.add_subcommand("audit", "rejection proportions over permuted null columns");
  audit->add_option("--data", data, "CSV file with a header row")->required();
  audit->add_option("--response", response, "response column")->required();
  audit->add_option("-m,--copies", m, "permuted copies to append")->capture_default_str();
  audit->add_flag("--augmented", pre_augmented,
                  "input already augmented; audit the *_perm* columns");
  audit->add_option("--method", methods, "methods to audit (repeatable)")
      ->capture_default_str();
  audit->add_option("--alphas", alphas, "levels (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  add_tuning(audit, tuning);
  add_common(audit, common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  int status = 0;
  try {
    if (test->parsed()) {
      status = cmd_test(data, response, target, methods, tuning, common);
    } else if (group->parsed()) {
      status = cmd_group(data, response, targets, tuning, common);
    } else if (are->parsed()) {
      status = cmd_are(dists, common);
    } else if (augment->parsed()) {
      status = cmd_augment(data, response, m, out_path, common);
    } else if (audit->parsed()) {
      status = cmd_audit(data, response, m, pre_augmented, methods, alphas, tuning, common);
    } else {
      for (auto* sim : sims) {
        if (sim->parsed()) status = cmd_simulate(sim->get_name(), config, out_dir, profile, common);
      }
    }
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    status = kExitInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    status = kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    status = kExitInput;
  }

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::fprintf(stderr, "runtime: %.3f s\n", secs);
  return status;
}
