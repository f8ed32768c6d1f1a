#include "pgcov/simharness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "pgcov/errors.hpp"

namespace pgcov {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || !std::isfinite(x)) {
    throw InputError("config: '" + key + "' expects a number, got '" + v + "'");
  }
  return x;
}

long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) {
    throw InputError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  return x;
}

std::vector<double> parse_repeat_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) {
    const auto star = item.find('*');
    if (star == std::string::npos) {
      out.push_back(parse_double(key, item));
    } else {
      const double value = parse_double(key, trim(item.substr(0, star)));
      const long long count = parse_int(key, trim(item.substr(star + 1)));
      if (count < 0) throw InputError("config: negative repeat count in '" + key + "'");
      out.insert(out.end(), static_cast<std::size_t>(count), value);
    }
  }
  return out;
}

// One-based "a, b, c-d" list to zero-based indices.
std::vector<Index> parse_index_list(const std::string& key, const std::string& v) {
  std::vector<Index> out;
  for (const auto& item : split_list(v)) {
    const auto dash = item.find('-', 1);
    long long lo = 0, hi = 0;
    if (dash == std::string::npos) {
      lo = hi = parse_int(key, item);
    } else {
      lo = parse_int(key, trim(item.substr(0, dash)));
      hi = parse_int(key, trim(item.substr(dash + 1)));
    }
    if (lo < 1 || hi < lo) throw InputError("config: bad index range '" + item + "'");
    for (long long i = lo; i <= hi; ++i) out.push_back(static_cast<Index>(i - 1));
  }
  return out;
}

StudyKind parse_kind(const std::string& v) {
  if (v == "size") return StudyKind::kSize;
  if (v == "power") return StudyKind::kPower;
  if (v == "group") return StudyKind::kGroup;
  throw InputError("config: study must be size, power or group, got '" + v + "'");
}

struct Outcome {
  std::vector<StudyRecord> records;
};

VectorXd full_beta(const StudyConfig& cfg) {
  VectorXd beta = VectorXd::Zero(cfg.p);
  for (std::size_t j = 0; j < cfg.beta.size(); ++j) {
    beta(static_cast<Index>(j)) = cfg.beta[j];
  }
  return beta;
}

std::vector<std::string> column_names(Index p) {
  std::vector<std::string> names(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) names[static_cast<std::size_t>(j)] = "x" + std::to_string(j + 1);
  return names;
}

TestOptions test_options(const StudyConfig& cfg, Seed seed) {
  TestOptions o;
  o.alpha = cfg.alpha;
  o.tau = cfg.tau;
  o.pivotal = cfg.pivotal;
  o.solver = cfg.solver;
  o.seed = seed;
  o.lambda_target_cv = cfg.lambda_target_cv;
  return o;
}

StudyRecord to_record(int rep, double signal, const TestResult& r) {
  StudyRecord rec;
  rec.rep = rep;
  rec.signal = signal;
  rec.method = r.method;
  rec.statistic = r.statistic;
  rec.p_value = r.p_value;
  rec.reject = r.reject;
  rec.converged = r.converged;
  return rec;
}

StudyRecord failed_record(int rep, double signal, Method m, const std::string& what) {
  StudyRecord rec;
  rec.rep = rep;
  rec.signal = signal;
  rec.method = m;
  rec.failed = true;
  rec.error = what;
  rec.p_value = 1.0;
  return rec;
}

Outcome run_replication(const StudyConfig& cfg, int rep, bool group) {
  const Seed seed{cfg.seed, static_cast<std::uint64_t>(rep)};
  const MatrixXd x = generate_ar1_gaussian(cfg.n, cfg.p, cfg.rho, seed);
  const VectorXd eps = sample_error(cfg.error, cfg.n, seed);
  const VectorXd base = full_beta(cfg);
  const TestOptions opts = test_options(cfg, seed);

  Outcome out;
  for (double g : cfg.grid) {
    VectorXd beta = base;
    for (Index k : cfg.target) beta(k) = g;
    const Dataset data(x * beta + eps, x, column_names(cfg.p));
    if (group) {
      try {
        out.records.push_back(to_record(rep, g, group_test(data, cfg.target, opts)));
      } catch (const NumericalError& e) {
        out.records.push_back(failed_record(rep, g, Method::kGini, e.what()));
      }
      continue;
    }
    const Index k = cfg.target.front();
    try {
      for (const auto& r : test_univariate(data, k, cfg.methods, opts)) {
        out.records.push_back(to_record(rep, g, r));
      }
    } catch (const NumericalError&) {
      // Isolate the failing method(s).
      for (Method m : cfg.methods) {
        try {
          out.records.push_back(to_record(rep, g, test_univariate(data, k, m, opts)));
        } catch (const NumericalError& e) {
          out.records.push_back(failed_record(rep, g, m, e.what()));
        }
      }
    }
  }
  return out;
}

StudyReport run_grid(const StudyConfig& cfg, bool group) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  std::vector<Outcome> outcomes(static_cast<std::size_t>(cfg.reps));
  parallel_for(cfg.reps, cfg.threads, [&](int rep) {
    outcomes[static_cast<std::size_t>(rep)] = run_replication(cfg, rep, group);
  });

  StudyReport report;
  report.config = cfg;
  const std::vector<Method> methods =
      group ? std::vector<Method>{Method::kGini} : cfg.methods;
  report.config.methods = methods;
  for (auto& o : outcomes) {
    for (auto& r : o.records) report.records.push_back(std::move(r));
  }

  int failures = 0;
  for (double g : cfg.grid) {
    for (Method m : methods) {
      StudyCell cell;
      cell.method = m;
      cell.signal = g;
      for (const auto& r : report.records) {
        if (r.method != m || r.signal != g) continue;
        ++cell.reps;
        if (r.failed) {
          ++cell.failures;
          continue;
        }
        if (r.reject) ++cell.rejections;
        if (!r.converged) ++cell.unconverged;
      }
      cell.rate = cell.reps > 0 ? static_cast<double>(cell.rejections) / cell.reps : 0.0;
      cell.se = cell.reps > 0 ? std::sqrt(cell.rate * (1.0 - cell.rate) / cell.reps) : 0.0;
      failures += cell.failures;
      report.cells.push_back(cell);
    }
  }
  const auto total = static_cast<double>(report.records.size());
  report.failure_rate = total > 0 ? failures / total : 0.0;
  report.valid = report.failure_rate <= 0.02;
  if (!report.valid) {
    report.notes.emplace_back("more than 2% of the tests failed; study flagged invalid");
  }
  report.notes.emplace_back(
      "debiased-Lasso comparators (dBeta, dBeta_b) are not implemented and omitted");
  if (!cfg.error.finite_variance()) {
    for (Method m : methods) {
      if (m == Method::kPearson || m == Method::kPearsonModified) {
        report.notes.emplace_back(
            "error law " + cfg.error.name +
            " has infinite variance; the Pearson-type tests run outside their assumptions");
        break;
      }
    }
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

std::string label(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

void write_csv(const StudyReport& r, std::ostream& out) {
  out << "method,signal,reps,rejections,failures,unconverged,rate,se\n";
  for (const auto& c : r.cells) {
    out << method_name(c.method) << ',' << fmt(c.signal) << ',' << c.reps << ','
        << c.rejections << ',' << c.failures << ',' << c.unconverged << ','
        << fmt(c.rate) << ',' << fmt(c.se) << '\n';
  }
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

void write_svg(const StudyReport& r, std::ostream& out) {
  constexpr double kW = 640, kH = 420, kL = 70, kR = 150, kT = 40, kB = 60;
  const double pw = kW - kL - kR, ph = kH - kT - kB;
  double xmin = 0.0, xmax = 1.0;
  if (!r.config.grid.empty()) {
    xmin = *std::min_element(r.config.grid.begin(), r.config.grid.end());
    xmax = *std::max_element(r.config.grid.begin(), r.config.grid.end());
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  auto sx = [&](double v) { return kL + (v - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double v) { return kT + (1.0 - v) * ph; };
  static const char* kColors[] = {"#1b5e9e", "#c0392b", "#2e8b57", "#8e44ad",
                                  "#d68910", "#555555"};

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kW
      << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << kW << "\" height=\"" << kH
      << "\" fill=\"white\"/>\n"
      << "<text x=\"" << kL << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">"
      << xml_escape(std::string(study_kind_name(r.config.kind))) << " study, error "
      << xml_escape(r.config.error.name) << ", n=" << r.config.n << ", p=" << r.config.p
      << "</text>\n";
  out << "<g stroke=\"#999\" stroke-width=\"1\" fill=\"none\">\n"
      << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << pw << "\" height=\""
      << ph << "\"/>\n";
  for (int i = 1; i < 5; ++i) {
    out << "<line x1=\"" << kL << "\" x2=\"" << kL + pw << "\" y1=\"" << sy(i / 5.0)
        << "\" y2=\"" << sy(i / 5.0) << "\" stroke-dasharray=\"2,3\"/>\n";
  }
  out << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 5; ++i) {
    out << "<text x=\"" << kL - 8 << "\" y=\"" << sy(i / 5.0) + 4
        << "\" text-anchor=\"end\">" << label(i / 5.0) << "</text>\n";
  }
  for (double g : r.config.grid) {
    out << "<text x=\"" << sx(g) << "\" y=\"" << kT + ph + 18
        << "\" text-anchor=\"middle\">" << label(g) << "</text>\n";
  }
  out << "<text x=\"" << kL + pw / 2 << "\" y=\"" << kH - 18
      << "\" text-anchor=\"middle\">signal</text>\n"
      << "<text x=\"18\" y=\"" << kT + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << kT + ph / 2 << ")\">rejection rate</text>\n</g>\n";

  const auto& methods = r.config.methods;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const char* color = kColors[mi % 6];
    std::ostringstream pts;
    for (const auto& c : r.cells) {
      if (c.method != methods[mi]) continue;
      pts << sx(c.signal) << ',' << sy(c.rate) << ' ';
    }
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
        << trim(pts.str()) << "\"/>\n";
    for (const auto& c : r.cells) {
      if (c.method != methods[mi]) continue;
      out << "<circle cx=\"" << sx(c.signal) << "\" cy=\"" << sy(c.rate)
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kT + 16 + 18 * static_cast<double>(mi);
    out << "<line x1=\"" << kL + pw + 14 << "\" x2=\"" << kL + pw + 38 << "\" y1=\"" << ly
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << kL + pw + 44 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << xml_escape(std::string(method_name(methods[mi]))) << "</text>\n";
  }
  out << "</svg>\n";
}

nlohmann::json cell_json(const StudyCell& c) {
  return {{"method", std::string(method_name(c.method))},
          {"signal", c.signal},
          {"reps", c.reps},
          {"rejections", c.rejections},
          {"failures", c.failures},
          {"unconverged", c.unconverged},
          {"rate", c.rate},
          {"se", c.se}};
}

nlohmann::json record_json(const StudyRecord& r) {
  nlohmann::json j = {{"rep", r.rep},
                      {"signal", r.signal},
                      {"method", std::string(method_name(r.method))},
                      {"failed", r.failed},
                      {"statistic", r.statistic},
                      {"p_value", r.p_value},
                      {"reject", r.reject},
                      {"converged", r.converged}};
  if (r.failed) j["error"] = r.error;
  return j;
}

StudyConfig config_from_json(const nlohmann::json& j) {
  StudyConfig c;
  c.kind = parse_kind(j.at("study").get<std::string>());
  c.n = j.at("n").get<Index>();
  c.p = j.at("p").get<Index>();
  c.rho = j.at("rho").get<double>();
  c.beta = j.at("beta").get<std::vector<double>>();
  c.error = error_distribution(j.at("error").get<std::string>());
  c.methods.clear();
  for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
  c.reps = j.at("reps").get<int>();
  c.alpha = j.at("alpha").get<double>();
  c.target.clear();
  for (const auto& t : j.at("target")) c.target.push_back(t.get<Index>() - 1);
  c.grid = j.at("grid").get<std::vector<double>>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.tau = j.at("tau").get<double>();
  c.pivotal.alpha0 = j.at("pivotal_alpha0").get<double>();
  c.pivotal.c = j.at("pivotal_c").get<double>();
  c.pivotal.draws = j.at("pivotal_draws").get<int>();
  c.solver.max_iter = j.at("max_iter").get<int>();
  c.solver.tol = j.at("tol").get<double>();
  c.solver.admm_rho = j.at("admm_rho").get<double>();
  c.solver.restart = j.at("restart").get<bool>();
  c.lambda_target_cv = j.at("lambda_target").get<std::string>() == "cv";
  return c;
}

}  // namespace

std::string_view study_kind_name(StudyKind k) {
  switch (k) {
    case StudyKind::kSize: return "size";
    case StudyKind::kPower: return "power";
    case StudyKind::kGroup: return "group";
  }
  return "unknown";
}

StudyConfig parse_study_config(std::istream& in) {
  StudyConfig cfg;
  bool kind_seen = false, target_seen = false, methods_seen = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (val.empty()) {
      throw InputError("config line " + std::to_string(lineno) + ": empty value for '" + key + "'");
    }
    if (key == "study") {
      cfg.kind = parse_kind(val);
      kind_seen = true;
    } else if (key == "n") {
      cfg.n = static_cast<Index>(parse_int(key, val));
    } else if (key == "p") {
      cfg.p = static_cast<Index>(parse_int(key, val));
    } else if (key == "rho") {
      cfg.rho = parse_double(key, val);
    } else if (key == "beta") {
      cfg.beta = parse_repeat_list(key, val);
    } else if (key == "error") {
      cfg.error = error_distribution(val);
    } else if (key == "methods") {
      cfg.methods.clear();
      for (const auto& m : split_list(val)) cfg.methods.push_back(parse_method(m));
      methods_seen = true;
    } else if (key == "reps") {
      cfg.reps = static_cast<int>(parse_int(key, val));
    } else if (key == "alpha") {
      cfg.alpha = parse_double(key, val);
    } else if (key == "target") {
      cfg.target = parse_index_list(key, val);
      target_seen = true;
    } else if (key == "grid") {
      cfg.grid = parse_repeat_list(key, val);
    } else if (key == "seed") {
      const long long s = parse_int(key, val);
      if (s < 0) throw InputError("config: seed must be non-negative");
      cfg.seed = static_cast<std::uint64_t>(s);
      cfg.seed_given = true;
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(parse_int(key, val));
    } else if (key == "tau") {
      cfg.tau = parse_double(key, val);
    } else if (key == "pivotal_alpha0") {
      cfg.pivotal.alpha0 = parse_double(key, val);
    } else if (key == "pivotal_c") {
      cfg.pivotal.c = parse_double(key, val);
    } else if (key == "pivotal_draws") {
      cfg.pivotal.draws = static_cast<int>(parse_int(key, val));
    } else if (key == "max_iter") {
      cfg.solver.max_iter = static_cast<int>(parse_int(key, val));
    } else if (key == "tol") {
      cfg.solver.tol = parse_double(key, val);
    } else if (key == "admm_rho") {
      cfg.solver.admm_rho = parse_double(key, val);
    } else if (key == "lambda_target") {
      if (val != "default" && val != "cv") {
        throw InputError("config: lambda_target expects default or cv");
      }
      cfg.lambda_target_cv = val == "cv";
    } else if (key == "restart") {
      if (val != "true" && val != "false" && val != "1" && val != "0") {
        throw InputError("config: restart expects true or false");
      }
      cfg.solver.restart = val == "true" || val == "1";
    } else {
      throw InputError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (!kind_seen) throw InputError("config: missing 'study'");
  if (!target_seen) {
    if (cfg.kind == StudyKind::kPower) {
      cfg.target = {0};
    } else if (cfg.kind == StudyKind::kGroup) {
      cfg.target = {0, 1, 2};
    }
  }
  if (cfg.kind == StudyKind::kGroup && !methods_seen) cfg.methods = {Method::kGini};
  if (cfg.kind == StudyKind::kSize) cfg.grid = {0.0};
  if (cfg.grid.empty()) throw InputError("config: '" + std::string(study_kind_name(cfg.kind)) + "' study needs a grid");
  return cfg;
}

StudyConfig read_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  return parse_study_config(in);
}

void apply_profile(StudyConfig& cfg, std::string_view profile) {
  if (profile == "desk") return;
  if (profile == "paper") {
    cfg.n = 200;
    cfg.p = 2000;
    return;
  }
  throw InputError("unknown profile '" + std::string(profile) + "' (desk or paper)");
}

void validate(const StudyConfig& cfg) {
  if (cfg.n < 2 || cfg.p < 2) throw InputError("study: need n >= 2 and p >= 2");
  if (!(cfg.rho >= 0.0 && cfg.rho < 1.0)) throw InputError("study: rho must lie in [0, 1)");
  if (cfg.reps < 1) throw InputError("study: reps must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw InputError("study: alpha must lie in (0, 1)");
  if (static_cast<Index>(cfg.beta.size()) > cfg.p) {
    throw InputError("study: beta has more entries than p");
  }
  if (cfg.target.empty()) throw InputError("study: empty target");
  std::vector<Index> sorted = cfg.target;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InputError("study: duplicate target index");
  }
  for (Index k : cfg.target) {
    if (k < 0 || k >= cfg.p) throw InputError("study: target index out of range");
  }
  if (cfg.kind != StudyKind::kGroup && cfg.target.size() != 1) {
    throw InputError("study: size and power studies take a single target");
  }
  if (cfg.kind == StudyKind::kGroup && static_cast<Index>(cfg.target.size()) >= cfg.n) {
    throw InputError("study: group size must be below n");
  }
  if (cfg.methods.empty()) throw InputError("study: no methods");
  if (cfg.grid.empty()) throw InputError("study: empty grid");
  for (double g : cfg.grid) {
    if (!(g >= 0.0)) throw InputError("study: grid values must be >= 0");
  }
  if (cfg.threads < 1) throw InputError("study: threads must be >= 1");
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) throw InputError("study: tau must lie in (0, 1)");
}

StudyReport run_size_study(const StudyConfig& cfg) {
  StudyConfig c = cfg;
  c.kind = StudyKind::kSize;
  for (Index k : c.target) {
    if (k < static_cast<Index>(c.beta.size()) && c.beta[static_cast<std::size_t>(k)] != 0.0) {
      throw InputError("size study: the target coefficient must be zero");
    }
  }
  c.grid = {0.0};
  return run_grid(c, false);
}

StudyReport run_power_study(const StudyConfig& cfg, const std::vector<double>& grid) {
  StudyConfig c = cfg;
  c.kind = StudyKind::kPower;
  c.grid = grid;
  return run_grid(c, false);
}

StudyReport run_group_study(const StudyConfig& cfg, const std::vector<Index>& s,
                            const std::vector<double>& grid) {
  StudyConfig c = cfg;
  c.kind = StudyKind::kGroup;
  c.target = s;
  c.grid = grid;
  return run_grid(c, true);
}

StudyReport run_study(const StudyConfig& cfg) {
  switch (cfg.kind) {
    case StudyKind::kSize: return run_size_study(cfg);
    case StudyKind::kPower: return run_power_study(cfg, cfg.grid);
    case StudyKind::kGroup: return run_group_study(cfg, cfg.target, cfg.grid);
  }
  throw InputError("unknown study kind");
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Dataset augment_with_permutations(const Dataset& data, int m, Seed seed,
                                  bool identity_for_tests) {
  if (m < 1) throw InputError("augment: m must be >= 1");
  const Index n = data.n();
  const Index p = data.p();
  MatrixXd x(n, p * (m + 1));
  x.leftCols(p) = data.x();
  std::vector<std::string> names = data.names();
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (int c = 1; c <= m; ++c) {
    std::iota(perm.begin(), perm.end(), Index{0});
    if (!identity_for_tests) {
      Rng rng(Seed{seed.value, static_cast<std::uint64_t>(c)}, Lane::kPermutation);
      for (Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
      }
    }
    x.middleCols(p * c, p) = data.x()(perm, Eigen::all);
    for (const auto& name : data.names()) names.push_back(name + "_perm" + std::to_string(c));
  }
  return Dataset(data.y(), std::move(x), std::move(names));
}

std::vector<AuditRow> rejection_audit(const Dataset& data,
                                      const std::vector<Index>& cols,
                                      const std::vector<Method>& methods,
                                      const std::vector<double>& alphas,
                                      const TestOptions& opts, int threads) {
  std::vector<AuditRow> rows;
  if (methods.empty()) return rows;
  for (double a : alphas) {
    if (!(a > 0.0 && a < 1.0)) throw InputError("audit: alpha must lie in (0, 1)");
  }
  for (Index k : cols) {
    if (k < 0 || k >= data.p()) throw InputError("audit: column index out of range");
  }
  // p-values per column and method; NaN marks a failed test.
  std::vector<std::vector<double>> pvals(cols.size());
  parallel_for(static_cast<int>(cols.size()), threads, [&](int c) {
    const Index k = cols[static_cast<std::size_t>(c)];
    TestOptions o = opts;
    o.seed = Seed{opts.seed.value, static_cast<std::uint64_t>(k)};
    auto& out = pvals[static_cast<std::size_t>(c)];
    out.assign(methods.size(), std::numeric_limits<double>::quiet_NaN());
    try {
      const auto results = test_univariate(data, k, methods, o);
      for (std::size_t m = 0; m < methods.size(); ++m) out[m] = results[m].p_value;
    } catch (const NumericalError&) {
      for (std::size_t m = 0; m < methods.size(); ++m) {
        try {
          out[m] = test_univariate(data, k, methods[m], o).p_value;
        } catch (const NumericalError&) {
        }
      }
    }
  });
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (double a : alphas) {
      AuditRow row;
      row.method = methods[m];
      row.alpha = a;
      for (const auto& pv : pvals) {
        ++row.tested;
        if (std::isnan(pv[m])) {
          ++row.failures;
        } else if (pv[m] < a) {
          ++row.rejections;
        }
      }
      row.proportion = row.tested > 0 ? static_cast<double>(row.rejections) / row.tested : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

nlohmann::json to_json(const StudyConfig& c) {
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : c.methods) methods.push_back(std::string(method_name(m)));
  std::vector<Index> target;
  for (Index k : c.target) target.push_back(k + 1);
  return {{"study", std::string(study_kind_name(c.kind))},
          {"n", c.n},
          {"p", c.p},
          {"rho", c.rho},
          {"beta", c.beta},
          {"error", c.error.name},
          {"methods", methods},
          {"reps", c.reps},
          {"alpha", c.alpha},
          {"target", target},
          {"grid", c.grid},
          {"seed", c.seed},
          {"tau", c.tau},
          {"pivotal_alpha0", c.pivotal.alpha0},
          {"pivotal_c", c.pivotal.c},
          {"pivotal_draws", c.pivotal.draws},
          {"max_iter", c.solver.max_iter},
          {"tol", c.solver.tol},
          {"admm_rho", c.solver.admm_rho},
          {"restart", c.solver.restart},
          {"lambda_target", c.lambda_target_cv ? "cv" : "default"}};
}

nlohmann::json to_json(const StudyReport& r) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["format_version"] = r.format_version;
  j["config"] = to_json(r.config);
  j["cells"] = nlohmann::json::array();
  for (const auto& c : r.cells) j["cells"].push_back(cell_json(c));
  j["records"] = nlohmann::json::array();
  for (const auto& rec : r.records) j["records"].push_back(record_json(rec));
  j["failure_rate"] = r.failure_rate;
  j["valid"] = r.valid;
  j["notes"] = r.notes;
  return j;
}

nlohmann::json to_json(const std::vector<AuditRow>& rows) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"method", std::string(method_name(r.method))},
                         {"alpha", r.alpha},
                         {"tested", r.tested},
                         {"rejections", r.rejections},
                         {"failures", r.failures},
                         {"proportion", r.proportion}});
  }
  return j;
}

StudyReport report_from_json(const nlohmann::json& j) {
  StudyReport r;
  r.format_version = j.at("format_version").get<int>();
  r.config = config_from_json(j.at("config"));
  for (const auto& c : j.at("cells")) {
    StudyCell cell;
    cell.method = parse_method(c.at("method").get<std::string>());
    cell.signal = c.at("signal").get<double>();
    cell.reps = c.at("reps").get<int>();
    cell.rejections = c.at("rejections").get<int>();
    cell.failures = c.at("failures").get<int>();
    cell.unconverged = c.at("unconverged").get<int>();
    cell.rate = c.at("rate").get<double>();
    cell.se = c.at("se").get<double>();
    r.cells.push_back(cell);
  }
  for (const auto& x : j.at("records")) {
    StudyRecord rec;
    rec.rep = x.at("rep").get<int>();
    rec.signal = x.at("signal").get<double>();
    rec.method = parse_method(x.at("method").get<std::string>());
    rec.failed = x.at("failed").get<bool>();
    if (rec.failed) rec.error = x.at("error").get<std::string>();
    rec.statistic = x.at("statistic").get<double>();
    rec.p_value = x.at("p_value").get<double>();
    rec.reject = x.at("reject").get<bool>();
    rec.converged = x.at("converged").get<bool>();
    r.records.push_back(std::move(rec));
  }
  r.failure_rate = j.at("failure_rate").get<double>();
  r.valid = j.at("valid").get<bool>();
  r.notes = j.at("notes").get<std::vector<std::string>>();
  return r;
}

void write_report(const StudyReport& report, ReportFormat format, std::ostream& out) {
  switch (format) {
    case ReportFormat::kCsv: write_csv(report, out); break;
    case ReportFormat::kJson: out << to_json(report).dump(2) << '\n'; break;
    case ReportFormat::kSvg: write_svg(report, out); break;
  }
}

void emit_report(const StudyReport& report, ReportFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write report '" + path + "'");
  write_report(report, format, out);
  out.flush();
  if (!out) throw InputError("failed writing report '" + path + "'");
}

}  // namespace pgcov
