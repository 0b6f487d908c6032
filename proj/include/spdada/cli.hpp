#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spdada/checks.hpp"
#include "spdada/harness.hpp"

namespace spdada::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitMaxIter = 2;
inline constexpr int kExitNumericalFailure = 3;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitDataError = 65;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunFlags {
  std::string problem;
  std::size_t n = 0;
  std::optional<std::size_t> m;
  std::optional<double> a, b;
  std::string solver;
  double eta = 10.0;
  double beta0 = 1.0;
  double tol = 1e-4;
  std::size_t max_iter = 1000;
  double armijo_rho = 1e-4;
  double armijo_omega = 0.5;
  double armijo_alpha0 = 1.0;
  std::string armijo_trial = "fixed";
  double eig_lo = 0.0;
  double eig_hi = 20.0;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::string out;
  std::string instances_out;
};

struct ProfileFlags {
  std::vector<std::string> inputs;
  std::string metric = "expmaps";
  std::string out;
};

struct CheckFlags {
  std::string suite;
  std::string trace;
  std::optional<double> L, kappa, d0, mu;
  std::size_t n = 0;
  double a = 1.0, b = 1.0;
  std::uint64_t seed = 2025;
  std::size_t samples = 10000;
  double eps = 1e-6;
  std::string out;
};

struct DemoFlags {
  int figure = 1;
  std::uint64_t seed = 2025;
  std::size_t count = 100;
  std::string out_dir;
};

inline SolverConfig solver_config(const RunFlags& f) {
  SolverConfig c;
  c.kind = parse_solver_kind(f.solver);
  c.eta = f.eta;
  c.beta0 = f.beta0;
  c.tol_grad = f.tol;
  c.max_iter = f.max_iter;
  c.armijo = {f.armijo_rho, f.armijo_omega, f.armijo_alpha0, parse_trial_rule(f.armijo_trial)};
  c.validate();
  return c;
}

inline InstanceSpec instance_spec(const RunFlags& f) {
  InstanceSpec s;
  s.problem = parse_objective_kind(f.problem);
  if (f.m && s.problem != ObjectiveKind::KarcherMean) throw UsageError("--m applies to --problem karcher only");
  if ((f.a || f.b) && s.problem != ObjectiveKind::PlQuartic) {
    throw UsageError("--a/--b apply to --problem pl only");
  }
  s.n = f.n;
  s.m = f.m.value_or(5);
  s.a = f.a.value_or(1.0);
  s.b = f.b.value_or(1.0);
  s.eig_range = {f.eig_lo, f.eig_hi};
  s.seed = f.seed;
  s.count = f.count;
  s.validate();
  return s;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::InvalidInput, "cannot write " + path);
  return os;
}

inline int status_exit_code(const std::vector<RunTrace>& traces) {
  bool max_iter = false;
  for (const auto& t : traces) {
    if (t.status == RunStatus::NumericalFailure) return kExitNumericalFailure;
    max_iter = max_iter || t.status == RunStatus::MaxIter;
  }
  return max_iter ? kExitMaxIter : kExitOk;
}

inline std::vector<std::string> trace_preamble(const InstanceSpec& spec, const SolverConfig& cfg) {
  return {"spdada trace v1", config_line(cfg), spec_line(spec)};
}

inline int cmd_run(const RunFlags& f, std::ostream& out) {
  const InstanceSpec spec = instance_spec(f);
  const SolverConfig cfg = solver_config(f);
  const auto preamble = trace_preamble(spec, cfg);
  for (const auto& line : preamble) out << "# " << line << '\n';
  out << "# out=" << f.out << " threads=" << worker_count() << '\n';
  if (!f.instances_out.empty()) {
    auto os = open_out(f.instances_out);
    os << instances_json(spec).dump(1) << '\n';
  }
  const auto traces = run_batch(spec, {cfg});
  auto os = open_out(f.out);
  write_trace_csv(os, traces, preamble);
  std::map<std::string, int> tally;
  for (const auto& t : traces) ++tally[std::string(to_string(t.status))];
  for (const auto& [status, n] : tally) out << status << ": " << n << '\n';
  return status_exit_code(traces);
}

inline std::vector<std::string> profile_preamble(const ProfileTable& t) {
  std::string solvers;
  for (const auto& s : t.solvers) solvers += (solvers.empty() ? "" : ",") + s;
  return {"spdada profile v1", "metric=" + std::string(to_string(t.metric)) +
                                   " problems=" + std::to_string(t.problems.size()) +
                                   " solvers=" + solvers};
}

inline int cmd_profile(const ProfileFlags& f, std::ostream& out, std::ostream& err) {
  const ProfileMetric metric = parse_profile_metric(f.metric);
  if (metric == ProfileMetric::Time) {
    err << "warning: time profiles depend on the machine and load; use expmaps or iters for "
           "reproducible comparisons\n";
  }
  std::vector<RunTrace> all;
  std::optional<std::set<std::string>> problem_set;
  for (const auto& path : f.inputs) {
    auto file = read_trace_csv(path);
    std::map<std::string, std::set<std::string>> per_solver;
    for (const auto& t : file.traces) per_solver[std::string(to_string(t.config.kind))].insert(t.problem + ":" + t.run_id);
    for (const auto& [solver, set] : per_solver) {
      if (!problem_set) problem_set = set;
      if (set != *problem_set) {
        err << "error: " << path << " (" << solver << ") covers a different problem set\n";
        return kExitDataError;
      }
    }
    for (auto& t : file.traces) all.push_back(std::move(t));
  }
  ProfileTable table;
  try {
    table = performance_profile(all, metric);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  }
  auto os = open_out(f.out);
  auto preamble = profile_preamble(table);
  for (const auto& in : f.inputs) preamble.push_back("input=" + std::filesystem::path(in).filename().string());
  write_profile_csv(os, table, preamble);
  out << "# profile over " << table.problems.size() << " problems, " << table.solvers.size()
      << " solvers, metric " << to_string(metric) << '\n';
  return kExitOk;
}

inline int cmd_check(const CheckFlags& f, std::ostream& out) {
  std::vector<AuditRow> rows;
  std::vector<std::string> preamble{"spdada audit v1", "suite=" + f.suite + " seed=" + std::to_string(f.seed)};
  if (f.suite == "geometry") {
    GeometrySuiteOptions o;
    o.seed = f.seed;
    rows = geometry_suite(o);
  } else if (f.suite == "gradients") {
    GradientSuiteOptions o;
    o.seed = f.seed;
    if (f.n) o.n = f.n;
    o.a = f.a;
    o.b = f.b;
    rows = gradient_suite(o);
  } else if (f.suite == "pl") {
    PlSuiteOptions o;
    o.seed = f.seed;
    if (f.n) o.n = f.n;
    o.a = f.a;
    o.b = f.b;
    o.samples = f.samples;
    rows = pl_suite(o);
  } else if (f.suite == "theory") {
    if (!f.L) throw UsageError("--suite theory needs --L (no analytic L is assumed)");
    if (f.trace.empty()) throw UsageError("--suite theory needs --trace");
    const auto file = read_trace_csv(f.trace);
    TheorySuiteOptions o;
    o.L = *f.L;
    o.kappa = f.kappa;
    o.d0 = f.d0;
    o.mu = f.mu;
    o.eps_f = f.eps;
    preamble.push_back("L=" + fmt_real(*f.L) + " L_source=flag trace=" +
                       std::filesystem::path(f.trace).filename().string());
    rows = theory_suite(file, o);
    if (const auto info = problem_info(file.preamble); info && info->problem == "logdet") {
      for (auto& r : descent_lemma_suite(info->n, *f.L, f.seed)) rows.push_back(r);
    }
  } else {
    throw UsageError("unknown suite '" + f.suite + "'");
  }
  if (f.out.empty()) {
    write_audit_csv(out, rows, preamble);
  } else {
    auto os = open_out(f.out);
    write_audit_csv(os, rows, preamble);
    std::size_t failed = 0;
    for (const auto& r : rows) failed += !r.pass;
    out << "# " << rows.size() << " checks, " << failed << " failed\n";
  }
  return all_pass(rows) ? kExitOk : kExitCheckFailed;
}

/// Generate, run all three solvers, profile and audit one experiment class.
inline int cmd_demo(const DemoFlags& f, std::ostream& out) {
  namespace fs = std::filesystem;
  if (f.figure != 1 && f.figure != 2) throw UsageError("--figure must be 1 or 2");
  InstanceSpec spec;
  spec.seed = f.seed;
  spec.count = f.count;
  if (f.figure == 1) {
    spec.problem = ObjectiveKind::LogDetQuadratic;
    spec.n = 10;
  } else {
    spec.problem = ObjectiveKind::KarcherMean;
    spec.n = 20;
    spec.m = 5;
  }
  const fs::path dir = f.out_dir.empty()
                           ? fs::path("demo-figure" + std::to_string(f.figure) + "-seed" + std::to_string(f.seed))
                           : fs::path(f.out_dir);
  fs::create_directories(dir);

  std::vector<SolverConfig> configs(3);
  configs[0].kind = SolverKind::MAdaGrad;
  configs[1].kind = SolverKind::RWNGrad;
  configs[2].kind = SolverKind::Armijo;

  out << "# " << spec_line(spec) << '\n';
  {
    auto os = open_out((dir / "instances.json").string());
    os << instances_json(spec).dump(1) << '\n';
  }
  nlohmann::json manifest;
  manifest["figure"] = f.figure;
  manifest["spec"] = spec_line(spec);
  manifest["instances"] = "instances.json";

  std::vector<RunTrace> all;
  std::vector<RunTrace> madagrad;
  for (const auto& cfg : configs) {
    out << "# " << config_line(cfg) << '\n';
    BatchOptions bo;
    bo.keep_iterates = f.figure == 2 && cfg.kind == SolverKind::MAdaGrad;
    auto traces = run_batch(spec, {cfg}, bo);
    const std::string name = "traces_" + std::string(to_string(cfg.kind)) + ".csv";
    auto os = open_out((dir / name).string());
    write_trace_csv(os, traces, trace_preamble(spec, cfg));
    std::map<std::string, int> tally;
    for (const auto& t : traces) ++tally[std::string(to_string(t.status))];
    manifest["traces"][std::string(to_string(cfg.kind))] = {{"file", name}, {"status", tally}};
    if (cfg.kind == SolverKind::MAdaGrad) madagrad = traces;
    for (auto& t : traces) all.push_back(std::move(t));
  }

  for (const auto metric : {ProfileMetric::Expmaps, ProfileMetric::Iters}) {
    const std::string name = "profile_" + std::string(to_string(metric)) + ".csv";
    try {
      const auto table = performance_profile(all, metric);
      auto os = open_out((dir / name).string());
      write_profile_csv(os, table, profile_preamble(table));
      manifest["profiles"].push_back(name);
    } catch (const Error& e) {
      manifest["profile_errors"].push_back(e.what());
    }
  }

  std::vector<AuditRow> rows;
  if (f.figure == 1) {
    const double L = 2.0 * double(spec.n);
    TraceFile file{trace_preamble(spec, configs[0]), madagrad};
    TheorySuiteOptions o;
    o.L = L;
    rows = theory_suite(file, o);
    manifest["audit"] = {{"file", "audit.csv"}, {"L", L}, {"L_source", "analytic 2n"}};
  } else {
    // No global L is known for the Karcher objective: estimate it on each
    // run's visited points; f* is the best value any solver reached.
    std::map<std::string, double> best;
    for (const auto& t : all)
      for (const auto& r : t.records)
        if (std::isfinite(r.f)) best[t.run_id] = best.count(t.run_id) ? std::min(best[t.run_id], r.f) : r.f;
    for (const auto& t : madagrad) {
      if (t.iterates.size() < 2 || t.records.front().grad_norm == 0.0) continue;
      const Instance inst = make_instance(spec, std::stoull(t.run_id));
      const double L = estimate_lipschitz(inst.objective, t.iterates);
      if (!(L > 0.0)) continue;
      const auto in = theory_inputs_from_trace(t, L, std::min(best[t.run_id], t.records.front().f));
      for (const auto& rep : trace_audit(t, in)) {
        rows.push_back({"madagrad:" + t.run_id, rep.name, rep.bound, rep.observed, rep.pass});
      }
    }
    manifest["audit"] = {{"file", "audit.csv"}, {"L_source", "estimated on visited points"},
                         {"f_star", "best value seen (estimate)"}};
  }
  {
    auto os = open_out((dir / "audit.csv").string());
    write_audit_csv(os, rows, {"spdada audit v1", spec_line(spec)});
  }
  std::size_t failed = 0;
  for (const auto& r : rows) failed += !r.pass;
  manifest["audit"]["checks"] = rows.size();
  manifest["audit"]["failed"] = failed;
  {
    auto os = open_out((dir / "manifest.json").string());
    os << manifest.dump(2) << '\n';
  }
  out << "# wrote " << dir.string() << " (" << all.size() << " traces, audit " << rows.size()
      << " checks, " << failed << " failed)\n";
  return failed == 0 ? kExitOk : kExitCheckFailed;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Adaptive Riemannian gradient methods on SPD matrices: runs, profiles, checks", "spdada"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run_cmd = app.add_subcommand("run", "run one solver over generated instances");
  run_cmd->add_option("--problem", rf.problem, "logdet | karcher | pl")->required()
      ->check(CLI::IsMember({"logdet", "karcher", "pl"}));
  run_cmd->add_option("--n", rf.n, "matrix dimension")->required()->check(CLI::PositiveNumber);
  run_cmd->add_option("--m", rf.m, "number of matrices (karcher)");
  run_cmd->add_option("--a", rf.a, "PL quartic a > 0");
  run_cmd->add_option("--b", rf.b, "PL quartic b > 0");
  run_cmd->add_option("--solver", rf.solver, "madagrad | rwngrad | armijo")->required()
      ->check(CLI::IsMember({"madagrad", "rwngrad", "armijo"}));
  run_cmd->add_option("--eta", rf.eta, "MAdaGrad eta")->capture_default_str();
  run_cmd->add_option("--beta0", rf.beta0, "RWNGrad beta0")->capture_default_str();
  run_cmd->add_option("--tol", rf.tol, "gradient-norm tolerance")->capture_default_str();
  run_cmd->add_option("--max-iter", rf.max_iter, "iteration cap")->capture_default_str();
  run_cmd->add_option("--armijo-rho", rf.armijo_rho)->capture_default_str();
  run_cmd->add_option("--armijo-omega", rf.armijo_omega)->capture_default_str();
  run_cmd->add_option("--armijo-alpha0", rf.armijo_alpha0)->capture_default_str();
  run_cmd->add_option("--armijo-trial", rf.armijo_trial, "fixed | doubling")->capture_default_str()
      ->check(CLI::IsMember({"fixed", "doubling"}));
  run_cmd->add_option("--eig-lo", rf.eig_lo)->capture_default_str();
  run_cmd->add_option("--eig-hi", rf.eig_hi)->capture_default_str();
  run_cmd->add_option("--seed", rf.seed)->required();
  run_cmd->add_option("--count", rf.count)->required();
  run_cmd->add_option("--out", rf.out, "trace CSV path")->required();
  run_cmd->add_option("--instances-out", rf.instances_out, "also write the instance file");

  ProfileFlags pf;
  auto* prof_cmd = app.add_subcommand("profile", "performance profile from trace CSVs");
  prof_cmd->add_option("--inputs", pf.inputs, "trace CSV files")->required()->expected(1, -1);
  prof_cmd->add_option("--metric", pf.metric, "time | expmaps | iters")->required()
      ->check(CLI::IsMember({"time", "expmaps", "iters"}));
  prof_cmd->add_option("--out", pf.out, "profile CSV path")->required();

  CheckFlags cf;
  auto* check_cmd = app.add_subcommand("check", "property and theory audits");
  check_cmd->add_option("--suite", cf.suite, "geometry | gradients | theory | pl")->required()
      ->check(CLI::IsMember({"geometry", "gradients", "theory", "pl"}));
  check_cmd->add_option("--trace", cf.trace, "trace CSV (theory suite)");
  check_cmd->add_option("--L", cf.L, "gradient Lipschitz constant");
  check_cmd->add_option("--kappa", cf.kappa, "sectional curvature lower bound (< 0)");
  check_cmd->add_option("--d0", cf.d0, "distance from x0 to a minimizer");
  check_cmd->add_option("--mu", cf.mu, "PL constant");
  check_cmd->add_option("--eps", cf.eps, "function-gap target for hitting times")->capture_default_str();
  check_cmd->add_option("--n", cf.n, "dimension (gradients, pl)");
  check_cmd->add_option("--a", cf.a)->capture_default_str();
  check_cmd->add_option("--b", cf.b)->capture_default_str();
  check_cmd->add_option("--seed", cf.seed)->capture_default_str();
  check_cmd->add_option("--samples", cf.samples, "PL samples")->capture_default_str();
  check_cmd->add_option("--out", cf.out, "audit CSV path (stdout when omitted)");

  DemoFlags df;
  auto* demo_cmd = app.add_subcommand("demo", "generate, run, profile and audit one experiment class");
  demo_cmd->add_option("--figure", df.figure, "1 (ln det problem) | 2 (Karcher mean)")->required()
      ->check(CLI::IsMember({1, 2}));
  demo_cmd->add_option("--seed", df.seed)->capture_default_str();
  demo_cmd->add_option("--count", df.count, "instances")->capture_default_str();
  demo_cmd->add_option("--out-dir", df.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(rf, out);
    if (*prof_cmd) return cmd_profile(pf, out, err);
    if (*check_cmd) return cmd_check(cf, out);
    if (*demo_cmd) return cmd_demo(df, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::InvalidInput ? kExitUsage : kExitDataError;
  }
  return kExitUsage;
}

}  // namespace spdada::cli
