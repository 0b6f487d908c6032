#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "spdada/io.hpp"
#include "spdada/optimizers.hpp"

namespace spdada {

/// SplitMix64 finalizer; used to derive independent per-instance seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ull));
}

/// mt19937_64 with a fixed double conversion, so streams match across
/// standard libraries (std::uniform_real_distribution is not portable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in the open interval (0, 1).
  double uniform01() { return (double(engine_() >> 11) + 0.5) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::mt19937_64 engine_;
};

struct EigRange {
  double lo = 0.0;
  double hi = 20.0;

  void validate() const {
    if (!(lo >= 0.0) || !(hi > lo)) {
      throw Error(ErrorKind::InvalidInput, "eigenvalue range must satisfy 0 <= lo < hi");
    }
  }
};

/// Draws an eigenvalue from the open range, redrawing values <= 1e-8.
inline double sample_eigenvalue(const EigRange& range, Rng& rng) {
  for (;;) {
    const double v = rng.uniform(range.lo, range.hi);
    if (v > 1e-8 && v > range.lo && v < range.hi) return v;
  }
}

/// X = Q^T diag(gamma) Q, gamma uniform in the range, Q from the QR
/// factorization of an n x n matrix with uniform(0,1) entries.
inline SpdPoint random_spd(std::size_t n, const EigRange& range, Rng& rng) {
  range.validate();
  if (n < 1) throw Error(ErrorKind::InvalidInput, "random_spd needs n >= 1");
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::VectorXd gamma(N);
  for (Eigen::Index i = 0; i < N; ++i) gamma(i) = sample_eigenvalue(range, rng);
  Eigen::MatrixXd m(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j) m(i, j) = rng.uniform01();
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
  return SpdPoint(Eigen::MatrixXd(q.transpose() * gamma.asDiagonal() * q));
}

/// exp((1/m) sum_j ln A_j): the log-Euclidean mean.
inline SpdPoint karcher_x0(const std::vector<SpdPoint>& a) {
  if (a.empty()) throw Error(ErrorKind::InvalidInput, "karcher_x0 needs at least one matrix");
  SymMatrix acc = SymMatrix::zero(a.front().dim());
  for (const auto& aj : a) {
    detail::check_dims(a.front(), aj);
    acc += spectral_map(aj.spectrum(), fn::Log{});
  }
  return SpdPoint(spectral_map((1.0 / double(a.size())) * acc, fn::Exp{}));
}

struct InstanceSpec {
  ObjectiveKind problem = ObjectiveKind::LogDetQuadratic;
  std::size_t n = 10;
  std::size_t m = 5;
  double a = 1.0;
  double b = 1.0;
  EigRange eig_range;
  std::uint64_t seed = 2025;
  std::size_t count = 100;

  void validate() const {
    if (n < 1) throw Error(ErrorKind::InvalidInput, "n must be >= 1");
    if (problem == ObjectiveKind::KarcherMean && m < 1) {
      throw Error(ErrorKind::InvalidInput, "m must be >= 1");
    }
    if (problem == ObjectiveKind::PlQuartic) check_pl_params(a, b);
    eig_range.validate();
  }
};

inline std::string spec_line(const InstanceSpec& s) {
  std::string line = "problem=" + std::string(to_string(s.problem)) + " n=" + std::to_string(s.n);
  if (s.problem == ObjectiveKind::KarcherMean) line += " m=" + std::to_string(s.m);
  if (s.problem == ObjectiveKind::PlQuartic) line += " a=" + fmt_real(s.a) + " b=" + fmt_real(s.b);
  line += " eig_lo=" + fmt_real(s.eig_range.lo) + " eig_hi=" + fmt_real(s.eig_range.hi) +
          " seed=" + std::to_string(s.seed) + " count=" + std::to_string(s.count);
  return line;
}

struct Instance {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  Objective objective;
  SpdPoint x0;
};

/// Instance `index` depends only on (spec, index).
inline Instance make_instance(const InstanceSpec& spec, std::size_t index) {
  spec.validate();
  const std::uint64_t seed = sub_seed(spec.seed, index);
  Rng rng(seed);
  switch (spec.problem) {
    case ObjectiveKind::LogDetQuadratic: {
      auto x0 = random_spd(spec.n, spec.eig_range, rng);
      return {index, seed, Objective::log_det_quadratic(spec.n), x0};
    }
    case ObjectiveKind::PlQuartic: {
      auto x0 = random_spd(spec.n, spec.eig_range, rng);
      return {index, seed, Objective::pl_quartic(spec.n, spec.a, spec.b), x0};
    }
    case ObjectiveKind::KarcherMean: {
      std::vector<SpdPoint> a;
      for (std::size_t j = 0; j < spec.m; ++j) a.push_back(random_spd(spec.n, spec.eig_range, rng));
      auto x0 = karcher_x0(a);
      return {index, seed, Objective::karcher_mean(std::move(a)), x0};
    }
  }
  throw Error(ErrorKind::UnsupportedKind, "unknown problem kind");
}

/// Worker count: SPD_ADAGRAD_THREADS when set and positive, otherwise the
/// hardware concurrency.
inline std::size_t worker_count() {
  if (const char* env = std::getenv("SPD_ADAGRAD_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct BatchOptions {
  std::size_t threads = 0;  // 0: worker_count()
  bool keep_iterates = false;
};

/// count x |configs| traces ordered by (instance, config).
inline std::vector<RunTrace> run_batch(const InstanceSpec& spec,
                                       const std::vector<SolverConfig>& configs,
                                       const BatchOptions& opts = {}) {
  spec.validate();
  for (const auto& c : configs) c.validate();
  std::vector<RunTrace> out(spec.count * configs.size());
  if (out.empty()) return out;

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= spec.count) return;
      try {
        const Instance inst = make_instance(spec, i);
        for (std::size_t c = 0; c < configs.size(); ++c) {
          RunOptions ro{std::to_string(i), inst.seed, opts.keep_iterates};
          out[i * configs.size() + c] = run(inst.objective, inst.x0, configs[c], ro);
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const std::size_t n_workers =
      std::min(opts.threads ? opts.threads : worker_count(), spec.count);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

// ---------------------------------------------------------------------------
// Instance files

inline nlohmann::json matrix_json(const SymMatrix& s) {
  return {{"n", s.dim()}, {"data", s.row_major()}};
}

inline SymMatrix matrix_from_json(const nlohmann::json& j) {
  return SymMatrix::from_row_major(j.at("n").get<std::size_t>(), j.at("data").get<std::vector<double>>());
}

inline constexpr const char* kInstanceSchema = "spdada.instances/1";

inline nlohmann::json instances_json(const InstanceSpec& spec) {
  nlohmann::json doc;
  doc["schema"] = kInstanceSchema;
  doc["spec"] = {{"problem", std::string(to_string(spec.problem))},
                 {"n", spec.n},
                 {"m", spec.m},
                 {"a", spec.a},
                 {"b", spec.b},
                 {"eig_range", {spec.eig_range.lo, spec.eig_range.hi}},
                 {"seed", spec.seed},
                 {"count", spec.count}};
  auto& list = doc["instances"] = nlohmann::json::array();
  for (std::size_t i = 0; i < spec.count; ++i) {
    const Instance inst = make_instance(spec, i);
    nlohmann::json item{{"index", i}, {"seed", inst.seed}, {"x0", matrix_json(inst.x0.matrix())}};
    if (spec.problem == ObjectiveKind::KarcherMean) {
      auto& mats = item["A"] = nlohmann::json::array();
      for (const auto& aj : inst.objective.karcher_points()) mats.push_back(matrix_json(aj.matrix()));
    }
    list.push_back(std::move(item));
  }
  return doc;
}

/// Reads an instance file back into (spec, instances).
inline std::pair<InstanceSpec, std::vector<Instance>> instances_from_json(const nlohmann::json& doc) {
  if (doc.at("schema").get<std::string>() != kInstanceSchema) {
    throw Error(ErrorKind::InvalidInput, "unsupported instance schema");
  }
  const auto& js = doc.at("spec");
  InstanceSpec spec;
  spec.problem = parse_objective_kind(js.at("problem").get<std::string>());
  spec.n = js.at("n").get<std::size_t>();
  spec.m = js.at("m").get<std::size_t>();
  spec.a = js.at("a").get<double>();
  spec.b = js.at("b").get<double>();
  spec.eig_range = {js.at("eig_range").at(0).get<double>(), js.at("eig_range").at(1).get<double>()};
  spec.seed = js.at("seed").get<std::uint64_t>();
  spec.count = js.at("count").get<std::size_t>();
  std::vector<Instance> out;
  for (const auto& item : doc.at("instances")) {
    SpdPoint x0(matrix_from_json(item.at("x0")));
    Objective obj = Objective::log_det_quadratic(spec.n);
    if (spec.problem == ObjectiveKind::PlQuartic) obj = Objective::pl_quartic(spec.n, spec.a, spec.b);
    if (spec.problem == ObjectiveKind::KarcherMean) {
      std::vector<SpdPoint> a;
      for (const auto& mj : item.at("A")) a.emplace_back(matrix_from_json(mj));
      obj = Objective::karcher_mean(std::move(a));
    }
    out.push_back({item.at("index").get<std::size_t>(), item.at("seed").get<std::uint64_t>(),
                   std::move(obj), std::move(x0)});
  }
  return {spec, std::move(out)};
}

// ---------------------------------------------------------------------------
// Performance profiles

enum class ProfileMetric { Time, Expmaps, Iters };

inline std::string_view to_string(ProfileMetric m) {
  switch (m) {
    case ProfileMetric::Time: return "time";
    case ProfileMetric::Expmaps: return "expmaps";
    case ProfileMetric::Iters: return "iters";
  }
  return "unknown";
}

inline ProfileMetric parse_profile_metric(std::string_view s) {
  if (s == "time") return ProfileMetric::Time;
  if (s == "expmaps") return ProfileMetric::Expmaps;
  if (s == "iters") return ProfileMetric::Iters;
  throw Error(ErrorKind::InvalidInput, "unknown metric '" + std::string(s) + "'");
}

inline double trace_cost(const RunTrace& t, ProfileMetric m) {
  if (t.records.empty() || !is_success(t.status)) return std::numeric_limits<double>::infinity();
  const auto& r = t.records.back();
  switch (m) {
    case ProfileMetric::Time: return double(r.elapsed_ns);
    case ProfileMetric::Expmaps: return double(r.expmaps);
    case ProfileMetric::Iters: return double(r.k);
  }
  return std::numeric_limits<double>::infinity();
}

inline constexpr std::size_t kProfileGridSize = 256;

/// Dolan-More profile. Failed runs have infinite cost and ratio.
struct ProfileTable {
  std::vector<std::string> solvers;
  std::vector<std::string> problems;
  ProfileMetric metric = ProfileMetric::Expmaps;
  std::vector<std::vector<double>> costs;   // [problem][solver]
  std::vector<std::vector<double>> ratios;  // [problem][solver]
  std::vector<double> taus;
  std::vector<std::vector<double>> rho;  // [solver][tau index]

  /// Fraction of problems with r_{p,s} <= tau.
  double rho_at(std::size_t s, double tau) const {
    std::size_t hits = 0;
    for (const auto& row : ratios) hits += row[s] <= tau;
    return double(hits) / double(ratios.size());
  }
};

/// Costs are floored at one unit (one exp map, one iteration, one ns) before
/// forming ratios so zero-cost runs stay comparable.
inline ProfileTable performance_profile(const std::vector<RunTrace>& traces, ProfileMetric metric) {
  ProfileTable t;
  t.metric = metric;
  std::map<std::string, std::size_t> solver_idx, problem_idx;
  std::map<std::pair<std::size_t, std::size_t>, double> cost;
  for (const auto& tr : traces) {
    const std::string solver(to_string(tr.config.kind));
    const std::string problem = tr.problem + ":" + tr.run_id;
    if (!solver_idx.count(solver)) {
      solver_idx[solver] = t.solvers.size();
      t.solvers.push_back(solver);
    }
    if (!problem_idx.count(problem)) {
      problem_idx[problem] = t.problems.size();
      t.problems.push_back(problem);
    }
    const auto key = std::make_pair(problem_idx[problem], solver_idx[solver]);
    if (cost.count(key)) {
      throw Error(ErrorKind::InconsistentInputs, "duplicate run for " + solver + " on " + problem);
    }
    cost[key] = trace_cost(tr, metric);
  }
  if (t.solvers.empty()) throw Error(ErrorKind::EmptyProfile, "no traces");
  if (cost.size() != t.solvers.size() * t.problems.size()) {
    throw Error(ErrorKind::InconsistentInputs, "solvers were run on different problem sets");
  }
  const std::size_t P = t.problems.size(), S = t.solvers.size();
  t.costs.assign(P, std::vector<double>(S));
  t.ratios.assign(P, std::vector<double>(S, std::numeric_limits<double>::infinity()));
  bool any_success = false;
  double max_ratio = 1.0;
  for (std::size_t p = 0; p < P; ++p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < S; ++s) {
      t.costs[p][s] = cost[{p, s}];
      if (std::isfinite(t.costs[p][s])) best = std::min(best, std::max(t.costs[p][s], 1.0));
    }
    if (!std::isfinite(best)) continue;
    any_success = true;
    for (std::size_t s = 0; s < S; ++s) {
      if (!std::isfinite(t.costs[p][s])) continue;
      t.ratios[p][s] = std::max(t.costs[p][s], 1.0) / best;
      max_ratio = std::max(max_ratio, t.ratios[p][s]);
    }
  }
  if (!any_success) throw Error(ErrorKind::EmptyProfile, "every solver failed on every problem");

  if (max_ratio == 1.0) {
    t.taus = {1.0};
  } else {
    t.taus.resize(kProfileGridSize);
    const double top = std::log2(max_ratio);
    for (std::size_t i = 0; i < kProfileGridSize; ++i) {
      t.taus[i] = std::exp2(top * double(i) / double(kProfileGridSize - 1));
    }
    t.taus.front() = 1.0;
    t.taus.back() = max_ratio;
  }
  t.rho.assign(S, {});
  for (std::size_t s = 0; s < S; ++s) {
    for (double tau : t.taus) t.rho[s].push_back(t.rho_at(s, tau));
  }
  return t;
}

inline void write_profile_csv(std::ostream& os, const ProfileTable& t,
                              const std::vector<std::string>& preamble = {}) {
  for (const auto& line : preamble) os << "# " << line << '\n';
  os << "solver,tau,rho\n";
  for (std::size_t s = 0; s < t.solvers.size(); ++s) {
    for (std::size_t i = 0; i < t.taus.size(); ++i) {
      os << t.solvers[s] << ',' << fmt_real(t.taus[i]) << ',' << fmt_real(t.rho[s][i]) << '\n';
    }
  }
}

}  // namespace spdada
