#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spdada/harness.hpp"
#include "spdada/io.hpp"
#include "spdada/theory.hpp"

namespace spdada {

/// Random symmetric matrix with entries uniform in (-scale, scale).
inline SymMatrix random_symmetric(std::size_t n, double scale, Rng& rng) {
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd m(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j) m(i, j) = rng.uniform(-scale, scale);
  return SymMatrix(m);
}

/// Random tangent vector at x with unit Riemannian norm.
inline TangentVector random_unit_tangent(const SpdPoint& x, Rng& rng) {
  const TangentVector v(x, random_symmetric(x.dim(), 1.0, rng));
  return (1.0 / norm(x, v)) * v;
}

inline double rel_frob_error(const SymMatrix& got, const SymMatrix& want) {
  return frob_norm(got - want) / std::max(frob_norm(want), 1e-300);
}

namespace detail {

/// Accumulates the worst value of one check and emits one row.
struct WorstOf {
  std::string check;
  double bound;
  double worst = 0.0;

  void add(double v) { worst = std::max(worst, std::isnan(v) ? INFINITY : v); }
  AuditRow row(const std::string& id) const { return {id, check, bound, worst, worst <= bound}; }
};

}  // namespace detail

struct GeometrySuiteOptions {
  std::uint64_t seed = 2025;
  std::size_t pairs = 200;
  std::vector<std::size_t> dims{2, 10, 20};
  EigRange range{0.1, 20.0};
};

/// Round trip, transport isometry, constant geodesic speed and congruence
/// invariance over random SPD pairs.
inline std::vector<AuditRow> geometry_suite(const GeometrySuiteOptions& o = {}) {
  Rng rng(o.seed);
  detail::WorstOf roundtrip{"exp_log_roundtrip", 1e-8};
  detail::WorstOf isometry{"transport_isometry", 1e-9};
  detail::WorstOf speed{"geodesic_constant_speed", 1e-8};
  detail::WorstOf congruence_inv{"congruence_invariance", 1e-9};
  for (std::size_t i = 0; i < o.pairs; ++i) {
    const std::size_t n = o.dims[i % o.dims.size()];
    const SpdPoint x = random_spd(n, o.range, rng);
    const SpdPoint y = random_spd(n, o.range, rng);

    roundtrip.add(rel_frob_error(exp_map(x, log_map(x, y)).matrix(), y.matrix()));

    const TangentVector u(x, random_symmetric(n, 1.0, rng));
    const TangentVector v(x, random_symmetric(n, 1.0, rng));
    const TangentVector pu = parallel_transport(x, y, u);
    const TangentVector pv = parallel_transport(x, y, v);
    const double scale = norm(x, u) * norm(x, v);
    isometry.add(std::abs(inner(y, pu, pv) - inner(x, u, v)) / scale);
    isometry.add(std::abs(norm(y, pu) - norm(x, u)) / norm(x, u));

    const TangentVector w = log_map(x, y);
    const double wn = norm(x, w);
    for (double t : {0.25, 0.5, 1.0}) {
      speed.add(std::abs(distance(x, exp_map(x, t * w)) - t * wn) / (t * wn));
    }

    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd p(N, N);
    for (Eigen::Index r = 0; r < N; ++r)
      for (Eigen::Index c = 0; c < N; ++c) p(r, c) = rng.uniform(-1.0, 1.0);
    p += double(n) * Eigen::MatrixXd::Identity(N, N);
    const double d = distance(x, y);
    const double dp = distance(SpdPoint(congruence(p, x.matrix())), SpdPoint(congruence(p, y.matrix())));
    congruence_inv.add(std::abs(dp - d) / d);
  }
  return {roundtrip.row("geometry"), isometry.row("geometry"), speed.row("geometry"),
          congruence_inv.row("geometry")};
}

struct GradientSuiteOptions {
  std::uint64_t seed = 2025;
  std::size_t n = 5;
  std::size_t directions = 20;
  std::size_t karcher_m = 5;
  double a = 1.0;
  double b = 1.0;
};

/// Central finite differences along geodesics against <grad f, V>_X, the
/// Frobenius pairing <f'(X), V> against the same derivative, and
/// grad f(X) = X f'(X) X.
///
/// Relative errors are measured against |grad f| |V|, the natural size of a
/// directional derivative, so directions nearly orthogonal to the gradient do
/// not inflate them.
inline std::vector<AuditRow> gradient_suite(const GradientSuiteOptions& o = {}) {
  Rng rng(o.seed);
  std::vector<AuditRow> rows;
  std::vector<SpdPoint> anchors;
  for (std::size_t j = 0; j < o.karcher_m; ++j) anchors.push_back(random_spd(o.n, {0.1, 20.0}, rng));
  const std::vector<Objective> objectives{Objective::log_det_quadratic(o.n),
                                          Objective::karcher_mean(anchors),
                                          Objective::pl_quartic(o.n, o.a, o.b)};
  for (const auto& obj : objectives) {
    detail::WorstOf fd{"finite_difference_rgrad", 1e-4};
    detail::WorstOf efd{"finite_difference_egrad", 1e-4};
    detail::WorstOf conv{"riemannian_conversion", 1e-10};
    for (std::size_t i = 0; i < o.directions; ++i) {
      // Keep |ln det X| moderate so the quartic stays well scaled.
      const SpdPoint x = random_spd(o.n, {0.3, 3.0}, rng);
      const TangentVector v = random_unit_tangent(x, rng);
      const TangentVector g = obj.gradient(x);
      const double scale = std::max(norm(x, g), 1e-12);
      const double h = 1e-6;
      const double central = (obj.value(exp_map(x, h * v)) - obj.value(exp_map(x, -h * v))) / (2.0 * h);
      fd.add(std::abs(central - inner(x, g, v)) / scale);
      const SymMatrix eg = obj.euclidean_gradient(x);
      efd.add(std::abs(central - frob_inner(eg, v.value())) / scale);
      conv.add(rel_frob_error(riemannian_gradient(x, eg).value(), g.value()));
    }
    const std::string id(obj.name());
    rows.push_back(fd.row(id));
    rows.push_back(efd.row(id));
    rows.push_back(conv.row(id));
  }
  return rows;
}

struct PlSuiteOptions {
  std::uint64_t seed = 2025;
  std::size_t n = 10;
  double a = 1.0;
  double b = 1.0;
  std::size_t samples = 10000;
  EigRange range{0.05, 20.0};
  std::size_t witness_points = 50;
};

/// Scales x so that ln det equals `s`.
inline SpdPoint with_logdet(const SpdPoint& x, double s) {
  const double c = std::exp((s - x.logdet()) / double(x.dim()));
  return SpdPoint(c * x.matrix());
}

/// PL certificate, Euclidean PL failure along t I, and the nonconvexity
/// witness on det X = e^{b/(4a)}.
inline std::vector<AuditRow> pl_suite(const PlSuiteOptions& o = {}) {
  Rng rng(o.seed);
  const auto cert = pl_certificate(o.n, o.a, o.b);
  const Objective obj = Objective::pl_quartic(o.n, o.a, o.b);
  const double crit = std::exp(o.b / o.a);
  std::vector<AuditRow> rows;
  const std::string id = "pl";

  auto ratio = [&](const SpdPoint& x) {
    const double gn = norm(x, obj.gradient(x));
    return gn * gn / (obj.value(x) - cert.f_star);
  };

  // Random draws from the range, then draws rescaled so ln det sweeps the
  // region around the critical set where the bound is tight.
  double lo_random = INFINITY, lo_sweep = INFINITY;
  std::size_t used = 0;
  for (std::size_t i = 0; i < o.samples; ++i) {
    const SpdPoint x = random_spd(o.n, o.range, rng);
    if (std::abs(std::exp(x.logdet()) - crit) <= 1e-6) continue;
    lo_random = std::min(lo_random, ratio(x));
    ++used;
    const double s = rng.uniform(-3.0 * o.b / o.a, 4.0 * o.b / o.a);
    if (std::abs(s - o.b / o.a) < 1e-3) continue;
    lo_sweep = std::min(lo_sweep, ratio(with_logdet(x, s)));
  }
  const double need = cert.mu_bound - 1e-9;
  rows.push_back({id, "pl_ratio_random", need, lo_random, used > 0 && lo_random >= need});
  rows.push_back({id, "pl_ratio_logdet_sweep", need, lo_sweep, lo_sweep >= need});

  // Euclidean ratio |f'(tI)|_F^2 / (f - f*) shrinks as t grows.
  auto eratio = [&](double t) {
    const SpdPoint x(t * SymMatrix::identity(o.n));
    const double e = frob_norm(obj.euclidean_gradient(x));
    return e * e / (obj.value(x) - cert.f_star);
  };
  const double r3 = eratio(1e3), r6 = eratio(1e6);
  rows.push_back({id, "euclidean_pl_ratio_decay", r3, r6, r6 < r3});

  // Second geodesic derivative at det X = e^{b/(4a)} equals -3b^2/(4a) u^2.
  detail::WorstOf witness{"nonconvexity_second_derivative", 1e-6};
  detail::WorstOf witness_fd{"nonconvexity_fd_second_derivative", 1e-4};
  double most_positive = -INFINITY;
  const double s_star = o.b / (4.0 * o.a);
  const double kappa2 = -3.0 * o.b * o.b / (4.0 * o.a);
  for (std::size_t i = 0; i < o.witness_points; ++i) {
    const SpdPoint x = with_logdet(random_spd(o.n, o.range, rng), s_star);
    TangentVector v = random_unit_tangent(x, rng);
    double u = (x.inverse().array() * v.value().mat().array()).sum();
    if (std::abs(u) < 1e-3) {
      v = v + TangentVector(x, x.matrix());
      u = (x.inverse().array() * v.value().mat().array()).sum();
    }
    const double want = kappa2 * u * u;
    const auto restr = geodesic_restriction_coeffs(obj, x, v);
    const double got = restr.second_derivative_at_zero();
    witness.add(std::abs(got - want) / std::abs(want));
    // ln det is affine along the geodesic, so the step is set in units of u.
    const double h = 1e-3 / std::abs(u);
    const double f0 = obj.value(x);
    const double fd = (obj.value(exp_map(x, h * v)) - 2.0 * f0 + obj.value(exp_map(x, -h * v))) / (h * h);
    witness_fd.add(std::abs(fd - want) / std::abs(want));
    most_positive = std::max(most_positive, got);
  }
  rows.push_back(witness.row(id));
  rows.push_back(witness_fd.row(id));
  rows.push_back({id, "nonconvexity_negative_curvature", 0.0, most_positive, most_positive < 0.0});
  return rows;
}

struct TheorySuiteOptions {
  double L = 0.0;
  std::optional<double> kappa;
  std::optional<double> d0;
  std::optional<double> mu;
  double eps_f = 1e-6;
};

/// Problem metadata parsed from a trace file preamble (`problem=... n=...`).
struct TraceProblemInfo {
  std::string problem;
  std::size_t n = 0;
  double a = 1.0;
  double b = 1.0;
};

inline std::optional<TraceProblemInfo> problem_info(const std::vector<std::string>& preamble) {
  for (const auto& line : preamble) {
    const auto kv = parse_key_values(line);
    if (!kv.count("problem") || !kv.count("n")) continue;
    TraceProblemInfo info;
    info.problem = kv.at("problem");
    info.n = std::stoull(kv.at("n"));
    if (kv.count("a")) info.a = parse_real(kv.at("a"));
    if (kv.count("b")) info.b = parse_real(kv.at("b"));
    return info;
  }
  return std::nullopt;
}

inline std::optional<std::size_t> first_gap_hit(const RunTrace& t, double f_star, double eps) {
  for (const auto& r : t.records)
    if (r.f - f_star <= eps) return r.k;
  return std::nullopt;
}

/// Audits every trace in a file: MAdaGrad step-size inequalities and
/// complexity bounds, one-exp-map accounting for the adaptive methods,
/// Armijo sufficient decrease, and the PL / convex hitting-time bounds when
/// their constants are available.
inline std::vector<AuditRow> theory_suite(const TraceFile& file, const TheorySuiteOptions& o) {
  if (!(o.L > 0.0)) throw Error(ErrorKind::InputMissing, "theory suite needs an explicit L");
  const auto info = problem_info(file.preamble);
  std::vector<AuditRow> rows;

  // f* per instance: known for the ln det families, else the best value seen.
  std::map<std::string, double> best_seen;
  for (const auto& t : file.traces)
    for (const auto& r : t.records)
      if (std::isfinite(r.f)) {
        auto [it, fresh] = best_seen.emplace(t.run_id, r.f);
        if (!fresh) it->second = std::min(it->second, r.f);
      }
  auto f_star_for = [&](const RunTrace& t) -> std::pair<double, bool> {
    if (t.problem == "logdet") return {-0.25, true};
    if (t.problem == "pl" && info) return {pl_certificate(info->n, info->a, info->b).f_star, true};
    return {best_seen.count(t.run_id) ? best_seen.at(t.run_id) : 0.0, false};
  };

  for (const auto& t : file.traces) {
    const std::string id = std::string(to_string(t.config.kind)) + ":" + t.run_id;
    if (t.records.empty()) continue;
    const std::size_t steps = t.records.size() - 1;

    if (t.config.kind != SolverKind::Armijo) {
      bool ok = true;
      for (std::size_t k = 0; k < steps; ++k) ok = ok && t.records[k + 1].expmaps == k + 1;
      rows.push_back({id, "one_expmap_per_iteration", double(steps), double(t.records.back().expmaps), ok});
    } else {
      double worst = -INFINITY;
      bool ok = true;
      for (std::size_t k = 0; k < steps; ++k) {
        const auto& r = t.records[k];
        const double rhs = r.f - t.config.armijo.rho * r.alpha * r.grad_norm * r.grad_norm;
        worst = std::max(worst, t.records[k + 1].f - rhs);
        ok = ok && t.records[k + 1].f <= rhs;
        ok = ok && t.records[k + 1].expmaps >= r.expmaps + 1;
      }
      rows.push_back({id, "armijo_sufficient_decrease", 0.0, steps ? worst : 0.0, ok});
      continue;
    }
    if (t.config.kind != SolverKind::MAdaGrad) continue;
    if (t.records.front().grad_norm == 0.0) continue;

    const auto [f_star, exact] = f_star_for(t);
    const TheoryInputs in = theory_inputs_from_trace(t, o.L, std::min(f_star, t.records.front().f));
    for (const auto& rep : trace_audit(t, in)) {
      rows.push_back({id, rep.name, rep.bound, rep.observed, rep.pass});
    }
    if (t.problem == "pl" && info) {
      TheoryInputs pin = in;
      pin.mu = o.mu ? *o.mu : pl_certificate(info->n, info->a, info->b).mu_bound;
      AuditRow row{id, "pl_hitting_time", 0.0, 0.0, true};
      try {
        row.bound = pl_linear_bound(pin, o.eps_f);
        const auto hit = first_gap_hit(t, in.f_star, o.eps_f);
        row.observed = hit ? double(*hit) : double(t.records.back().k);
        row.pass = row.observed <= row.bound;
      } catch (const Error& e) {
        row.bound = std::nan("");
        row.observed = e.value();
        row.pass = false;
      }
      rows.push_back(row);
    }
    if (o.kappa && o.d0 && t.problem == "karcher") {
      TheoryInputs cin = in;
      cin.kappa = o.kappa;
      cin.d0 = o.d0;
      const double bound = tf_convex_bound(cin, o.eps_f);
      const auto hit = first_gap_hit(t, in.f_star, o.eps_f);
      const double observed = hit ? double(*hit) : double(t.records.back().k);
      rows.push_back({id, exact ? "convex_hitting_time" : "convex_hitting_time_fstar_estimate",
                      bound, observed, observed <= bound});
    }
  }
  return rows;
}

/// Descent-lemma spot checks for (ln det X)^2 - ln det X with L = 2n on random (X, V),
/// |V| <= 1.
inline std::vector<AuditRow> descent_lemma_suite(std::size_t n, double L, std::uint64_t seed,
                                                 std::size_t samples = 100) {
  Rng rng(seed);
  const Objective obj = Objective::log_det_quadratic(n);
  double worst = INFINITY;
  bool ok = true;
  for (std::size_t i = 0; i < samples; ++i) {
    const SpdPoint x = random_spd(n, {0.1, 20.0}, rng);
    const TangentVector v = rng.uniform01() * random_unit_tangent(x, rng);
    const auto res = descent_lemma_check(obj, x, v, L);
    worst = std::min(worst, res.residual);
    ok = ok && res.pass;
  }
  return {{"logdet", "descent_lemma", 0.0, worst, ok}};
}

inline bool all_pass(const std::vector<AuditRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const AuditRow& r) { return r.pass; });
}

}  // namespace spdada
