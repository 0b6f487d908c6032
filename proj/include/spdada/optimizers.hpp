#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spdada/objectives.hpp"

namespace spdada {

enum class SolverKind { MAdaGrad, RWNGrad, Armijo };

inline std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::MAdaGrad: return "madagrad";
    case SolverKind::RWNGrad: return "rwngrad";
    case SolverKind::Armijo: return "armijo";
  }
  return "unknown";
}

inline SolverKind parse_solver_kind(std::string_view s) {
  if (s == "madagrad") return SolverKind::MAdaGrad;
  if (s == "rwngrad") return SolverKind::RWNGrad;
  if (s == "armijo") return SolverKind::Armijo;
  throw Error(ErrorKind::InvalidInput, "unknown solver '" + std::string(s) + "'");
}

enum class TrialRule { Fixed, PreviousStepDoubling };

inline std::string_view to_string(TrialRule rule) {
  return rule == TrialRule::Fixed ? "fixed" : "doubling";
}

inline TrialRule parse_trial_rule(std::string_view s) {
  if (s == "fixed") return TrialRule::Fixed;
  if (s == "doubling") return TrialRule::PreviousStepDoubling;
  throw Error(ErrorKind::InvalidInput, "unknown Armijo trial rule '" + std::string(s) + "'");
}

struct ArmijoParams {
  double rho = 1e-4;
  double omega = 0.5;
  double alpha0 = 1.0;
  TrialRule trial_rule = TrialRule::Fixed;
};

/// Accepted-step search stops after this many reductions.
inline constexpr int kMaxBacktracks = 60;

struct SolverConfig {
  SolverKind kind = SolverKind::MAdaGrad;
  double eta = 10.0;
  double beta0 = 1.0;
  ArmijoParams armijo;
  double tol_grad = 1e-4;
  std::size_t max_iter = 1000;

  void validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidInput, what); };
    if (!(eta > 0.0)) bad("eta must be > 0");
    if (!(beta0 > 0.0)) bad("beta0 must be > 0");
    if (!(armijo.rho > 0.0 && armijo.rho < 1.0)) bad("Armijo rho must lie in (0,1)");
    if (!(armijo.omega > 0.0 && armijo.omega < 1.0)) bad("Armijo omega must lie in (0,1)");
    if (!(armijo.alpha0 > 0.0)) bad("Armijo alpha0 must be > 0");
    if (!(tol_grad >= 0.0)) bad("tol_grad must be >= 0");
  }
};

enum class RunStatus { Converged, MaxIter, ZeroGradient, NumericalFailure };

inline std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::MaxIter: return "MaxIter";
    case RunStatus::ZeroGradient: return "ZeroGradient";
    case RunStatus::NumericalFailure: return "NumericalFailure";
  }
  return "unknown";
}

inline RunStatus parse_run_status(std::string_view s) {
  if (s == "Converged") return RunStatus::Converged;
  if (s == "MaxIter") return RunStatus::MaxIter;
  if (s == "ZeroGradient") return RunStatus::ZeroGradient;
  if (s == "NumericalFailure") return RunStatus::NumericalFailure;
  throw Error(ErrorKind::InvalidInput, "unknown run status '" + std::string(s) + "'");
}

inline bool is_success(RunStatus s) {
  return s == RunStatus::Converged || s == RunStatus::ZeroGradient;
}

struct SolverState {
  SpdPoint x;
  std::size_t k = 0;
  double beta = 0.0;
  double last_alpha = std::numeric_limits<double>::quiet_NaN();
  std::size_t expmap_count = 0;
  std::size_t fevals = 0;
  std::size_t gevals = 0;
  /// f(x) when already known (the accepted Armijo trial), so it is not recomputed.
  std::optional<double> value;

  static SolverState initial(const SpdPoint& x0, const SolverConfig& cfg) {
    SolverState s{x0};
    s.beta = cfg.kind == SolverKind::MAdaGrad ? 0.0 : cfg.beta0;
    return s;
  }
};

struct GradientSample {
  TangentVector grad;
  double norm = 0.0;
};

inline GradientSample evaluate_gradient(SolverState& state, const Objective& obj) {
  TangentVector g = obj.gradient(state.x);
  ++state.gevals;
  const double n = spdada::norm(state.x, g);
  return {std::move(g), n};
}

inline double evaluate_value(SolverState& state, const Objective& obj) {
  if (!state.value) {
    state.value = obj.value(state.x);
    ++state.fevals;
  }
  return *state.value;
}

namespace detail {

inline void require_nonzero(const GradientSample& g) {
  if (g.norm == 0.0) throw Error(ErrorKind::ZeroGradient, "gradient vanished; the method stops");
}

inline void move_to(SolverState& s, SpdPoint next) {
  s.x = std::move(next);
  s.value.reset();
  ++s.expmap_count;
  ++s.k;
}

}  // namespace detail

/// One MAdaGrad iteration: beta += |g|^2, alpha = eta / sqrt(beta),
/// x <- exp_x(-alpha g).
inline SolverState madagrad_step(SolverState state, const Objective& /*obj*/, double eta,
                                 const GradientSample& g) {
  detail::require_nonzero(g);
  state.beta += g.norm * g.norm;
  const double alpha = eta / std::sqrt(state.beta);
  state.last_alpha = alpha;
  detail::move_to(state, exp_map(state.x, -alpha * g.grad));
  return state;
}

inline SolverState madagrad_step(SolverState state, const Objective& obj, double eta) {
  const GradientSample g = evaluate_gradient(state, obj);
  return madagrad_step(std::move(state), obj, eta, g);
}

/// One RWNGrad iteration: step 1/beta_k along -g, then beta += |g|^2 / beta_k.
inline SolverState rwngrad_step(SolverState state, const Objective& /*obj*/,
                                const GradientSample& g) {
  if (!(state.beta > 0.0)) throw Error(ErrorKind::InvalidInput, "RWNGrad needs beta > 0");
  detail::require_nonzero(g);
  const double alpha = 1.0 / state.beta;
  state.last_alpha = alpha;
  SpdPoint next = exp_map(state.x, -alpha * g.grad);
  state.beta += g.norm * g.norm / state.beta;
  detail::move_to(state, std::move(next));
  return state;
}

inline SolverState rwngrad_step(SolverState state, const Objective& obj) {
  const GradientSample g = evaluate_gradient(state, obj);
  return rwngrad_step(std::move(state), obj, g);
}

/// Riemannian gradient step with Armijo backtracking: the first
/// t = alpha * omega^l (l = 0, 1, ...) with
/// f(exp_x(-t g)) <= f(x) - rho t |g|^2 is accepted. Every trial costs one
/// exp map; trials whose exp map overflows or leaves the cone are rejected.
inline SolverState armijo_step(SolverState state, const Objective& obj, const SolverConfig& cfg,
                               const GradientSample& g) {
  detail::require_nonzero(g);
  const ArmijoParams& p = cfg.armijo;
  const double f0 = evaluate_value(state, obj);
  double trial = p.alpha0;
  if (p.trial_rule == TrialRule::PreviousStepDoubling && std::isfinite(state.last_alpha)) {
    trial = 2.0 * state.last_alpha;
  }
  const double g2 = g.norm * g.norm;
  double t = trial;
  for (int l = 0; l <= kMaxBacktracks; ++l, t *= p.omega) {
    ++state.expmap_count;
    std::optional<SpdPoint> y;
    try {
      y = exp_map(state.x, -t * g.grad);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NumericalOverflow && e.kind() != ErrorKind::NonPositiveEigenvalue) {
        throw;
      }
      continue;
    }
    const double fy = obj.value(*y);
    ++state.fevals;
    if (fy <= f0 - p.rho * t * g2) {
      state.x = std::move(*y);
      state.value = fy;
      state.last_alpha = t;
      ++state.k;
      return state;
    }
  }
  throw Error(ErrorKind::BacktrackExhausted,
              "no acceptable Armijo step after " + std::to_string(kMaxBacktracks) + " reductions");
}

inline SolverState armijo_step(SolverState state, const Objective& obj, const SolverConfig& cfg) {
  const GradientSample g = evaluate_gradient(state, obj);
  return armijo_step(std::move(state), obj, cfg, g);
}

/// State at x_k when the record was taken. `alpha` is the step used at
/// iteration k (NaN on the terminal record); `beta` is the accumulator
/// value on entry to iteration k.
struct TraceRecord {
  std::size_t k = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double beta = 0.0;
  std::size_t expmaps = 0;
  std::size_t fevals = 0;
  std::size_t gevals = 0;
  std::int64_t elapsed_ns = 0;
};

struct RunTrace {
  std::string run_id;
  std::string problem;
  SolverConfig config;
  std::uint64_t seed = 0;
  std::vector<TraceRecord> records;
  RunStatus status = RunStatus::MaxIter;
  std::string failure;
  std::vector<SpdPoint> iterates;
  std::optional<SpdPoint> final_point;

  const TraceRecord& last() const { return records.back(); }
  std::size_t iterations() const { return records.empty() ? 0 : records.back().k; }
};

struct RunOptions {
  std::string run_id;
  std::uint64_t seed = 0;
  bool keep_iterates = false;
};

inline RunTrace run(const Objective& obj, const SpdPoint& x0, const SolverConfig& cfg,
                    const RunOptions& opts = {}) {
  cfg.validate();
  if (x0.dim() != obj.dim()) {
    throw Error(ErrorKind::InvalidInput, "starting point dimension does not match the objective");
  }
  RunTrace trace;
  trace.run_id = opts.run_id;
  trace.problem = std::string(obj.name());
  trace.config = cfg;
  trace.seed = opts.seed;

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  SolverState state = SolverState::initial(x0, cfg);

  for (;;) {
    if (opts.keep_iterates) trace.iterates.push_back(state.x);
    TraceRecord rec;
    GradientSample g{TangentVector::zero(state.x), 0.0};
    try {
      g = evaluate_gradient(state, obj);
      rec.f = evaluate_value(state, obj);
    } catch (const Error& e) {
      trace.status = RunStatus::NumericalFailure;
      trace.failure = e.what();
      rec.f = std::numeric_limits<double>::quiet_NaN();
      g.norm = std::numeric_limits<double>::quiet_NaN();
    }
    rec.k = state.k;
    rec.grad_norm = g.norm;
    rec.beta = state.beta;
    rec.expmaps = state.expmap_count;
    rec.fevals = state.fevals;
    rec.gevals = state.gevals;
    rec.elapsed_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
    trace.records.push_back(rec);
    if (!trace.failure.empty()) break;

    if (g.norm == 0.0) {
      trace.status = RunStatus::ZeroGradient;
      break;
    }
    if (g.norm <= cfg.tol_grad) {
      trace.status = RunStatus::Converged;
      break;
    }
    if (state.k >= cfg.max_iter) {
      trace.status = RunStatus::MaxIter;
      break;
    }
    try {
      switch (cfg.kind) {
        case SolverKind::MAdaGrad: state = madagrad_step(state, obj, cfg.eta, g); break;
        case SolverKind::RWNGrad: state = rwngrad_step(state, obj, g); break;
        case SolverKind::Armijo: state = armijo_step(state, obj, cfg, g); break;
      }
    } catch (const Error& e) {
      trace.status = RunStatus::NumericalFailure;
      trace.failure = e.what();
      break;
    }
    trace.records.back().alpha = state.last_alpha;
  }
  trace.final_point = state.x;
  return trace;
}

}  // namespace spdada
