#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spdada/optimizers.hpp"

namespace spdada {

struct TheoryInputs {
  double L = 0.0;
  double eta = 0.0;
  double f0 = 0.0;
  double f_star = 0.0;
  double g0_norm = 0.0;
  std::optional<double> mu;
  std::optional<double> kappa;
  std::optional<double> d0;

  void validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidInput, what); };
    if (!(L > 0.0)) bad("L must be > 0");
    if (!(eta > 0.0)) bad("eta must be > 0");
    if (!(g0_norm > 0.0)) bad("initial gradient norm must be > 0");
    if (!(f0 >= f_star)) bad("f0 must be >= f_star");
    if (mu && !(*mu > 0.0)) bad("mu must be > 0");
    if (kappa && !(*kappa < 0.0)) bad("kappa must be < 0");
    if (d0 && !(*d0 >= 0.0)) bad("d0 must be >= 0");
  }
};

struct BoundReport {
  std::string name;
  double bound = 0.0;
  double observed = std::numeric_limits<double>::quiet_NaN();
  bool pass = true;
  std::string note;
};

/// Relative slack granted to the observed side of every bound comparison.
inline constexpr double kBoundSlack = 1e-9;

inline bool within_upper(double observed, double bound) {
  return observed <= bound + kBoundSlack * std::max(1.0, std::abs(bound));
}
inline bool within_lower(double observed, double bound) {
  return observed >= bound - kBoundSlack * std::max(1.0, std::abs(bound));
}

/// eta^3 L^2 / |g0| + 2 (f0 - f*) + eta^4 L^3 / |g0|^2, the weighted
/// step-sum bound shared by several results.
inline double weighted_sum_bound(const TheoryInputs& in) {
  const double e = in.eta, L = in.L, g = in.g0_norm;
  return e * e * e * L * L / g + 2.0 * (in.f0 - in.f_star) + e * e * e * e * L * L * L / (g * g);
}

/// Lower bound on every MAdaGrad step size.
inline double alpha_min(const TheoryInputs& in) {
  in.validate();
  const double e = in.eta, L = in.L, g = in.g0_norm;
  return 1.0 / (L + 2.0 * (in.f0 - in.f_star) / (e * e) + e * e * L * L * L / (g * g));
}

/// Iterations needed to reach |grad f| <= eps.
inline double tg_bound(const TheoryInputs& in, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidInput, "eps must be > 0");
  return weighted_sum_bound(in) / alpha_min(in) / (eps * eps);
}

/// Bound on sum_k alpha_k^2 |g_k|^2.
inline double rho_constant(const TheoryInputs& in) {
  in.validate();
  return in.eta / in.g0_norm * weighted_sum_bound(in);
}

struct CurvatureConstants {
  double C = 0.0;
  double K = 1.0;
};

/// Curvature-dependent constants (C, K) for the convex-case distance
/// recursion, with kappa_hat = sqrt|kappa|.
inline CurvatureConstants curvature_constants(const TheoryInputs& in) {
  if (!in.kappa || !in.d0) {
    throw Error(ErrorKind::InputMissing, "curvature constants need kappa and d0");
  }
  in.validate();
  const double kh = std::sqrt(std::abs(*in.kappa));
  const double t = kh * std::sqrt(rho_constant(in));
  const double sinhc = t == 0.0 ? 1.0 : std::sinh(t) / t;
  // cosh(a) e^b - 1 without cancellation near 1, then acosh(1 + delta).
  const double a = kh * *in.d0;
  const double b = 0.5 * t * std::sinh(t);
  const double sh = std::sinh(0.5 * a);
  const double delta = 2.0 * sh * sh * std::exp(b) + std::expm1(b);
  const double C = std::log1p(delta + std::sqrt(delta * (2.0 + delta)));
  const double coth_ratio = C == 0.0 ? 1.0 : C / std::tanh(C);
  return {C, sinhc * coth_ratio};
}

/// Iterations to reach f - f* <= eps for geodesically convex f.
inline double tf_convex_bound(const TheoryInputs& in, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidInput, "eps must be > 0");
  const auto cc = curvature_constants(in);
  const double d0 = *in.d0;
  return (d0 * d0 + rho_constant(in) * cc.K) / (2.0 * alpha_min(in)) / eps;
}

/// Warm-up phase length under PL while beta stays below (eta L)^2.
inline double pl_warmup_bound(const TheoryInputs& in, double eps) {
  if (!in.mu) throw Error(ErrorKind::InputMissing, "PL bounds need mu");
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidInput, "eps must be > 0");
  in.validate();
  const double eL2 = in.eta * in.eta * in.L * in.L;
  if (in.g0_norm >= in.eta * in.L) return 1.0;
  return 1.0 + (eL2 / *in.mu / eps + 1.0) * std::log(eL2 / (in.g0_norm * in.g0_norm));
}

/// Linear-rate iteration bound under PL; adds the warm-up term when
/// |g0| < eta L.
inline double pl_linear_bound(const TheoryInputs& in, double eps) {
  if (!in.mu) throw Error(ErrorKind::InputMissing, "PL bounds need mu");
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidInput, "eps must be > 0");
  const double amin = alpha_min(in);
  const double contraction = *in.mu * amin / 2.0;
  if (!(contraction > 0.0 && contraction < 1.0)) {
    throw Error(ErrorKind::InconsistentInputs,
                "mu * alpha_min / 2 = " + std::to_string(contraction) + " is outside (0,1)",
                contraction);
  }
  const double L = in.L, e = in.eta, g = in.g0_norm;
  const double bracket = in.f0 - in.f_star + e * e * e * e * L * L * L / (2.0 * g * g);
  const double linear = std::abs(std::log(bracket / eps)) / std::abs(std::log1p(-contraction));
  if (g >= e * L) return 1.0 + linear;
  return pl_warmup_bound(in, eps) + linear;
}

/// max over sampled pairs of |P_{p->q} grad f(p) - grad f(q)|_q / d(p, q).
inline double estimate_lipschitz(const Objective& obj, const std::vector<SpdPoint>& points) {
  if (points.size() < 2) throw Error(ErrorKind::InsufficientData, "need at least two points");
  std::vector<TangentVector> grads;
  grads.reserve(points.size());
  for (const auto& p : points) grads.push_back(obj.gradient(p));
  double best = 0.0;
  bool any_pair = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (i == j) continue;
      const double d = distance(points[i], points[j]);
      if (!(d > 0.0)) continue;
      any_pair = true;
      const TangentVector moved = parallel_transport(points[i], points[j], grads[i]);
      best = std::max(best, norm(points[j], moved - grads[j]) / d);
    }
  }
  if (!any_pair) throw Error(ErrorKind::InsufficientData, "all sampled points coincide");
  return best;
}

struct DescentCheck {
  bool pass = true;
  double residual = 0.0;
};

/// f(exp_p v) <= f(p) + <grad f(p), v> + (L/2) |v|^2, reported as rhs - lhs.
inline DescentCheck descent_lemma_check(const Objective& obj, const SpdPoint& x,
                                        const TangentVector& v, double L) {
  const double fx = obj.value(x);
  const double lhs = obj.value(exp_map(x, v));
  const double nv = norm(x, v);
  const double rhs = fx + inner(x, obj.gradient(x), v) + 0.5 * L * nv * nv;
  const double residual = rhs - lhs;
  return {residual >= -1e-9 * (1.0 + std::abs(fx)), residual};
}

/// Inputs derived from a trace's first record.
inline TheoryInputs theory_inputs_from_trace(const RunTrace& trace, double L, double f_star) {
  if (trace.records.empty()) throw Error(ErrorKind::InsufficientData, "empty trace");
  TheoryInputs in;
  in.L = L;
  in.eta = trace.config.eta;
  in.f0 = trace.records.front().f;
  in.f_star = f_star;
  in.g0_norm = trace.records.front().grad_norm;
  return in;
}

/// Checks every MAdaGrad step-size inequality and the stationarity
/// complexity bound against a recorded trace.
inline std::vector<BoundReport> trace_audit(const RunTrace& trace, const TheoryInputs& in) {
  if (trace.config.kind != SolverKind::MAdaGrad) {
    throw Error(ErrorKind::WrongSolver, "trace audit applies to MAdaGrad traces only, got " +
                                            std::string(to_string(trace.config.kind)));
  }
  in.validate();
  const auto& r = trace.records;
  const std::size_t steps = r.empty() ? 0 : r.size() - 1;  // records 0..steps-1 carry a step
  const double eta = in.eta;
  std::vector<BoundReport> out;

  // beta_T = |g0|^2 prod_{k=1}^{T-1} (1 + |g_k|^2 / beta_k), T = 1..steps.
  {
    BoundReport rep{"beta_product_identity", 1e-10};
    double worst = 0.0;
    double prod = r.empty() ? 0.0 : r[0].grad_norm * r[0].grad_norm;
    for (std::size_t T = 1; T <= steps; ++T) {
      if (T >= 2) prod *= 1.0 + r[T - 1].grad_norm * r[T - 1].grad_norm / r[T - 1].beta;
      const double beta_T = r[T].beta;
      worst = std::max(worst, std::abs(beta_T - prod) / std::abs(beta_T));
    }
    rep.observed = worst;
    rep.pass = worst <= rep.bound;
    rep.note = "max relative error over T";
    out.push_back(rep);
  }
  // (alpha_k / 2)|g_k|^2 >= (eta/2)(sqrt(beta_{k+1}) - sqrt(beta_k)).
  {
    BoundReport rep{"telescoping_step_inequality", 0.0};
    double worst = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (std::size_t k = 0; k < steps; ++k) {
      const double lhs = 0.5 * r[k].alpha * r[k].grad_norm * r[k].grad_norm;
      const double rhs = 0.5 * eta * (std::sqrt(r[k + 1].beta) - std::sqrt(r[k].beta));
      worst = std::min(worst, lhs - rhs);
      ok = ok && within_lower(lhs, rhs);
    }
    rep.observed = steps == 0 ? 0.0 : worst;
    rep.pass = ok;
    rep.note = "min of lhs - rhs";
    out.push_back(rep);
  }
  const double amin = alpha_min(in);
  {
    BoundReport rep{"alpha_lower_bound", amin};
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < steps; ++k) lo = std::min(lo, r[k].alpha);
    rep.observed = steps == 0 ? std::numeric_limits<double>::quiet_NaN() : lo;
    rep.pass = steps == 0 || within_lower(lo, amin);
    rep.note = "min alpha_k >= alpha_min";
    out.push_back(rep);
  }
  double weighted = 0.0, squared = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double g2 = r[k].grad_norm * r[k].grad_norm;
    weighted += r[k].alpha * g2;
    squared += r[k].alpha * r[k].alpha * g2;
  }
  {
    const double bound = weighted_sum_bound(in);
    out.push_back({"weighted_step_sum", bound, weighted, within_upper(weighted, bound),
                   "sum alpha_k |g_k|^2"});
  }
  {
    const double bound = rho_constant(in);
    out.push_back({"squared_step_sum", bound, squared, within_upper(squared, bound),
                   "sum alpha_k^2 |g_k|^2 <= rho"});
  }
  {
    const double eps = trace.config.tol_grad > 0.0 ? trace.config.tol_grad : 1e-4;
    const double bound = tg_bound(in, eps);
    std::optional<std::size_t> hit;
    for (const auto& rec : r) {
      if (rec.grad_norm <= eps) {
        hit = rec.k;
        break;
      }
    }
    BoundReport rep{"stationarity_iterations", bound};
    if (hit) {
      rep.observed = double(*hit);
      rep.pass = within_upper(rep.observed, bound);
      rep.note = "T_g(eps) observed; the bound needs only L-Lipschitz gradient and f*";
    } else {
      // Not reached: T_g > last k, which violates the bound only once k exceeds it.
      rep.observed = double(r.empty() ? 0 : r.back().k);
      rep.pass = rep.observed <= bound;
      rep.note = "eps not reached; observed is a lower bound on T_g";
    }
    out.push_back(rep);
  }
  return out;
}

}  // namespace spdada
