#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spdada/spd_manifold.hpp"

namespace spdada {

enum class ObjectiveKind { LogDetQuadratic, KarcherMean, PlQuartic };

inline std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::LogDetQuadratic: return "logdet";
    case ObjectiveKind::KarcherMean: return "karcher";
    case ObjectiveKind::PlQuartic: return "pl";
  }
  return "unknown";
}

inline ObjectiveKind parse_objective_kind(std::string_view s) {
  if (s == "logdet") return ObjectiveKind::LogDetQuadratic;
  if (s == "karcher") return ObjectiveKind::KarcherMean;
  if (s == "pl") return ObjectiveKind::PlQuartic;
  throw Error(ErrorKind::InvalidInput, "unknown problem '" + std::string(s) + "'");
}

struct KnownOptimum {
  double f_star = 0.0;
  std::string minimizer_description;
};

struct PlCertificate {
  double mu_bound = 0.0;
  double f_star = 0.0;
};

/// Polynomial in one variable, coefficients in ascending order.
struct Polynomial {
  std::vector<double> coeffs;

  double operator()(double s) const {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * s + *it;
    return acc;
  }

  Polynomial derivative() const {
    Polynomial d;
    for (std::size_t i = 1; i < coeffs.size(); ++i) d.coeffs.push_back(double(i) * coeffs[i]);
    if (d.coeffs.empty()) d.coeffs.push_back(0.0);
    return d;
  }
};

// The ln det quadratic and the PL family are g(ln det X) for a scalar polynomial g.

inline Polynomial logdet_profile() { return {{0.0, -1.0, 1.0}}; }

inline Polynomial pl_profile(double a, double b) {
  return {{0.0, -(b * b * b) / (a * a), 0.0, -b, a}};
}

inline void check_pl_params(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "PL quartic needs a > 0 and b > 0");
  }
}

inline double logdet_value(const SpdPoint& x) { return logdet_profile()(x.logdet()); }

inline TangentVector logdet_rgrad(const SpdPoint& x) {
  const double c = 2.0 * x.logdet() - 1.0;
  return TangentVector(x, c * x.matrix());
}

inline void check_karcher_points(const SpdPoint& x, const std::vector<SpdPoint>& a) {
  if (a.empty()) throw Error(ErrorKind::InvalidInput, "Karcher mean needs at least one matrix");
  for (const auto& aj : a) detail::check_dims(x, aj);
}

inline double karcher_value(const SpdPoint& x, const std::vector<SpdPoint>& a) {
  check_karcher_points(x, a);
  double acc = 0.0;
  for (const auto& aj : a) {
    const double d = distance(x, aj);
    acc += d * d;
  }
  return 0.5 * acc;
}

inline TangentVector karcher_rgrad(const SpdPoint& x, const std::vector<SpdPoint>& a) {
  check_karcher_points(x, a);
  TangentVector g = TangentVector::zero(x);
  for (const auto& aj : a) g = g - log_map(x, aj);
  return g;
}

inline double pl_value(const SpdPoint& x, double a, double b) {
  check_pl_params(a, b);
  return pl_profile(a, b)(x.logdet());
}

inline TangentVector pl_rgrad(const SpdPoint& x, double a, double b) {
  check_pl_params(a, b);
  const double c = pl_profile(a, b).derivative()(x.logdet());
  return TangentVector(x, c * x.matrix());
}

inline PlCertificate pl_certificate(std::size_t n, double a, double b) {
  check_pl_params(a, b);
  if (n < 1) throw Error(ErrorKind::InvalidInput, "pl_certificate needs n >= 1");
  return {27.0 * double(n) * b * b / (28.0 * a), -(b * b * b * b) / (a * a * a)};
}

/// One problem instance: value, Euclidean gradient, Riemannian gradient and
/// optimum metadata. Immutable after construction.
class Objective {
 public:
  static Objective log_det_quadratic(std::size_t n) {
    if (n < 1) throw Error(ErrorKind::InvalidInput, "objective dimension must be >= 1");
    Objective o(ObjectiveKind::LogDetQuadratic, n);
    o.optimum_ = KnownOptimum{-0.25, "any X with ln det X = 1/2"};
    return o;
  }

  static Objective karcher_mean(std::vector<SpdPoint> points) {
    if (points.empty()) throw Error(ErrorKind::InvalidInput, "Karcher mean needs at least one matrix");
    Objective o(ObjectiveKind::KarcherMean, points.front().dim());
    for (const auto& p : points) detail::check_dims(points.front(), p);
    if (points.size() == 1) o.optimum_ = KnownOptimum{0.0, "A_1"};
    o.points_ = std::move(points);
    return o;
  }

  static Objective pl_quartic(std::size_t n, double a, double b) {
    check_pl_params(a, b);
    if (n < 1) throw Error(ErrorKind::InvalidInput, "objective dimension must be >= 1");
    Objective o(ObjectiveKind::PlQuartic, n);
    o.a_ = a;
    o.b_ = b;
    o.optimum_ = KnownOptimum{pl_certificate(n, a, b).f_star, "any X with det X = e^{b/a}"};
    return o;
  }

  ObjectiveKind kind() const { return kind_; }
  std::string_view name() const { return to_string(kind_); }
  std::size_t dim() const { return dim_; }
  const std::optional<KnownOptimum>& known_optimum() const { return optimum_; }
  const std::vector<SpdPoint>& karcher_points() const { return points_; }
  double a() const { return a_; }
  double b() const { return b_; }

  double value(const SpdPoint& x) const {
    check_dim(x);
    switch (kind_) {
      case ObjectiveKind::LogDetQuadratic: return logdet_value(x);
      case ObjectiveKind::KarcherMean: return karcher_value(x, points_);
      case ObjectiveKind::PlQuartic: return pl_value(x, a_, b_);
    }
    return 0.0;
  }

  /// Frobenius-metric gradient f'(X).
  SymMatrix euclidean_gradient(const SpdPoint& x) const {
    check_dim(x);
    if (kind_ == ObjectiveKind::KarcherMean) {
      SymMatrix sum = SymMatrix::zero(dim_);
      for (const auto& aj : points_) sum += spectral_map(whiten(x, aj.matrix()), fn::Log{});
      return -congruence(x.inv_sqrt(), sum);
    }
    return SymMatrix(scalar_profile().derivative()(x.logdet()) * x.inverse());
  }

  /// Riemannian gradient. Closed forms: c(s) X for the ln det families and
  /// -sum_j log_X(A_j) for the Karcher mean; both equal X f'(X) X.
  TangentVector gradient(const SpdPoint& x) const {
    check_dim(x);
    switch (kind_) {
      case ObjectiveKind::LogDetQuadratic: return logdet_rgrad(x);
      case ObjectiveKind::KarcherMean: return karcher_rgrad(x, points_);
      case ObjectiveKind::PlQuartic: return pl_rgrad(x, a_, b_);
    }
    return TangentVector::zero(x);
  }

  /// g with f(X) = g(ln det X); only for the two ln det families.
  Polynomial scalar_profile() const {
    switch (kind_) {
      case ObjectiveKind::LogDetQuadratic: return logdet_profile();
      case ObjectiveKind::PlQuartic: return pl_profile(a_, b_);
      case ObjectiveKind::KarcherMean: break;
    }
    throw Error(ErrorKind::UnsupportedKind, "Karcher mean is not a function of ln det X");
  }

 private:
  Objective(ObjectiveKind kind, std::size_t n) : kind_(kind), dim_(n) {}

  void check_dim(const SpdPoint& x) const {
    if (x.dim() != dim_) {
      throw Error(ErrorKind::InvalidInput, "point of dim " + std::to_string(x.dim()) +
                                               " for an objective of dim " + std::to_string(dim_));
    }
  }

  ObjectiveKind kind_;
  std::size_t dim_;
  double a_ = 0.0;
  double b_ = 0.0;
  std::vector<SpdPoint> points_;
  std::optional<KnownOptimum> optimum_;
};

/// f restricted to the geodesic t -> exp_X(tV): since
/// ln det exp_X(tV) = s0 + t u with u = tr(X^-1 V), f(exp_X(tV)) = g(s0 + t u).
struct GeodesicRestriction {
  double s0 = 0.0;
  double u = 0.0;
  Polynomial g;

  double value(double t) const { return g(s0 + t * u); }
  double second_derivative_at_zero() const { return g.derivative().derivative()(s0) * u * u; }
};

inline GeodesicRestriction geodesic_restriction_coeffs(const Objective& obj, const SpdPoint& x,
                                                       const TangentVector& v) {
  detail::check_based_at(x, v);
  Polynomial g = obj.scalar_profile();
  const double u = (x.inverse().array() * v.value().mat().array()).sum();
  return {x.logdet(), u, std::move(g)};
}

}  // namespace spdada
