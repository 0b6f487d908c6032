#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>

#include "spdada/sym_kernel.hpp"

namespace spdada {

namespace detail {

inline std::uint64_t next_point_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

struct SpdFactors {
  Eigen::MatrixXd inverse;
  Eigen::MatrixXd sqrt;
  Eigen::MatrixXd inv_sqrt;
};

struct SpdData {
  SymMatrix matrix;
  SpectralDecomposition spectrum;
  std::uint64_t id = 0;
  mutable std::once_flag factors_once;
  mutable SpdFactors factors;

  const SpdFactors& get_factors() const {
    std::call_once(factors_once, [this] {
      const auto& q = spectrum.eigenvectors;
      const auto& l = spectrum.eigenvalues;
      factors.inverse = q * l.cwiseInverse().asDiagonal() * q.transpose();
      factors.sqrt = q * l.cwiseSqrt().asDiagonal() * q.transpose();
      factors.inv_sqrt = q * l.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
      // Same symmetrization as SymMatrix so later congruences stay symmetric.
      factors.inverse = 0.5 * (factors.inverse + factors.inverse.transpose()).eval();
      factors.sqrt = 0.5 * (factors.sqrt + factors.sqrt.transpose()).eval();
      factors.inv_sqrt = 0.5 * (factors.inv_sqrt + factors.inv_sqrt.transpose()).eval();
    });
    return factors;
  }
};

}  // namespace detail

/// A point on the SPD manifold. Immutable; copies share the spectral
/// decomposition and the lazily computed inverse / square-root factors.
class SpdPoint {
 public:
  explicit SpdPoint(const SymMatrix& m) : data_(std::make_shared<detail::SpdData>()) {
    data_->matrix = m;
    data_->spectrum = eigh(m);
    require_positive(data_->spectrum, "SpdPoint");
    data_->id = detail::next_point_id();
  }
  explicit SpdPoint(const Eigen::MatrixXd& m) : SpdPoint(SymMatrix(m)) {}

  static SpdPoint identity(std::size_t n) { return SpdPoint(SymMatrix::identity(n)); }

  std::size_t dim() const { return data_->matrix.dim(); }
  const SymMatrix& matrix() const { return data_->matrix; }
  const SpectralDecomposition& spectrum() const { return data_->spectrum; }
  std::uint64_t id() const { return data_->id; }

  /// ln det X as the sum of eigenvalue logs (det itself overflows for large n).
  double logdet() const { return data_->spectrum.eigenvalues.array().log().sum(); }

  const Eigen::MatrixXd& inverse() const { return data_->get_factors().inverse; }
  const Eigen::MatrixXd& sqrt() const { return data_->get_factors().sqrt; }
  const Eigen::MatrixXd& inv_sqrt() const { return data_->get_factors().inv_sqrt; }

 private:
  std::shared_ptr<detail::SpdData> data_;
};

/// Element of T_X M, identified with a symmetric matrix and tagged with its
/// base point.
class TangentVector {
 public:
  TangentVector(const SpdPoint& base, SymMatrix value)
      : base_id_(base.id()), value_(std::move(value)) {
    if (value_.dim() != base.dim()) {
      throw Error(ErrorKind::InvalidInput, "tangent vector of dim " +
                                               std::to_string(value_.dim()) +
                                               " at a base point of dim " +
                                               std::to_string(base.dim()));
    }
  }

  static TangentVector zero(const SpdPoint& base) {
    return TangentVector(base, SymMatrix::zero(base.dim()));
  }

  std::uint64_t base_id() const { return base_id_; }
  const SymMatrix& value() const { return value_; }
  std::size_t dim() const { return value_.dim(); }

  friend TangentVector operator+(const TangentVector& a, const TangentVector& b) {
    same_base(a, b);
    return TangentVector(a.base_id_, a.value_ + b.value_);
  }
  friend TangentVector operator-(const TangentVector& a, const TangentVector& b) {
    same_base(a, b);
    return TangentVector(a.base_id_, a.value_ - b.value_);
  }
  friend TangentVector operator-(const TangentVector& a) { return TangentVector(a.base_id_, -a.value_); }
  friend TangentVector operator*(double c, const TangentVector& a) {
    return TangentVector(a.base_id_, c * a.value_);
  }

 private:
  TangentVector(std::uint64_t id, SymMatrix value) : base_id_(id), value_(std::move(value)) {}

  static void same_base(const TangentVector& a, const TangentVector& b) {
    if (a.base_id_ != b.base_id_) {
      throw Error(ErrorKind::InvalidInput, "tangent vectors live in different tangent spaces");
    }
  }

  std::uint64_t base_id_;
  SymMatrix value_;
};

namespace detail {

inline void check_based_at(const SpdPoint& x, const TangentVector& v) {
  if (v.base_id() != x.id()) {
    throw Error(ErrorKind::InvalidInput, "tangent vector is not based at the given point");
  }
}

inline void check_dims(const SpdPoint& x, const SpdPoint& y) {
  if (x.dim() != y.dim()) {
    throw Error(ErrorKind::InvalidInput, "dimension mismatch: " + std::to_string(x.dim()) +
                                             " vs " + std::to_string(y.dim()));
  }
}

}  // namespace detail

/// X^{-1/2} V X^{-1/2}: the tangent vector expressed at the identity.
inline SymMatrix whiten(const SpdPoint& x, const SymMatrix& v) {
  SymMatrix::check_same_dim(x.matrix(), v);
  return congruence(x.inv_sqrt(), v);
}

/// <U, V>_X = tr(V X^-1 U X^-1).
inline double inner(const SpdPoint& x, const TangentVector& u, const TangentVector& v) {
  detail::check_based_at(x, u);
  detail::check_based_at(x, v);
  return frob_inner(whiten(x, u.value()), whiten(x, v.value()));
}

inline double norm(const SpdPoint& x, const TangentVector& v) {
  detail::check_based_at(x, v);
  return frob_norm(whiten(x, v.value()));
}

/// Largest |eigenvalue| of X^{-1/2} V X^{-1/2} the exponential map accepts.
inline constexpr double kExpArgumentLimit = 700.0;

/// exp_X(V) = X^{1/2} exp(X^{-1/2} V X^{-1/2}) X^{1/2}.
inline SpdPoint exp_map(const SpdPoint& x, const TangentVector& v) {
  detail::check_based_at(x, v);
  const auto d = eigh(whiten(x, v.value()));
  const double peak = d.eigenvalues.cwiseAbs().maxCoeff();
  if (!(peak <= kExpArgumentLimit)) {
    throw Error(ErrorKind::NumericalOverflow,
                "exp_map: whitened eigenvalue magnitude " + std::to_string(peak) + " exceeds " +
                    std::to_string(kExpArgumentLimit),
                peak);
  }
  return SpdPoint(congruence(x.sqrt(), SymMatrix(spectral_apply(d, fn::Exp{}))));
}

/// log_X(Y) = X^{1/2} ln(X^{-1/2} Y X^{-1/2}) X^{1/2}.
inline TangentVector log_map(const SpdPoint& x, const SpdPoint& y) {
  detail::check_dims(x, y);
  const SymMatrix inner_log = spectral_map(whiten(x, y.matrix()), fn::Log{});
  return TangentVector(x, congruence(x.sqrt(), inner_log));
}

inline double distance(const SpdPoint& x, const SpdPoint& y) {
  detail::check_dims(x, y);
  const auto d = eigh(whiten(x, y.matrix()));
  require_positive(d, "distance");
  return std::sqrt(d.eigenvalues.array().log().square().sum());
}

/// Transport along the geodesic from X to Y: V -> E V E^T with
/// E = X^{1/2} (X^{-1/2} Y X^{-1/2})^{1/2} X^{-1/2}.
inline TangentVector parallel_transport(const SpdPoint& x, const SpdPoint& y,
                                        const TangentVector& v) {
  detail::check_dims(x, y);
  detail::check_based_at(x, v);
  const SymMatrix mid = spectral_map(whiten(x, y.matrix()), fn::Sqrt{});
  const Eigen::MatrixXd e = x.sqrt() * mid.mat() * x.inv_sqrt();
  return TangentVector(y, congruence(e, v.value()));
}

/// grad f(X) = X f'(X) X for the Frobenius gradient f'(X).
inline TangentVector riemannian_gradient(const SpdPoint& x, const SymMatrix& eucl_grad) {
  SymMatrix::check_same_dim(x.matrix(), eucl_grad);
  return TangentVector(x, congruence(x.matrix().mat(), eucl_grad));
}

}  // namespace spdada
