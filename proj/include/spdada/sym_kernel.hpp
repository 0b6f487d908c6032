#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "spdada/errors.hpp"

namespace spdada {

/// Dense real symmetric n x n matrix. Every constructor symmetrizes its input
/// as (A + A^T) / 2, so entries(i, j) == entries(j, i) holds bit-for-bit.
class SymMatrix {
 public:
  SymMatrix() : m_(Eigen::MatrixXd::Zero(1, 1)) {}

  explicit SymMatrix(const Eigen::MatrixXd& a) : m_(symmetrize(a)) {}

  SymMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd a(n, n);
    Eigen::Index i = 0;
    for (const auto& row : rows) {
      if (static_cast<Eigen::Index>(row.size()) != n) {
        throw Error(ErrorKind::InvalidInput, "SymMatrix rows must form a square matrix");
      }
      Eigen::Index j = 0;
      for (double v : row) a(i, j++) = v;
      ++i;
    }
    m_ = symmetrize(a);
  }

  static SymMatrix identity(std::size_t n) {
    return SymMatrix(Eigen::MatrixXd::Identity(idx(n), idx(n)));
  }
  static SymMatrix zero(std::size_t n) { return SymMatrix(Eigen::MatrixXd::Zero(idx(n), idx(n))); }
  static SymMatrix diagonal(const std::vector<double>& d) {
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(d.data(), idx(d.size()));
    return SymMatrix(Eigen::MatrixXd(v.asDiagonal()));
  }
  /// Row-major n*n values.
  static SymMatrix from_row_major(std::size_t n, const std::vector<double>& values) {
    if (values.size() != n * n) {
      throw Error(ErrorKind::InvalidInput, "row-major data has " + std::to_string(values.size()) +
                                               " values, expected " + std::to_string(n * n));
    }
    Eigen::MatrixXd a(idx(n), idx(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a(idx(i), idx(j)) = values[i * n + j];
    return SymMatrix(a);
  }

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const Eigen::MatrixXd& mat() const { return m_; }
  double operator()(std::size_t i, std::size_t j) const { return m_(idx(i), idx(j)); }
  double trace() const { return m_.trace(); }

  std::vector<double> row_major() const {
    std::vector<double> out;
    out.reserve(dim() * dim());
    for (Eigen::Index i = 0; i < m_.rows(); ++i)
      for (Eigen::Index j = 0; j < m_.cols(); ++j) out.push_back(m_(i, j));
    return out;
  }

  bool all_finite() const { return m_.allFinite(); }

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
    check_same_dim(a, b);
    return SymMatrix(a.m_ + b.m_, Trusted{});
  }
  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
    check_same_dim(a, b);
    return SymMatrix(a.m_ - b.m_, Trusted{});
  }
  friend SymMatrix operator-(const SymMatrix& a) { return SymMatrix(-a.m_, Trusted{}); }
  friend SymMatrix operator*(double c, const SymMatrix& a) { return SymMatrix(c * a.m_, Trusted{}); }
  friend SymMatrix operator*(const SymMatrix& a, double c) { return c * a; }
  SymMatrix& operator+=(const SymMatrix& b) { return *this = *this + b; }

  static void check_same_dim(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim()) {
      throw Error(ErrorKind::InvalidInput, "dimension mismatch: " + std::to_string(a.dim()) +
                                               " vs " + std::to_string(b.dim()));
    }
  }

 private:
  struct Trusted {};
  // Sums/differences/scalings of symmetric matrices stay exactly symmetric.
  SymMatrix(Eigen::MatrixXd a, Trusted) : m_(std::move(a)) {}

  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

  static Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) {
    if (a.rows() < 1 || a.rows() != a.cols()) {
      throw Error(ErrorKind::InvalidInput, "SymMatrix needs a non-empty square matrix, got " +
                                               std::to_string(a.rows()) + "x" +
                                               std::to_string(a.cols()));
    }
    return 0.5 * (a + a.transpose());
  }

  Eigen::MatrixXd m_;
};

/// Symmetric congruence B * S * B^T, symmetrized.
inline SymMatrix congruence(const Eigen::MatrixXd& b, const SymMatrix& s) {
  return SymMatrix(Eigen::MatrixXd(b * s.mat() * b.transpose()));
}

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns

  std::size_t dim() const { return static_cast<std::size_t>(eigenvalues.size()); }
  double min_eigenvalue() const { return eigenvalues(0); }
  double max_eigenvalue() const { return eigenvalues(eigenvalues.size() - 1); }
};

inline SpectralDecomposition eigh(const SymMatrix& s) {
  if (!s.all_finite()) throw Error(ErrorKind::InvalidInput, "eigh: non-finite matrix entry");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.mat(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::InvalidInput, "eigh: eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Eigenvalues at or below this are treated as non-positive by the
/// positivity-requiring matrix functions.
inline double positivity_floor(const SpectralDecomposition& d) {
  return 1e-12 * d.max_eigenvalue();
}

inline void require_positive(const SpectralDecomposition& d, const char* context) {
  const double lo = d.min_eigenvalue();
  if (!(lo > positivity_floor(d)) || !(lo > 0.0)) {
    throw Error(ErrorKind::NonPositiveEigenvalue,
                std::string(context) + ": minimum eigenvalue " + std::to_string(lo) +
                    " is not safely positive",
                lo);
  }
}

/// Scalar functions lifted to symmetric matrices through the spectrum.
namespace fn {
struct Exp {
  static constexpr bool requires_positive = false;
  double operator()(double x) const { return std::exp(x); }
};
struct Log {
  static constexpr bool requires_positive = true;
  double operator()(double x) const { return std::log(x); }
};
struct Sqrt {
  static constexpr bool requires_positive = true;
  double operator()(double x) const { return std::sqrt(x); }
};
struct InvSqrt {
  static constexpr bool requires_positive = true;
  double operator()(double x) const { return 1.0 / std::sqrt(x); }
};
struct Inverse {
  static constexpr bool requires_positive = true;
  double operator()(double x) const { return 1.0 / x; }
};
}  // namespace fn

template <class F>
concept ScalarFunction = std::invocable<const F&, double> &&
                         std::convertible_to<std::invoke_result_t<const F&, double>, double>;

template <class F>
constexpr bool requires_positive_v = [] {
  if constexpr (requires { F::requires_positive; }) {
    return F::requires_positive;
  } else {
    return false;
  }
}();

template <ScalarFunction F>
Eigen::MatrixXd spectral_apply(const SpectralDecomposition& d, const F& phi) {
  if constexpr (requires_positive_v<F>) require_positive(d, "spectral_map");
  Eigen::VectorXd mapped = d.eigenvalues.unaryExpr([&](double x) { return double(phi(x)); });
  return d.eigenvectors * mapped.asDiagonal() * d.eigenvectors.transpose();
}

/// Q * diag(phi(lambda)) * Q^T from an existing decomposition.
template <ScalarFunction F>
SymMatrix spectral_map(const SpectralDecomposition& d, const F& phi) {
  return SymMatrix(spectral_apply(d, phi));
}

template <ScalarFunction F>
SymMatrix spectral_map(const SymMatrix& s, const F& phi) {
  return spectral_map(eigh(s), phi);
}

inline double frob_norm(const SymMatrix& s) { return s.mat().norm(); }

/// Frobenius inner product tr(A B) of two symmetric matrices.
inline double frob_inner(const SymMatrix& a, const SymMatrix& b) {
  SymMatrix::check_same_dim(a, b);
  return (a.mat().array() * b.mat().array()).sum();
}

}  // namespace spdada
