#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "spdada/harness.hpp"

using namespace spdada;

namespace {

SpdPoint scalar(double x) { return SpdPoint(SymMatrix{{x}}); }
TangentVector tangent(const SpdPoint& x, double v) { return TangentVector(x, SymMatrix{{v}}); }

SpdPoint sample(std::size_t n, Rng& rng) { return random_spd(n, {0.1, 20.0}, rng); }

TangentVector sample_tangent(const SpdPoint& x, Rng& rng, double scale = 1.0) {
  const auto n = static_cast<Eigen::Index>(x.dim());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rng.uniform(-scale, scale);
  return TangentVector(x, SymMatrix(m));
}

}  // namespace

// n = 1: exp_x(v) = x e^{v/x}, log_x(y) = x ln(y/x), d = |ln(y/x)|,
// <u, v>_x = uv/x^2, transport v -> v y/x.
TEST(ScalarOracle, ExpLogDistanceInner) {
  const SpdPoint x = scalar(2.0);
  EXPECT_NEAR(exp_map(x, tangent(x, 3.0)).matrix()(0, 0), 2.0 * std::exp(1.5), 1e-13);
  EXPECT_NEAR(log_map(x, scalar(5.0)).value()(0, 0), 2.0 * std::log(2.5), 1e-14);
  EXPECT_NEAR(distance(x, scalar(0.5)), std::log(4.0), 1e-14);
  EXPECT_NEAR(inner(x, tangent(x, 3.0), tangent(x, -1.5)), -4.5 / 4.0, 1e-15);
  EXPECT_NEAR(norm(x, tangent(x, -3.0)), 1.5, 1e-15);
  const SpdPoint y = scalar(7.0);
  EXPECT_NEAR(parallel_transport(x, y, tangent(x, 3.0)).value()(0, 0), 3.0 * 7.0 / 2.0, 1e-13);
}

TEST(ScalarOracle, RiemannianGradientIsXSquaredTimesDerivative) {
  const SpdPoint x = scalar(3.0);
  EXPECT_NEAR(riemannian_gradient(x, SymMatrix{{0.5}}).value()(0, 0), 4.5, 1e-15);
}

TEST(SpdPoint, RejectsIndefiniteAndSingular) {
  EXPECT_THROW(SpdPoint(SymMatrix{{1.0, 2.0}, {2.0, 1.0}}), Error);
  EXPECT_THROW(SpdPoint(SymMatrix::zero(3)), Error);
  try {
    SpdPoint(SymMatrix::diagonal({-2.0, 1.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonPositiveEigenvalue);
  }
}

TEST(SpdPoint, LogdetAndFactors) {
  const SpdPoint x(SymMatrix::diagonal({2.0, 3.0, 0.5}));
  EXPECT_NEAR(x.logdet(), std::log(3.0), 1e-15);
  EXPECT_NEAR(x.sqrt()(1, 1), std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(x.inv_sqrt()(2, 2), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(x.inverse()(0, 0), 0.5, 1e-15);
}

TEST(SpdPoint, FactorsAreSafeToRequestConcurrently) {
  Rng rng(3);
  const SpdPoint x = sample(8, rng);
  std::vector<std::thread> pool;
  std::vector<double> seen(4);
  for (int i = 0; i < 4; ++i) pool.emplace_back([&, i] { seen[i] = x.inv_sqrt().sum(); });
  for (auto& t : pool) t.join();
  for (double v : seen) EXPECT_EQ(v, seen[0]);
}

TEST(TangentVector, BaseMustMatch) {
  const SpdPoint x = SpdPoint::identity(2);
  const SpdPoint y = SpdPoint::identity(2);  // equal matrix, different point
  const TangentVector u = TangentVector::zero(x);
  EXPECT_THROW(u + TangentVector::zero(y), Error);
  EXPECT_THROW(norm(y, u), Error);
  EXPECT_THROW(exp_map(y, u), Error);
  const SpdPoint x_copy = x;
  EXPECT_NO_THROW(norm(x_copy, u));
  EXPECT_THROW(TangentVector(x, SymMatrix::zero(3)), Error);
}

TEST(ExpMap, AtIdentityIsMatrixExponential) {
  const SpdPoint id = SpdPoint::identity(2);
  const TangentVector v(id, SymMatrix{{0.0, 1.0}, {1.0, 0.0}});
  const SymMatrix e = exp_map(id, v).matrix();
  EXPECT_NEAR(e(0, 0), std::cosh(1.0), 1e-14);
  EXPECT_NEAR(e(0, 1), std::sinh(1.0), 1e-14);
}

TEST(ExpMap, OverflowIsReported) {
  const SpdPoint x = scalar(1.0);
  try {
    exp_map(x, tangent(x, 800.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NumericalOverflow);
    EXPECT_NEAR(e.value(), 800.0, 1e-9);
  }
  EXPECT_NO_THROW(exp_map(x, tangent(x, -690.0)));
}

TEST(ExpMap, ZeroVectorIsIdentityMap) {
  Rng rng(11);
  const SpdPoint x = sample(5, rng);
  const SpdPoint y = exp_map(x, TangentVector::zero(x));
  EXPECT_LT((y.matrix() - x.matrix()).mat().norm() / x.matrix().mat().norm(), 1e-14);
}

TEST(Geometry, RoundTripsOnRandomPairs) {
  Rng rng(2025);
  for (std::size_t n : {1u, 3u, 7u}) {
    for (int i = 0; i < 25; ++i) {
      const SpdPoint x = sample(n, rng), y = sample(n, rng);
      const SymMatrix back = exp_map(x, log_map(x, y)).matrix();
      EXPECT_LT((back - y.matrix()).mat().norm() / y.matrix().mat().norm(), 1e-10);
      EXPECT_NEAR(norm(x, log_map(x, y)), distance(x, y), 1e-10 * (1.0 + distance(x, y)));
    }
  }
}

TEST(Geometry, DistanceIsAMetric) {
  Rng rng(99);
  for (int i = 0; i < 40; ++i) {
    const SpdPoint x = sample(4, rng), y = sample(4, rng), z = sample(4, rng);
    EXPECT_NEAR(distance(x, y), distance(y, x), 1e-11 * (1.0 + distance(x, y)));
    EXPECT_LE(distance(x, z), distance(x, y) + distance(y, z) + 1e-11);
    EXPECT_NEAR(distance(x, x), 0.0, 1e-12);
  }
}

TEST(Geometry, AffineInvariance) {
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const SpdPoint x = sample(4, rng), y = sample(4, rng);
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(4, 4) * 3.0;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) p(r, c) += rng.uniform(-1.0, 1.0);
    const SpdPoint px(congruence(p, x.matrix())), py(congruence(p, y.matrix()));
    EXPECT_NEAR(distance(px, py), distance(x, y), 1e-9 * (1.0 + distance(x, y)));
  }
}

TEST(Geometry, TransportPreservesInnerProducts) {
  Rng rng(17);
  for (int i = 0; i < 20; ++i) {
    const SpdPoint x = sample(5, rng), y = sample(5, rng);
    const TangentVector u = sample_tangent(x, rng), v = sample_tangent(x, rng);
    const double before = inner(x, u, v);
    const double after = inner(y, parallel_transport(x, y, u), parallel_transport(x, y, v));
    EXPECT_NEAR(after, before, 1e-10 * (1.0 + std::abs(before)));
  }
}

TEST(Geometry, TransportMovesVelocityAlongGeodesic) {
  // The geodesic velocity log_x(y) arrives at y as -log_y(x).
  Rng rng(23);
  const SpdPoint x = sample(4, rng), y = sample(4, rng);
  const TangentVector moved = parallel_transport(x, y, log_map(x, y));
  const TangentVector expected = -log_map(y, x);
  EXPECT_LT((moved.value() - expected.value()).mat().norm() / expected.value().mat().norm(), 1e-9);
}

TEST(Geometry, GeodesicHasConstantSpeed) {
  Rng rng(31);
  const SpdPoint x = sample(6, rng), y = sample(6, rng);
  const TangentVector v = log_map(x, y);
  const double d = distance(x, y);
  for (double t : {0.25, 0.5, 0.9}) {
    const SpdPoint p = exp_map(x, t * v);
    EXPECT_NEAR(distance(x, p), t * d, 1e-9 * d);
    EXPECT_NEAR(distance(p, y), (1.0 - t) * d, 1e-9 * d);
  }
}
