#include <gtest/gtest.h>

#include <cmath>

#include "spdada/harness.hpp"
#include "spdada/theory.hpp"

using namespace spdada;

namespace {

// L = 2, eta = 1, f0 - f* = 3, |g0| = 2 gives W = 2 + 6 + 2 = 10,
// alpha_min = 1 / (2 + 6 + 2) = 0.1 and rho = 5.
TheoryInputs hand_inputs() {
  TheoryInputs in;
  in.L = 2.0;
  in.eta = 1.0;
  in.f0 = 1.0;
  in.f_star = -2.0;
  in.g0_norm = 2.0;
  return in;
}

}  // namespace

TEST(Bounds, HandComputedValues) {
  const auto in = hand_inputs();
  EXPECT_DOUBLE_EQ(weighted_sum_bound(in), 10.0);
  EXPECT_DOUBLE_EQ(alpha_min(in), 0.1);
  EXPECT_DOUBLE_EQ(rho_constant(in), 5.0);
  EXPECT_NEAR(tg_bound(in, 0.5), 400.0, 1e-10);
}

TEST(Bounds, StationarityBoundScalesAsInverseSquare) {
  const auto in = hand_inputs();
  for (double eps : {1e-1, 3e-3, 1e-4}) {
    EXPECT_EQ(tg_bound(in, eps / 2.0), 4.0 * tg_bound(in, eps));
    EXPECT_EQ(tg_bound(in, eps / 4.0), 16.0 * tg_bound(in, eps));
  }
  EXPECT_THROW(tg_bound(in, 0.0), Error);
}

TEST(Bounds, InputValidation) {
  auto in = hand_inputs();
  in.L = 0;
  EXPECT_THROW(alpha_min(in), Error);
  in = hand_inputs();
  in.f0 = -3.0;
  EXPECT_THROW(alpha_min(in), Error);
  in = hand_inputs();
  in.kappa = 0.5;
  in.d0 = 1.0;
  EXPECT_THROW(curvature_constants(in), Error);
}

TEST(Curvature, MatchesDirectFormula) {
  auto in = hand_inputs();
  in.kappa = -1.0;
  in.d0 = 1.0;
  const double t = std::sqrt(5.0);
  const double C = std::acosh(std::cosh(1.0) * std::exp(0.5 * t * std::sinh(t)));
  const double K = std::sinh(t) / t * C / std::tanh(C);
  const auto cc = curvature_constants(in);
  EXPECT_NEAR(cc.C, C, 1e-13 * C);
  EXPECT_NEAR(cc.K, K, 1e-12 * K);
  EXPECT_NEAR(tf_convex_bound(in, 1e-3), (1.0 + 5.0 * K) / 0.2 / 1e-3, 1e-9 * (1.0 + 5.0 * K) / 0.2 / 1e-3);
}

TEST(Curvature, FlatLimit) {
  auto in = hand_inputs();
  in.d0 = 2.0;
  for (double kappa : {-1e-20, -1e-40, -1e-300}) {
    in.kappa = kappa;
    const auto cc = curvature_constants(in);
    EXPECT_NEAR(cc.C, 0.0, 1e-9);
    EXPECT_NEAR(cc.K, 1.0, 1e-9);
  }
  // C grows like sqrt(-kappa): at kappa = -1e-12 it is still ~3e-6.
  in.kappa = -1e-12;
  EXPECT_GT(curvature_constants(in).C, 1e-6);
  // K -> 1 gives the flat rate (d0^2 + rho) / (2 alpha_min eps).
  in.kappa = -1e-300;
  EXPECT_NEAR(tf_convex_bound(in, 1.0), (4.0 + 5.0) / 0.2, 1e-8);
}

TEST(Curvature, NeedsKappaAndDistance) {
  auto in = hand_inputs();
  in.kappa = -1.0;
  try {
    curvature_constants(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InputMissing);
  }
}

TEST(PlBounds, BranchAtBoundary) {
  // eta L = 2 = |g0|: the warm-up term is absent.
  auto in = hand_inputs();
  in.mu = 1.0;
  const double eps = 1e-6;
  const double bracket = 3.0 + 1.0 * 8.0 / (2.0 * 4.0);
  const double linear = std::abs(std::log(bracket / eps)) / std::abs(std::log(1.0 - 0.05));
  EXPECT_NEAR(pl_linear_bound(in, eps), 1.0 + linear, 1e-10 * linear);
  EXPECT_EQ(pl_warmup_bound(in, eps), 1.0);

  // Just below the boundary the warm-up term appears.
  in.g0_norm = 1.5;
  const double amin = 1.0 / (2.0 + 6.0 + 8.0 / 2.25);
  const double bracket2 = 3.0 + 8.0 / (2.0 * 2.25);
  const double linear2 = std::abs(std::log(bracket2 / eps)) / std::abs(std::log(1.0 - amin / 2.0));
  const double warm = 1.0 + (4.0 / eps + 1.0) * std::log(4.0 / 2.25);
  EXPECT_NEAR(pl_warmup_bound(in, eps), warm, 1e-12 * warm);
  EXPECT_NEAR(pl_linear_bound(in, eps), warm + linear2, 1e-12 * (warm + linear2));
}

TEST(PlBounds, ContractionOutsideUnitIntervalIsRejected) {
  auto in = hand_inputs();
  in.mu = 100.0;  // mu alpha_min / 2 = 5
  try {
    pl_linear_bound(in, 1e-3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InconsistentInputs);
    EXPECT_DOUBLE_EQ(e.value(), 5.0);
  }
  in.mu.reset();
  EXPECT_THROW(pl_linear_bound(in, 1e-3), Error);
}

TEST(Lipschitz, ScaledIdentitiesRecoverTwoN) {
  // grad f = (2s - 1) X; between e^a I and e^b I the ratio is exactly 2n.
  for (std::size_t n : {1u, 4u, 10u}) {
    std::vector<SpdPoint> pts;
    for (double a : {-0.3, 0.1, 0.8}) pts.emplace_back(std::exp(a) * SymMatrix::identity(n));
    EXPECT_NEAR(estimate_lipschitz(Objective::log_det_quadratic(n), pts), 2.0 * n, 1e-10 * n);
  }
}

TEST(Lipschitz, NeedsDistinctPoints) {
  const auto obj = Objective::log_det_quadratic(2);
  EXPECT_THROW(estimate_lipschitz(obj, {SpdPoint::identity(2)}), Error);
  const SpdPoint x = SpdPoint::identity(2);
  try {
    estimate_lipschitz(obj, {x, x});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
}

TEST(DescentLemma, HoldsWithTwoNAndFailsWithTinyL) {
  Rng rng(77);
  const std::size_t n = 6;
  const auto obj = Objective::log_det_quadratic(n);
  bool small_l_failed = false;
  for (int i = 0; i < 50; ++i) {
    const SpdPoint x = random_spd(n, {0.1, 20.0}, rng);
    const TangentVector v(x, rng.uniform(-1.0, 1.0) * x.matrix());
    EXPECT_TRUE(descent_lemma_check(obj, x, v, 2.0 * n).pass);
    small_l_failed = small_l_failed || !descent_lemma_check(obj, x, v, 0.01).pass;
  }
  EXPECT_TRUE(small_l_failed);
}

TEST(TraceAudit, PassesOnMAdaGradRuns) {
  InstanceSpec spec;
  spec.count = 10;
  SolverConfig cfg;
  for (const auto& t : run_batch(spec, {cfg})) {
    const auto in = theory_inputs_from_trace(t, 20.0, -0.25);
    for (const auto& rep : trace_audit(t, in)) EXPECT_TRUE(rep.pass) << rep.name << " on " << t.run_id;
  }
}

TEST(TraceAudit, DetectsCorruptedBeta) {
  InstanceSpec spec;
  spec.count = 1;
  auto t = run_batch(spec, {SolverConfig{}}).front();
  ASSERT_GT(t.records.size(), 3u);
  t.records[2].beta *= 1.001;
  const auto reps = trace_audit(t, theory_inputs_from_trace(t, 20.0, -0.25));
  EXPECT_FALSE(reps.front().pass);
  EXPECT_EQ(reps.front().name, "beta_product_identity");
}

TEST(TraceAudit, RejectsOtherSolvers) {
  SolverConfig cfg;
  cfg.kind = SolverKind::Armijo;
  InstanceSpec spec;
  spec.count = 1;
  const auto t = run_batch(spec, {cfg}).front();
  try {
    trace_audit(t, theory_inputs_from_trace(t, 20.0, -0.25));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::WrongSolver);
  }
}
