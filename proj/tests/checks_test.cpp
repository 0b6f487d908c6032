#include <gtest/gtest.h>

#include <sstream>

#include "spdada/checks.hpp"

using namespace spdada;

namespace {

const AuditRow& find(const std::vector<AuditRow>& rows, const std::string& check) {
  for (const auto& r : rows)
    if (r.check == check) return r;
  throw std::runtime_error("missing check " + check);
}

TraceFile traces_for(const InstanceSpec& spec, std::vector<SolverConfig> cfgs) {
  TraceFile f{{spec_line(spec)}, {}};
  for (auto& t : run_batch(spec, cfgs)) f.traces.push_back(std::move(t));
  return f;
}

}  // namespace

TEST(GeometrySuite, SmallRunPasses) {
  GeometrySuiteOptions o;
  o.pairs = 30;
  const auto rows = geometry_suite(o);
  EXPECT_EQ(rows.size(), 4u);
  EXPECT_TRUE(all_pass(rows));
}

TEST(GradientSuite, AllFamiliesPass) {
  const auto rows = gradient_suite();
  EXPECT_EQ(rows.size(), 9u);
  EXPECT_TRUE(all_pass(rows));
}

TEST(PlSuite, PassesAndReportsTightRatio) {
  PlSuiteOptions o;
  o.samples = 500;
  o.witness_points = 10;
  const auto rows = pl_suite(o);
  EXPECT_TRUE(all_pass(rows));
  const auto& sweep = find(rows, "pl_ratio_logdet_sweep");
  EXPECT_LT(sweep.observed, 1.01 * sweep.bound);
}

TEST(PlSuite, RescalingHitsTargetLogdet) {
  Rng rng(1);
  const SpdPoint x = random_spd(4, {0.1, 20.0}, rng);
  EXPECT_NEAR(with_logdet(x, -1.25).logdet(), -1.25, 1e-13);
}

TEST(TheorySuite, ProblemInfoFromPreamble) {
  const auto info = problem_info({"spdada trace v1", "problem=pl n=7 a=2 b=0.5 seed=1"});
  ASSERT_TRUE(info);
  EXPECT_EQ(info->problem, "pl");
  EXPECT_EQ(info->n, 7u);
  EXPECT_EQ(info->a, 2.0);
  EXPECT_FALSE(problem_info({"nothing here"}));
}

TEST(TheorySuite, LogdetTracesPassWithAnalyticL) {
  InstanceSpec spec;
  spec.count = 5;
  SolverConfig m, r, a;
  r.kind = SolverKind::RWNGrad;
  r.max_iter = 20;
  a.kind = SolverKind::Armijo;
  TheorySuiteOptions o;
  o.L = 20.0;
  const auto rows = theory_suite(traces_for(spec, {m, r, a}), o);
  EXPECT_TRUE(all_pass(rows));
  std::size_t armijo_rows = 0, expmap_rows = 0;
  for (const auto& row : rows) {
    armijo_rows += row.check == "armijo_sufficient_decrease";
    expmap_rows += row.check == "one_expmap_per_iteration";
  }
  EXPECT_EQ(armijo_rows, 5u);
  EXPECT_EQ(expmap_rows, 10u);
}

TEST(TheorySuite, UndersizedLIsCaught) {
  InstanceSpec spec;
  spec.count = 3;
  TheorySuiteOptions o;
  o.L = 0.01;
  EXPECT_FALSE(all_pass(theory_suite(traces_for(spec, {SolverConfig{}}), o)));
  o.L = 0.0;
  EXPECT_THROW(theory_suite(traces_for(spec, {SolverConfig{}}), o), Error);
}

TEST(TheorySuite, PlHittingTimeWithCertificate) {
  InstanceSpec spec;
  spec.problem = ObjectiveKind::PlQuartic;
  spec.n = 3;
  spec.count = 4;
  spec.eig_range = {0.5, 2.0};
  TheorySuiteOptions o;
  o.L = 2000.0;
  const auto rows = theory_suite(traces_for(spec, {SolverConfig{}}), o);
  std::size_t pl_rows = 0;
  for (const auto& row : rows) pl_rows += row.check == "pl_hitting_time";
  EXPECT_EQ(pl_rows, 4u);
}

TEST(TheorySuite, ConvexBoundForKarcherRuns) {
  InstanceSpec spec;
  spec.problem = ObjectiveKind::KarcherMean;
  spec.n = 3;
  spec.m = 3;
  spec.count = 3;
  TheorySuiteOptions o;
  o.L = 50.0;
  o.kappa = -0.5;
  o.d0 = 1.0;
  const auto rows = theory_suite(traces_for(spec, {SolverConfig{}}), o);
  std::size_t convex_rows = 0;
  for (const auto& row : rows) convex_rows += row.check.rfind("convex_hitting_time", 0) == 0;
  EXPECT_EQ(convex_rows, 3u);
}

TEST(TheorySuite, FirstGapHit) {
  RunTrace t;
  for (double f : {3.0, 1.0, 0.2, 0.05}) {
    TraceRecord r;
    r.k = t.records.size();
    r.f = f;
    t.records.push_back(r);
  }
  EXPECT_EQ(first_gap_hit(t, 0.0, 0.25), 2u);
  EXPECT_FALSE(first_gap_hit(t, 0.0, 0.01));
}

TEST(DescentLemmaSuite, TwoNPasses) {
  EXPECT_TRUE(all_pass(descent_lemma_suite(5, 10.0, 3, 50)));
  EXPECT_FALSE(all_pass(descent_lemma_suite(5, 0.5, 3, 50)));
}
