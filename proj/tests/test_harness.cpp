#include <cmath>

#include <gtest/gtest.h>

#include "ssd/harness.hpp"

using namespace ssd;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.m_grid = {6, 8};
  spec.l_grid = {2};
  spec.snr_grid = {5.0, 15.0};
  spec.decoders = {"sparse", "sparse_se", "classical", "omp"};
  spec.trials = 40;
  spec.seed = 123;
  return spec;
}

}  // namespace

TEST(DecoderKind, ParseRoundTrip) {
  for (auto k : {DecoderKind::sparse, DecoderKind::sparse_se, DecoderKind::sparse_lb, DecoderKind::classical,
                 DecoderKind::brute_force, DecoderKind::omp})
    EXPECT_EQ(parse_decoder(to_string(k)), k);
  EXPECT_THROW(parse_decoder("fastest"), InvalidArgument);
}

TEST(Experiment, DeterministicCsv) {
  const auto a = run_experiment(small_spec());
  const auto b = run_experiment(small_spec());
  EXPECT_EQ(summary_csv(a), summary_csv(b));
  EXPECT_EQ(levels_csv(a), levels_csv(b));
}

TEST(Experiment, SerialAndParallelAgree) {
  auto serial = small_spec();
  serial.workers = 1;
  auto parallel = small_spec();
  parallel.workers = 4;
  EXPECT_EQ(summary_csv(run_experiment(serial)), summary_csv(run_experiment(parallel)));
}

TEST(Experiment, GridAndRowLayout) {
  const auto res = run_experiment(small_spec());
  ASSERT_EQ(res.points.size(), 4u);
  ASSERT_EQ(res.rows.size(), 16u);
  EXPECT_EQ(res.rows[0].decoder, "sparse");
  EXPECT_EQ(res.rows[3].decoder, "omp");
  for (const auto& r : res.rows) {
    EXPECT_EQ(r.trials, 40u);
    EXPECT_EQ(r.failed_trials, 0u);
    EXPECT_EQ(r.mean_nk.size(), static_cast<std::size_t>(r.point.m));
  }
  const std::string csv = summary_csv(res);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "m,n,l,alphabet,snr_db,decoder,trials,empty_trials,failed_trials,error_rate,error_rate_se,mean_nodes,"
            "mean_nodes_se,mean_flops,mean_flops_se,e_c");
}

TEST(Experiment, PairedTrialsShareInstances) {
  const auto res = run_experiment(small_spec());
  // Exact decoders with the same instance: identical per-trial residuals.
  for (const auto& point : res.records)
    for (std::size_t t = 0; t < point[0].size(); ++t) {
      EXPECT_EQ(point[0][t].seed, point[1][t].seed);
      EXPECT_NEAR(point[0][t].residual2, point[1][t].residual2, 1e-12 * (1 + point[0][t].residual2));
      EXPECT_LE(point[2][t].residual2, point[0][t].residual2 + 1e-12);
    }
}

TEST(Experiment, NoiselessErrorRateIsZero) {
  ExperimentSpec spec;
  spec.m_grid = {10};
  spec.l_grid = {3};
  spec.snr_grid = {INFINITY};
  spec.alphabet = Alphabet::ternary();
  spec.decoders = {"sparse", "sparse_se", "sparse_lb", "classical"};
  spec.trials = 30;
  const auto res = run_experiment(spec);
  for (const auto& r : res.rows) EXPECT_EQ(r.error_rate, 0.0) << r.decoder;
}

TEST(Experiment, FixedRadiusReportsEmptySpheres) {
  ExperimentSpec spec;
  spec.m_grid = {8};
  spec.l_grid = {2};
  spec.snr_grid = {10.0};
  spec.one_minus_eps = 0.05;
  spec.fixed_radius = true;
  spec.trials = 60;
  const auto res = run_experiment(spec);
  EXPECT_GT(res.rows[0].empty_trials, 0u);
  EXPECT_LT(res.rows[0].empty_trials, 60u);
  spec.snr_grid = {INFINITY};
  EXPECT_THROW(run_experiment(spec), InvalidArgument);
}

TEST(Experiment, OmpBaselineWithZeroBudget) {
  ExperimentSpec spec;
  spec.m_grid = {6};
  spec.l_grid = {0};
  spec.snr_grid = {10.0};
  spec.trials = 10;
  const auto res = run_omp_baseline(spec);
  ASSERT_EQ(res.rows.size(), 1u);
  EXPECT_EQ(res.rows[0].decoder, "omp");
  EXPECT_EQ(res.rows[0].error_rate, 0.0);
  EXPECT_EQ(res.rows[0].mean_nodes, 0.0);
}

TEST(Experiment, RejectsBadSpec) {
  auto spec = small_spec();
  spec.decoders = {"nope"};
  EXPECT_THROW(run_experiment(spec), InvalidArgument);
  spec = small_spec();
  spec.m_grid = {4};
  spec.n_grid = {3};
  EXPECT_THROW(run_experiment(spec), InvalidArgument);
  spec = small_spec();
  spec.trials = 0;
  EXPECT_THROW(run_experiment(spec), InvalidArgument);
}

TEST(TheoryComparison, ZeroSparsityAgrees) {
  ExperimentSpec spec;
  spec.m_grid = {6};
  spec.l_grid = {0};
  spec.snr_grid = {5.0};
  spec.trials = 400;
  const auto rows = compare_theory(spec);
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& r : rows) EXPECT_TRUE(r.pass) << r.k << " z=" << r.z;
}

TEST(TheoryComparison, BinaryAgreesAtModerateSize) {
  ExperimentSpec spec;
  spec.m_grid = {8};
  spec.l_grid = {2};
  spec.snr_grid = {10.0};
  spec.trials = 400;
  spec.seed = 5;
  const auto rows = compare_theory(spec);
  for (const auto& r : rows) EXPECT_TRUE(r.pass) << r.k << " z=" << r.z;
  const std::string csv = theory_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "m,n,l,alphabet,snr_db,d2,k,analytic,empirical,stderr,z,pass");
}

TEST(TheoryComparison, RequiresFixedRadius) {
  auto spec = small_spec();
  spec.trials = 3;
  const auto res = run_experiment(spec);
  EXPECT_THROW(compare_theory(res, spec), InvalidArgument);
}
