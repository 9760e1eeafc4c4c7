#include <cmath>

#include <gtest/gtest.h>

#include "ssd/channel.hpp"

using namespace ssd;

TEST(Toeplitz, Examples) {
  EXPECT_EQ(build_toeplitz(Vector::Ones(1), 2), Matrix::Identity(2, 2));
  Matrix expected(3, 2);
  expected << 1, 0, 2, 1, 0, 2;
  EXPECT_EQ(build_toeplitz(Vector{{1.0, 2.0}}, 2), expected);
  EXPECT_THROW(build_toeplitz(Vector(0), 3), InvalidArgument);
  EXPECT_THROW(build_toeplitz(Vector::Ones(2), 0), InvalidArgument);
}

TEST(Toeplitz, MatchesDirectConvolution) {
  Rng rng(4);
  std::normal_distribution<double> normal;
  for (int M = 1; M <= 7; ++M)
    for (int L = 1; L <= 12; L += 3) {
      Vector u(M), h(L);
      for (int i = 0; i < M; ++i) u[i] = normal(rng);
      for (int i = 0; i < L; ++i) h[i] = normal(rng);
      const Vector x = build_toeplitz(u, L) * h;
      ASSERT_EQ(x.size(), M + L - 1);
      for (int j = 0; j < M + L - 1; ++j) {
        double direct = 0.0;
        for (int i = 0; i < L; ++i)
          if (j - i >= 0 && j - i < M) direct += h[i] * u[j - i];
        EXPECT_NEAR(x[j], direct, 1e-12);
      }
    }
}

TEST(Training, SequencesHaveConstantModulus) {
  const Vector alt = alternating_training(5);
  EXPECT_EQ(alt, (Vector{{1.0, -1.0, 1.0, -1.0, 1.0}}));
  for (int M = 1; M <= 8; ++M) {
    const Vector u = min_condition_training(M, 20);
    ASSERT_EQ(u.size(), M);
    EXPECT_EQ(u[0], 1.0);
    for (int i = 0; i < M; ++i) EXPECT_EQ(std::abs(u[i]), 1.0);
  }
  EXPECT_THROW(min_condition_training(17, 20), InvalidArgument);
  EXPECT_EQ(parse_training_kind("alternating"), TrainingKind::alternating);
  EXPECT_THROW(parse_training_kind("chirp"), InvalidArgument);
}

TEST(Training, MinConditionBeatsEverySignPattern) {
  auto cond = [](const Vector& u) {
    const Eigen::JacobiSVD<Matrix> svd(build_toeplitz(u, 20));
    return svd.singularValues()[0] / svd.singularValues()[svd.singularValues().size() - 1];
  };
  const double best = cond(min_condition_training(6, 20));
  EXPECT_LT(best, cond(alternating_training(6)));
  for (int mask = 0; mask < 64; ++mask) {
    Vector u(6);
    for (int i = 0; i < 6; ++i) u[i] = (mask >> i) & 1 ? -1.0 : 1.0;
    EXPECT_LE(best, cond(u) * (1 + 1e-9));
  }
}

TEST(ChannelInstance, StructureInvariants) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto c = generate_channel(ChannelSpec{20, 6, 3, 15.0, seed});
    EXPECT_EQ(c.u_mat, build_toeplitz(c.u_seq, 20));
    EXPECT_EQ(l0_norm(c.b), 3);
    for (int i = 0; i < 20; ++i) {
      if (c.b[i]) {
        EXPECT_NE(c.h[i], 0.0);
      } else {
        EXPECT_EQ(c.h[i], 0.0);
      }
    }
    EXPECT_EQ(c.x_obs.size(), 25);
  }
}

TEST(ChannelInstance, Deterministic) {
  const ChannelSpec spec{20, 6, 3, 12.0, 42};
  const auto a = generate_channel(spec), b = generate_channel(spec);
  EXPECT_EQ(a.h, b.h);
  EXPECT_EQ(a.x_obs, b.x_obs);
  // Taps and support depend only on the seed, not on the SNR.
  ChannelSpec louder = spec;
  louder.snr_db = 30.0;
  EXPECT_EQ(generate_channel(louder).h, a.h);
}

TEST(ChannelEstimation, NoiselessIsExactForEveryMethod) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto c = generate_channel(ChannelSpec{20, 6, 3, INFINITY, seed});
    for (auto m : {ChannelMethod::oracle, ChannelMethod::sparse_sd, ChannelMethod::classical_sd, ChannelMethod::omp}) {
      const auto est = estimate_channel(c, m);
      EXPECT_LT(est.mse, 1e-20) << to_string(m) << " seed " << seed;
    }
  }
}

TEST(ChannelEstimation, SparseDetectionRespectsChannelOrder) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto c = generate_channel(ChannelSpec{20, 6, 3, 5.0, seed});
    EXPECT_LE(l0_norm(estimate_channel(c, ChannelMethod::sparse_sd).b_hat), 3);
    EXPECT_LE(l0_norm(estimate_channel(c, ChannelMethod::omp).b_hat), 3);
    EXPECT_EQ(estimate_channel(c, ChannelMethod::oracle).b_hat, c.b);
  }
}

TEST(ChannelEstimation, DetectionOrderDoesNotChangeTheEstimate) {
  ChannelOptions se;
  se.order = Enumeration::schnorr_euchner;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto c = generate_channel(ChannelSpec{20, 6, 3, 10.0, seed});
    for (auto m : {ChannelMethod::sparse_sd, ChannelMethod::classical_sd}) {
      const auto a = estimate_channel(c, m), b = estimate_channel(c, m, se);
      EXPECT_EQ(a.b_hat, b.b_hat);
    }
  }
}

TEST(ChannelEstimation, OracleIsStructuredLeastSquares) {
  const auto c = generate_channel(ChannelSpec{12, 4, 2, 10.0, 3});
  const auto est = estimate_channel(c, ChannelMethod::oracle);
  Matrix sub(c.u_mat.rows(), 2);
  std::vector<int> idx;
  for (int i = 0; i < 12; ++i)
    if (c.b[i]) idx.push_back(i);
  for (int j = 0; j < 2; ++j) sub.col(j) = c.u_mat.col(idx[j]);
  const Vector coef = sub.colPivHouseholderQr().solve(c.x_obs);
  for (int j = 0; j < 2; ++j) EXPECT_NEAR(est.h_hat[idx[j]], coef[j], 1e-12);
  EXPECT_NEAR(est.mse, (c.h - est.h_hat).squaredNorm() / c.h.squaredNorm(), 1e-15);
}

TEST(ChannelExperiment, DeterministicAndSerialParallelEqual) {
  ChannelExperimentSpec spec;
  spec.snr_grid = {10.0, 20.0};
  spec.trials = 20;
  spec.workers = 1;
  const auto a = channel_csv(run_channel_experiment(spec));
  spec.workers = 3;
  EXPECT_EQ(channel_csv(run_channel_experiment(spec)), a);
  EXPECT_EQ(a.substr(0, a.find('\n')), "snr_db,method,mean_mse,stderr,mean_nodes,mean_flops");
}

TEST(ChannelExperiment, NoiselessSingleTrial) {
  ChannelExperimentSpec spec;
  spec.snr_grid = {INFINITY};
  spec.trials = 1;
  for (const auto& row : run_channel_experiment(spec).rows) EXPECT_LT(row.mean_mse, 1e-20) << row.method;
}

TEST(ChannelExperiment, RejectsBadSpec) {
  ChannelExperimentSpec spec;
  spec.methods = {"lasso"};
  EXPECT_THROW(run_channel_experiment(spec), InvalidArgument);
  spec = {};
  spec.trials = 0;
  EXPECT_THROW(run_channel_experiment(spec), InvalidArgument);
  EXPECT_THROW(generate_channel(ChannelSpec{5, 3, 6, 10.0, 1}), InvalidArgument);
}
