#include <cmath>

#include <gtest/gtest.h>

#include "ssd/decoder.hpp"

using namespace ssd;

namespace {

IlsInstance identity_instance(std::vector<double> y, int l, const Alphabet& a = Alphabet::binary01()) {
  const int m = static_cast<int>(y.size());
  IlsInstance inst{Matrix::Identity(m, m), Eigen::Map<Vector>(y.data(), m), a, l, 0.01};
  return inst;
}

IntVector iv(std::initializer_list<int> v) {
  IntVector x(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (int s : v) x[i++] = s;
  return x;
}

std::vector<std::uint64_t> levels(const SearchStats& s) { return s.nodes_per_level; }

}  // namespace

TEST(SparseSphereDecoder, OneDimensionalExample) {
  IlsInstance inst{Matrix::Constant(1, 1, 1.0), Vector::Constant(1, 0.4), Alphabet::binary01(), 1, 0.01};
  const auto out = decode_sparse_fp(inst, 1.0);
  ASSERT_TRUE(out.result);
  EXPECT_EQ(out.result->x_hat, iv({0}));
  EXPECT_NEAR(out.result->residual2, 0.16, 1e-14);
}

TEST(SparseSphereDecoder, SparsityChangesTheAnswer) {
  const auto inst = identity_instance({0.9, 0.8}, 1);
  const auto sparse = decode_sparse_fp(inst, 2.0);
  ASSERT_TRUE(sparse.result);
  EXPECT_EQ(sparse.result->x_hat, iv({1, 0}));
  EXPECT_NEAR(sparse.result->residual2, 0.65, 1e-14);

  SearchOptions classical;
  classical.enforce_sparsity = false;
  const auto full = search_fixed(inst, 2.0, classical);
  ASSERT_TRUE(full.result);
  EXPECT_EQ(full.result->x_hat, iv({1, 1}));
  EXPECT_NEAR(full.result->residual2, 0.05, 1e-14);
}

TEST(SparseSphereDecoder, HandCountedNodesPerLevel) {
  // Root is the last coordinate; see the per-level tallies worked by hand.
  const auto inst = identity_instance({0.9, 0.8, 0.1}, 1);
  const auto sparse = decode_sparse_fp(inst, 2.0);
  ASSERT_TRUE(sparse.result);
  EXPECT_EQ(levels(sparse.stats), (std::vector<std::uint64_t>{2, 3, 3}));
  EXPECT_EQ(sparse.result->x_hat, iv({1, 0, 0}));
  EXPECT_NEAR(sparse.result->residual2, 0.66, 1e-14);
  EXPECT_EQ(sparse.stats.solutions_examined, 3u);
  const CostModel cost;
  EXPECT_EQ(sparse.stats.flops, 2 * cost(1) + 3 * cost(2) + 3 * cost(3));

  SearchOptions classical;
  classical.enforce_sparsity = false;
  const auto full = search_fixed(inst, 2.0, classical);
  EXPECT_EQ(levels(full.stats), (std::vector<std::uint64_t>{2, 4, 7}));
  EXPECT_EQ(full.result->x_hat, iv({1, 1, 0}));
}

TEST(SparseSphereDecoder, EmptySphere) {
  const auto inst = identity_instance({0.9, 0.8}, 1);
  const auto out = decode_sparse_fp(inst, 0.5);
  EXPECT_FALSE(out.result);
  EXPECT_GT(out.stats.total_nodes(), 0u);
  EXPECT_THROW(decode_sparse_fp(inst, 0.0), InvalidArgument);
}

TEST(SparseSphereDecoder, GrowingRadiusRestartsUntilFeasible) {
  // Tiny noise variance makes the first sphere empty.
  auto inst = identity_instance({0.9, 0.8}, 1);
  inst.sigma2 = 1e-4;
  const auto out = decode_sparse(inst);
  EXPECT_EQ(out.x_hat, iv({1, 0}));
  EXPECT_GT(out.stats.radius_restarts, 0);
  EXPECT_EQ(out.mode, DecodeMode::fp_growing);
}

TEST(SparseSphereDecoder, ZeroSparsityReturnsZero) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto g = generate_instance(GenSpec{6, 6, Alphabet::ternary(), 0, 10.0, seed});
    EXPECT_EQ(decode_sparse(g.instance).x_hat, IntVector::Zero(6));
    EXPECT_EQ(decode_sparse_se(g.instance).x_hat, IntVector::Zero(6));
  }
}

TEST(SparseSphereDecoder, NoiselessRecoversTruth) {
  for (const Alphabet& a : {Alphabet::binary01(), Alphabet::ternary()})
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      const auto g = generate_instance(GenSpec{12, 12, a, 4, INFINITY, seed});
      EXPECT_EQ(decode_sparse(g.instance).x_hat, g.x_true);
      EXPECT_EQ(decode_sparse_se(g.instance).x_hat, g.x_true);
    }
}

TEST(BruteForce, EnumeratesWholeSparseSet) {
  const auto g = generate_instance(GenSpec{10, 10, Alphabet::ternary(), 3, 10.0, 7});
  EXPECT_EQ(brute_force(g.instance).stats.solutions_examined, 1161u);
  EXPECT_THROW(brute_force(g.instance, 1000), TooLarge);
}

TEST(SparseSphereDecoder, MatchesBruteForceOracle) {
  for (const Alphabet& a : {Alphabet::binary01(), Alphabet::ternary()})
    for (int m = 2; m <= 8; m += 3)
      for (int l = 0; l <= m; ++l)
        for (double snr : {0.0, 10.0, 20.0})
          for (std::uint64_t seed = 1; seed <= 8; ++seed) {
            const auto g = generate_instance(GenSpec{m, m + static_cast<int>(seed % 2), a, l, snr, mix_seed(seed, m * 100 + l)});
            const auto ref = brute_force(g.instance);
            const auto fp = decode_sparse(g.instance);
            const auto se = decode_sparse_se(g.instance);
            ASSERT_EQ(fp.x_hat, ref.x_hat) << a.label() << " m=" << m << " l=" << l << " snr=" << snr;
            ASSERT_EQ(se.x_hat, ref.x_hat);
            EXPECT_NEAR(fp.residual2, ref.residual2, 1e-12 * (1 + ref.residual2));
          }
}

TEST(SparseSphereDecoder, ClassicalMatchesUnconstrainedOracle) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto g = generate_instance(GenSpec{6, 6, Alphabet::ternary(), 2, 5.0, seed});
    auto full = g.instance;
    full.l = full.m();
    EXPECT_EQ(decode_classical(g.instance).x_hat, brute_force(full).x_hat);
    EXPECT_EQ(decode_classical_se(g.instance).x_hat, brute_force(full).x_hat);
  }
}

TEST(SparseSphereDecoder, NodeCountsMonotoneInRadius) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto g = generate_instance(GenSpec{10, 10, Alphabet::ternary(), 3, 10.0, seed});
    std::vector<std::uint64_t> prev(10, 0);
    for (double d2 : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
      const auto out = decode_sparse_fp(g.instance, d2);
      for (int k = 0; k < 10; ++k) EXPECT_GE(out.stats.nodes_per_level[k], prev[k]);
      prev = out.stats.nodes_per_level;
    }
  }
}

TEST(SparseSphereDecoder, NeverVisitsMoreThanClassicalPerLevel) {
  SearchOptions classical;
  classical.enforce_sparsity = false;
  for (const Alphabet& a : {Alphabet::binary01(), Alphabet::ternary()})
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto g = generate_instance(GenSpec{10, 12, a, 3, 10.0, seed});
      const double d2 = choose_radius(12, g.instance.sigma2, 0.99);
      const auto s = decode_sparse_fp(g.instance, d2);
      const auto c = search_fixed(g.instance, d2, classical);
      for (int k = 0; k < 10; ++k) EXPECT_LE(s.stats.nodes_per_level[k], c.stats.nodes_per_level[k]);
    }
}

TEST(SparseSphereDecoder, NonnegativeCutDoesNotChangeCounts) {
  SearchOptions with, without;
  with.nonnegative_cut = true;
  without.nonnegative_cut = false;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto g = generate_instance(GenSpec{10, 10, Alphabet::binary01(), 3, 5.0, seed});
    const auto a = search_fixed(g.instance, 6.0, with);
    const auto b = search_fixed(g.instance, 6.0, without);
    EXPECT_EQ(a.stats.nodes_per_level, b.stats.nodes_per_level);
    ASSERT_EQ(a.result.has_value(), b.result.has_value());
    if (a.result) EXPECT_EQ(a.result->x_hat, b.result->x_hat);
  }
}

TEST(SchnorrEuchner, VisitsNoMoreNodesThanFixedRadiusSearch) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto g = generate_instance(GenSpec{12, 12, Alphabet::binary01(), 4, 10.0, seed});
    const double d2 = choose_radius(12, g.instance.sigma2, 0.99);
    const auto fp = decode_sparse_fp(g.instance, d2);
    const auto se = search_fixed(g.instance, d2, schnorr_euchner_options());
    ASSERT_EQ(fp.result.has_value(), se.result.has_value());
    for (int k = 0; k < 12; ++k) EXPECT_LE(se.stats.nodes_per_level[k], fp.stats.nodes_per_level[k]);
    if (fp.result) EXPECT_EQ(se.result->x_hat, fp.result->x_hat);
  }
}

TEST(TieBreak, LexicographicAmongEqualResiduals) {
  // Symmetric instance: (1,0) and (0,1) have identical residuals.
  IlsInstance inst{Matrix::Identity(2, 2), Vector::Constant(2, 0.5), Alphabet::binary01(), 1, 0.01};
  const auto ref = brute_force(inst);
  EXPECT_EQ(decode_sparse_fp(inst, 1.0).result->x_hat, ref.x_hat);
  EXPECT_EQ(decode_sparse_se(inst).x_hat, ref.x_hat);
  EXPECT_TRUE(better_candidate(1.0, iv({0, 1}), 1.0 + 1e-13, iv({1, 0})));
  EXPECT_FALSE(better_candidate(1.0 + 1e-6, iv({0, 1}), 1.0, iv({1, 0})));
}

TEST(RadiusSchedule, GrowsAndSaturates) {
  auto inst = identity_instance({0.9, 0.8}, 1);
  inst.sigma2 = 0.01;
  RadiusSchedule s(inst, 0.9);
  double prev = s.d2();
  int steps = 0;
  while (!s.saturated() && steps < 1000) {
    s.advance();
    EXPECT_GE(s.d2(), prev);
    prev = s.d2();
    ++steps;
  }
  EXPECT_TRUE(s.saturated());
  EXPECT_GE(s.d2(), inst.y.squaredNorm());
  EXPECT_THROW(RadiusSchedule(inst, 1.0), InvalidArgument);
}

TEST(Instance, ValidationRejectsInconsistentShapes) {
  IlsInstance inst{Matrix::Identity(3, 2), Vector::Zero(2), Alphabet::binary01(), 1, 0.0};
  EXPECT_THROW(decode_sparse(inst), InvalidArgument);
}
