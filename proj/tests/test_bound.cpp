#include <cmath>

#include <gtest/gtest.h>

#include "ssd/bound.hpp"

using namespace ssd;

TEST(Omp, OrthonormalExample) {
  const OmpResult r = omp_solve(Matrix::Identity(2, 2), Vector{{3.0, 1.0}}, 1);
  ASSERT_EQ(r.support, (std::vector<int>{0}));
  EXPECT_NEAR(r.coeffs[0], 3.0, 1e-15);
  EXPECT_NEAR(r.residual2, 1.0, 1e-15);
}

TEST(Omp, ZeroBudgetAndFullBasis) {
  const Vector w{{3.0, 1.0}};
  const OmpResult none = omp_solve(Matrix::Identity(2, 2), w, 0);
  EXPECT_TRUE(none.support.empty());
  EXPECT_NEAR(none.residual2, 10.0, 1e-15);
  const OmpResult full = omp_solve(Matrix::Identity(2, 2), w, 5);
  EXPECT_EQ(full.support, (std::vector<int>{0, 1}));
  EXPECT_NEAR(full.residual2, 0.0, 1e-15);
  EXPECT_THROW(omp_solve(Matrix::Identity(2, 2), Vector::Zero(3), 1), InvalidArgument);
  EXPECT_THROW(omp_solve(Matrix::Identity(2, 2), w, -1), InvalidArgument);
}

TEST(Omp, TiesGoToSmallerIndexAndZeroColumnsAreSkipped) {
  Matrix a(2, 3);
  a << 0, 1, 1, 0, 1, 1;
  const OmpResult r = omp_solve(a, Vector{{1.0, 1.0}}, 1);
  EXPECT_EQ(r.support, (std::vector<int>{1}));
}

TEST(Omp, CoefficientsSolveLeastSquaresOnSupport) {
  Rng rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    Matrix a(8, 6);
    Vector w(8);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
    for (int i = 0; i < 8; ++i) w[i] = normal(rng);
    const OmpResult r = omp_solve(a, w, 3);
    Matrix as(8, r.support.size());
    for (std::size_t j = 0; j < r.support.size(); ++j) as.col(j) = a.col(r.support[j]);
    const Vector ls = as.colPivHouseholderQr().solve(w);
    EXPECT_LT((ls - r.coeffs).norm(), 1e-9);
    EXPECT_NEAR((w - as * r.coeffs).squaredNorm(), r.residual2, 1e-9);
  }
}

TEST(Omp, ResidualNeverIncreasesWithBudget) {
  Rng rng(11);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    Matrix a(10, 10);
    Vector w(10);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
    for (int i = 0; i < 10; ++i) w[i] = normal(rng);
    double prev = w.squaredNorm();
    for (int b = 0; b <= 10; ++b) {
      const double res = omp_solve(a, w, b).residual2;
      EXPECT_LE(res, prev + 1e-12);
      prev = res;
    }
  }
}

TEST(LowerBound, Examples) {
  const Matrix r = Matrix::Identity(3, 3);
  const Vector z{{3.0, 1.0, 0.5}};
  // Suffix fixes the last coordinate; w = (3, 1).
  EXPECT_NEAR(lower_bound(z, r, IntVector::Ones(1), 1, Alphabet::binary01()), 1.0, 1e-15);
  EXPECT_NEAR(lower_bound(z, r, IntVector::Ones(1), 0, Alphabet::binary01()), 10.0, 1e-15);
  EXPECT_EQ(lower_bound(z, r, IntVector::Ones(1), 2, Alphabet::binary01()), 0.0);
  EXPECT_EQ(lower_bound(z, r, IntVector::Ones(3), 1, Alphabet::binary01()), 0.0);
}

TEST(LowerBound, NonincreasingInBudgetAndNonnegative) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto g = generate_instance(GenSpec{10, 10, Alphabet::ternary(), 3, 5.0, seed});
    const auto tri = triangularize(g.instance);
    const IntVector suffix = g.x_true.tail(4);
    double prev = INFINITY;
    for (int lt = 0; lt <= 7; ++lt) {
      const double v = lower_bound(tri.z, tri.r, suffix, lt, Alphabet::ternary());
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, prev + 1e-12);
      prev = v;
    }
  }
}

TEST(LowerBound, SingleAtomBoundIsBelowIntegerMinimum) {
  // With a budget of one atom OMP is exact on the relaxed problem, so it
  // must not exceed the best 1-sparse integer fit.
  for (const Alphabet& a : {Alphabet::binary01(), Alphabet::ternary()})
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
      const auto g = generate_instance(GenSpec{7, 7, a, 3, 5.0, seed});
      const auto tri = triangularize(g.instance);
      const IntVector suffix = g.x_true.tail(2);
      const int dim = 5;
      const Vector w = tri.z.head(dim) - tri.r.block(0, dim, dim, 2) * suffix.cast<double>();
      double best = INFINITY;
      for (const auto& x : enumerate_sparse(dim, 1, a))
        best = std::min(best, (w - tri.r.topLeftCorner(dim, dim) * x.cast<double>()).squaredNorm());
      EXPECT_LE(lower_bound(tri.z, tri.r, suffix, 1, a), best + 1e-12);
    }
}

TEST(LowerBound, RoundedValueNeverBelowUnrounded) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto g = generate_instance(GenSpec{9, 9, Alphabet::ternary(), 3, 5.0, seed});
    const auto tri = triangularize(g.instance);
    for (int lt = 1; lt <= 3; ++lt) {
      const auto v = lower_bound_block(tri.r, tri.z, 9, lt, Alphabet::ternary());
      EXPECT_LE(v.unrounded, v.rounded + 1e-12);
    }
  }
}

TEST(LowerBoundDecoder, SafeModeIsIdenticalToSparseDecoder) {
  LowerBoundOptions safe;
  safe.safe_mode = true;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto g = generate_instance(GenSpec{12, 12, Alphabet::binary01(), 4, 5.0, seed});
    const auto a = decode_sparse_lb(g.instance, 0.99, safe);
    const auto b = decode_sparse(g.instance);
    EXPECT_EQ(a.x_hat, b.x_hat);
    EXPECT_EQ(a.stats.nodes_per_level, b.stats.nodes_per_level);
    EXPECT_EQ(a.residual2, b.residual2);
  }
}

TEST(LowerBoundDecoder, NeverVisitsMoreNodesAtEqualRadius) {
  LowerBoundOptions opt;
  opt.threshold = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto g = generate_instance(GenSpec{14, 14, Alphabet::binary01(), 4, 5.0, seed});
    const double d2 = choose_radius(14, g.instance.sigma2, 0.99);
    const auto with = decode_sparse_lb_fp(g.instance, d2, opt);
    const auto without = decode_sparse_fp(g.instance, d2);
    for (int k = 0; k < 14; ++k) EXPECT_LE(with.stats.nodes_per_level[k], without.stats.nodes_per_level[k]);
  }
}

TEST(LowerBoundDecoder, AuditRecordsEveryEvaluation) {
  std::vector<BoundAuditEntry> audit;
  LowerBoundOptions opt;
  opt.threshold = 0;
  opt.audit = &audit;
  const auto g = generate_instance(GenSpec{10, 10, Alphabet::binary01(), 3, 5.0, 3});
  const auto out = decode_sparse_lb(g.instance, 0.99, opt);
  EXPECT_EQ(audit.size(), out.stats.bound_evaluations);
  std::uint64_t pruned = 0;
  for (const auto& e : audit) {
    EXPECT_LE(e.unrounded, e.rounded + 1e-12);
    pruned += e.pruned;
  }
  EXPECT_EQ(pruned, out.stats.bound_prunes);
}

TEST(LowerBoundDecoder, ThresholdDefersTheBound) {
  LowerBoundOptions opt;
  opt.threshold = 1u << 30;
  const auto g = generate_instance(GenSpec{10, 10, Alphabet::binary01(), 3, 5.0, 3});
  const auto out = decode_sparse_lb(g.instance, 0.99, opt);
  EXPECT_EQ(out.stats.bound_evaluations, 0u);
  EXPECT_EQ(out.x_hat, decode_sparse(g.instance).x_hat);
}

TEST(OmpRound, ProducesSparseAlphabetVector) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto g = generate_instance(GenSpec{10, 10, Alphabet::ternary(), 3, 10.0, seed});
    const auto out = decode_omp_round(g.instance);
    EXPECT_LE(l0_norm(out.x_hat), 3);
    for (int i = 0; i < 10; ++i) EXPECT_LE(std::abs(out.x_hat[i]), 1);
    EXPECT_NEAR(out.residual2, squared_residual(g.instance.h, g.instance.y, out.x_hat), 1e-12);
  }
  const auto g0 = generate_instance(GenSpec{6, 6, Alphabet::ternary(), 0, 10.0, 1});
  EXPECT_EQ(decode_omp_round(g0.instance).x_hat, IntVector::Zero(6));
}
