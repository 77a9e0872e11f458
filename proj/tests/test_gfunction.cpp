#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mcflab/errors.hpp"
#include "mcflab/gfunction.hpp"
#include "mcflab/partition.hpp"

using namespace mcflab;

namespace {

double cubic(double p) { return 3 * p * p - 2 * p * p * p; }

// Independent brute-force Bernoulli sum.
double brute_force(const VotingKernel& k, const std::vector<double>& p) {
  double total = 0.0;
  for (VoteMask v = 0; v < (1u << k.n_children); ++v) {
    double w = 1.0;
    for (int i = 0; i < k.n_children; ++i) w *= ((v >> i) & 1u) ? p[i] : 1.0 - p[i];
    total += w * k(v);
  }
  return total;
}

}  // namespace

TEST(MultivariateG, MajorityExamples) {
  auto k = majority_kernel();
  EXPECT_EQ(eval_multivariate_g(k, std::vector<double>{1, 1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(eval_multivariate_g(k, std::vector<double>{0.5, 0.5, 0.5}), 0.5);
  EXPECT_NEAR(eval_multivariate_g(k, std::vector<double>{0.2, 0.2, 0.2}), 0.104, 1e-15);
  EXPECT_TRUE(k.is_deterministic);
}

TEST(MultivariateG, DimensionMismatchThrows) {
  EXPECT_THROW(eval_multivariate_g(majority_kernel(), std::vector<double>{0.5, 0.5}), ArgumentError);
}

TEST(MultivariateG, MatchesBruteForceOnRandomInputs) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<VotingKernel> kernels{majority_kernel(), sexual_reproduction_kernel(),
                                    nlv_kernel({0.1, 0.2, 0.8, 0.9})};
  for (const auto& k : kernels)
    for (int s = 0; s < 200; ++s) {
      std::vector<double> p(k.n_children);
      for (double& x : p) x = u(rng);
      EXPECT_NEAR(eval_multivariate_g(k, p), brute_force(k, p), 1e-14);
    }
}

TEST(MultivariateG, NondecreasingInEachCoordinate) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<VotingKernel> kernels{majority_kernel(), sexual_reproduction_kernel(),
                                    nlv_kernel({0.25, 0.27, 0.73, 0.75})};
  for (const auto& k : kernels)
    for (int s = 0; s < 500; ++s) {
      std::vector<double> lo(k.n_children), hi;
      for (double& x : lo) x = u(rng);
      hi = lo;
      const int i = static_cast<int>(rng() % k.n_children);
      hi[i] = lo[i] + (1 - lo[i]) * u(rng);
      EXPECT_LE(eval_multivariate_g(k, lo), eval_multivariate_g(k, hi) + 1e-15);
    }
}

TEST(IterateG, FixedPointsAndFrozenValue) {
  auto g = majority_g();
  for (int n : {0, 1, 5, 50}) {
    EXPECT_EQ(iterate_g(g, 0.5, n), 0.5);
    EXPECT_EQ(iterate_g(g, 0.0, n), 0.0);
    EXPECT_EQ(iterate_g(g, 1.0, n), 1.0);
  }
  const double oracle = cubic(cubic(cubic(0.4)));
  EXPECT_NEAR(iterate_g(g, 0.4, 3), oracle, 1e-15);
  EXPECT_NEAR(iterate_g(g, 0.4, 3), 0.19674569827731714, 1e-15);
  EXPECT_NEAR(iterate_g(g, 0.4, 3), 0.19673, 5e-5);
}

TEST(IterateG, MonotoneConvergenceToStableFixedPoint) {
  auto g = majority_g();
  for (double p0 : {0.51, 0.6, 0.9, 1.0}) {
    double prev = p0;
    for (int n = 1; n <= 200; ++n) {
      const double p = iterate_g(g, p0, n);
      EXPECT_GE(p, prev - 1e-15);
      prev = p;
    }
    EXPECT_NEAR(prev, 1.0, 1e-12);
  }
}

TEST(FixedPoints, MajorityAndSexualReproduction) {
  auto fm = find_fixed_points(majority_g(), 1e-13);
  ASSERT_EQ(fm.points.size(), 3u);
  EXPECT_NEAR(fm.points[0], 0.0, 1e-10);
  EXPECT_NEAR(fm.points[1], 0.5, 1e-10);
  EXPECT_NEAR(fm.points[2], 1.0, 1e-10);
  EXPECT_FALSE(fm.is_degenerate());

  auto fs = find_fixed_points(sexual_reproduction_g(), 1e-13);
  ASSERT_EQ(fs.points.size(), 3u);
  EXPECT_NEAR(fs.points[0], 0.0, 1e-10);
  EXPECT_NEAR(fs.points[1], 1.0 / 3.0, 1e-10);
  EXPECT_NEAR(fs.points[2], 2.0 / 3.0, 1e-10);
}

TEST(FixedPoints, IdentityIsDegenerate) {
  GFunction id;
  id.n_children = 1;
  id.univariate_raw = [](double p) { return p; };
  id.multivariate_raw = [](std::span<const double> p) { return p[0]; };
  auto f = find_fixed_points(id, 1e-12, 100);
  EXPECT_TRUE(f.is_degenerate());
  EXPECT_EQ(f.degenerate.size(), 101u);
}

TEST(SexualReproduction, BernsteinKernelMatchesPolynomial) {
  // 3θ₁ = 9/11, −6θ₁ + 3θ₂ = 9/11, 3θ₁ − 3θ₂ + θ₃ = −9/11.
  const double t1 = 3.0 / 11, t2 = 9.0 / 11, t3 = 9.0 / 11;
  EXPECT_NEAR(3 * t1, 9.0 / 11, 1e-15);
  EXPECT_NEAR(-6 * t1 + 3 * t2, 9.0 / 11, 1e-15);
  EXPECT_NEAR(3 * t1 - 3 * t2 + t3, -9.0 / 11, 1e-15);
  auto g = sexual_reproduction_g();
  for (int i = 0; i <= 1000; ++i) {
    const double p = i / 1000.0;
    EXPECT_NEAR(g(p), 9.0 / 11 * (p + p * p - p * p * p), 1e-12);
  }
}

TEST(Axioms, MajorityPassesAll) {
  auto r = verify_g_axioms(majority_g());
  for (const char* ax : {"g.0", "g.1", "g.2", "g.3", "g.5"}) EXPECT_TRUE(r.passes.at(ax)) << ax;
  EXPECT_NEAR(r.derivative_at.at("mu"), 1.5, 1e-8);
  EXPECT_NEAR(r.derivative_at.at("a"), 0.0, 1e-8);
  EXPECT_NEAR(r.derivative_at.at("b"), 0.0, 1e-8);
  EXPECT_NEAR(r.c0, 0.5, 1e-8);
  // |6δ(1−δ)| < 1/2 iff δ < (1 − sqrt(2/3))/2 = 0.09175...
  EXPECT_NEAR(r.delta_star, std::floor(1000 * (1 - std::sqrt(2.0 / 3)) / 2) / 1000, 1e-12);
}

TEST(Axioms, SexualReproductionHandlesBBelowOne) {
  auto r = verify_g_axioms(sexual_reproduction_g());
  EXPECT_NEAR(r.a, 0.0, 1e-10);
  EXPECT_NEAR(r.mu, 1.0 / 3, 1e-10);
  EXPECT_NEAR(r.b, 2.0 / 3, 1e-10);
  for (const char* ax : {"g.0", "g.1", "g.2", "g.3", "g.5"}) EXPECT_TRUE(r.passes.at(ax)) << ax;
  EXPECT_NEAR(r.derivative_at.at("a"), 9.0 / 11, 1e-8);
  EXPECT_NEAR(r.derivative_at.at("b"), 9.0 / 11, 1e-8);
  bool noted = false;
  for (const auto& n : r.notes) noted |= n.find("g(1)") != std::string::npos;
  EXPECT_TRUE(noted);
}

TEST(Axioms, SquareFailsThreeFixedPoints) {
  GFunction sq;
  sq.n_children = 2;
  sq.univariate_raw = [](double p) { return p * p; };
  sq.multivariate_raw = [](std::span<const double> p) { return p[0] * p[1]; };
  auto r = verify_g_axioms(sq);
  EXPECT_FALSE(r.passes.at("g.1"));
  EXPECT_TRUE(r.passes.at("g.0"));
}

TEST(Axioms, NonMonotoneReportedNotThrown) {
  GFunction bad;
  bad.n_children = 1;
  bad.univariate_raw = [](double p) { return p < 0.5 ? 2 * p * (0.5 - p) : p; };
  bad.multivariate_raw = [&](std::span<const double> p) { return bad.univariate_raw(p[0]); };
  GAxiomReport r;
  EXPECT_NO_THROW(r = verify_g_axioms(bad));
  EXPECT_FALSE(r.passes.at("g.0"));
}

TEST(Nlv, EndpointsAndSymmetry) {
  for (NlvRates r : {NlvRates{0.1, 0.2, 0.8, 0.9}, NlvRates{0.25, 0.27, 0.73, 0.75}}) {
    auto g = nlv_polynomial_g(r);
    EXPECT_EQ(g(0.0), 0.0);
    EXPECT_EQ(g(1.0), 1.0);
    EXPECT_NEAR(g(0.5), 0.5, 1e-15);
    for (int i = 0; i <= 1000; ++i) {
      const double p = i / 1000.0;
      EXPECT_NEAR(g(p) + g(1 - p), 1.0, 1e-12);
    }
  }
}

TEST(Nlv, ClosedFormMatchesEnumeration) {
  const NlvRates r{0.1, 0.2, 0.8, 0.9};
  auto g = nlv_polynomial_g(r);
  const std::vector<double> p(5, 0.3);
  EXPECT_NEAR(g(0.3), brute_force(nlv_kernel(r), p), 1e-15);
  EXPECT_NEAR(g(0.3), eval_multivariate_g(nlv_kernel(r), p), 1e-15);
  for (int i = 0; i <= 100; ++i) {
    const double q = i / 100.0;
    const std::vector<double> v(5, q);
    EXPECT_NEAR(g(q), eval_multivariate_g(nlv_kernel(r), v), 1e-14);
  }
}

TEST(Nlv, ConditionFlagsCheckedAsPrinted) {
  auto flags = nlv_condition_flags({0.25, 0.27, 0.73, 0.75});
  ASSERT_EQ(flags.size(), 1u);
  EXPECT_NE(flags[0].find("4a1 - a4 < 0"), std::string::npos);
  // 4a1 − a4 < 0 together with b.3 leaves no admissible rates.
  for (double a1 = 0; a1 <= 0.5; a1 += 0.01)
    for (double a2 = a1; a2 <= 0.5; a2 += 0.01) {
      auto f = nlv_condition_flags({a1, a2, 1 - a2, 1 - a1});
      EXPECT_FALSE(f.empty());
    }
}

TEST(Nlv, DefaultRatesSatisfyAxioms) {
  auto g = nlv_polynomial_g({0.25, 0.27, 0.73, 0.75});
  auto r = verify_g_axioms(g);
  for (const char* ax : {"g.0", "g.1", "g.2", "g.3", "g.5"}) EXPECT_TRUE(r.passes.at(ax)) << ax;
  EXPECT_LT(r.a, 0.5);
  EXPECT_NEAR(r.a + r.b, 1.0, 1e-10);
  // g − p = s(1−2p)(A + (B−A)s), s = p(1−p): interior zero at s* = A/(A−B).
  const double A = 4 * 0.25 - 0.75, B = 6 * 0.27 - 4 * 0.73;
  const double s = A / (A - B);
  EXPECT_NEAR(r.a, (1 - std::sqrt(1 - 4 * s)) / 2, 1e-10);
}

TEST(GPi, SingletonEqualsRawKernelExactly) {
  const NlvRates r{0.25, 0.27, 0.73, 0.75};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  auto pi0 = singleton_partition(5);
  for (int s = 0; s < 200; ++s) {
    std::vector<double> p(5);
    for (double& x : p) x = u(rng);
    EXPECT_EQ(g_pi(pi0, p, r), eval_multivariate_g(nlv_kernel(r), p));
  }
  EXPECT_NEAR(g_pi(pi0, std::vector<double>(5, 0.3), r), nlv_polynomial_g(r)(0.3), 1e-15);
}

TEST(GPi, OneBlockCopiesTheMark) {
  const NlvRates r{0.1, 0.2, 0.8, 0.9};
  const std::vector<double> p{0.1, 0.35, 0.6, 0.2, 0.9};
  for (int j = 0; j < 5; ++j) {
    MarkedPartition pi{std::vector<int>(5, j)};
    EXPECT_NEAR(g_pi(pi, p, r), p[j], 1e-15);
  }
}

TEST(GPi, TwoBlocksFourTermSum) {
  const NlvRates r{0.1, 0.2, 0.8, 0.9};
  MarkedPartition pi{{0, 0, 2, 2, 2}};  // {1*,2|3*,4,5}
  EXPECT_EQ(pi.to_string(), "{1*,2|3*,4,5}");
  const double p = 0.37;
  const double a[6] = {0, r.a1, r.a2, r.a3, r.a4, 1};
  const double oracle = (1 - p) * (1 - p) * a[0] + p * (1 - p) * a[2] + (1 - p) * p * a[3] + p * p * a[5];
  EXPECT_NEAR(g_pi(pi, std::vector<double>(5, p), r), oracle, 1e-15);
}

TEST(GPi, MalformedPartitionThrows) {
  MarkedPartition bad{{1, 2, 2, 3, 4}};
  EXPECT_THROW(g_pi(bad, std::vector<double>(5, 0.5), {}), ArgumentError);
}

TEST(MarkedPartitions, CountMatchesIdempotentMaps) {
  // Σ_k C(5,k)·k^(5−k) = 5 + 80 + 90 + 20 + 1.
  EXPECT_EQ(all_marked_partitions(5).size(), 196u);
  EXPECT_EQ(all_marked_partitions(3).size(), 10u);
}
