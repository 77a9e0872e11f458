#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "mcflab/errors.hpp"
#include "mcflab/partition.hpp"

using namespace mcflab;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST(Coalescence, FarApartWalkersNeverMeet) {
  LatticeOffsets start{{0, 0, 0}, {2000000, 0, 0}, {0, 3000000, 0}};
  auto d = coalescence_partition_distribution(start, 3, 1.0, 3.0, 2000, 1);
  EXPECT_GE(d.singleton_weight(), 1 - 1e-6);
  EXPECT_NEAR(sum(d.weights), 1.0, 1e-12);
}

TEST(Coalescence, IdenticalStartIsMergedAtTimeZero) {
  LatticeOffsets start{{1, 2, 3}, {1, 2, 3}};
  auto d = coalescence_partition_distribution(start, 3, 0.0, 3.0, 100, 2);
  // Marks are uniform: {1*,2} and {1,2*} share the merged class.
  EXPECT_NEAR(d.weight_of(MarkedPartition{{0, 0}}) + d.weight_of(MarkedPartition{{1, 1}}), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(d.weight_of(MarkedPartition{{0, 0}}), d.weight_of(MarkedPartition{{1, 1}}));
}

TEST(Coalescence, AdjacentPairMatchesPolyaReturnProbability) {
  // The difference of two walkers is a simple random walk on Z^3; starting next
  // to the origin it ever hits 0 with probability 1 − 1/G(0), G(0) = 1.516386...
  // (Watson's integral), i.e. 0.3405373.
  const double polya = 1.0 - 1.0 / 1.516386059151978;
  LatticeOffsets start{{0, 0, 0}, {1, 0, 0}};
  auto d = coalescence_partition_distribution(start, 3, kInfiniteHorizon, 3.0, 20000, 5);
  const double merged = 1.0 - d.singleton_weight();
  const double se = std::sqrt(merged * (1 - merged) / 20000.0);
  const double tail = 2.414 * d.last_change;
  EXPECT_LT(d.last_change, 1e-3);
  EXPECT_NEAR(merged + 0.5 * tail, polya, 4 * se + tail) << d.tail_note;
  // Oracle: 10⁶ samples of the same finite-cutoff estimator gave 0.338937 (se 4.7e-4).
  EXPECT_NEAR(merged, 0.338937, 4 * se);
}

TEST(Coalescence, SingletonWeightDecreasesWithHorizon) {
  LatticeOffsets start{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {3, 1, 0}, {-2, 0, 1}};
  auto d1 = coalescence_partition_distribution(start, 3, 2.0, 3.0, 20000, 9);
  auto d2 = coalescence_partition_distribution(start, 3, 8.0, 3.0, 20000, 9);
  const double s1 = d1.singleton_weight(), s2 = d2.singleton_weight();
  const double e1 = std::sqrt(s1 * (1 - s1) / 20000), e2 = std::sqrt(s2 * (1 - s2) / 20000);
  EXPECT_GE(s1, s2 - 3 * (e1 + e2));
  EXPECT_GT(s1, s2);
  EXPECT_NEAR(sum(d1.weights), 1.0, 3 * d1.max_stderr() + 1e-12);
}

TEST(Coalescence, MarksUniformWithinClass) {
  LatticeOffsets start{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  auto d = coalescence_partition_distribution(start, 3, 4.0, 3.0, 5000, 4);
  for (std::size_t i = 0; i < d.partitions.size(); ++i)
    for (std::size_t j = 0; j < d.partitions.size(); ++j)
      if (d.partitions[i].block_labels() == d.partitions[j].block_labels())
        EXPECT_DOUBLE_EQ(d.weights[i], d.weights[j]);
}

TEST(Coalescence, ZeroSamplesRejected) {
  EXPECT_THROW(coalescence_partition_distribution({{0}, {1}}, 1, 1.0, 1.0, 0, 1), ArgumentError);
}

TEST(Coalescence, CsvHasOneRowPerMarkedPartition) {
  auto d = coalescence_partition_distribution({{0, 0, 0}, {1, 0, 0}}, 3, 1.0, 3.0, 100, 1);
  const auto csv = d.to_csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3);
}

TEST(Coalescence, ReproducibleForFixedSeed) {
  LatticeOffsets start{{0, 0, 0}, {2, 0, 0}, {0, 2, 0}};
  auto a = coalescence_partition_distribution(start, 3, kInfiniteHorizon, 3.0, 500, 77);
  auto b = coalescence_partition_distribution(start, 3, kInfiniteHorizon, 3.0, 500, 77);
  EXPECT_EQ(a.cutoff_used, b.cutoff_used);
  EXPECT_EQ(a.weights, b.weights);
}

TEST(Gbar, SymmetryAndEndpoints) {
  const NlvRates r{0.25, 0.27, 0.73, 0.75};
  for (int L : {2, 6}) {
    auto g = gbar(L, 3, 64.0, r, 2000, 13);
    EXPECT_NEAR(g(0.0), 0.0, 1e-15);
    EXPECT_NEAR(g(1.0), 1.0, 1e-15);
    EXPECT_NEAR(g(0.5), 0.5, 1e-14);
    for (int i = 0; i <= 100; ++i) EXPECT_NEAR(g(i / 100.0) + g(1 - i / 100.0), 1.0, 1e-13);
    double total = 0.0, max_se = 0.0;
    for (auto& [k, w] : g.metadata["weights"].items()) total += w.get<double>();
    for (auto& [k, e] : g.metadata["stderr"].items()) max_se = std::max(max_se, e.get<double>());
    EXPECT_NEAR(total, 1.0, 3 * max_se + 1e-12);
  }
}

TEST(Gbar, FixedPointsSymmetricAboutHalf) {
  auto g = gbar(4, 3, 64.0, {0.25, 0.27, 0.73, 0.75}, 2000, 21);
  auto r = verify_g_axioms(g);
  ASSERT_TRUE(r.passes.at("g.1"));
  EXPECT_LT(r.a, 0.5);
  EXPECT_GT(r.b, 0.5);
  EXPECT_NEAR(r.a + r.b, 1.0, 1e-9);
}

TEST(Gbar, LargeBoxApproachesPolynomial) {
  const NlvRates r{0.25, 0.27, 0.73, 0.75};
  auto poly = nlv_polynomial_g(r);
  auto sup = [&](const GFunction& g) {
    double m = 0;
    for (int i = 0; i <= 200; ++i) m = std::max(m, std::abs(g(i / 200.0) - poly(i / 200.0)));
    return m;
  };
  const double s2 = sup(gbar(2, 3, 64.0, r, 2000, 5));
  const double s20 = sup(gbar(20, 3, 64.0, r, 2000, 6));
  EXPECT_LT(s20, s2);
}

TEST(Coalescence, RandomStartSingletonWeight) {
  // Two walkers at uniform distinct offsets in a box far apart rarely meet, and
  // the empty `start` must not break singleton_weight().
  auto d = random_start_partition_distribution(
      2, 3,
      [](Rng& rng) {
        const int k = static_cast<int>(rng() % 3);
        return LatticeOffsets{{0, 0, 0}, {40 + k, 0, 0}};
      },
      5.0, 3.0, 2000, 3);
  EXPECT_TRUE(d.start.empty());
  EXPECT_DOUBLE_EQ(d.singleton_weight(), 1.0);
  EXPECT_THROW(PartitionDistribution{}.singleton_weight(), ArgumentError);
}
