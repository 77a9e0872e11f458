#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "mcflab/dualtree.hpp"
#include "mcflab/gfunction.hpp"
#include "mcflab/onedim.hpp"
#include "mcflab/rng.hpp"

using namespace mcflab;

namespace {

StepComparison majority_step() { return step_comparison(majority_kernel(), 0.0, 1.0); }

}  // namespace

TEST(Bbm1d, ConstantDataIsReproduced) {
  const auto setup = majority_step();
  const auto spec = bbm1d_spec(setup, 0.25);
  const double z[1] = {0.1};
  for (double c : {0.0, 1.0}) {
    auto e = estimate_vote_probability(spec, setup.kernel, z, 0.2, [c](std::span<const double>) { return c; }, 200, 1);
    EXPECT_EQ(e.value, c);
  }
}

TEST(Bbm1d, OriginGivesOneHalf) {
  const std::size_t n = 20000;
  auto e = bbm1d_vote_prob(0.0, 0.05, 0.25, majority_step(), n, 2);
  EXPECT_NEAR(e.value, 0.5, 4 * e.stderr);
}

TEST(Bbm1d, FarSideReachesThePlateau) {
  const double eps = 0.2;
  auto e = bbm1d_vote_prob(3.0 * interface_scale(eps), 0.1, eps, majority_step(), 4000, 3);
  EXPECT_GE(e.value, 1.0 - 0.02);
}

TEST(Bbm1d, FirstBranchDecomposition) {
  // u(z,t) = E[1{τ>t} p_*(z + B_t) + 1{τ≤t} g(u(z + B_τ, t − τ))], τ ~ Exp(ε⁻²).
  const double eps = 0.3, t = 0.04, z = 0.05;
  const auto setup = majority_step();
  const auto g = majority_g();
  const double rate = 1.0 / (eps * eps);
  const int outer = 400;
  const std::size_t inner = 400;
  Rng rng(11);
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < outer; ++i) {
    const double tau = -std::log(1.0 - uniform01(rng)) / rate;
    double v;
    if (tau > t) {
      v = z + std::sqrt(t) * normal01(rng) >= 0.0 ? 1.0 : 0.0;
    } else {
      const double y = z + std::sqrt(tau) * normal01(rng);
      v = g(bbm1d_vote_prob(y, t - tau, eps, setup, inner, derive_seed(12, i)).value);
    }
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / outer, se = std::sqrt((sum2 / outer - mean * mean) / outer);
  auto direct = bbm1d_vote_prob(z, t, eps, setup, 20000, 13);
  // The inner estimates add a small bias through the curvature of g.
  EXPECT_NEAR(mean, direct.value, 4 * (se + direct.stderr) + 0.01);
}

TEST(InterfaceProfile, TimeZeroIsTheStep) {
  const double eps = 0.25;
  auto prof = interface_profile(0.0, eps, majority_step(), default_z_grid(eps), 50, 4);
  for (std::size_t i = 0; i < prof.z_grid.size(); ++i)
    EXPECT_EQ(prof.values[i].value, prof.z_grid[i] >= 0.0 ? 1.0 : 0.0);
  EXPECT_LE(prof.width_estimate, 0.1 * interface_scale(eps) + 1e-12);
}

TEST(InterfaceProfile, MonotoneConfinedAndSymmetric) {
  const double eps = 0.25;
  auto prof = interface_profile(0.1, eps, majority_step(), default_z_grid(eps), 2000, 5);
  const auto& v = prof.values;
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_GE(v[i].value, -4 * v[i].stderr);
    EXPECT_LE(v[i].value, 1.0 + 4 * v[i].stderr);
    for (std::size_t j = i + 1; j < v.size(); ++j)
      EXPECT_LE(v[i].value, v[j].value + 4 * (v[i].stderr + v[j].stderr) + 1e-12);
    const std::size_t k = v.size() - 1 - i;
    EXPECT_NEAR(prof.z_grid[i], -prof.z_grid[k], 1e-12);
    if (prof.z_grid[i] != 0.0) EXPECT_NEAR(v[i].value + v[k].value, 1.0, 4 * (v[i].stderr + v[k].stderr) + 1e-12);
  }
  EXPECT_TRUE(std::isfinite(prof.width_estimate));
}

TEST(InterfaceProfile, FormedInterfaceIsStationary) {
  const double eps = 0.3;
  std::vector<double> grid;
  for (int i = -10; i <= 10; ++i) grid.push_back(0.5 * i * interface_scale(eps));
  auto p1 = interface_profile(0.12, eps, majority_step(), grid, 2000, 6);
  auto p2 = interface_profile(0.2, eps, majority_step(), grid, 2000, 7);
  const double w = std::max(p1.width_estimate, p2.width_estimate);
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (std::abs(grid[i]) >= w)
      EXPECT_NEAR(p1.values[i].value, p2.values[i].value, 4 * (p1.values[i].stderr + p2.values[i].stderr) + 1e-12);
}

TEST(InterfaceProfile, CsvHasOneRowPerGridPoint) {
  const double eps = 0.3;
  auto prof = interface_profile(0.05, eps, majority_step(), default_z_grid(eps), 100, 8);
  const auto csv = prof.to_csv();
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), prof.z_grid.size() + 1);
}

TEST(SlopeCheck, FlatProfileIsVacuous) {
  InterfaceProfile flat;
  flat.epsilon = 0.25;
  flat.z_grid = {-0.1, 0.0, 0.1};
  for (double z : flat.z_grid) {
    VoteEstimate e;
    e.value = 1.0;
    e.x = {z};
    flat.values.push_back(e);
  }
  auto r = slope_check(flat, 0.091, 0.5);
  EXPECT_TRUE(r.vacuous);
}

TEST(SlopeCheck, StepProfilePasses) {
  const double eps = 0.25;
  auto prof = interface_profile(0.0, eps, majority_step(), default_z_grid(eps), 50, 9);
  auto r = slope_check(prof, 0.091, 0.5);
  EXPECT_TRUE(r.pass);
}

TEST(SlopeCheck, FittedConstantIsStableAcrossSeeds) {
  const double eps = 0.2;
  std::vector<double> grid;
  for (int i = -10; i <= 10; ++i) grid.push_back(0.2 * i * interface_scale(eps));
  auto a = slope_check(interface_profile(0.12, eps, majority_step(), grid, 3000, 10), 0.091, 0.5);
  auto b = slope_check(interface_profile(0.12, eps, majority_step(), grid, 3000, 11), 0.091, 0.5);
  ASSERT_TRUE(std::isfinite(a.c2));
  ASSERT_TRUE(std::isfinite(b.c2));
  EXPECT_NEAR(a.c2 / b.c2, 1.0, 0.2);
}
