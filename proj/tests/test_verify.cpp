#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mcflab/errors.hpp"
#include "mcflab/models.hpp"
#include "mcflab/pde.hpp"
#include "mcflab/verify.hpp"

using namespace mcflab;

namespace {

ScalarField circle_phi(double lo, double hi, std::size_t n, double r = 1.0) {
  return sample_field(make_field(2, lo, hi, n), [r](std::span<const double> x) {
    return (x[0] * x[0] + x[1] * x[1] - r * r) / (2 * r);
  });
}

ScalarField planar_phi(double lo, double hi, std::size_t n) {
  return sample_field(make_field(2, lo, hi, n), [](std::span<const double> x) { return x[0]; });
}

ScalarField phase_field(const ScalarField& phi, double a, double b) {
  auto p = phi;
  for (double& v : p.values) v = v > 0.0 ? b : a;
  return p;
}

LatticeParams cheap_lattice() {
  LatticeParams p;
  p.partition_samples = 400;
  p.partition_horizon = 20.0;
  return p;
}

}  // namespace

TEST(Report, PassNeedsEveryCondition) {
  CheckReport r;
  r.statistic = 0.0;
  r.threshold = 1.0;
  r.finish();
  EXPECT_TRUE(r.pass);
  r.conditions["trend"] = false;
  r.finish();
  EXPECT_FALSE(r.pass);
  r.conditions["trend"] = true;
  r.statistic = 2.0;
  r.finish();
  EXPECT_FALSE(r.pass);
  nlohmann::json j;
  to_json(j, r);
  EXPECT_EQ(j.at("pass"), false);
  EXPECT_TRUE(j.contains("conditions"));
}

TEST(Equilibria, AllFiveBundlesReproduceTheirStableStates) {
  std::vector<ModelBundle> bundles{ternary_bbm(0.25, 2), slfv_dual(SlfvParams{}), lotka_volterra_dual(cheap_lattice()),
                                   nonlinear_voter_dual(cheap_lattice()), sexual_reproduction_dual(0.25, 2)};
  for (const auto& m : bundles) {
    const Point x(static_cast<std::size_t>(m.spec.dim), 0.1);
    auto r = check_equilibria(m, {x}, 0.02, 50, 1);
    EXPECT_TRUE(r.pass) << m.name << " " << r.statistic;
    EXPECT_LE(r.statistic, 1e-12);
  }
}

TEST(Equilibria, UnstableMidpointIsAlsoFixed) {
  for (const auto& m : {ternary_bbm(0.25, 2), sexual_reproduction_dual(0.25, 2)}) {
    const double mu = m.equilibria.mu;
    const double x[2] = {0.0, 0.0};
    auto e = estimate_vote_probability(m.spec, m.kernel, x, 0.05, [mu](std::span<const double>) { return mu; }, 100, 2);
    EXPECT_NEAR(e.value, mu, 1e-12) << m.name;
  }
  EXPECT_NEAR(sexual_reproduction_dual(0.25, 2).equilibria.mu, 1.0 / 3.0, 1e-10);
}

TEST(Monotonicity, EqualDataGiveEqualVotes) {
  auto m = ternary_bbm(0.25, 2);
  auto p = half_space_data(0.0, 1.0);
  auto r = check_monotonicity(m, p, p, {{0.0, 0.0}, {0.1, 0.0}}, 0.05, 500, 3);
  for (const auto& row : r.details.at("points")) EXPECT_EQ(row.at("low"), row.at("high"));
  EXPECT_TRUE(r.pass);
}

TEST(Monotonicity, ShiftedHalfSpace) {
  auto m = ternary_bbm(0.25, 2);
  auto low = [](std::span<const double> y) { return y[0] < 0.1 ? 0.0 : 1.0; };
  auto r = check_monotonicity(m, low, half_space_data(0.0, 1.0), {{0.0, 0.0}, {0.05, 0.3}}, 0.05, 1000, 4);
  EXPECT_TRUE(r.pass) << r.statistic;
  EXPECT_TRUE(r.conditions.at("data_ordered_at_points"));
}

TEST(Semigroup, ConstantDataIsExact) {
  auto m = ternary_bbm(0.25, 1);
  auto grid = make_field(1, -0.7, 0.7, 15);
  auto r = check_semigroup(m, {0.0}, 0.02, 0.02, [](std::span<const double>) { return 1.0; }, grid, 200, 50, 5);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Semigroup, HalfSpacePasses) {
  auto m = ternary_bbm(0.25, 1);
  auto grid = make_field(1, -0.75, 0.75, 21);
  for (double& o : grid.origin) o += 0.05;
  auto r = check_semigroup(m, {0.05}, 0.02, 0.02, half_space_data(0.0, 1.0), grid, 5000, 500, 6);
  EXPECT_TRUE(r.pass) << r.statistic << " > " << r.threshold;
}

TEST(Semigroup, GridMustCoverTheReach) {
  auto m = ternary_bbm(0.25, 1);
  auto grid = make_field(1, -0.05, 0.05, 5);
  EXPECT_THROW(check_semigroup(m, {0.0}, 0.02, 0.02, half_space_data(0.0, 1.0), grid, 100, 10, 7), ArgumentError);
}

TEST(Reports, DeterministicForFixedSeed) {
  auto m = ternary_bbm(0.25, 2);
  auto low = [](std::span<const double> y) { return y[0] < 0.1 ? 0.0 : 1.0; };
  auto a = check_monotonicity(m, low, half_space_data(0.0, 1.0), {{0.0, 0.0}}, 0.05, 700, 8);
  auto b = check_monotonicity(m, low, half_space_data(0.0, 1.0), {{0.0, 0.0}}, 0.05, 700, 8);
  EXPECT_EQ(a.statistic, b.statistic);
  EXPECT_EQ(a.details.dump(), b.details.dump());
}

TEST(FlowConsistency, CircleTrendsToA) {
  // The sampled points sit within a grid cell or two of the boundary of
  // {ψ_α < 0}, far inside the interface width at these ε, so only the trend in
  // ε is asserted here.
  const auto phi = circle_phi(-2.0, 2.0, 81);
  const auto make = bundle_factory("ternary_bbm", {{"dim", 2}});
  auto r = check_flow_consistency(make, phi, 1.0, 0.1, 0.05, {0.3, 0.25, 0.2}, 1500, 9, {3, 0.1});
  EXPECT_TRUE(r.conditions.at("max_non_increasing_in_epsilon")) << r.details.dump();
  const auto& per = r.details.at("per_epsilon");
  EXPECT_LT(per.back().at("max").get<double>(), per.front().at("max").get<double>());
  EXPECT_DOUBLE_EQ(r.statistic, per.back().at("max").get<double>() - 0.0);
}

TEST(FlowConsistency, VanishingGradientIsRejected) {
  auto phi = sample_field(make_field(2, -1.0, 1.0, 21), [](std::span<const double> x) {
    return x[0] * x[0] - x[1] * x[1];  // saddle on the zero set at the origin
  });
  const auto make = bundle_factory("ternary_bbm", {{"dim", 2}});
  EXPECT_THROW(check_flow_consistency(make, phi, 1.0, 0.1, 0.05, {0.3}, 10, 1), ArgumentError);
}

TEST(InterfaceFormation, DeepInsideReachesA) {
  // Constants frozen from fit_interface_formation at ε = 0.2, tolerance 0.02.
  auto m = ternary_bbm(0.2, 2);
  const auto phi = circle_phi(-4.0, 4.0, 81, 3.0);
  InterfaceFormationOptions o;
  o.n_points = 3;
  o.n_times = 2;
  o.sigma1 = 1.75;
  o.sigma2 = 2.625;
  o.K = 7.7;
  auto r = check_interface_formation(m, phi, 0.1, 400, 10, o);
  EXPECT_TRUE(r.pass) << r.statistic;
  EXPECT_FALSE(r.details.contains("diagnosis"));
}

TEST(InterfaceFormation, TooEarlyIsReportedAsNotFormed) {
  auto m = ternary_bbm(0.25, 2);
  const auto phi = circle_phi(-4.0, 4.0, 81, 3.0);
  InterfaceFormationOptions o;
  o.n_points = 2;
  o.n_times = 1;
  o.sigma1 = o.sigma2 = 0.05;
  o.K = 2.0;
  auto r = check_interface_formation(m, phi, 0.1, 400, 11, o);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.details.at("diagnosis"), "not yet formed");
}

TEST(Propagation, CircleWithinAllowance) {
  auto m = ternary_bbm(0.25, 2);
  const auto phi = circle_phi(-2.0, 2.0, 81);
  PropagationOptions o;
  o.n_points = 3;
  auto r = check_propagation_vs_1d(m, phi, 1.0, 0.1, {0.1}, 600, 12, o);
  EXPECT_TRUE(r.pass) << r.statistic << " > " << r.threshold;
}

TEST(ItoDrift, ZeroDurationIsExact) {
  const auto phi = planar_phi(-1.0, 1.0, 41);
  auto r = check_ito_coupling_drift(phi, 0.0, {0.05, 0.0}, 0.1, 0.0, 0.3, 200, 13);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(ItoDrift, PlanarMartingale) {
  const auto phi = planar_phi(-2.0, 2.0, 81);
  auto r = check_ito_coupling_drift(phi, 0.0, {0.05, 0.0}, 0.1, 0.1, 0.3, 5000, 14);
  EXPECT_TRUE(r.pass) << r.statistic << " > " << r.threshold;
  EXPECT_LT(std::abs(r.statistic), r.threshold);
}

TEST(ItoDrift, OutsideTheBandIsRejected) {
  const auto phi = planar_phi(-2.0, 2.0, 81);
  EXPECT_THROW(check_ito_coupling_drift(phi, 0.0, {0.9, 0.0}, 0.1, 0.1, 0.3, 10, 1), ArgumentError);
}

TEST(Diffusivity, BrownianLatticeAndSlfv) {
  const std::vector<double> s{0.25, 0.5, 1.0};
  EXPECT_TRUE(check_diffusivity(brownian_spec(2, 3, 16.0), s, 5000, 15).pass);
  auto lv = lotka_volterra_dual(cheap_lattice());
  EXPECT_TRUE(check_diffusivity(lv.spec, s, 5000, 16).pass);
  SlfvParams sp;
  sp.radii = {{0.5, 1.0}, {1.0, 1.0}};
  auto slfv = slfv_dual(sp);
  auto r = check_diffusivity(slfv.spec, s, 5000, 17);
  EXPECT_TRUE(r.pass) << r.statistic;
  EXPECT_TRUE(r.conditions.at("dispersal_within_bound"));
}

TEST(McfDuality, VanishedCircleLeavesTheOuterPhase) {
  // Radius 0.3 vanishes at t = r² = 0.09; the level-set value at the origin is
  // sqrt(T) − 0.3, clear of the margin at T = 0.16.
  const auto phi = circle_phi(-1.0, 1.0, 61, 0.3);
  const auto p = phase_field(phi, 0.0, 1.0);
  const auto make = bundle_factory("ternary_bbm", {{"dim", 2}});
  auto r = check_mcf_duality(make, p, {0.16}, {0.3, 0.25}, {{0.0, 0.0}}, 1000, 18, {0.05, 0.1});
  EXPECT_TRUE(r.pass) << r.statistic << " " << r.details.dump();
  EXPECT_EQ(r.details.at("comparisons")[0].at("target"), 1.0);
}

TEST(McfDuality, PlanarPhasesAreKept) {
  const auto p = phase_field(planar_phi(-1.5, 1.5, 61), 0.0, 1.0);
  const auto make = bundle_factory("ternary_bbm", {{"dim", 2}});
  auto r = check_mcf_duality(make, p, {0.05, 0.1}, {0.3, 0.25}, {{-0.6, 0.0}, {0.6, 0.2}}, 300, 19, {0.2, 0.1});
  EXPECT_TRUE(r.pass) << r.statistic;
}

TEST(McfDuality, DegenerateDataIsRejected) {
  auto p = make_field(2, -1.0, 1.0, 11);
  std::fill(p.values.begin(), p.values.end(), 1.0);
  const auto make = bundle_factory("ternary_bbm", {{"dim", 2}});
  EXPECT_THROW(check_mcf_duality(make, p, {0.1}, {0.3}, {{0.0, 0.0}}, 10, 1), ArgumentError);
}

TEST(McfDuality, AllenCahnAgreesWithTheLevelSetOnPhases) {
  auto m = ternary_bbm(0.2, 2);
  const auto phi = circle_phi(-2.0, 2.0, 81, 0.8);
  const auto p = phase_field(phi, 0.0, 1.0);
  const double T = 0.15;
  auto ac = solve_reaction_diffusion(0.2, m.g, 1.0, p, T);
  auto level = evolve_mcf_levelset(signed_distance(phi), T);
  std::size_t compared = 0;
  for (std::size_t i = 0; i < level.size(); ++i) {
    if (std::abs(level.values[i]) <= 0.2) continue;
    ++compared;
    EXPECT_EQ(level.values[i] > 0.0, ac.values[i] > 0.5) << "node " << i;
  }
  EXPECT_GT(compared, 1000u);
}

TEST(AllenCahn, TernaryMatchesReactionDiffusion) {
  auto m = ternary_bbm(0.25, 2);
  const auto p = phase_field(circle_phi(-2.0, 2.0, 81), 0.0, 1.0);
  auto r = check_allen_cahn(m, p, {{0.05, {0.9, 0.0}}, {0.1, {0.0, 1.1}}}, 2000, 20);
  EXPECT_TRUE(r.pass) << r.statistic;
}
