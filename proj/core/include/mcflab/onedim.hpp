#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcflab/dualtree.hpp"
#include "mcflab/gfunction.hpp"

namespace mcflab {

// One-dimensional branching Brownian motion with zero dispersal, branching at
// rate gamma·ε⁻² into kernel.n_children particles, voting with the step
// p_*(x) = a for x < 0, b for x ≥ 0.
struct StepComparison {
  VotingKernel kernel;
  double a = 0.0;
  double b = 1.0;
  double gamma = 1.0;
};

StepComparison step_comparison(const VotingKernel& kernel, double a, double b, double gamma = 1.0);

// ε|log ε|, the interface length scale.
double interface_scale(double epsilon);

BranchingSpec bbm1d_spec(const StepComparison& setup, double epsilon);

VoteEstimate bbm1d_vote_prob(double z, double t, double epsilon, const StepComparison& setup,
                             std::size_t n_samples, std::uint64_t seed);

// Default grid: [−5ε|log ε|, 5ε|log ε|] with spacing ε|log ε|/10.
std::vector<double> default_z_grid(double epsilon);

struct InterfaceProfile {
  double t = 0.0;
  double epsilon = 0.0;
  double a = 0.0, b = 1.0;
  double tolerance = 0.0;
  std::vector<double> z_grid;
  std::vector<VoteEstimate> values;
  // Smallest grid |z| = w with values ≥ b − tol for z ≥ w and ≤ a + tol for z ≤ −w;
  // infinity when no grid value qualifies.
  double width_estimate = 0.0;
  double width_units = 0.0;  // width_estimate / (ε|log ε|)

  std::string to_csv() const;
};

// tolerance defaults to 0.02·(b − a).
InterfaceProfile interface_profile(double t, double epsilon, const StepComparison& setup,
                                   std::vector<double> z_grid, std::size_t n_samples, std::uint64_t seed,
                                   double tolerance = -1.0);

struct SlopePair {
  double z1 = 0, z2 = 0;
  double v1 = 0, v2 = 0;
  bool pass = false;
};

struct SlopeReport {
  bool vacuous = false;
  bool pass = true;
  double c2 = 0.0;  // fitted constant; infinity if some admissible pair has no increase
  double delta_star = 0.0;
  std::vector<SlopePair> pairs;
};

void to_json(nlohmann::json& j, const SlopeReport& r);

// Pairs with |value − μ| ≤ b − μ − δ* must satisfy
// v₂ − v₁ ≥ δ*(z₂ − z₁)/(c₂ ε|log ε|) up to 4·stderr; c₂ is fitted over pairs
// at least ε|log ε|/4 apart.
SlopeReport slope_check(const InterfaceProfile& profile, double delta_star, double mu);

}  // namespace mcflab
