#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcflab/field.hpp"
#include "mcflab/models.hpp"
#include "mcflab/pde.hpp"

namespace mcflab {

// pass ⇔ statistic ≤ threshold and every entry of `conditions` holds.
struct CheckReport {
  std::string name;
  std::string property;  // short label of the property under test
  nlohmann::json inputs = nlohmann::json::object();
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::map<std::string, bool> conditions;
  nlohmann::json budget = nlohmann::json::object();  // stderr and discretization terms
  nlohmann::json details = nlohmann::json::object();
  std::uint64_t seed = 0;
  double runtime_seconds = 0.0;

  void finish();  // sets pass from statistic, threshold and conditions
};

void to_json(nlohmann::json& j, const CheckReport& r);

// Rebuilds a bundle at a new ε (for checks that sweep ε).
using BundleFactory = std::function<ModelBundle(double epsilon)>;
BundleFactory bundle_factory(const std::string& name, const nlohmann::json& params);

// (a + δ)·1{φ ≤ 0} + b·1{φ > 0}, φ interpolated (clamped outside its box).
LeafProbFn phase_data(const ScalarField& phi, double a, double b, double delta);
// a·1{x₀ < 0} + b·1{x₀ ≥ 0}.
LeafProbFn half_space_data(double a, double b);

// Two-stage estimate u(h, x; û(t,·)) against the direct u(t + h, x). The grid
// carries the nodes where û(t,·) is estimated with n_inner samples each.
CheckReport check_semigroup(const ModelBundle& bundle, const Point& x, double t, double h, const LeafProbFn& p,
                            const ScalarField& grid, std::size_t n_outer, std::size_t n_inner,
                            std::uint64_t seed);

// Common random numbers: both sides use the same trees.
CheckReport check_monotonicity(const ModelBundle& bundle, const LeafProbFn& p_low, const LeafProbFn& p_high,
                               const std::vector<Point>& points, double t, std::size_t n_samples,
                               std::uint64_t seed);

CheckReport check_equilibria(const ModelBundle& bundle, const std::vector<Point>& points, double t,
                             std::size_t n_samples, std::uint64_t seed);

struct FlowConsistencyOptions {
  std::size_t n_points = 5;
  double tolerance = 0.1;  // on the final-ε excess over a
};

// Sample points are the nodes of {ψ_α(h,·) < 0} closest to its boundary.
// Also requires the per-ε maximum to be non-increasing up to 4·stderr.
CheckReport check_flow_consistency(const BundleFactory& make, const ScalarField& phi, double alpha, double delta,
                                   double h, const std::vector<double>& epsilon_list, std::size_t n_samples,
                                   std::uint64_t seed, const FlowConsistencyOptions& options = {});

struct FormationCalibration {
  int contraction_depth = 0;  // generations taking a + δ to within the tolerance of a
  double sigma1 = 0.0;        // formation time in units of ε²|log ε|
  double sigma2 = 0.0;
  double displacement = 0.0;  // 99% quantile of a lineage displacement by time σ₂, units of ε|log ε|
};

void to_json(nlohmann::json& j, const FormationCalibration& c);

// σ₁: smallest multiple of ε²|log ε| (step 0.25) at which the expected root vote
// under constant data a + δ is within tolerance/2 of a; σ₂ = 1.5σ₁.
FormationCalibration fit_interface_formation(const ModelBundle& bundle, double delta, double tolerance,
                                             std::size_t n_lineages, std::uint64_t seed);

struct InterfaceFormationOptions {
  double tolerance = 0.02;
  std::size_t n_points = 6;
  int n_times = 3;
  double K = 0.0;        // 0 means 2·displacement from the calibration
  double sigma1 = 0.0;   // 0 means fitted
  double sigma2 = 0.0;
  std::size_t calibration_lineages = 20000;
};

// Estimates u(t,x; p⁺) at points with d(x) ≤ −K ε|log ε| for t ∈ [σ₁, σ₂]·ε²|log ε|.
CheckReport check_interface_formation(const ModelBundle& bundle, const ScalarField& phi, double delta,
                                      std::size_t n_samples, std::uint64_t seed,
                                      const InterfaceFormationOptions& options = {});

struct PropagationOptions {
  double K2 = 1.0;  // shift in units of ε|log ε|
  double C = 1.0;   // allowance C·ε^k
  double k = 1.0;
  std::size_t n_points = 6;
  double band = 2.0;  // sample |d| ≤ band·ε|log ε|
};

// u(t,x; p⁺) against the one-dimensional profile at d(t,x) + K₂ε|log ε|, with d the
// signed distance to the zero set of ψ_α(t,·).
CheckReport check_propagation_vs_1d(const ModelBundle& bundle, const ScalarField& phi, double alpha, double delta,
                                    const std::vector<double>& time_grid, std::size_t n_samples,
                                    std::uint64_t seed, const PropagationOptions& options = {});

struct ItoDriftOptions {
  int n_steps = 200;
  int n_slices = 17;
  double budget = 0.0;  // discretization allowance added to 4·stderr
};

// Brownian paths from x stopped at s ∧ Λ, Λ the exit time from the band
// {|d| < r₀}; tests E d(t − s∧Λ, W) ≤ d(t,x) − α E[s∧Λ]/(4L) with L = max |Dψ_α|
// over the band.
CheckReport check_ito_coupling_drift(const ScalarField& phi, double alpha, const Point& x, double t, double s,
                                     double band_r0, std::size_t n_paths, std::uint64_t seed,
                                     const ItoDriftOptions& options = {});

// Single-lineage displacement: variance slope in s (±5%), fourth-moment ratio
// (3 ± 10%) and the offspring dispersal bound.
CheckReport check_diffusivity(const BranchingSpec& spec, const std::vector<double>& s_list, std::size_t n_samples,
                              std::uint64_t seed);

struct McfDualityOptions {
  double margin = 0.2;     // |u(T,x)| threshold for a sampled point to count
  double tolerance = 0.1;  // on the final-ε deviation
};

// Γ₀ = {p = μ}; the level-set flow of its signed distance predicts the phase
// (b where u > 0, a where u < 0), approached as ε decreases.
CheckReport check_mcf_duality(const BundleFactory& make, const ScalarField& p, const std::vector<double>& T_list,
                              const std::vector<double>& epsilon_list, const std::vector<Point>& sample_points,
                              std::size_t n_samples, std::uint64_t seed, const McfDualityOptions& options = {});

struct SpaceTimePoint {
  double t = 0.0;
  Point x;
};

// Monte Carlo u(t,x;p) against the reaction-diffusion solution started from p.
CheckReport check_allen_cahn(const ModelBundle& bundle, const ScalarField& p, const std::vector<SpaceTimePoint>& points,
                             std::size_t n_samples, std::uint64_t seed, double pde_budget = 0.02,
                             const ReactionDiffusionOptions& options = {});

}  // namespace mcflab
