#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcflab/dualtree.hpp"
#include "mcflab/gfunction.hpp"
#include "mcflab/partition.hpp"

namespace mcflab {

struct Equilibria {
  double a = 0.0, mu = 0.5, b = 1.0;
};

struct ModelBundle {
  std::string name;
  BranchingSpec spec;
  VotingKernel kernel;
  GFunction g;
  Equilibria equilibria;
  std::string scaling_notes;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<std::string> flags;
  // Per-branching kernel reading the decorations written by the dispersal
  // (nonlinear voter only; `kernel` is then its annealed average).
  std::optional<VotingKernel> decorated_kernel;
};

nlohmann::json describe_bundle(const ModelBundle& bundle);

ModelBundle ternary_bbm(double epsilon, int dim);

struct RadiusAtom {
  double radius = 1.0;
  double weight = 1.0;
};

struct SlfvParams {
  double n = 1e4;
  double beta = 0.25;
  double R = 1.0;
  std::vector<RadiusAtom> radii{{1.0, 1.0}};
  double epsilon_n = 0.25;
  double gamma = 1.0;
  int dim = 2;
};

ModelBundle slfv_dual(const SlfvParams& params);

struct LatticeParams {
  double epsilon = 0.25;
  int L = 2;
  int dim = 3;
  double mesh = 0.0;  // 0 means epsilon³
  double partition_horizon = kInfiniteHorizon;
  std::size_t partition_samples = 2000;
  std::uint64_t seed = 1;
};

ModelBundle lotka_volterra_dual(const LatticeParams& params);
ModelBundle nonlinear_voter_dual(const LatticeParams& params, const NlvRates& rates = {});
ModelBundle sexual_reproduction_dual(double epsilon, int dim, double mesh = 0.0);

// Names accepted by make_bundle.
std::vector<std::string> model_names();
// Builds a bundle from a JSON parameter block; unknown keys are rejected.
ModelBundle make_bundle(const std::string& name, const nlohmann::json& params);

// Probability that the three lineages of a Lotka-Volterra branching event
// (parent site plus two uniform box sites) never coalesce.
PartitionDistribution lv_escape_distribution(int L, int dim, double horizon, std::size_t n_samples,
                                             std::uint64_t seed);
double lv_escape_probability(int L, int dim, double horizon, std::size_t n_samples, std::uint64_t seed);

using SiteProbFn = std::function<double(std::span<const int> site)>;

// Nearest-neighbour voter model on the torus (Z/size)^dim: every site at rate 1
// copies a uniform neighbour. Returns the empirical P[ξ_t(x) = 1] per site
// (row-major, last coordinate fastest).
std::vector<double> voter_forward_oracle(int lattice_size, int dim, const SiteProbFn& p0, double t,
                                         std::size_t n_samples, std::uint64_t seed);

// Single-site dual of the voter model: E[p0(x + W_t)], W the rate-1 walk,
// evaluated exactly through the Skellam marginals of its coordinates.
double voter_dual_marginal(int lattice_size, int dim, const SiteProbFn& p0, std::span<const int> x, double t);

}  // namespace mcflab
