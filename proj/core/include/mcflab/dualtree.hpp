#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcflab/gfunction.hpp"
#include "mcflab/rng.hpp"

namespace mcflab {

using Point = std::vector<double>;
// Child indices are 1-based; the empty path is the root.
using UlamIndex = std::vector<int>;

std::string to_string(const UlamIndex& u);

// Advances a position in place over the given duration.
using MotionFn = std::function<void(std::span<double> x, double duration, Rng& rng)>;
// Writes N₀ offspring positions (row-major, N₀·dim) from the parent's death
// position and may fill the parent's decoration.
using DispersalFn =
    std::function<void(std::span<const double> parent, std::span<double> children, Decoration& deco, Rng& rng)>;
using LeafProbFn = std::function<double(std::span<const double> x)>;

struct BranchingSpec {
  int dim = 1;
  int n_children = 3;
  double branch_rate = 0.0;
  MotionFn motion;
  DispersalFn dispersal;
  std::string label;
  double epsilon = 1.0;
  // Radius bound of the offspring displacements (max-norm); infinity if unbounded.
  double dispersal_bound = 0.0;
  // Per-coordinate variance of a lineage per unit time.
  double diffusivity = 1.0;
};

BranchingSpec brownian_spec(int dim, int n_children, double branch_rate, std::string label = "bbm");

inline constexpr double kDefaultPopulationBudget = 1e7;

// Vertices in breadth-first order; the children of v are first_child[v] ..
// first_child[v] + N₀ − 1 and always come after v.
struct TimeLabelledTree {
  int n_children = 1;
  int dim = 1;
  double horizon = 0.0;
  Point origin;
  std::vector<int> parent;
  std::vector<int> first_child;  // -1 for leaves
  std::vector<int> depth;
  std::vector<double> birth_time;
  std::vector<double> death_time;
  std::vector<double> position;  // position at death (or at horizon), dim per vertex
  std::vector<Decoration> decoration;

  std::size_t size() const { return parent.size(); }
  bool is_leaf(std::size_t v) const { return first_child[v] < 0; }
  std::span<const double> position_of(std::size_t v) const {
    return {position.data() + v * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  std::vector<int> leaves() const;
  UlamIndex ulam(std::size_t v) const;
  // -1 if the index is not a vertex.
  int find(const UlamIndex& u) const;
  // Throws ArgumentError describing the first violated structural invariant.
  void validate() const;
};

// Expected population e^{(N₀−1)·rate·t} of a pure branching process.
double expected_population(const BranchingSpec& spec, double t);

TimeLabelledTree simulate_tree(const BranchingSpec& spec, std::span<const double> x0, double t,
                               std::uint64_t seed, double population_budget = kDefaultPopulationBudget);

// Every vertex of depth < height branches at times (k+1)·horizon/(height+1).
TimeLabelledTree regular_tree(int n_children, int height, int dim = 1, double horizon = 1.0);

double root_vote_prob_exact(const TimeLabelledTree& tree, const LeafProbFn& leaf_prob,
                            const VotingKernel& kernel);
double root_vote_prob_exact(const TimeLabelledTree& tree, const LeafProbFn& leaf_prob, const GFunction& g);
// Leaf probabilities given per leaf, in the order of tree.leaves().
double root_vote_prob_exact(const TimeLabelledTree& tree, std::span<const double> leaf_probs,
                            const VotingKernel& kernel);

// leaf_votes in the order of tree.leaves().
int sample_vote(const TimeLabelledTree& tree, std::span<const int> leaf_votes, const VotingKernel& kernel,
                std::uint64_t seed);

struct VoteEstimate {
  double value = 0.0;
  double stderr = 0.0;            // Bernoulli bound sqrt(v(1−v)/n)
  double stderr_empirical = 0.0;  // spread of the conditional root probabilities
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  double t = 0.0;
  Point x;
  std::string label;
};

void to_json(nlohmann::json& j, const VoteEstimate& e);

// Averages root_vote_prob_exact over independently simulated trees.
VoteEstimate estimate_vote_probability(const BranchingSpec& spec, const VotingKernel& kernel,
                                       std::span<const double> x, double t, const LeafProbFn& p,
                                       std::size_t n_samples, std::uint64_t seed,
                                       double population_budget = kDefaultPopulationBudget);

struct TreeShapeStats {
  int contains_regular_height = 0;
  int contained_in_regular_height = 0;
  double max_displacement_from_root = 0.0;
};

TreeShapeStats tree_shape_stats(const TimeLabelledTree& tree);

nlohmann::json tree_to_json(const TimeLabelledTree& tree);
TimeLabelledTree tree_from_json(const nlohmann::json& j);

}  // namespace mcflab
