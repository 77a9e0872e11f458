#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mcflab/gfunction.hpp"
#include "mcflab/rng.hpp"

namespace mcflab {

using LatticeOffsets = std::vector<std::vector<int>>;

inline constexpr double kInfiniteHorizon = std::numeric_limits<double>::infinity();

// rep[i] is the (0-based) mark of the block holding i; valid iff rep[rep[i]] == rep[i].
struct MarkedPartition {
  std::vector<int> rep;

  int size() const { return static_cast<int>(rep.size()); }
  bool valid() const;
  int block_count() const;
  // Canonical unmarked labelling: label[i] = smallest element of i's block.
  std::vector<int> block_labels() const;
  // Product of block sizes: the number of ways to mark this partition.
  int marking_count() const;
  // Blocks in order of their smallest element, 1-based, marks starred: "{1*,2|3*|4*,5}".
  std::string to_string() const;
  bool operator==(const MarkedPartition&) const = default;
};

MarkedPartition singleton_partition(int n);
std::vector<MarkedPartition> all_marked_partitions(int n);

// Θ_π(v) = a_k with k the number of ones among the modified votes v̂ᵢ = v_{rep[i]}.
double theta_pi(const MarkedPartition& pi, VoteMask votes, const NlvRates& rates);
double g_pi(const MarkedPartition& pi, std::span<const double> probs, const NlvRates& rates);

struct CoalescenceOptions {
  double initial_cutoff = 16.0;
  double doubling_tol = 1e-3;
  double max_cutoff = 4194304.0;
};

struct PartitionDistribution {
  int dim = 3;
  LatticeOffsets start;
  double horizon = kInfiniteHorizon;
  double jump_rate = 3.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  std::vector<MarkedPartition> partitions;
  std::vector<double> weights;
  std::vector<double> stderr;
  double cutoff_used = 0.0;
  // Change of the π₀ weight over the last horizon doubling (infinite horizon only).
  double last_change = 0.0;
  std::string tail_note;

  double weight_of(const MarkedPartition& pi) const;
  double singleton_weight() const;
  double max_stderr() const;
  std::string to_csv() const;
};

// Coalescing continuous-time simple random walks on Z^dim, each walker jumping
// at total rate jump_rate to a uniform nearest neighbour; walkers sharing a
// site merge. horizon may be kInfiniteHorizon (cutoff doubling, see options).
PartitionDistribution coalescence_partition_distribution(const LatticeOffsets& start, int dim,
                                                         double horizon, double jump_rate,
                                                         std::size_t n_samples, std::uint64_t seed,
                                                         const CoalescenceOptions& options = {});

// As above with a fresh start configuration drawn for every sample; the
// returned distribution has an empty `start`.
PartitionDistribution random_start_partition_distribution(int n_walkers, int dim,
                                                          const std::function<LatticeOffsets(Rng&)>& start,
                                                          double horizon, double jump_rate,
                                                          std::size_t n_samples, std::uint64_t seed,
                                                          const CoalescenceOptions& options = {});

// One realisation; returns canonical block labels.
std::vector<int> sample_coalescence_blocks(const LatticeOffsets& start, int dim, double horizon,
                                           double jump_rate, Rng& rng);
// Uniform marks within the blocks given by canonical labels.
MarkedPartition sample_marks(const std::vector<int>& block_labels, Rng& rng);

// count sites uniform in [-L,L]^dim, optionally pairwise distinct and/or avoiding 0.
LatticeOffsets sample_box_sites(int L, int dim, int count, bool distinct, bool exclude_origin,
                                Rng& rng);

// The parent site followed by 4 distinct uniform sites of [-L,L]^dim (the
// parent's own site included).
LatticeOffsets nlv_offspring_offsets(int L, int dim, Rng& rng);

struct GbarOptions {
  CoalescenceOptions coalescence;
  double jump_rate = 0.0;  // 0 means dim (each coordinate at rate 1)
};

// Effective g of the nonlinear voter model: Σ_π E_{μ_L}[q(ξ̄,π,horizon)] g^π.
// The returned g carries the averaged kernel Θ̄ = Σ_π w_π Θ_π and the weights.
GFunction gbar(int L, int dim, double horizon, const NlvRates& rates, std::size_t n_samples,
               std::uint64_t seed, const GbarOptions& options = {});

}  // namespace mcflab
