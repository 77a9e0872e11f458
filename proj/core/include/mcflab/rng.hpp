#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace mcflab {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based seed splitting: the stream for (master, a, b) is
// splitmix64(splitmix64(splitmix64(master) ^ a') ^ b') with a', b' the
// counters pushed through splitmix64 as well. Pure function of its inputs, so
// replicate seeds never depend on thread scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

inline Rng make_rng(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return Rng(derive_seed(master, a, b));
}

// Monte Carlo samples are grouped into fixed-size chunks; chunk c always uses
// the stream derive_seed(seed, c), whatever the number of threads.
inline constexpr std::size_t kChunkSize = 128;

inline std::size_t chunk_count(std::size_t n) { return (n + kChunkSize - 1) / kChunkSize; }

// Runs body(i) for i in [0, n) on the OpenMP pool (dynamic schedule).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

void set_thread_count(int n);
int thread_count();

double uniform01(Rng& rng);
double normal01(Rng& rng);

}  // namespace mcflab
