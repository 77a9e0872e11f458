#include "mcflab/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "mcflab/errors.hpp"

namespace mcflab {

bool MarkedPartition::valid() const {
  const int n = size();
  if (n == 0) return false;
  for (int r : rep) {
    if (r < 0 || r >= n) return false;
    if (rep[r] != r) return false;
  }
  return true;
}

int MarkedPartition::block_count() const {
  int c = 0;
  for (int i = 0; i < size(); ++i) c += rep[i] == i;
  return c;
}

std::vector<int> MarkedPartition::block_labels() const {
  std::vector<int> label(rep.size());
  for (int i = 0; i < size(); ++i) {
    int m = i;
    for (int j = 0; j < size(); ++j)
      if (rep[j] == rep[i]) m = std::min(m, j);
    label[i] = m;
  }
  return label;
}

int MarkedPartition::marking_count() const {
  int prod = 1;
  for (int i = 0; i < size(); ++i) {
    if (rep[i] != i) continue;
    prod *= static_cast<int>(std::count(rep.begin(), rep.end(), i));
  }
  return prod;
}

std::string MarkedPartition::to_string() const {
  const auto label = block_labels();
  std::ostringstream os;
  os << '{';
  bool first_block = true;
  for (int b = 0; b < size(); ++b) {
    if (label[b] != b) continue;
    if (!first_block) os << '|';
    first_block = false;
    bool first = true;
    for (int i = 0; i < size(); ++i) {
      if (label[i] != b) continue;
      if (!first) os << ',';
      first = false;
      os << i + 1;
      if (rep[i] == i) os << '*';
    }
  }
  os << '}';
  return os.str();
}

MarkedPartition singleton_partition(int n) {
  MarkedPartition p;
  p.rep.resize(n);
  std::iota(p.rep.begin(), p.rep.end(), 0);
  return p;
}

std::vector<MarkedPartition> all_marked_partitions(int n) {
  if (n < 1 || n > 8) throw ArgumentError("all_marked_partitions: n must be in [1,8]");
  std::vector<MarkedPartition> out;
  std::vector<int> f(n, 0);
  while (true) {
    MarkedPartition p{f};
    if (p.valid()) out.push_back(p);
    int i = n - 1;
    while (i >= 0 && f[i] == n - 1) f[i--] = 0;
    if (i < 0) break;
    ++f[i];
  }
  return out;
}

namespace {

double rate_for_count(int k, const NlvRates& r) {
  switch (k) {
    case 0: return 0.0;
    case 1: return r.a1;
    case 2: return r.a2;
    case 3: return r.a3;
    case 4: return r.a4;
    case 5: return 1.0;
  }
  throw ArgumentError("nonlinear voter kernel needs exactly five votes");
}

}  // namespace

double theta_pi(const MarkedPartition& pi, VoteMask votes, const NlvRates& rates) {
  if (pi.size() != 5 || !pi.valid()) throw ArgumentError("theta_pi: malformed partition of {1..5}");
  int k = 0;
  for (int i = 0; i < 5; ++i) k += (votes >> pi.rep[i]) & 1u;
  return rate_for_count(k, rates);
}

double g_pi(const MarkedPartition& pi, std::span<const double> probs, const NlvRates& rates) {
  if (pi.size() != 5 || !pi.valid()) throw ArgumentError("g_pi: malformed partition of {1..5}");
  if (probs.size() != 5) throw ArgumentError("g_pi: expected five probabilities");
  std::vector<double> table(32);
  for (VoteMask v = 0; v < 32; ++v) table[v] = theta_pi(pi, v, rates);
  return eval_multivariate_g(table_kernel(5, std::move(table), "theta_pi"), probs);
}

namespace {

struct Walkers {
  int dim = 0;
  std::vector<int> cluster_of;
  std::vector<std::int64_t> pos;  // cluster-major
  int k = 0;
  double time = 0.0;

  std::int64_t* at(int c) { return pos.data() + static_cast<std::size_t>(c) * dim; }

  void init(const LatticeOffsets& start, int d) {
    dim = d;
    const int n = static_cast<int>(start.size());
    cluster_of.assign(n, -1);
    pos.clear();
    k = 0;
    time = 0.0;
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(start[i].size()) != d) throw ArgumentError("start offset has wrong dimension");
      for (int c = 0; c < k && cluster_of[i] < 0; ++c)
        if (std::equal(start[i].begin(), start[i].end(), at(c))) cluster_of[i] = c;
      if (cluster_of[i] < 0) {
        for (int x : start[i]) pos.push_back(x);
        cluster_of[i] = k++;
      }
    }
  }

  void merge(int keep, int drop) {
    for (int& c : cluster_of)
      if (c == drop) c = keep;
    const int last = k - 1;
    if (drop != last) {
      std::copy(at(last), at(last) + dim, at(drop));
      for (int& c : cluster_of)
        if (c == last) c = drop;
    }
    pos.resize(static_cast<std::size_t>(last) * dim);
    --k;
  }

  bool collide(int c) {
    for (int j = 0; j < k; ++j) {
      if (j == c) continue;
      if (std::equal(at(c), at(c) + dim, at(j))) {
        merge(std::min(c, j), std::max(c, j));
        return true;
      }
    }
    return false;
  }

  std::int64_t min_l1() {
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b) {
        std::int64_t s = 0;
        for (int i = 0; i < dim; ++i) s += std::llabs(at(a)[i] - at(b)[i]);
        best = std::min(best, s);
      }
    return best;
  }

  // Smallest over pairs of |y|₂²/(2ℓ) − |y|∞/3, y the pair difference.
  double min_freedman_margin(double ell) {
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b) {
        double sq = 0.0, inf = 0.0;
        for (int i = 0; i < dim; ++i) {
          const double g = std::fabs(static_cast<double>(at(a)[i] - at(b)[i]));
          sq += g * g;
          inf = std::max(inf, g);
        }
        best = std::min(best, sq / (2.0 * ell) - inf / 3.0);
      }
    return best;
  }

  std::vector<int> labels() const {
    const int n = static_cast<int>(cluster_of.size());
    std::vector<int> out(n);
    for (int i = 0; i < n; ++i) {
      int m = i;
      for (int j = 0; j < i; ++j)
        if (cluster_of[j] == cluster_of[i]) {
          m = j;
          break;
        }
      out[i] = m;
    }
    return out;
  }
};

std::int64_t binomial(Rng& rng, std::int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  return std::binomial_distribution<std::int64_t>(n, p)(rng);
}

// Applies `jumps` jumps spread uniformly over clusters, axes and directions.
void scatter_jumps(Walkers& w, std::int64_t jumps, Rng& rng) {
  if (jumps <= 8 * w.k * w.dim) {
    std::uniform_int_distribution<int> pick(0, w.k * w.dim - 1);
    for (std::int64_t j = 0; j < jumps; ++j) {
      const int slot = pick(rng);
      w.pos[static_cast<std::size_t>(slot)] += (rng() & 1u) ? 1 : -1;
    }
    return;
  }
  std::int64_t remaining = jumps;
  for (int c = 0; c < w.k && remaining > 0; ++c) {
    const std::int64_t mine = c == w.k - 1 ? remaining : binomial(rng, remaining, 1.0 / (w.k - c));
    remaining -= mine;
    std::int64_t left = mine;
    for (int axis = 0; axis < w.dim && left > 0; ++axis) {
      const std::int64_t on_axis = axis == w.dim - 1 ? left : binomial(rng, left, 1.0 / (w.dim - axis));
      left -= on_axis;
      w.at(c)[axis] += 2 * binomial(rng, on_axis, 0.5) - on_axis;
    }
  }
}

double beta_sample(Rng& rng, double a, double b) {
  const double x = std::gamma_distribution<double>(a, 1.0)(rng);
  const double y = std::gamma_distribution<double>(b, 1.0)(rng);
  return x / (x + y);
}

// Per macro step, the probability that a skipped meeting could have happened
// is bounded by this constant: for each pair the projection of the difference
// walk on the current difference direction is a martingale with increments
// bounded by |y|∞/|y|₂ and variance rate 2·rate/dim, so Freedman's inequality
// applies with threshold |y|₂.
constexpr double kSkipRisk = 1e-12;

// Advances the coalescing system to time T. Jumps inside [time, T] are handled
// as N ~ Poisson(k·rate·(T − time)) uniform points; macro steps either use the
// L1 safety margin (D − 1 jumps cannot produce a meeting) or a time step for
// which no pair can meet except with probability ≤ kSkipRisk.
void advance(Walkers& w, double T, double rate, Rng& rng) {
  const double r1 = rate / w.dim;
  while (w.k > 1 && w.time < T) {
    std::int64_t N = std::poisson_distribution<std::int64_t>(w.k * rate * (T - w.time))(rng);
    bool merged = false;
    while (N > 0 && !merged) {
      const std::int64_t D = w.min_l1();
      if (D <= 1) {
        w.time += (T - w.time) * (1.0 - std::pow(uniform01(rng), 1.0 / static_cast<double>(N)));
        --N;
        const int c = std::uniform_int_distribution<int>(0, w.k - 1)(rng);
        const int axis = std::uniform_int_distribution<int>(0, w.dim - 1)(rng);
        w.at(c)[axis] += (rng() & 1u) ? 1 : -1;
        merged = w.collide(c);
        continue;
      }
      const double pairs = 0.5 * w.k * (w.k - 1);
      const double dt = w.min_freedman_margin(std::log(pairs / kSkipRisk)) / (2.0 * r1);
      const double safe_jumps = static_cast<double>(D - 1);
      if (dt > 0.0 && w.k * rate * dt > safe_jumps) {
        const double frac = dt / (T - w.time);
        const std::int64_t n = frac >= 1.0 ? N : binomial(rng, N, frac);
        scatter_jumps(w, n, rng);
        N -= n;
        w.time = frac >= 1.0 ? T : w.time + dt;
      } else {
        const std::int64_t m = std::min<std::int64_t>(N, D - 1);
        w.time += (T - w.time) * beta_sample(rng, static_cast<double>(m), static_cast<double>(N - m + 1));
        scatter_jumps(w, m, rng);
        N -= m;
      }
    }
    if (!merged) w.time = T;
  }
  if (w.time < T) w.time = T;
}

int encode_labels(const std::vector<int>& labels) {
  int code = 0;
  for (int l : labels) code = code * 8 + l;
  return code;
}

void check_start(const LatticeOffsets& start, int dim, double horizon, double jump_rate) {
  if (start.empty() || start.size() > 8) throw ArgumentError("coalescence: need 1..8 walkers");
  if (dim < 1) throw ArgumentError("coalescence: dim must be >= 1");
  if (!(horizon >= 0.0)) throw ArgumentError("coalescence: horizon must be >= 0");
  if (!(jump_rate > 0.0)) throw ArgumentError("coalescence: jump_rate must be positive");
  for (const auto& s : start)
    if (static_cast<int>(s.size()) != dim) throw ArgumentError("coalescence: offset dimension mismatch");
}

struct PartitionCounts {
  std::vector<MarkedPartition> partitions;
  std::vector<double> weights, stderr;
  double cutoff = 0.0, last_change = 0.0;
  bool converged = true;
};

// starts(i, rng) gives the start configuration of sample i.
template <class StartFn>
PartitionCounts run_coalescence(int n_walkers, int dim, double horizon, double jump_rate,
                                std::size_t n_samples, std::uint64_t seed,
                                const CoalescenceOptions& opt, StartFn starts) {
  if (n_samples == 0) throw ArgumentError("coalescence: n_samples must be positive");
  std::vector<Walkers> state(n_samples);
  const std::size_t chunks = chunk_count(n_samples);
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng = make_rng(seed, c, 0);
    const std::size_t hi = std::min(n_samples, (c + 1) * kChunkSize);
    for (std::size_t i = c * kChunkSize; i < hi; ++i) state[i].init(starts(i, rng), dim);
  });

  auto run_stage = [&](double T, std::uint64_t stage) {
    parallel_for(chunks, [&](std::size_t c) {
      Rng rng = make_rng(seed, c, stage);
      const std::size_t hi = std::min(n_samples, (c + 1) * kChunkSize);
      for (std::size_t i = c * kChunkSize; i < hi; ++i) advance(state[i], T, jump_rate, rng);
    });
  };
  auto singleton_fraction = [&] {
    std::size_t s = 0;
    for (const auto& w : state) s += w.k == n_walkers;
    return static_cast<double>(s) / static_cast<double>(n_samples);
  };

  PartitionCounts out;
  if (std::isfinite(horizon)) {
    run_stage(horizon, 1);
    out.cutoff = horizon;
  } else {
    double T = opt.initial_cutoff;
    std::uint64_t stage = 1;
    run_stage(T, stage);
    double w0 = singleton_fraction();
    while (true) {
      const bool all_done = std::all_of(state.begin(), state.end(), [](const Walkers& w) { return w.k <= 1; });
      if (all_done) {
        out.last_change = 0.0;
        break;
      }
      T *= 2.0;
      run_stage(T, ++stage);
      const double w1 = singleton_fraction();
      out.last_change = w0 - w1;
      w0 = w1;
      if (out.last_change < opt.doubling_tol) break;
      if (T >= opt.max_cutoff) {
        out.converged = false;
        break;
      }
    }
    out.cutoff = T;
  }

  std::map<int, std::size_t> counts;
  std::map<int, std::vector<int>> label_of;
  for (const auto& w : state) {
    auto l = w.labels();
    const int code = encode_labels(l);
    ++counts[code];
    label_of.emplace(code, std::move(l));
  }
  out.partitions = all_marked_partitions(n_walkers);
  out.weights.assign(out.partitions.size(), 0.0);
  out.stderr.assign(out.partitions.size(), 0.0);
  const double n = static_cast<double>(n_samples);
  for (std::size_t j = 0; j < out.partitions.size(); ++j) {
    const auto& p = out.partitions[j];
    auto it = counts.find(encode_labels(p.block_labels()));
    if (it == counts.end()) continue;
    const double q = static_cast<double>(it->second) / n;
    const double marks = p.marking_count();
    out.weights[j] = q / marks;
    out.stderr[j] = std::sqrt(q * (1.0 - q) / n) / marks;
  }
  return out;
}

}  // namespace

double PartitionDistribution::weight_of(const MarkedPartition& pi) const {
  for (std::size_t j = 0; j < partitions.size(); ++j)
    if (partitions[j] == pi) return weights[j];
  throw ArgumentError("weight_of: partition not in distribution");
}

double PartitionDistribution::singleton_weight() const {
  if (partitions.empty()) throw ArgumentError("singleton_weight: empty distribution");
  return weight_of(singleton_partition(partitions.front().size()));
}

double PartitionDistribution::max_stderr() const {
  return stderr.empty() ? 0.0 : *std::max_element(stderr.begin(), stderr.end());
}

std::string PartitionDistribution::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "partition,weight,stderr\n";
  for (std::size_t j = 0; j < partitions.size(); ++j)
    os << '"' << partitions[j].to_string() << "\"," << weights[j] << ',' << stderr[j] << '\n';
  return os.str();
}

namespace {

PartitionDistribution make_distribution(PartitionCounts counts, const LatticeOffsets& start, int dim,
                                        double horizon, double jump_rate, std::size_t n_samples,
                                        std::uint64_t seed) {
  PartitionDistribution d;
  d.dim = dim;
  d.start = start;
  d.horizon = horizon;
  d.jump_rate = jump_rate;
  d.n_samples = n_samples;
  d.seed = seed;
  d.partitions = std::move(counts.partitions);
  d.weights = std::move(counts.weights);
  d.stderr = std::move(counts.stderr);
  d.cutoff_used = counts.cutoff;
  d.last_change = counts.last_change;
  if (!std::isfinite(horizon)) {
    std::ostringstream os;
    os << "infinite horizon truncated at " << counts.cutoff << "; last doubling changed the singleton weight by "
       << counts.last_change;
    if (dim >= 3) os << "; for a t^-1/2 tail the remainder is about " << 2.414 * counts.last_change;
    if (!counts.converged) os << "; maximum cutoff reached before the doubling tolerance";
    d.tail_note = os.str();
  }
  return d;
}

}  // namespace

PartitionDistribution coalescence_partition_distribution(const LatticeOffsets& start, int dim,
                                                         double horizon, double jump_rate,
                                                         std::size_t n_samples, std::uint64_t seed,
                                                         const CoalescenceOptions& options) {
  check_start(start, dim, horizon, jump_rate);
  auto counts = run_coalescence(static_cast<int>(start.size()), dim, horizon, jump_rate, n_samples,
                                seed, options, [&](std::size_t, Rng&) { return start; });
  return make_distribution(std::move(counts), start, dim, horizon, jump_rate, n_samples, seed);
}

PartitionDistribution random_start_partition_distribution(int n_walkers, int dim,
                                                          const std::function<LatticeOffsets(Rng&)>& start,
                                                          double horizon, double jump_rate,
                                                          std::size_t n_samples, std::uint64_t seed,
                                                          const CoalescenceOptions& options) {
  LatticeOffsets probe(static_cast<std::size_t>(n_walkers), std::vector<int>(static_cast<std::size_t>(dim), 0));
  check_start(probe, dim, horizon, jump_rate);
  auto counts = run_coalescence(n_walkers, dim, horizon, jump_rate, n_samples, seed, options,
                                [&](std::size_t, Rng& rng) {
                                  auto s = start(rng);
                                  if (static_cast<int>(s.size()) != n_walkers)
                                    throw ArgumentError("random start: wrong number of walkers");
                                  return s;
                                });
  return make_distribution(std::move(counts), {}, dim, horizon, jump_rate, n_samples, seed);
}

std::vector<int> sample_coalescence_blocks(const LatticeOffsets& start, int dim, double horizon,
                                           double jump_rate, Rng& rng) {
  check_start(start, dim, horizon, jump_rate);
  if (!std::isfinite(horizon)) throw ArgumentError("sample_coalescence_blocks: horizon must be finite");
  Walkers w;
  w.init(start, dim);
  advance(w, horizon, jump_rate, rng);
  return w.labels();
}

MarkedPartition sample_marks(const std::vector<int>& labels, Rng& rng) {
  const int n = static_cast<int>(labels.size());
  MarkedPartition p;
  p.rep.assign(n, -1);
  for (int b = 0; b < n; ++b) {
    if (labels[b] != b) continue;
    std::vector<int> members;
    for (int i = 0; i < n; ++i)
      if (labels[i] == b) members.push_back(i);
    const int mark = members[std::uniform_int_distribution<std::size_t>(0, members.size() - 1)(rng)];
    for (int i : members) p.rep[i] = mark;
  }
  return p;
}

LatticeOffsets sample_box_sites(int L, int dim, int count, bool distinct, bool exclude_origin, Rng& rng) {
  if (L < 0 || dim < 1 || count < 0) throw ArgumentError("sample_box_sites: bad arguments");
  const double sites = std::pow(2.0 * L + 1.0, dim) - (exclude_origin ? 1.0 : 0.0);
  if (distinct && sites < count) throw ArgumentError("sample_box_sites: box too small for distinct sites");
  std::uniform_int_distribution<int> coord(-L, L);
  LatticeOffsets out;
  while (static_cast<int>(out.size()) < count) {
    std::vector<int> s(dim);
    for (int& x : s) x = coord(rng);
    if (exclude_origin && std::all_of(s.begin(), s.end(), [](int x) { return x == 0; })) continue;
    if (distinct && std::find(out.begin(), out.end(), s) != out.end()) continue;
    out.push_back(std::move(s));
  }
  return out;
}

LatticeOffsets nlv_offspring_offsets(int L, int dim, Rng& rng) {
  LatticeOffsets s{std::vector<int>(static_cast<std::size_t>(dim), 0)};
  auto others = sample_box_sites(L, dim, 4, true, false, rng);
  s.insert(s.end(), others.begin(), others.end());
  return s;
}

GFunction gbar(int L, int dim, double horizon, const NlvRates& rates, std::size_t n_samples,
               std::uint64_t seed, const GbarOptions& options) {
  if (L < 1) throw ArgumentError("gbar: L must be >= 1");
  const double rate = options.jump_rate > 0.0 ? options.jump_rate : static_cast<double>(dim);
  auto flags = nlv_condition_flags(rates);
  auto counts = run_coalescence(5, dim, horizon, rate, n_samples, seed, options.coalescence,
                                [&](std::size_t, Rng& rng) { return nlv_offspring_offsets(L, dim, rng); });
  std::vector<double> table(32, 0.0);
  for (std::size_t j = 0; j < counts.partitions.size(); ++j) {
    const double w = counts.weights[j];
    if (w == 0.0) continue;
    for (VoteMask v = 0; v < 32; ++v) table[v] += w * theta_pi(counts.partitions[j], v, rates);
  }
  for (double& t : table) t = std::clamp(t, 0.0, 1.0);
  // Every Θ_π keeps unanimous votes; pin them so the weight sum's rounding does not leak into g(0), g(1).
  table[0] = 0.0;
  table[31] = 1.0;
  GFunction g = g_from_kernel(table_kernel(5, table, "nonlinear_voter_averaged"), "gbar");
  g.flags = std::move(flags);
  nlohmann::json weights = nlohmann::json::object(), errs = nlohmann::json::object();
  for (std::size_t j = 0; j < counts.partitions.size(); ++j) {
    if (counts.weights[j] == 0.0) continue;
    weights[counts.partitions[j].to_string()] = counts.weights[j];
    errs[counts.partitions[j].to_string()] = counts.stderr[j];
  }
  g.metadata["L"] = L;
  g.metadata["dim"] = dim;
  g.metadata["horizon"] = std::isfinite(horizon) ? nlohmann::json(horizon) : nlohmann::json("infinite");
  g.metadata["cutoff_used"] = counts.cutoff;
  g.metadata["last_change"] = counts.last_change;
  g.metadata["n_samples"] = n_samples;
  g.metadata["seed"] = seed;
  g.metadata["rates"] = {{"a1", rates.a1}, {"a2", rates.a2}, {"a3", rates.a3}, {"a4", rates.a4}};
  g.metadata["weights"] = std::move(weights);
  g.metadata["stderr"] = std::move(errs);
  return g;
}

}  // namespace mcflab
