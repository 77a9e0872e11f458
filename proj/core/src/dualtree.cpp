#include "mcflab/dualtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mcflab/errors.hpp"

namespace mcflab {

std::string to_string(const UlamIndex& u) {
  if (u.empty()) return "root";
  std::ostringstream os;
  for (std::size_t i = 0; i < u.size(); ++i) os << (i ? "." : "") << u[i];
  return os.str();
}

BranchingSpec brownian_spec(int dim, int n_children, double branch_rate, std::string label) {
  BranchingSpec s;
  s.dim = dim;
  s.n_children = n_children;
  s.branch_rate = branch_rate;
  s.label = std::move(label);
  s.motion = [](std::span<double> x, double duration, Rng& rng) {
    const double sd = std::sqrt(duration);
    for (double& xi : x) xi += sd * normal01(rng);
  };
  s.dispersal = [n_children](std::span<const double> parent, std::span<double> children, Decoration&, Rng&) {
    for (int c = 0; c < n_children; ++c) std::copy(parent.begin(), parent.end(), children.begin() + c * parent.size());
  };
  s.dispersal_bound = 0.0;
  s.diffusivity = 1.0;
  return s;
}

std::vector<int> TimeLabelledTree::leaves() const {
  std::vector<int> out;
  for (std::size_t v = 0; v < size(); ++v)
    if (is_leaf(v)) out.push_back(static_cast<int>(v));
  return out;
}

UlamIndex TimeLabelledTree::ulam(std::size_t v) const {
  UlamIndex u;
  for (int w = static_cast<int>(v); parent[w] >= 0; w = parent[w]) u.push_back(w - first_child[parent[w]] + 1);
  std::reverse(u.begin(), u.end());
  return u;
}

int TimeLabelledTree::find(const UlamIndex& u) const {
  if (size() == 0) return -1;
  int v = 0;
  for (int c : u) {
    if (c < 1 || c > n_children || first_child[v] < 0) return -1;
    v = first_child[v] + c - 1;
  }
  return v;
}

void TimeLabelledTree::validate() const {
  const std::size_t n = size();
  if (n == 0) throw ArgumentError("tree: no vertices");
  if (first_child.size() != n || depth.size() != n || birth_time.size() != n || death_time.size() != n ||
      decoration.size() != n || position.size() != n * static_cast<std::size_t>(dim))
    throw ArgumentError("tree: inconsistent array sizes");
  if (parent[0] != -1 || birth_time[0] != 0.0) throw ArgumentError("tree: root must have no parent and birth 0");
  for (std::size_t v = 0; v < n; ++v) {
    if (is_leaf(v)) {
      if (death_time[v] != horizon) throw ArgumentError("tree: leaf " + to_string(ulam(v)) + " dies before horizon");
      continue;
    }
    if (!(death_time[v] > birth_time[v])) throw ArgumentError("tree: internal vertex with empty lifetime");
    const auto c0 = static_cast<std::size_t>(first_child[v]);
    if (c0 <= v || c0 + n_children > n) throw ArgumentError("tree: children out of order");
    for (int c = 0; c < n_children; ++c) {
      const std::size_t w = c0 + c;
      if (parent[w] != static_cast<int>(v)) throw ArgumentError("tree: broken family at " + to_string(ulam(v)));
      if (birth_time[w] != death_time[v]) throw ArgumentError("tree: child birth differs from parent death");
      if (depth[w] != depth[v] + 1) throw ArgumentError("tree: wrong depth");
    }
  }
}

double expected_population(const BranchingSpec& spec, double t) {
  return std::exp((spec.n_children - 1) * spec.branch_rate * t);
}

TimeLabelledTree simulate_tree(const BranchingSpec& spec, std::span<const double> x0, double t,
                               std::uint64_t seed, double population_budget) {
  if (!(t >= 0.0)) throw ArgumentError("simulate_tree: t must be >= 0");
  if (static_cast<int>(x0.size()) != spec.dim) throw ArgumentError("simulate_tree: start point dimension mismatch");
  if (spec.branch_rate < 0.0) throw ArgumentError("simulate_tree: negative branch rate");
  const double expected = expected_population(spec, t);
  if (expected > population_budget) {
    std::ostringstream os;
    os << "simulate_tree: expected population " << expected << " exceeds budget " << population_budget;
    throw ResourceError(os.str());
  }
  const std::size_t d = static_cast<std::size_t>(spec.dim);
  const int N0 = spec.n_children;
  Rng rng(seed);
  TimeLabelledTree tr;
  tr.n_children = N0;
  tr.dim = spec.dim;
  tr.horizon = t;
  tr.origin.assign(x0.begin(), x0.end());
  std::vector<double> start(x0.begin(), x0.end());  // birth positions, consumed as vertices are processed
  tr.parent.push_back(-1);
  tr.depth.push_back(0);
  tr.birth_time.push_back(0.0);
  const auto hard_cap = static_cast<std::size_t>(std::min(population_budget * 10.0, 4e9));
  std::exponential_distribution<double> life(spec.branch_rate > 0.0 ? spec.branch_rate : 1.0);
  for (std::size_t v = 0; v < tr.parent.size(); ++v) {
    const double born = tr.birth_time[v];
    const double tau = spec.branch_rate > 0.0 ? life(rng) : std::numeric_limits<double>::infinity();
    const bool branches = born + tau < t;
    const double death = branches ? born + tau : t;
    std::span<double> x(start.data() + v * d, d);
    if (death > born) spec.motion(x, death - born, rng);
    tr.death_time.push_back(death);
    tr.position.insert(tr.position.end(), x.begin(), x.end());
    tr.decoration.emplace_back();
    if (!branches) {
      tr.first_child.push_back(-1);
      continue;
    }
    const std::size_t c0 = tr.parent.size();
    if (c0 + N0 > hard_cap) throw ResourceError("simulate_tree: population exceeded budget during simulation");
    tr.first_child.push_back(static_cast<int>(c0));
    start.resize((c0 + N0) * d);
    std::span<const double> xp(start.data() + v * d, d);
    spec.dispersal(xp, std::span<double>(start.data() + c0 * d, N0 * d), tr.decoration.back(), rng);
    for (int c = 0; c < N0; ++c) {
      tr.parent.push_back(static_cast<int>(v));
      tr.depth.push_back(tr.depth[v] + 1);
      tr.birth_time.push_back(death);
    }
  }
  return tr;
}

TimeLabelledTree regular_tree(int n_children, int height, int dim, double horizon) {
  if (n_children < 1 || height < 0 || dim < 1) throw ArgumentError("regular_tree: invalid shape");
  TimeLabelledTree tr;
  tr.n_children = n_children;
  tr.dim = dim;
  tr.horizon = horizon;
  tr.origin.assign(static_cast<std::size_t>(dim), 0.0);
  const double step = horizon / (height + 1);
  tr.parent.push_back(-1);
  tr.depth.push_back(0);
  tr.birth_time.push_back(0.0);
  for (std::size_t v = 0; v < tr.parent.size(); ++v) {
    const int k = tr.depth[v];
    const bool branches = k < height;
    const double death = branches ? (k + 1) * step : horizon;
    tr.death_time.push_back(death);
    tr.position.insert(tr.position.end(), static_cast<std::size_t>(dim), 0.0);
    tr.decoration.emplace_back();
    if (!branches) {
      tr.first_child.push_back(-1);
      continue;
    }
    tr.first_child.push_back(static_cast<int>(tr.parent.size()));
    for (int c = 0; c < n_children; ++c) {
      tr.parent.push_back(static_cast<int>(v));
      tr.depth.push_back(k + 1);
      tr.birth_time.push_back(death);
    }
  }
  return tr;
}

namespace {

template <class LeafValue>
double back_propagate(const TimeLabelledTree& tree, const VotingKernel& kernel, LeafValue leaf_value) {
  if (tree.size() == 0) throw ArgumentError("root_vote_prob_exact: empty tree");
  if (kernel.n_children != tree.n_children && tree.size() > 1)
    throw ArgumentError("root_vote_prob_exact: kernel arity differs from tree");
  std::vector<double> q(tree.size());
  for (std::size_t i = tree.size(); i-- > 0;) {
    if (tree.is_leaf(i)) {
      const double p = leaf_value(i);
      if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("root_vote_prob_exact: leaf probability outside [0,1]");
      q[i] = p;
      continue;
    }
    const auto& deco = tree.decoration[i];
    if (kernel.requires_decoration && deco.empty())
      throw ArgumentError("root_vote_prob_exact: vertex " + to_string(tree.ulam(i)) + " has no decoration");
    q[i] = eval_multivariate_g(kernel, std::span<const double>(q.data() + tree.first_child[i], tree.n_children),
                               kernel.requires_decoration ? &deco : nullptr);
  }
  return q[0];
}

}  // namespace

double root_vote_prob_exact(const TimeLabelledTree& tree, const LeafProbFn& leaf_prob, const VotingKernel& kernel) {
  return back_propagate(tree, kernel, [&](std::size_t i) { return leaf_prob(tree.position_of(i)); });
}

double root_vote_prob_exact(const TimeLabelledTree& tree, const LeafProbFn& leaf_prob, const GFunction& g) {
  if (!g.kernel) throw ArgumentError("root_vote_prob_exact: g has no kernel");
  return root_vote_prob_exact(tree, leaf_prob, *g.kernel);
}

double root_vote_prob_exact(const TimeLabelledTree& tree, std::span<const double> leaf_probs,
                            const VotingKernel& kernel) {
  std::vector<int> slot(tree.size(), -1);
  int n = 0;
  for (std::size_t v = 0; v < tree.size(); ++v)
    if (tree.is_leaf(v)) slot[v] = n++;
  if (static_cast<std::size_t>(n) != leaf_probs.size())
    throw ArgumentError("root_vote_prob_exact: expected " + std::to_string(n) + " leaf probabilities");
  return back_propagate(tree, kernel, [&](std::size_t i) { return leaf_probs[static_cast<std::size_t>(slot[i])]; });
}

int sample_vote(const TimeLabelledTree& tree, std::span<const int> leaf_votes, const VotingKernel& kernel,
                std::uint64_t seed) {
  if (tree.size() == 0) throw ArgumentError("sample_vote: empty tree");
  std::vector<int> vote(tree.size(), -1);
  std::size_t next = 0;
  for (std::size_t v = 0; v < tree.size(); ++v) {
    if (!tree.is_leaf(v)) continue;
    if (next >= leaf_votes.size()) throw ArgumentError("sample_vote: missing leaf votes");
    const int b = leaf_votes[next++];
    if (b != 0 && b != 1) throw ArgumentError("sample_vote: leaf votes must be 0 or 1");
    vote[v] = b;
  }
  if (next != leaf_votes.size()) throw ArgumentError("sample_vote: more votes than leaves");
  Rng rng(seed);
  for (std::size_t i = tree.size(); i-- > 0;) {
    if (tree.is_leaf(i)) continue;
    VoteMask mask = 0;
    for (int c = 0; c < tree.n_children; ++c)
      if (vote[static_cast<std::size_t>(tree.first_child[i] + c)]) mask |= VoteMask{1} << c;
    const auto& deco = tree.decoration[i];
    if (kernel.requires_decoration && deco.empty()) throw ArgumentError("sample_vote: missing decoration");
    const double theta = kernel(mask, kernel.requires_decoration ? &deco : nullptr);
    vote[i] = uniform01(rng) < theta ? 1 : 0;
  }
  return vote[0];
}

void to_json(nlohmann::json& j, const VoteEstimate& e) {
  j = {{"value", e.value}, {"stderr", e.stderr},   {"stderr_empirical", e.stderr_empirical},
       {"n_samples", e.n_samples}, {"seed", e.seed}, {"t", e.t},
       {"x", e.x},         {"label", e.label}};
}

VoteEstimate estimate_vote_probability(const BranchingSpec& spec, const VotingKernel& kernel,
                                       std::span<const double> x, double t, const LeafProbFn& p,
                                       std::size_t n_samples, std::uint64_t seed, double population_budget) {
  if (n_samples == 0) throw ArgumentError("estimate_vote_probability: n_samples must be >= 1");
  if (kernel.n_children != spec.n_children) throw ArgumentError("estimate_vote_probability: kernel arity mismatch");
  const double expected = expected_population(spec, t);
  if (expected > population_budget) {
    std::ostringstream os;
    os << "estimate_vote_probability: expected population " << expected << " exceeds budget " << population_budget;
    throw ResourceError(os.str());
  }
  std::vector<double> q(n_samples);
  parallel_for(chunk_count(n_samples), [&](std::size_t c) {
    const std::size_t hi = std::min(n_samples, (c + 1) * kChunkSize);
    for (std::size_t i = c * kChunkSize; i < hi; ++i) {
      const auto tree = simulate_tree(spec, x, t, derive_seed(seed, i), population_budget);
      q[i] = root_vote_prob_exact(tree, p, kernel);
    }
  });
  double sum = 0.0;
  for (double v : q) sum += v;
  const double n = static_cast<double>(n_samples);
  VoteEstimate e;
  e.value = sum / n;
  double ss = 0.0;
  for (double v : q) ss += (v - e.value) * (v - e.value);
  e.stderr = std::sqrt(std::max(0.0, e.value * (1.0 - e.value)) / n);
  e.stderr_empirical = n_samples > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  e.n_samples = n_samples;
  e.seed = seed;
  e.t = t;
  e.x.assign(x.begin(), x.end());
  e.label = spec.label;
  return e;
}

TreeShapeStats tree_shape_stats(const TimeLabelledTree& tree) {
  TreeShapeStats s;
  if (tree.size() == 0) return s;
  int min_leaf = std::numeric_limits<int>::max(), max_leaf = 0;
  for (std::size_t v = 0; v < tree.size(); ++v) {
    if (!tree.is_leaf(v)) continue;
    min_leaf = std::min(min_leaf, tree.depth[v]);
    max_leaf = std::max(max_leaf, tree.depth[v]);
    double r2 = 0.0;
    auto x = tree.position_of(v);
    for (int i = 0; i < tree.dim; ++i) r2 += (x[i] - tree.origin[i]) * (x[i] - tree.origin[i]);
    s.max_displacement_from_root = std::max(s.max_displacement_from_root, std::sqrt(r2));
  }
  s.contains_regular_height = min_leaf;
  s.contained_in_regular_height = max_leaf;
  return s;
}

nlohmann::json tree_to_json(const TimeLabelledTree& tree) {
  nlohmann::json vs = nlohmann::json::array();
  for (std::size_t v = 0; v < tree.size(); ++v) {
    auto x = tree.position_of(v);
    vs.push_back({{"index", v},
                  {"ulam", tree.ulam(v)},
                  {"parent", tree.parent[v]},
                  {"birth_time", tree.birth_time[v]},
                  {"death_time", tree.death_time[v]},
                  {"position", std::vector<double>(x.begin(), x.end())},
                  {"decoration", tree.decoration[v]}});
  }
  return {{"schema", "mcflab.tree/1"}, {"n_children", tree.n_children}, {"dim", tree.dim},
          {"horizon", tree.horizon},   {"origin", tree.origin},         {"vertices", vs}};
}

TimeLabelledTree tree_from_json(const nlohmann::json& j) {
  try {
    TimeLabelledTree tr;
    tr.n_children = j.at("n_children").get<int>();
    tr.dim = j.at("dim").get<int>();
    tr.horizon = j.at("horizon").get<double>();
    tr.origin = j.at("origin").get<Point>();
    const auto& vs = j.at("vertices");
    const std::size_t n = vs.size();
    tr.first_child.assign(n, -1);
    for (std::size_t v = 0; v < n; ++v) {
      const auto& r = vs[v];
      if (r.at("index").get<std::size_t>() != v) throw ArgumentError("tree json: vertices out of order");
      const int p = r.at("parent").get<int>();
      tr.parent.push_back(p);
      tr.depth.push_back(p < 0 ? 0 : tr.depth.at(static_cast<std::size_t>(p)) + 1);
      if (p >= 0 && tr.first_child.at(static_cast<std::size_t>(p)) < 0) tr.first_child[static_cast<std::size_t>(p)] = static_cast<int>(v);
      tr.birth_time.push_back(r.at("birth_time").get<double>());
      tr.death_time.push_back(r.at("death_time").get<double>());
      const auto x = r.at("position").get<Point>();
      if (static_cast<int>(x.size()) != tr.dim) throw ArgumentError("tree json: position dimension mismatch");
      tr.position.insert(tr.position.end(), x.begin(), x.end());
      tr.decoration.push_back(r.at("decoration").get<Decoration>());
    }
    tr.validate();
    return tr;
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("tree json: ") + e.what());
  }
}

}  // namespace mcflab
