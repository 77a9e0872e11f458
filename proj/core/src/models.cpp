#include "mcflab/models.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "mcflab/errors.hpp"

namespace mcflab {

namespace {

void fill_report(ModelBundle& m) {
  if (!m.g.report) m.g.report = verify_g_axioms(m.g);
}

// Continuous-time nearest-neighbour walk on mesh·Z^dim with every coordinate
// jumping at rate mesh⁻² (total rate dim·mesh⁻², per-coordinate variance 1 per unit time).
MotionFn lattice_walk(double mesh) {
  const double rate = 1.0 / (mesh * mesh);
  return [mesh, rate](std::span<double> x, double duration, Rng& rng) {
    std::poisson_distribution<std::int64_t> jumps(rate * duration);
    for (double& xi : x) {
      const std::int64_t n = jumps(rng);
      if (n == 0) continue;
      const std::int64_t up = std::binomial_distribution<std::int64_t>(n, 0.5)(rng);
      xi += mesh * static_cast<double>(2 * up - n);
    }
  };
}

double resolve_mesh(double mesh, double epsilon) {
  const double m = mesh > 0.0 ? mesh : epsilon * epsilon * epsilon;
  if (!(m > 0.0)) throw ArgumentError("mesh must be positive");
  return m;
}

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ArgumentError("epsilon must lie in (0,1]");
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

Equilibria equilibria_from_report(const GAxiomReport& r) { return {r.a, r.mu, r.b}; }

}  // namespace

nlohmann::json describe_bundle(const ModelBundle& m) {
  nlohmann::json j;
  j["name"] = m.name;
  j["parameters"] = m.parameters;
  j["spec"] = {{"dim", m.spec.dim},
               {"n_children", m.spec.n_children},
               {"branch_rate", m.spec.branch_rate},
               {"epsilon", m.spec.epsilon},
               {"dispersal_bound", m.spec.dispersal_bound},
               {"diffusivity", m.spec.diffusivity},
               {"label", m.spec.label}};
  j["kernel"] = m.kernel.label;
  j["equilibria"] = {{"a", m.equilibria.a}, {"mu", m.equilibria.mu}, {"b", m.equilibria.b}};
  j["g"] = m.g;
  j["scaling_notes"] = m.scaling_notes;
  j["flags"] = m.flags;
  return j;
}

ModelBundle ternary_bbm(double epsilon, int dim) {
  check_epsilon(epsilon);
  if (dim < 1) throw ArgumentError("ternary_bbm: dim must be >= 1");
  ModelBundle m;
  m.name = "ternary_bbm";
  m.spec = brownian_spec(dim, 3, 1.0 / (epsilon * epsilon), "ternary_bbm");
  m.spec.epsilon = epsilon;
  m.kernel = majority_kernel();
  m.g = majority_g();
  fill_report(m);
  m.equilibria = {0.0, 0.5, 1.0};
  m.parameters = {{"epsilon", epsilon}, {"dim", dim}};
  m.scaling_notes = "Brownian motion with generator Δ/2, ternary branching at rate ε⁻², children at the parent";
  return m;
}

ModelBundle slfv_dual(const SlfvParams& p) {
  check_epsilon(p.epsilon_n);
  if (!(p.beta > 0.0 && p.beta < 1.0 / 3.0)) throw ArgumentError("slfv_dual: beta must lie in (0,1/3)");
  if (!(p.n > 1.0)) throw ArgumentError("slfv_dual: n must exceed 1");
  if (!(p.R > 0.0) || !(p.gamma > 0.0)) throw ArgumentError("slfv_dual: R and gamma must be positive");
  if (p.dim < 1) throw ArgumentError("slfv_dual: dim must be >= 1");
  std::vector<double> radii, weights;
  for (const auto& a : p.radii) {
    if (!(a.radius > 0.0 && a.radius <= p.R)) throw ArgumentError("slfv_dual: radii must lie in (0,R]");
    if (!(a.weight >= 0.0)) throw ArgumentError("slfv_dual: negative radius weight");
    if (a.weight > 0.0) {
      radii.push_back(a.radius);
      weights.push_back(a.weight);
    }
  }
  if (radii.empty()) throw ArgumentError("slfv_dual: empty radius measure");
  const double scale = std::pow(p.n, -p.beta);
  const int d = p.dim;
  // A coordinate of the difference of two uniform points in a ball of radius ρ
  // has variance 2ρ²/(d+2); the event rate makes the lineage variance 1 per unit time.
  double total = 0.0, second = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    total += weights[i];
    second += weights[i] * 2.0 * std::pow(scale * radii[i], 2) / (d + 2.0);
  }
  second /= total;
  const double event_rate = 1.0 / second;
  auto radius_law = std::make_shared<std::discrete_distribution<int>>(weights.begin(), weights.end());
  auto uniform_ball = [d](Rng& rng, double rho, double* out) {
    double r2;
    do {
      r2 = 0.0;
      for (int i = 0; i < d; ++i) {
        out[i] = 2.0 * uniform01(rng) - 1.0;
        r2 += out[i] * out[i];
      }
    } while (r2 > 1.0);
    for (int i = 0; i < d; ++i) out[i] *= rho;
  };

  ModelBundle m;
  m.name = "slfv";
  m.spec.dim = d;
  m.spec.n_children = 3;
  m.spec.branch_rate = p.gamma / (p.epsilon_n * p.epsilon_n);
  m.spec.epsilon = p.epsilon_n;
  m.spec.label = "slfv";
  m.spec.dispersal_bound = 2.0 * scale * p.R;
  m.spec.diffusivity = 1.0;
  m.spec.motion = [=](std::span<double> x, double duration, Rng& rng) {
    const auto events = std::poisson_distribution<std::int64_t>(event_rate * duration)(rng);
    std::vector<double> u(static_cast<std::size_t>(d)), v(static_cast<std::size_t>(d));
    auto law = *radius_law;
    for (std::int64_t e = 0; e < events; ++e) {
      const double rho = scale * radii[static_cast<std::size_t>(law(rng))];
      uniform_ball(rng, rho, u.data());
      uniform_ball(rng, rho, v.data());
      for (int i = 0; i < d; ++i) x[i] += u[i] - v[i];
    }
  };
  m.spec.dispersal = [=](std::span<const double> parent, std::span<double> children, Decoration&, Rng& rng) {
    auto law = *radius_law;
    const double rho = scale * radii[static_cast<std::size_t>(law(rng))];
    std::vector<double> u(static_cast<std::size_t>(d));
    for (int c = 0; c < 3; ++c) {
      uniform_ball(rng, rho, u.data());
      for (int i = 0; i < d; ++i) children[c * d + i] = parent[i] + u[i];
    }
  };
  m.kernel = majority_kernel();
  m.g = majority_g();
  fill_report(m);
  m.equilibria = {0.0, 0.5, 1.0};
  nlohmann::json rj = nlohmann::json::array();
  for (const auto& a : p.radii) rj.push_back({{"radius", a.radius}, {"weight", a.weight}});
  m.parameters = {{"n", p.n},       {"beta", p.beta}, {"R", p.R},          {"radii", rj},
                  {"epsilon_n", p.epsilon_n}, {"gamma", p.gamma}, {"dim", p.dim}};
  if (p.epsilon_n * std::sqrt(std::log(p.n)) < 1.0)
    m.flags.push_back("epsilon_n*sqrt(log n) = " + fmt(p.epsilon_n * std::sqrt(std::log(p.n))) + " is not large");
  m.scaling_notes = "lineage jumps are differences of two uniform points in a ball of radius n^-beta r at rate " +
                    fmt(event_rate) + " (unit per-coordinate variance); ternary branching at rate gamma/eps_n^2";
  return m;
}

PartitionDistribution lv_escape_distribution(int L, int dim, double horizon, std::size_t n_samples,
                                             std::uint64_t seed) {
  if (L < 1) throw ArgumentError("lv_escape: L must be >= 1");
  auto start = [L, dim](Rng& rng) {
    LatticeOffsets s{std::vector<int>(static_cast<std::size_t>(dim), 0)};
    auto kids = sample_box_sites(L, dim, 2, false, false, rng);
    s.insert(s.end(), kids.begin(), kids.end());
    return s;
  };
  return random_start_partition_distribution(3, dim, start, horizon, static_cast<double>(dim), n_samples, seed);
}

double lv_escape_probability(int L, int dim, double horizon, std::size_t n_samples, std::uint64_t seed) {
  return lv_escape_distribution(L, dim, horizon, n_samples, seed).singleton_weight();
}

ModelBundle lotka_volterra_dual(const LatticeParams& p) {
  check_epsilon(p.epsilon);
  if (p.L < 1) throw ArgumentError("lotka_volterra_dual: L must be >= 1");
  if (p.dim < 1) throw ArgumentError("lotka_volterra_dual: dim must be >= 1");
  const double mesh = resolve_mesh(p.mesh, p.epsilon);
  const auto escape = lv_escape_distribution(p.L, p.dim, p.partition_horizon, p.partition_samples, p.seed);
  const double p3 = escape.singleton_weight();
  if (!(p3 > 0.0)) throw ArgumentError("lotka_volterra_dual: estimated p3 is zero");
  const int L = p.L, d = p.dim;

  ModelBundle m;
  m.name = "lotka_volterra";
  m.spec.dim = d;
  m.spec.n_children = 3;
  m.spec.branch_rate = p3 / (p.epsilon * p.epsilon);
  m.spec.epsilon = p.epsilon;
  m.spec.label = "lotka_volterra";
  m.spec.dispersal_bound = L * mesh;
  m.spec.diffusivity = 1.0;
  m.spec.motion = lattice_walk(mesh);
  m.spec.dispersal = [L, d, mesh](std::span<const double> parent, std::span<double> children, Decoration&,
                                  Rng& rng) {
    std::uniform_int_distribution<int> coord(-L, L);
    for (int i = 0; i < d; ++i) children[i] = parent[i];
    for (int c = 1; c < 3; ++c)
      for (int i = 0; i < d; ++i) children[c * d + i] = parent[i] + mesh * coord(rng);
  };
  m.kernel = majority_kernel();
  m.g = majority_g();
  fill_report(m);
  m.equilibria = {0.0, 0.5, 1.0};
  m.parameters = {{"epsilon", p.epsilon},
                  {"L", p.L},
                  {"dim", p.dim},
                  {"mesh", mesh},
                  {"p3", p3},
                  {"p3_stderr", std::sqrt(p3 * (1 - p3) / static_cast<double>(p.partition_samples))},
                  {"p3_cutoff", escape.cutoff_used},
                  {"partition_samples", p.partition_samples},
                  {"seed", p.seed}};
  if (d < 3) m.flags.push_back("dim < 3: lineages are recurrent, theory not covered");
  m.scaling_notes = "nearest-neighbour walk on mesh*Z^d at total rate d/mesh^2; mesh decoupled from epsilon "
                    "(default epsilon^3); ternary branching at rate p3/eps^2 with p3 = " + fmt(p3);
  return m;
}

namespace {

// Decoration of a nonlinear-voter branching: the 4 offspring offsets
// (4·dim lattice coordinates) followed by two 32-bit halves of a partition seed.
VotingKernel nlv_decorated_kernel(const NlvRates& rates, int dim, double horizon) {
  VotingKernel k;
  k.n_children = 5;
  k.requires_decoration = true;
  k.is_deterministic = false;
  k.label = "nonlinear_voter_partition";
  k.theta = [rates, dim, horizon](VoteMask votes, const Decoration* deco) {
    const std::size_t want = static_cast<std::size_t>(4 * dim + 2);
    if (deco == nullptr || deco->size() != want) throw ArgumentError("nonlinear voter kernel: malformed decoration");
    thread_local Decoration cached_key;
    thread_local MarkedPartition cached;
    if (*deco != cached_key) {
      LatticeOffsets start{std::vector<int>(static_cast<std::size_t>(dim), 0)};
      for (int c = 0; c < 4; ++c)
        start.emplace_back(deco->begin() + c * dim, deco->begin() + (c + 1) * dim);
      const auto lo = static_cast<std::uint32_t>((*deco)[want - 2]);
      const auto hi = static_cast<std::uint32_t>((*deco)[want - 1]);
      Rng rng((static_cast<std::uint64_t>(hi) << 32) | lo);
      cached = sample_marks(sample_coalescence_blocks(start, dim, horizon, static_cast<double>(dim), rng), rng);
      cached_key = *deco;
    }
    return theta_pi(cached, votes, rates);
  };
  return k;
}

}  // namespace

ModelBundle nonlinear_voter_dual(const LatticeParams& p, const NlvRates& rates) {
  check_epsilon(p.epsilon);
  if (p.L < 1) throw ArgumentError("nonlinear_voter_dual: L must be >= 1");
  if (p.dim < 1) throw ArgumentError("nonlinear_voter_dual: dim must be >= 1");
  const double mesh = resolve_mesh(p.mesh, p.epsilon);
  GFunction g = gbar(p.L, p.dim, p.partition_horizon, rates, p.partition_samples, p.seed);
  const double cutoff = g.metadata.at("cutoff_used").get<double>();
  const int L = p.L, d = p.dim;

  ModelBundle m;
  m.name = "nonlinear_voter";
  m.spec.dim = d;
  m.spec.n_children = 5;
  m.spec.branch_rate = 1.0 / (p.epsilon * p.epsilon);
  m.spec.epsilon = p.epsilon;
  m.spec.label = "nonlinear_voter";
  m.spec.dispersal_bound = L * mesh;
  m.spec.diffusivity = 1.0;
  m.spec.motion = lattice_walk(mesh);
  m.spec.dispersal = [L, d, mesh](std::span<const double> parent, std::span<double> children, Decoration& deco,
                                  Rng& rng) {
    const auto offsets = nlv_offspring_offsets(L, d, rng);
    deco.clear();
    for (int c = 0; c < 5; ++c)
      for (int i = 0; i < d; ++i) {
        children[c * d + i] = parent[i] + mesh * offsets[c][i];
        if (c > 0) deco.push_back(offsets[c][i]);
      }
    const std::uint64_t tag = rng();
    deco.push_back(static_cast<std::int32_t>(static_cast<std::uint32_t>(tag)));
    deco.push_back(static_cast<std::int32_t>(static_cast<std::uint32_t>(tag >> 32)));
  };
  m.kernel = *g.kernel;
  m.decorated_kernel = nlv_decorated_kernel(rates, d, cutoff);
  m.flags = nlv_condition_flags(rates);
  if (d < 3) m.flags.push_back("dim < 3: lineages are recurrent, theory not covered");
  m.g = std::move(g);
  fill_report(m);
  if (!m.g.report->passes.at("g.1")) m.flags.push_back("gbar does not have three fixed points");
  m.equilibria = equilibria_from_report(*m.g.report);
  m.parameters = {{"epsilon", p.epsilon},
                  {"L", p.L},
                  {"dim", p.dim},
                  {"mesh", mesh},
                  {"rates", {{"a1", rates.a1}, {"a2", rates.a2}, {"a3", rates.a3}, {"a4", rates.a4}}},
                  {"partition_horizon", std::isfinite(p.partition_horizon) ? nlohmann::json(p.partition_horizon)
                                                                           : nlohmann::json("infinite")},
                  {"partition_cutoff", cutoff},
                  {"partition_samples", p.partition_samples},
                  {"seed", p.seed}};
  m.scaling_notes = "5-ary branching at rate eps^-2; nearest-neighbour walk on mesh*Z^d at total rate d/mesh^2; "
                    "kernel is the partition average of Theta_pi (decorated per-event kernel available); "
                    "partition horizon stands in for eta^-3/2";
  return m;
}

ModelBundle sexual_reproduction_dual(double epsilon, int dim, double mesh_in) {
  check_epsilon(epsilon);
  if (dim < 2) throw ArgumentError("sexual_reproduction_dual: dim must be >= 2");
  const double mesh = resolve_mesh(mesh_in, epsilon);
  const int d = dim;
  ModelBundle m;
  m.name = "sexual_reproduction";
  m.spec.dim = d;
  m.spec.n_children = 3;
  m.spec.branch_rate = 1.0 / (epsilon * epsilon);
  m.spec.epsilon = epsilon;
  m.spec.label = "sexual_reproduction";
  m.spec.dispersal_bound = mesh;
  m.spec.diffusivity = 1.0;
  m.spec.motion = lattice_walk(mesh);
  m.spec.dispersal = [d, mesh](std::span<const double> parent, std::span<double> children, Decoration&, Rng& rng) {
    std::uniform_int_distribution<int> axis(0, d - 1);
    for (int i = 0; i < d; ++i) children[i] = parent[i];
    for (int c = 1; c < 3; ++c) {
      for (int i = 0; i < d; ++i) children[c * d + i] = parent[i];
      children[c * d + axis(rng)] += (rng() & 1u) ? mesh : -mesh;
    }
  };
  m.kernel = sexual_reproduction_kernel();
  m.g = sexual_reproduction_g();
  fill_report(m);
  m.equilibria = {0.0, 1.0 / 3.0, 2.0 / 3.0};
  m.parameters = {{"epsilon", epsilon}, {"dim", dim}, {"mesh", mesh}};
  m.scaling_notes = "nearest-neighbour walk at total rate d/mesh^2 (generator Δ/2 in the limit); ternary branching "
                    "at rate eps^-2 with two children on neighbouring sites; exchangeable Bernstein kernel "
                    "(0, 3/11, 9/11, 9/11)";
  return m;
}

std::vector<std::string> model_names() {
  return {"ternary_bbm", "slfv", "lotka_volterra", "nonlinear_voter", "sexual_reproduction"};
}

namespace {

class Params {
 public:
  Params(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": parameters must be an object");
  }
  template <class T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where_ + "." + key + ": wrong type");
    }
  }
  const nlohmann::json* raw(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

double horizon_param(Params& ps, const std::string& key, double fallback) {
  const auto* v = ps.raw(key);
  if (!v) return fallback;
  if (v->is_string() && v->get<std::string>() == "infinite") return kInfiniteHorizon;
  if (v->is_number()) return v->get<double>();
  throw ConfigError("model." + key + ": expected a number or \"infinite\"");
}

}  // namespace

ModelBundle make_bundle(const std::string& name, const nlohmann::json& params) {
  Params ps(params, "model");
  try {
    if (name == "ternary_bbm") {
      const double eps = ps.get("epsilon", 0.25);
      const int dim = ps.get("dim", 2);
      ps.finish();
      return ternary_bbm(eps, dim);
    }
    if (name == "slfv") {
      SlfvParams p;
      p.n = ps.get("n", p.n);
      p.beta = ps.get("beta", p.beta);
      p.R = ps.get("R", p.R);
      p.epsilon_n = ps.get("epsilon_n", p.epsilon_n);
      p.gamma = ps.get("gamma", p.gamma);
      p.dim = ps.get("dim", p.dim);
      if (const auto* r = ps.raw("radii")) {
        p.radii.clear();
        for (const auto& a : *r) {
          for (const auto& [k, v] : a.items())
            if (k != "radius" && k != "weight") throw ConfigError("model.radii: unknown key '" + k + "'");
          p.radii.push_back({a.at("radius").get<double>(), a.value("weight", 1.0)});
        }
      }
      ps.finish();
      return slfv_dual(p);
    }
    if (name == "lotka_volterra" || name == "nonlinear_voter") {
      LatticeParams p;
      p.epsilon = ps.get("epsilon", p.epsilon);
      p.L = ps.get("L", p.L);
      p.dim = ps.get("dim", p.dim);
      p.mesh = ps.get("mesh", p.mesh);
      p.partition_horizon = horizon_param(ps, "partition_horizon", p.partition_horizon);
      p.partition_samples = ps.get<std::size_t>("partition_samples", p.partition_samples);
      p.seed = ps.get<std::uint64_t>("seed", p.seed);
      if (name == "lotka_volterra") {
        ps.finish();
        return lotka_volterra_dual(p);
      }
      NlvRates r;
      if (const auto* rj = ps.raw("rates")) {
        Params rp(*rj, "model.rates");
        r.a1 = rp.get("a1", r.a1);
        r.a2 = rp.get("a2", r.a2);
        r.a3 = rp.get("a3", r.a3);
        r.a4 = rp.get("a4", r.a4);
        rp.finish();
      }
      ps.finish();
      return nonlinear_voter_dual(p, r);
    }
    if (name == "sexual_reproduction") {
      const double eps = ps.get("epsilon", 0.25);
      const int dim = ps.get("dim", 2);
      const double mesh = ps.get("mesh", 0.0);
      ps.finish();
      return sexual_reproduction_dual(eps, dim, mesh);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model parameters: ") + e.what());
  }
  throw ConfigError("unknown model '" + name + "'");
}

std::vector<double> voter_forward_oracle(int lattice_size, int dim, const SiteProbFn& p0, double t,
                                         std::size_t n_samples, std::uint64_t seed) {
  if (lattice_size < 2 || dim < 1) throw ArgumentError("voter_forward_oracle: need lattice_size >= 2, dim >= 1");
  if (!(t >= 0.0)) throw ArgumentError("voter_forward_oracle: t must be >= 0");
  if (n_samples == 0) throw ArgumentError("voter_forward_oracle: n_samples must be positive");
  const double sites_d = std::pow(static_cast<double>(lattice_size), dim);
  if (sites_d > 1e6) throw ResourceError("voter_forward_oracle: lattice_size^dim exceeds 1e6");
  const auto sites = static_cast<std::size_t>(sites_d);
  std::vector<std::size_t> stride(static_cast<std::size_t>(dim));
  for (int i = dim - 1, s = 1; i >= 0; --i, s *= lattice_size) stride[static_cast<std::size_t>(i)] = static_cast<std::size_t>(s);
  std::vector<double> init(sites);
  std::vector<int> coord(static_cast<std::size_t>(dim));
  for (std::size_t x = 0; x < sites; ++x) {
    std::size_t r = x;
    for (int i = 0; i < dim; ++i) {
      coord[static_cast<std::size_t>(i)] = static_cast<int>(r / stride[static_cast<std::size_t>(i)]);
      r %= stride[static_cast<std::size_t>(i)];
    }
    const double q = p0(coord);
    if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("voter_forward_oracle: p0 outside [0,1]");
    init[x] = q;
  }
  const std::size_t chunks = chunk_count(n_samples);
  std::vector<std::vector<std::uint32_t>> partial(chunks, std::vector<std::uint32_t>(sites, 0));
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng = make_rng(seed, c);
    std::vector<std::uint8_t> state(sites);
    std::uniform_int_distribution<std::size_t> pick_site(0, sites - 1);
    std::uniform_int_distribution<int> pick_dir(0, 2 * dim - 1);
    const std::size_t hi = std::min(n_samples, (c + 1) * kChunkSize);
    auto& acc = partial[c];
    for (std::size_t s = c * kChunkSize; s < hi; ++s) {
      for (std::size_t x = 0; x < sites; ++x) state[x] = uniform01(rng) < init[x] ? 1 : 0;
      const auto events = std::poisson_distribution<std::int64_t>(static_cast<double>(sites) * t)(rng);
      for (std::int64_t e = 0; e < events; ++e) {
        const std::size_t x = pick_site(rng);
        const int dir = pick_dir(rng);
        const auto axis = static_cast<std::size_t>(dir / 2);
        const std::size_t st = stride[axis];
        const std::size_t pos = (x / st) % static_cast<std::size_t>(lattice_size);
        std::size_t y;
        if (dir % 2 == 0)
          y = pos + 1 == static_cast<std::size_t>(lattice_size) ? x - pos * st : x + st;
        else
          y = pos == 0 ? x + (static_cast<std::size_t>(lattice_size) - 1) * st : x - st;
        state[x] = state[y];
      }
      for (std::size_t x = 0; x < sites; ++x) acc[x] += state[x];
    }
  });
  std::vector<double> out(sites, 0.0);
  for (const auto& a : partial)
    for (std::size_t x = 0; x < sites; ++x) out[x] += a[x];
  for (double& v : out) v /= static_cast<double>(n_samples);
  return out;
}

double voter_dual_marginal(int lattice_size, int dim, const SiteProbFn& p0, std::span<const int> x, double t) {
  if (static_cast<int>(x.size()) != dim) throw ArgumentError("voter_dual_marginal: dimension mismatch");
  const double sites_d = std::pow(static_cast<double>(lattice_size), dim);
  if (sites_d > 1e6) throw ResourceError("voter_dual_marginal: lattice_size^dim exceeds 1e6");
  // Each coordinate of the walk is a Skellam variable: P[K = k] = e^{-t/d} I_k(t/d), wrapped on the torus.
  const double lam = t / dim;
  std::vector<double> wrapped(static_cast<std::size_t>(lattice_size), 0.0);
  if (lam == 0.0) {
    wrapped[0] = 1.0;
  } else {
    for (int k = 0;; ++k) {
      const double pk = std::exp(-lam) * std::cyl_bessel_i(static_cast<double>(k), lam);
      wrapped[static_cast<std::size_t>(k % lattice_size)] += pk;
      if (k > 0) wrapped[static_cast<std::size_t>((lattice_size - k % lattice_size) % lattice_size)] += pk;
      if (k > lam && pk < 1e-18) break;
    }
  }
  double total = 0.0;
  std::vector<int> k(static_cast<std::size_t>(dim), 0), site(static_cast<std::size_t>(dim));
  while (true) {
    double w = 1.0;
    for (int i = 0; i < dim; ++i) {
      w *= wrapped[static_cast<std::size_t>(k[static_cast<std::size_t>(i)])];
      site[static_cast<std::size_t>(i)] = ((x[i] + k[static_cast<std::size_t>(i)]) % lattice_size + lattice_size) % lattice_size;
    }
    if (w > 0.0) total += w * p0(site);
    int i = dim - 1;
    while (i >= 0 && ++k[static_cast<std::size_t>(i)] == lattice_size) k[static_cast<std::size_t>(i--)] = 0;
    if (i < 0) break;
  }
  return total;
}

}  // namespace mcflab
