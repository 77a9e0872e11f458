#include "mcflab/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "mcflab/errors.hpp"
#include "mcflab/onedim.hpp"

namespace mcflab {

void CheckReport::finish() {
  pass = statistic <= threshold;
  for (const auto& [name, ok] : conditions) pass = pass && ok;
}

void to_json(nlohmann::json& j, const CheckReport& r) {
  j = {{"name", r.name},
       {"property", r.property},
       {"inputs", r.inputs},
       {"statistic", std::isfinite(r.statistic) ? nlohmann::json(r.statistic) : nlohmann::json(nullptr)},
       {"threshold", r.threshold},
       {"pass", r.pass},
       {"conditions", r.conditions},
       {"budget", r.budget},
       {"details", r.details},
       {"seed", r.seed},
       {"runtime_seconds", r.runtime_seconds}};
}

namespace {

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

VoteEstimate estimate(const ModelBundle& m, const Point& x, double t, const LeafProbFn& p, std::size_t n,
                      std::uint64_t seed) {
  return estimate_vote_probability(m.spec, m.kernel, x, t, p, n, seed);
}

LeafProbFn field_data(const ScalarField& f) {
  return [&f](std::span<const double> y) { return std::clamp(f.interpolate(y), 0.0, 1.0); };
}

double gamma_of(const ModelBundle& m) { return m.spec.branch_rate * m.spec.epsilon * m.spec.epsilon; }

void check_dim(const ModelBundle& m, const ScalarField& f, const char* who) {
  if (f.dim != m.spec.dim) throw ArgumentError(std::string(who) + ": field and model dimensions differ");
}

// Indices picked evenly along `order` (already sorted by preference).
std::vector<std::size_t> spread(const std::vector<std::size_t>& order, std::size_t n) {
  std::vector<std::size_t> out;
  if (order.empty() || n == 0) return out;
  if (order.size() <= n) return order;
  for (std::size_t j = 0; j < n; ++j) out.push_back(order[j * (order.size() - 1) / (n - 1 == 0 ? 1 : n - 1)]);
  return out;
}

double gradient_norm(const ScalarField& f, std::size_t node) {
  std::vector<double> g(static_cast<std::size_t>(f.dim));
  field_gradient(f, node, g);
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

}  // namespace

BundleFactory bundle_factory(const std::string& name, const nlohmann::json& params) {
  const std::string key = name == "slfv" ? "epsilon_n" : "epsilon";
  make_bundle(name, params);  // validates the block once
  return [name, params, key](double epsilon) {
    auto p = params;
    p[key] = epsilon;
    return make_bundle(name, p);
  };
}

LeafProbFn phase_data(const ScalarField& phi, double a, double b, double delta) {
  return [&phi, a, b, delta](std::span<const double> y) { return phi.interpolate(y) <= 0.0 ? a + delta : b; };
}

LeafProbFn half_space_data(double a, double b) {
  return [a, b](std::span<const double> y) { return y[0] < 0.0 ? a : b; };
}

CheckReport check_semigroup(const ModelBundle& bundle, const Point& x, double t, double h, const LeafProbFn& p,
                            const ScalarField& grid, std::size_t n_outer, std::size_t n_inner,
                            std::uint64_t seed) {
  Stopwatch clock;
  check_dim(bundle, grid, "check_semigroup");
  if (!(t >= 0.0 && h >= 0.0) || n_outer == 0 || n_inner == 0) throw ArgumentError("check_semigroup: bad arguments");
  for (int k = 0; k < grid.dim; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double lo = grid.origin[ku], hi = lo + grid.spacing * static_cast<double>(grid.extents[ku] - 1);
    const double reach = 4.0 * std::sqrt(h * bundle.spec.diffusivity) + bundle.spec.dispersal_bound;
    if (x[ku] - reach < lo || x[ku] + reach > hi)
      throw ArgumentError("check_semigroup: grid does not cover the reach of x within time h");
  }
  CheckReport r;
  r.name = "semigroup";
  r.property = "J1 semigroup";
  r.seed = seed;
  r.inputs = {{"model", bundle.name}, {"x", x}, {"t", t}, {"h", h}, {"grid_nodes", grid.size()},
              {"grid_spacing", grid.spacing}, {"n_outer", n_outer}, {"n_inner", n_inner}};

  ScalarField qhat = grid;
  std::vector<double> inner_se(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto e = estimate(bundle, grid.coordinate(i), t, p, n_inner, derive_seed(seed, 1, i));
    qhat.values[i] = e.value;
    inner_se[i] = e.stderr;
  }
  const auto two = estimate(bundle, x, h, field_data(qhat), n_outer, derive_seed(seed, 2));
  const auto direct = estimate(bundle, x, t + h, p, n_outer, derive_seed(seed, 3));

  // Noise-corrected Lipschitz estimate of the grid profile.
  double lip = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (int k = 0; k < grid.dim; ++k) {
      const std::size_t s = grid.stride(k);
      if ((i / s) % grid.extents[static_cast<std::size_t>(k)] + 1 >= grid.extents[static_cast<std::size_t>(k)]) continue;
      const double diff = std::fabs(qhat.values[i + s] - qhat.values[i]);
      const double noise = 4.0 * std::hypot(inner_se[i], inner_se[i + s]);
      lip = std::max(lip, std::max(diff - noise, 0.0) / grid.spacing);
    }
  const double interp = grid.spacing * lip;

  // Inner errors enter through the voting recursion; its sensitivity is bounded
  // by sup|g'| per generation over ⌈(N₀−1)·rate·h⌉ + 1 generations.
  double gprime = 1.0;
  for (int i = 0; i <= 200; ++i) gprime = std::max(gprime, std::fabs(g_derivative(bundle.g, i / 200.0)));
  const int gens = static_cast<int>(std::ceil((bundle.spec.n_children - 1) * bundle.spec.branch_rate * h)) + 1;
  const double sensitivity = std::pow(gprime, gens);
  const double inner_mean = std::accumulate(inner_se.begin(), inner_se.end(), 0.0) / static_cast<double>(inner_se.size());
  const double combined = std::sqrt(direct.stderr * direct.stderr + two.stderr * two.stderr +
                                    sensitivity * sensitivity * inner_mean * inner_mean);

  r.statistic = std::fabs(two.value - direct.value);
  r.threshold = 4.0 * combined + interp;
  r.budget = {{"stderr_direct", direct.stderr}, {"stderr_two_stage", two.stderr}, {"stderr_inner_mean", inner_mean},
              {"inner_sensitivity", sensitivity}, {"combined_stderr", combined}, {"interpolation", interp},
              {"profile_lipschitz", lip}};
  r.details = {{"direct", direct.value}, {"two_stage", two.value}};
  r.finish();
  r.runtime_seconds = clock.seconds();
  return r;
}

CheckReport check_monotonicity(const ModelBundle& bundle, const LeafProbFn& p_low, const LeafProbFn& p_high,
                               const std::vector<Point>& points, double t, std::size_t n_samples,
                               std::uint64_t seed) {
  Stopwatch clock;
  if (points.empty()) throw ArgumentError("check_monotonicity: no points");
  CheckReport r;
  r.name = "monotonicity";
  r.property = "J2 monotonicity";
  r.seed = seed;
  r.inputs = {{"model", bundle.name}, {"points", points}, {"t", t}, {"n_samples", n_samples}};
  r.statistic = -std::numeric_limits<double>::infinity();
  r.threshold = 0.0;
  auto rows = nlohmann::json::array();
  bool data_ordered = true;
  for (std::size_t i = 0; i < points.size(); ++i) {
    data_ordered = data_ordered && p_low(points[i]) <= p_high(points[i]);
    const auto lo = estimate(bundle, points[i], t, p_low, n_samples, derive_seed(seed, i));
    const auto hi = estimate(bundle, points[i], t, p_high, n_samples, derive_seed(seed, i));
    const double margin = lo.value - hi.value - 4.0 * (lo.stderr + hi.stderr);
    r.statistic = std::max(r.statistic, margin);
    rows.push_back({{"x", points[i]}, {"low", lo.value}, {"high", hi.value}, {"stderr_low", lo.stderr},
                    {"stderr_high", hi.stderr}});
  }
  r.conditions["data_ordered_at_points"] = data_ordered;
  r.budget = {{"slack", "4 * (stderr_low + stderr_high)"}};
  r.details = {{"points", rows}};
  r.finish();
  r.runtime_seconds = clock.seconds();
  return r;
}

CheckReport check_equilibria(const ModelBundle& bundle, const std::vector<Point>& points, double t,
                             std::size_t n_samples, std::uint64_t seed) {
  Stopwatch clock;
  if (points.empty()) throw ArgumentError("check_equilibria: no points");
  CheckReport r;
  r.name = "equilibria";
  r.property = "J3 equilibria";
  r.seed = seed;
  r.inputs = {{"model", bundle.name}, {"points", points}, {"t", t}, {"n_samples", n_samples}};
  r.threshold = 1e-12;
  const double a = bundle.equilibria.a, b = bundle.equilibria.b;
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto ea = estimate(bundle, points[i], t, [a](std::span<const double>) { return a; }, n_samples,
                             derive_seed(seed, i, 0));
    const auto eb = estimate(bundle, points[i], t, [b](std::span<const double>) { return b; }, n_samples,
                             derive_seed(seed, i, 1));
    r.statistic = std::max({r.statistic, std::fabs(ea.value - a), std::fabs(eb.value - b)});
    rows.push_back({{"x", points[i]}, {"at_a", ea.value}, {"at_b", eb.value},
                    {"spread_a", ea.stderr_empirical}, {"spread_b", eb.stderr_empirical}});
  }
  r.details = {{"a", a}, {"b", b}, {"points", rows}};
  r.finish();
  r.runtime_seconds = clock.seconds();
  return r;
}

CheckReport check_flow_consistency(const BundleFactory& make, const ScalarField& phi, double alpha, double delta,
                                   double h, const std::vector<double>& epsilon_list, std::size_t n_samples,
                                   std::uint64_t seed, const FlowConsistencyOptions& options) {
  Stopwatch clock;
  if (epsilon_list.empty() || !std::is_sorted(epsilon_list.rbegin(), epsilon_list.rend()))
    throw ArgumentError("check_flow_consistency: epsilon_list must be non-empty and decreasing");
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (std::fabs(phi.values[i]) <= phi.spacing && gradient_norm(phi, i) < 1e-8)
      throw ArgumentError("check_flow_consistency: vanishing gradient of phi on its zero set");
  }
  const auto first = make(epsilon_list.front());
  check_dim(first, phi, "check_flow_consistency");
  const double a = first.equilibria.a, b = first.equilibria.b;

  const auto sets = psi_alpha_sets(phi, alpha, h);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < phi.size(); ++i)
    if (sets.in_negative(i)) order.push_back(i);
  if (order.empty()) throw ArgumentError("check_flow_consistency: the set {psi < 0} is empty");
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sets.psi.values[x] > sets.psi.values[y]; });
  order.resize(std::min(order.size(), 20 * options.n_points));
  const auto chosen = spread(order, options.n_points);

  CheckReport r;
  r.name = "flow_consistency";
  r.property = "J4 flow consistency";
  r.seed = seed;
  r.inputs = {{"model", first.name}, {"alpha", alpha}, {"delta", delta}, {"h", h}, {"epsilon_list", epsilon_list},
              {"n_samples", n_samples}, {"n_points", chosen.size()}};
  r.threshold = options.tolerance;
  const auto pplus = phase_data(phi, a, b, delta);
  auto per_eps = nlohmann::json::array();
  double prev_max = 0.0, prev_se = 0.0;
  bool monotone = true;
  for (std::size_t e = 0; e < epsilon_list.size(); ++e) {
    const auto m = make(epsilon_list[e]);
    double mx = -std::numeric_limits<double>::infinity(), se = 0.0;
    auto vals = nlohmann::json::array();
    for (std::size_t j = 0; j < chosen.size(); ++j) {
      const auto est = estimate(m, phi.coordinate(chosen[j]), h, pplus, n_samples, derive_seed(seed, e, j));
      vals.push_back(est.value);
      if (est.value > mx) {
        mx = est.value;
        se = est.stderr;
      }
    }
    if (e > 0 && mx > prev_max + 4.0 * (se + prev_se)) monotone = false;
    prev_max = mx;
    prev_se = se;
    per_eps.push_back({{"epsilon", epsilon_list[e]}, {"max", mx}, {"stderr", se}, {"values", vals}});
  }
  r.statistic = prev_max - a;
  r.conditions["max_non_increasing_in_epsilon"] = monotone;
  r.budget = {{"trend_slack", "4 * stderr-sum between consecutive epsilon"}};
  auto pts = nlohmann::json::array();
  for (auto i : chosen) pts.push_back(phi.coordinate(i));
  r.details = {{"points", pts}, {"per_epsilon", per_eps}};
  r.finish();
  r.runtime_seconds = clock.seconds();
  return r;
}

void to_json(nlohmann::json& j, const FormationCalibration& c) {
  j = {{"contraction_depth", c.contraction_depth}, {"sigma1", c.sigma1}, {"sigma2", c.sigma2},
       {"displacement", c.displacement}};
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const auto at = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()))) ;
  return v[std::min(at == 0 ? 0 : at - 1, v.size() - 1)];
}

}  // namespace

FormationCalibration fit_interface_formation(const ModelBundle& bundle, double delta, double tolerance,
                                             std::size_t n_lineages, std::uint64_t seed) {
  const double a = bundle.equilibria.a;
  const double eps = bundle.spec.epsilon;
  FormationCalibration c;
  c.contraction_depth = contraction_depth(bundle.g, a + delta, a, tolerance);
  if (c.contraction_depth < 0) throw ArgumentError("fit_interface_formation: a + delta does not contract to a");
  // With every leaf voting a + δ the expected root vote solves
  // u' = rate·(g(u) − u), u(0) = a + δ; integrate it with RK4.
  const double unit = eps * eps * std::fabs(std::log(eps));
  const double rate = bundle.spec.branch_rate;
  auto f = [&](double u) { return rate * (bundle.g(u) - u); };
  double u = a + delta, t = 0.0;
  const double dt = std::min(0.01 / rate, unit / 400.0);
  for (int step = 1; step <= 160 && c.sigma1 == 0.0; ++step) {
    const double until = 0.25 * step * unit;
    while (t < until - 1e-15) {
      const double k = std::min(dt, until - t);
      const double k1 = f(u), k2 = f(u + 0.5 * k * k1), k3 = f(u + 0.5 * k * k2), k4 = f(u + k * k3);
      u += k * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
      t += k;
    }
    if (u - a <= 0.5 * tolerance) c.sigma1 = 0.25 * step;
  }
  if (c.sigma1 == 0.0) throw ArgumentError("fit_interface_formation: no formation time up to 40 eps^2|log eps|");
  c.sigma2 = 1.5 * c.sigma1;
  // Lineage displacement over [0, σ₂ε²|log ε|].
  const auto dim = static_cast<std::size_t>(bundle.spec.dim);
  std::vector<double> disp(n_lineages);
  parallel_for(chunk_count(n_lineages), [&](std::size_t chunk) {
    Rng rng = make_rng(seed, chunk);
    std::vector<double> x(dim);
    for (std::size_t i = chunk * kChunkSize; i < std::min(n_lineages, (chunk + 1) * kChunkSize); ++i) {
      std::fill(x.begin(), x.end(), 0.0);
      bundle.spec.motion(x, c.sigma2 * unit, rng);
      double s = 0.0;
      for (double v : x) s += v * v;
      disp[i] = std::sqrt(s);
    }
  });
  c.displacement = quantile(disp, 0.99) / interface_scale(eps);
  return c;
}

CheckReport check_interface_formation(const ModelBundle& bundle, const ScalarField& phi, double delta,
                                      std::size_t n_samples, std::uint64_t seed,
                                      const InterfaceFormationOptions& options) {
  Stopwatch clock;
  check_dim(bundle, phi, "check_interface_formation");
  const double eps = bundle.spec.epsilon, a = bundle.equilibria.a, b = bundle.equilibria.b;
  FormationCalibration cal;
  if (options.sigma1 > 0.0 && options.sigma2 >= options.sigma1 && options.K > 0.0) {
    cal.sigma1 = options.sigma1;
    cal.sigma2 = options.sigma2;
    cal.contraction_depth = contraction_depth(bundle.g, a + delta, a, options.tolerance);
  } else {
    cal = fit_interface_formation(bundle, delta, options.tolerance, options.calibration_lineages, derive_seed(seed, 7));
    if (options.sigma1 > 0.0) cal.sigma1 = options.sigma1;
    if (options.sigma2 > 0.0) cal.sigma2 = options.sigma2;
    cal.sigma2 = std::max(cal.sigma2, cal.sigma1);
  }
  const double K = options.K > 0.0 ? options.K : 2.0 * cal.displacement;
  const double scale = interface_scale(eps);
  const auto d = signed_distance(phi);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.values[i] <= -K * scale) order.push_back(i);
  if (order.empty()) throw ArgumentError("check_interface_formation: no grid point lies K eps|log eps| inside");
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return d.values[x] > d.values[y]; });
  order.resize(std::min(order.size(), 20 * options.n_points));
  const auto chosen = spread(order, options.n_points);

  CheckReport r;
  r.name = "interface_formation";
  r.property = "interface formation";
  r.seed = seed;
  r.inputs = {{"model", bundle.name}, {"epsilon", eps}, {"delta", delta}, {"n_samples", n_samples},
              {"tolerance", options.tolerance}, {"K", K}};
  r.threshold = options.tolerance;
  r.statistic = -std::numeric_limits<double>::infinity();
  const double unit = eps * eps * std::fabs(std::log(eps));
  const auto pplus = phase_data(phi, a, b, delta);
  auto rows = nlohmann::json::array();
  double worst_se = 0.0;
  for (int k = 0; k < options.n_times; ++k) {
    const double sigma = options.n_times == 1
                             ? cal.sigma1
                             : cal.sigma1 + (cal.sigma2 - cal.sigma1) * k / static_cast<double>(options.n_times - 1);
    const double t = sigma * unit;
    for (std::size_t j = 0; j < chosen.size(); ++j) {
      const auto x = phi.coordinate(chosen[j]);
      const auto est = estimate(bundle, x, t, pplus, n_samples, derive_seed(seed, static_cast<std::uint64_t>(k), j));
      if (est.value - a > r.statistic) worst_se = est.stderr;
      r.statistic = std::max(r.statistic, est.value - a);
      rows.push_back({{"t", t}, {"x", x}, {"d", d.values[chosen[j]]}, {"value", est.value}, {"stderr", est.stderr}});
    }
  }
  nlohmann::json cj;
  to_json(cj, cal);
  r.budget = {{"stderr_at_worst", worst_se}};
  r.details = {{"calibration", cj}, {"estimates", rows}};
  r.finish();
  if (!r.pass) r.details["diagnosis"] = "not yet formed";
  r.runtime_seconds = clock.seconds();
  return r;
}

CheckReport check_propagation_vs_1d(const ModelBundle& bundle, const ScalarField& phi, double alpha, double delta,
                                    const std::vector<double>& time_grid, std::size_t n_samples,
                                    std::uint64_t seed, const PropagationOptions& options) {
  Stopwatch clock;
  check_dim(bundle, phi, "check_propagation_vs_1d");
  if (time_grid.empty()) throw ArgumentError("check_propagation_vs_1d: empty time grid");
  const double eps = bundle.spec.epsilon, a = bundle.equilibria.a, b = bundle.equilibria.b;
  const double scale = interface_scale(eps);
  const auto setup = step_comparison(bundle.kernel, a, b, gamma_of(bundle));
  const auto pplus = phase_data(phi, a, b, delta);

  CheckReport r;
  r.name = "propagation_vs_1d";
  r.property = "one-dimensional comparison";
  r.seed = seed;
  r.inputs = {{"model", bundle.name}, {"epsilon", eps}, {"alpha", alpha}, {"delta", delta}, {"times", time_grid},
              {"n_samples", n_samples}, {"K2", options.K2}, {"C", options.C}, {"k", options.k}};
  r.threshold = options.C * std::pow(eps, options.k);
  r.statistic = -std::numeric_limits<double>::infinity();
  auto rows = nlohmann::json::array();
  for (std::size_t k = 0; k < time_grid.size(); ++k) {
    const double t = time_grid[k];
    const auto d = signed_distance(psi_alpha(phi, alpha, t));
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (std::fabs(d.values[i]) <= options.band * scale) order.push_back(i);
    if (order.empty()) throw ArgumentError("check_propagation_vs_1d: no grid point near the interface");
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return d.values[x] < d.values[y]; });
    for (auto i : spread(order, options.n_points)) {
      const auto x = phi.coordinate(i);
      const double z = d.values[i] + options.K2 * scale;
      const auto multi = estimate(bundle, x, t, pplus, n_samples, derive_seed(seed, 1, k * 1000 + rows.size()));
      const auto one = bbm1d_vote_prob(z, t, eps, setup, n_samples, derive_seed(seed, 2, k * 1000 + rows.size()));
      const double excess = multi.value - one.value - 4.0 * (multi.stderr + one.stderr);
      r.statistic = std::max(r.statistic, excess);
      rows.push_back({{"t", t}, {"x", x}, {"d", d.values[i]}, {"z", z}, {"multi", multi.value},
                      {"one_dim", one.value}, {"stderr_multi", multi.stderr}, {"stderr_one_dim", one.stderr}});
    }
  }
  r.budget = {{"stderr_slack", "4 * (stderr_multi + stderr_one_dim)"}, {"allowance", r.threshold}};
  r.details = {{"comparisons", rows}};
  r.finish();
  r.runtime_seconds = clock.seconds();
  return r;
}

CheckReport check_ito_coupling_drift(const ScalarField& phi, double alpha, const Point& x, double t, double s,
                                     double band_r0, std::size_t n_paths, std::uint64_t seed,
                                     const ItoDriftOptions& options) {
  Stopwatch clock;
  if (!(s >= 0.0 && s <= t) || !(band_r0 > 0.0) || n_paths < 2 || options.n_slices < 2 || options.n_steps < 1)
    throw ArgumentError("check_ito_coupling_drift: bad arguments");
  if (static_cast<int>(x.size()) != phi.dim) throw ArgumentError("check_ito_coupling_drift: dimension mismatch");
  const int m = options.n_slices;
  const double t0 = t - s, dts = s / (m - 1);
  std::vector<ScalarField> dist;
  double L = 0.0;
  for (int k = 0; k < m; ++k) {
    const auto psi = psi_alpha(phi, alpha, t0 + k * dts);
    dist.push_back(signed_distance(psi));
    for (std::size_t i = 0; i < psi.size(); ++i)
      if (std::fabs(dist.back().values[i]) < band_r0) L = std::max(L, gradient_norm(psi, i));
  }
  if (!(L > 0.0)) throw ArgumentError("check_ito_coupling_drift: empty band");
  auto dval = [&](double tau, std::span<const double> y) {
    if (s == 0.0) return dist.back().interpolate(y);
    const double u = std::clamp((tau - t0) / dts, 0.0, static_cast<double>(m - 1));
    const int k = std::min(static_cast<int>(u), m - 2);
    const double w = u - k;
    return (1.0 - w) * dist[static_cast<std::size_t>(k)].interpolate(y) + w * dist[static_cast<std::size_t>(k + 1)].interpolate(y);
  };
  const double d0 = dval(t, x);
  if (std::fabs(d0) >= band_r0) throw ArgumentError("check_ito_coupling_drift: (t, x) lies outside the band");

  const double c = alpha / (4.0 * L);
  const double dt = s / options.n_steps;
  std::vector<double> z(n_paths), stop(n_paths);
  const auto dim = static_cast<std::size_t>(phi.dim);
  parallel_for(chunk_count(n_paths), [&](std::size_t chunk) {
    Rng rng = make_rng(seed, chunk);
    std::vector<double> w(dim);
    for (std::size_t i = chunk * kChunkSize; i < std::min(n_paths, (chunk + 1) * kChunkSize); ++i) {
      std::copy(x.begin(), x.end(), w.begin());
      double r = 0.0, val = d0;
      for (int step = 0; step < options.n_steps && s > 0.0; ++step) {
        for (auto& v : w) v += std::sqrt(dt) * normal01(rng);
        r += dt;
        val = dval(t - r, w);
        if (std::fabs(val) >= band_r0) break;
      }
      z[i] = val + c * r;
      stop[i] = r;
    }
  });
  const double n = static_cast<double>(n_paths);
  const double mean = std::accumulate(z.begin(), z.end(), 0.0) / n;
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  const double se = std::sqrt(var / (n - 1.0) / n);
  const double mean_stop = std::accumulate(stop.begin(), stop.end(), 0.0) / n;

  CheckReport r;
  r.name = "ito_coupling_drift";
  r.property = "Ito coupling drift";
  r.seed = seed;
  r.inputs = {{"alpha", alpha}, {"x", x}, {"t", t}, {"s", s}, {"band_r0", band_r0}, {"n_paths", n_paths},
              {"n_steps", options.n_steps}, {"n_slices", options.n_slices}};
  r.statistic = mean - d0;
  r.threshold = 4.0 * se + options.budget;
  r.budget = {{"stderr", se}, {"discretization", options.budget}};
  r.details = {{"d_start", d0}, {"mean_stopped_d", mean - c * mean_stop}, {"mean_stopping_time", mean_stop},
               {"L", L}, {"drift_credit", c * mean_stop}};
  r.finish();
  r.runtime_seconds = clock.seconds();
  return r;
}

CheckReport check_diffusivity(const BranchingSpec& spec, const std::vector<double>& s_list, std::size_t n_samples,
                              std::uint64_t seed) {
  Stopwatch clock;
  if (s_list.empty() || n_samples < 2) throw ArgumentError("check_diffusivity: bad arguments");
  const auto dim = static_cast<std::size_t>(spec.dim);
  // Lineage motion between branching events; dispersal is checked separately
  // against its support bound.
  std::vector<double> var_s, kurt_s;
  for (std::size_t k = 0; k < s_list.size(); ++k) {
    std::vector<double> disp(n_samples * dim);
    parallel_for(chunk_count(n_samples), [&](std::size_t chunk) {
      Rng rng = make_rng(seed, k, chunk);
      for (std::size_t i = chunk * kChunkSize; i < std::min(n_samples, (chunk + 1) * kChunkSize); ++i)
        spec.motion(std::span<double>(disp.data() + i * dim, dim), s_list[k], rng);
    });
    const double n = static_cast<double>(disp.size());
    const double mean = std::accumulate(disp.begin(), disp.end(), 0.0) / n;
    double m2 = 0.0, m4 = 0.0;
    for (double v : disp) {
      const double c = (v - mean) * (v - mean);
      m2 += c;
      m4 += c * c;
    }
    m2 /= n;
    m4 /= n;
    var_s.push_back(m2);
    kurt_s.push_back(m2 > 0.0 ? m4 / (m2 * m2) : 0.0);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < s_list.size(); ++k) {
    num += var_s[k] * s_list[k];
    den += s_list[k] * s_list[k];
  }
  const double slope = num / den;
  const std::size_t last = static_cast<std::size_t>(std::max_element(s_list.begin(), s_list.end()) - s_list.begin());

  double max_disp = 0.0;
  if (spec.dispersal) {
    const auto n0 = static_cast<std::size_t>(spec.n_children);
    std::vector<double> parent(dim, 0.0), children(n0 * dim);
    Rng rng = make_rng(seed, 1u << 20);
    Decoration deco;
    for (std::size_t i = 0; i < n_samples; ++i) {
      deco.clear();
      spec.dispersal(parent, children, deco, rng);
      for (double v : children) max_disp = std::max(max_disp, std::fabs(v));
    }
  }

  CheckReport r;
  r.name = "diffusivity";
  r.property = "lineage diffusivity";
  r.seed = seed;
  r.inputs = {{"spec", spec.label}, {"s_list", s_list}, {"n_samples", n_samples}};
  r.statistic = std::fabs(slope / spec.diffusivity - 1.0);
  r.threshold = 0.05;
  r.conditions["fourth_moment_ratio_within_10pct"] = std::fabs(kurt_s[last] / 3.0 - 1.0) <= 0.1;
  r.conditions["dispersal_within_bound"] =
      !std::isfinite(spec.dispersal_bound) || max_disp <= spec.dispersal_bound * (1.0 + 1e-12);
  r.budget = {{"slope_tolerance", 0.05}, {"fourth_moment_tolerance", 0.1}};
  r.details = {{"variance", var_s}, {"fourth_moment_ratio", kurt_s}, {"slope", slope},
               {"max_dispersal", max_disp}, {"dispersal_bound", std::isfinite(spec.dispersal_bound)
                                                                    ? nlohmann::json(spec.dispersal_bound)
                                                                    : nlohmann::json("unbounded")}};
  r.finish();
  r.runtime_seconds = clock.seconds();
  return r;
}

CheckReport check_mcf_duality(const BundleFactory& make, const ScalarField& p, const std::vector<double>& T_list,
                              const std::vector<double>& epsilon_list, const std::vector<Point>& sample_points,
                              std::size_t n_samples, std::uint64_t seed, const McfDualityOptions& options) {
  Stopwatch clock;
  if (T_list.empty() || !std::is_sorted(T_list.begin(), T_list.end()) || T_list.front() < 0.0)
    throw ArgumentError("check_mcf_duality: T_list must be non-empty, sorted and non-negative");
  if (epsilon_list.empty() || !std::is_sorted(epsilon_list.rbegin(), epsilon_list.rend()))
    throw ArgumentError("check_mcf_duality: epsilon_list must be non-empty and decreasing");
  std::vector<ModelBundle> bundles;
  for (double e : epsilon_list) bundles.push_back(make(e));
  check_dim(bundles.front(), p, "check_mcf_duality");
  const double a = bundles.front().equilibria.a, mu = bundles.front().equilibria.mu, b = bundles.front().equilibria.b;
  ScalarField level = p;
  bool below = false, above = false;
  for (auto& v : level.values) {
    below = below || v < mu;
    above = above || v > mu;
    v -= mu;
  }
  if (!below || !above) throw ArgumentError("check_mcf_duality: p does not define an interface");
  ScalarField u = signed_distance(level);
  const auto data = field_data(p);

  CheckReport r;
  r.name = "mcf_duality";
  r.property = "convergence to generalized MCF";
  r.seed = seed;
  r.inputs = {{"model", bundles.front().name}, {"T_list", T_list}, {"epsilon_list", epsilon_list},
              {"points", sample_points}, {"n_samples", n_samples}, {"margin", options.margin}};
  r.threshold = options.tolerance;
  r.statistic = -std::numeric_limits<double>::infinity();
  bool monotone = true;
  std::size_t used = 0;
  auto rows = nlohmann::json::array();
  double now = 0.0;
  for (std::size_t k = 0; k < T_list.size(); ++k) {
    u = evolve_mcf_levelset(u, T_list[k] - now);
    now = T_list[k];
    for (std::size_t j = 0; j < sample_points.size(); ++j) {
      const double uval = u.interpolate(sample_points[j]);
      if (std::fabs(uval) <= options.margin) continue;
      ++used;
      const double target = uval > 0.0 ? b : a;
      double prev = 0.0, prev_se = 0.0;
      auto devs = nlohmann::json::array();
      for (std::size_t e = 0; e < bundles.size(); ++e) {
        const auto est = estimate(bundles[e], sample_points[j], now, data, n_samples,
                                  derive_seed(seed, k, j * bundles.size() + e));
        const double dev = std::fabs(est.value - target);
        if (e > 0 && dev > prev + 4.0 * (est.stderr + prev_se)) monotone = false;
        prev = dev;
        prev_se = est.stderr;
        devs.push_back({{"epsilon", epsilon_list[e]}, {"value", est.value}, {"stderr", est.stderr}});
      }
      r.statistic = std::max(r.statistic, prev);
      rows.push_back({{"T", now}, {"x", sample_points[j]}, {"level_set_value", uval}, {"target", target}, {"estimates", devs}});
    }
  }
  if (used == 0) r.statistic = 0.0;
  r.conditions["deviation_non_increasing_in_epsilon"] = monotone;
  r.conditions["some_point_beyond_margin"] = used > 0;
  r.budget = {{"trend_slack", "4 * stderr-sum between consecutive epsilon"}};
  r.details = {{"comparisons", rows}};
  r.finish();
  r.runtime_seconds = clock.seconds();
  return r;
}

CheckReport check_allen_cahn(const ModelBundle& bundle, const ScalarField& p, const std::vector<SpaceTimePoint>& points,
                             std::size_t n_samples, std::uint64_t seed, double pde_budget,
                             const ReactionDiffusionOptions& options) {
  Stopwatch clock;
  check_dim(bundle, p, "check_allen_cahn");
  if (points.empty()) throw ArgumentError("check_allen_cahn: no points");
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return points[x].t < points[y].t; });
  const double eps = bundle.spec.epsilon, gamma = gamma_of(bundle);
  const auto data = field_data(p);

  CheckReport r;
  r.name = "allen_cahn";
  r.property = "Allen-Cahn duality";
  r.seed = seed;
  auto pin = nlohmann::json::array();
  for (const auto& q : points) pin.push_back({{"t", q.t}, {"x", q.x}});
  r.inputs = {{"model", bundle.name}, {"epsilon", eps}, {"gamma", gamma}, {"points", pin}, {"n_samples", n_samples},
              {"grid_spacing", p.spacing}};
  r.threshold = pde_budget;
  r.statistic = -std::numeric_limits<double>::infinity();
  ScalarField u = p;
  double now = 0.0;
  auto rows = nlohmann::json::array();
  for (auto i : order) {
    if (points[i].t > now) {
      u = solve_reaction_diffusion(eps, bundle.g, gamma, u, points[i].t - now, options);
      now = points[i].t;
    }
    const double pde = u.interpolate(points[i].x);
    const auto mc = estimate(bundle, points[i].x, points[i].t, data, n_samples, derive_seed(seed, i));
    r.statistic = std::max(r.statistic, std::fabs(mc.value - pde) - 4.0 * mc.stderr);
    rows.push_back({{"t", points[i].t}, {"x", points[i].x}, {"monte_carlo", mc.value}, {"stderr", mc.stderr}, {"pde", pde}});
  }
  r.budget = {{"stderr_slack", "4 * stderr"}, {"pde", pde_budget}};
  r.details = {{"comparisons", rows}};
  r.finish();
  r.runtime_seconds = clock.seconds();
  return r;
}

}  // namespace mcflab
