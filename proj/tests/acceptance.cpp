// Acceptance run: one line per criterion, exit status 0 iff all pass.
// Usage: mcflab_acceptance [criterion numbers...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "mcflab/dualtree.hpp"
#include "mcflab/field.hpp"
#include "mcflab/gfunction.hpp"
#include "mcflab/models.hpp"
#include "mcflab/onedim.hpp"
#include "mcflab/partition.hpp"
#include "mcflab/pde.hpp"
#include "mcflab/rng.hpp"
#include "mcflab/verify.hpp"

using namespace mcflab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double runtime_limit;  // seconds
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ScalarField smooth_circle(double lo, double hi, std::size_t n, double r = 1.0) {
  return sample_field(make_field(2, lo, hi, n),
                      [r](std::span<const double> x) { return (x[0] * x[0] + x[1] * x[1] - r * r) / (2 * r); });
}

// 1. Fixed points to 1e-10 and the symmetry g(p) + g(1 − p) = 1 to 1e-12.
Outcome g_exactness() {
  auto near = [](const std::vector<double>& got, const std::vector<double>& want) {
    if (got.size() != want.size()) return std::numeric_limits<double>::infinity();
    double e = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) e = std::max(e, std::abs(got[i] - want[i]));
    return e;
  };
  const double em = near(find_fixed_points(majority_g(), 1e-12).points, {0.0, 0.5, 1.0});
  const double es = near(find_fixed_points(sexual_reproduction_g(), 1e-12).points, {0.0, 1.0 / 3.0, 2.0 / 3.0});
  const auto nlv = nlv_polynomial_g(NlvRates{});
  double sym = 0.0;
  for (int i = 0; i <= 1000; ++i) sym = std::max(sym, std::abs(nlv(i / 1000.0) + nlv(1.0 - i / 1000.0) - 1.0));
  return {em <= 1e-10 && es <= 1e-10 && sym <= 1e-12,
          fmt("majority fp err %.1e, sexual reproduction fp err %.1e, nlv symmetry err %.1e", em, es, sym)};
}

// 2. 10³ random trees with at most 200 vertices, 10⁴ votes each.
Outcome voting_recursion() {
  const std::size_t n_trees = 1000, n_votes = 10000;
  const std::vector<VotingKernel> kernels{majority_kernel(), sexual_reproduction_kernel()};
  const auto spec = brownian_spec(1, 3, 10.0);
  const double x0[1] = {0.0};
  std::size_t failures = 0, draws = 0;
  double worst_z = 0.0;
  for (std::size_t i = 0; i < n_trees; ++i) {
    Rng rng(derive_seed(2002, i));
    TimeLabelledTree tree;
    do {
      tree = simulate_tree(spec, x0, 0.25 * uniform01(rng), derive_seed(2003, i, draws++));
    } while (tree.size() > 200);
    const auto leaves = tree.leaves();
    std::vector<double> p(leaves.size());
    for (double& v : p) v = uniform01(rng);
    const auto& kernel = kernels[i % kernels.size()];
    const double exact = root_vote_prob_exact(tree, p, kernel);
    std::vector<int> votes(leaves.size());
    double mean = 0.0;
    for (std::size_t r = 0; r < n_votes; ++r) {
      for (std::size_t k = 0; k < p.size(); ++k) votes[k] = uniform01(rng) < p[k];
      mean += sample_vote(tree, votes, kernel, derive_seed(2004, i, r));
    }
    mean /= static_cast<double>(n_votes);
    const double se = std::sqrt(exact * (1 - exact) / static_cast<double>(n_votes));
    const double dev = std::abs(mean - exact);
    if (dev > 4 * se + 1e-12) ++failures;
    if (se > 0) worst_z = std::max(worst_z, dev / se);
  }
  double reg = 0.0;
  const auto g = majority_g();
  for (int h = 0; h <= 6; ++h)
    for (double q : {0.05, 0.3, 0.5, 0.61, 0.9}) {
      const auto tree = regular_tree(3, h);
      reg = std::max(reg, std::abs(root_vote_prob_exact(tree, [q](std::span<const double>) { return q; },
                                                        majority_kernel()) - iterate_g(g, q, h)));
    }
  return {failures == 0 && reg <= 1e-12,
          fmt("%zu/%zu trees outside 4 stderr (max |z| %.2f); regular-tree err %.1e", failures, n_trees, worst_z, reg)};
}

// 3. All five bundles, threshold 1e-12.
Outcome equilibria() {
  LatticeParams lp;
  lp.partition_horizon = kInfiniteHorizon;
  std::vector<ModelBundle> bundles{ternary_bbm(0.25, 2), slfv_dual(SlfvParams{}), lotka_volterra_dual(lp),
                                   nonlinear_voter_dual(lp), sexual_reproduction_dual(0.25, 2)};
  bool pass = true;
  std::string detail;
  for (const auto& m : bundles) {
    const std::size_t d = static_cast<std::size_t>(m.spec.dim);
    std::vector<Point> pts{Point(d, 0.0), Point(d, 0.37)};
    const auto r = check_equilibria(m, pts, 0.05, 200, derive_seed(3, detail.size()));
    pass = pass && r.pass;
    detail += fmt("%s %.0e; ", m.name.c_str(), r.statistic);
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

// 4. Half-space data, t = h = 0.02, x at distance 0.05 from the interface. The
// statistic is the RMS over 32 replicate seeds, before and after doubling the
// grid resolution and both sample sizes.
Outcome semigroup() {
  const auto m = ternary_bbm(0.25, 1);
  const auto p = half_space_data(0.0, 1.0);
  const Point x{0.05};
  struct Level {
    std::size_t nodes, outer, inner;
  };
  const Level levels[2] = {{21, 20000, 1000}, {41, 40000, 2000}};
  double rms[2] = {0, 0};
  int passes = 0;
  const int replicates = 32;
  for (int l = 0; l < 2; ++l) {
    auto grid = make_field(1, -0.75, 0.75, levels[l].nodes);
    grid.origin[0] += x[0];
    for (int r = 0; r < replicates; ++r) {
      const auto rep = check_semigroup(m, x, 0.02, 0.02, p, grid, levels[l].outer, levels[l].inner,
                                       derive_seed(77, static_cast<std::uint64_t>(r)));
      passes += rep.pass;
      rms[l] += rep.statistic * rep.statistic;
    }
    rms[l] = std::sqrt(rms[l] / replicates);
  }
  return {passes == 2 * replicates && rms[1] < rms[0],
          fmt("%d/%d replicate checks pass; RMS statistic %.5f -> %.5f", passes, 2 * replicates, rms[0], rms[1])};
}

// 5. 256² grid on [−1.5, 1.5]², r₀ = 1, radius at t = r₀²/2 against sqrt(r₀² − t).
Outcome shrinking_circle() {
  const auto u0 = sample_field(make_field(2, -1.5, 1.5, 256),
                               [](std::span<const double> x) { return std::hypot(x[0], x[1]) - 1.0; });
  const double T = 0.5, exact = std::sqrt(1.0 - T);
  const auto u = evolve_mcf_levelset(u0, T);
  const double c[2] = {0.0, 0.0};
  const auto r = zero_set_radius(u, c);
  const double err = std::abs(r.mean - exact) / exact;
  return {err <= 0.02 && r.count > 0,
          fmt("mean radius %.5f vs %.5f (rel err %.2e, range %.5f..%.5f)", r.mean, exact, err, r.min, r.max)};
}

// 6. p = 0 inside the unit circle, 1 outside; five interior space-time points.
Outcome allen_cahn() {
  const auto m = ternary_bbm(0.25, 2);
  auto p = smooth_circle(-2.0, 2.0, 201);
  for (double& v : p.values) v = v > 0.0 ? 1.0 : 0.0;
  const std::vector<SpaceTimePoint> pts{
      {0.05, {0.9, 0.0}}, {0.1, {1.0, 0.0}}, {0.1, {0.0, 1.1}}, {0.2, {0.7, 0.7}}, {0.2, {-0.95, 0.0}}};
  const auto r = check_allen_cahn(m, p, pts, 20000, 6, 0.02);
  return {r.pass, fmt("max(|MC - PDE| - 4 stderr) = %.4f <= budget 0.02", r.statistic)};
}

// 7. Width of the formed 1-D interface at t = 2.5 ε²|log ε| in units of ε|log ε|.
Outcome interface_stability() {
  constexpr double kWidthBound = 4.0;  // frozen from the ε = 0.3 calibration run (2.5 units)
  const auto setup = step_comparison(majority_kernel(), 0.0, 1.0);
  bool pass = true;
  std::string detail;
  for (double eps : {0.3, 0.2, 0.15}) {
    const double s = interface_scale(eps);
    std::vector<double> z;
    for (int i = -20; i <= 20; ++i) z.push_back(0.25 * i * s);
    const double t = 2.5 * eps * eps * std::abs(std::log(eps));
    const auto prof = interface_profile(t, eps, setup, z, 800, derive_seed(7, static_cast<std::uint64_t>(eps * 100)));
    const double lo = prof.values.front().value, hi = prof.values.back().value;
    const bool ok = prof.width_units <= kWidthBound && lo <= 0.02 && hi >= 0.98;
    pass = pass && ok;
    detail += fmt("eps %.2f width %.2f plateaus %.3f/%.3f; ", eps, prof.width_units, lo, hi);
  }
  detail += fmt("bound %.1f", kWidthBound);
  return {pass, detail};
}

// 8. Circle of radius 3, δ = 0.1, constants fitted by fit_interface_formation.
Outcome formation() {
  const auto m = ternary_bbm(0.2, 2);
  const auto phi = sample_field(make_field(2, -4.0, 4.0, 161),
                                [](std::span<const double> x) { return std::hypot(x[0], x[1]) - 3.0; });
  const auto r = check_interface_formation(m, phi, 0.1, 1000, 3);
  const auto& cal = r.details.at("calibration");
  return {r.pass, fmt("max(u - a) = %.4f <= 0.02 (sigma1 %.2f, sigma2 %.3f, K %.2f)", r.statistic,
                      cal.at("sigma1").get<double>(), cal.at("sigma2").get<double>(), r.inputs.at("K").get<double>())};
}

// 9. Unit circle, α = 1, δ = 0.1, K₂ = 0, allowance C·ε^k = 0.1·0.2.
Outcome propagation() {
  const auto m = ternary_bbm(0.2, 2);
  const auto phi = smooth_circle(-2.0, 2.0, 161);
  PropagationOptions o;
  o.K2 = 0.0;
  o.C = 0.1;
  o.k = 1.0;
  const auto r = check_propagation_vs_1d(m, phi, 1.0, 0.1, {0.12, 0.14, 0.16}, 4000, 9, o);
  return {r.pass, fmt("max positive excess %.4f <= allowance %.4f", r.statistic, r.threshold)};
}

// 10. Planar α = 0 with no budget; unit circle α = 1 with budget 0.01.
Outcome ito_drift() {
  const auto planar = sample_field(make_field(2, -2.0, 2.0, 161), [](std::span<const double> x) { return x[0]; });
  const auto a = check_ito_coupling_drift(planar, 0.0, {0.05, 0.0}, 0.1, 0.1, 0.3, 20000, 10);
  ItoDriftOptions o;
  o.budget = 0.01;
  const auto b = check_ito_coupling_drift(smooth_circle(-2.0, 2.0, 161), 1.0, {0.95, 0.0}, 0.1, 0.1, 0.3, 20000, 11, o);
  return {a.pass && a.statistic < a.threshold && b.pass,
          fmt("planar %.4f < 4se %.4f; circle %.4f <= %.4f", a.statistic, a.threshold, b.statistic, b.threshold)};
}

// 11. sup |ḡ_L − g| over L ∈ {2, 5, 10, 25}, dim 3.
Outcome gbar_convergence() {
  constexpr double kFinalBound = 0.0015;  // frozen: L = 25 gave 0.00102 at both 2000 and 8000 samples
  const NlvRates rates;
  const auto g = nlv_polynomial_g(rates);
  std::vector<double> sup;
  std::string detail;
  for (int L : {2, 5, 10, 25}) {
    const auto gb = gbar(L, 3, kInfiniteHorizon, rates, 8000, 11);
    double s = 0.0;
    for (int i = 0; i <= 1000; ++i) s = std::max(s, std::abs(gb(i / 1000.0) - g(i / 1000.0)));
    sup.push_back(s);
    detail += fmt("L=%d %.5f; ", L, s);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < sup.size(); ++i) monotone = monotone && sup[i] < sup[i - 1];
  detail += fmt("bound %.4f", kFinalBound);
  return {monotone && sup.back() <= kFinalBound, detail};
}

// 12. 32³ torus, data 1 on the half x₀ < 16; three (t, x) points near the boundary.
Outcome voter_duality() {
  const int size = 32, dim = 3;
  const SiteProbFn p0 = [](std::span<const int> s) { return s[0] < 16 ? 1.0 : 0.0; };
  struct Probe {
    double t;
    int x[3];
  };
  const Probe probes[3] = {{0.5, {15, 3, 7}}, {1.0, {16, 20, 1}}, {2.0, {17, 9, 30}}};
  const std::size_t n = 2000;
  bool pass = true;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    const auto& q = probes[k];
    const auto field = voter_forward_oracle(size, dim, p0, q.t, n, derive_seed(12, static_cast<std::uint64_t>(k)));
    const std::size_t flat = (static_cast<std::size_t>(q.x[0]) * size + static_cast<std::size_t>(q.x[1])) * size +
                             static_cast<std::size_t>(q.x[2]);
    const double dual = voter_dual_marginal(size, dim, p0, q.x, q.t);
    const double se = std::sqrt(dual * (1 - dual) / static_cast<double>(n));
    const bool ok = std::abs(field[flat] - dual) <= 4 * se;
    pass = pass && ok;
    detail += fmt("t=%.1f %.4f vs %.4f (4se %.4f); ", q.t, field[flat], dual, 4 * se);
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "g-function exactness", 1.0, g_exactness},
      {2, "exact voting recursion", 120.0, voting_recursion},
      {3, "equilibria (J3)", 60.0, equilibria},
      {4, "semigroup (J1)", 600.0, semigroup},
      {5, "shrinking circle", 120.0, shrinking_circle},
      {6, "Allen-Cahn duality", 900.0, allen_cahn},
      {7, "1-D interface stability", 1200.0, interface_stability},
      {8, "interface formation", 1200.0, formation},
      {9, "1-D comparison bound", 1800.0, propagation},
      {10, "Ito coupling drift", 300.0, ito_drift},
      {11, "effective g convergence", 1800.0, gbar_convergence},
      {12, "voter duality oracle", 600.0, voter_duality},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.runtime_limit;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("[%s] %2d %s: %s (%.1f s of %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), secs, c.runtime_limit, in_time ? "" : ", over the runtime limit");
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
