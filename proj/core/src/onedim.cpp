#include "mcflab/onedim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mcflab/errors.hpp"

namespace mcflab {

StepComparison step_comparison(const VotingKernel& kernel, double a, double b, double gamma) {
  if (!(a >= 0.0 && a < b && b <= 1.0)) throw ArgumentError("step comparison: need 0 <= a < b <= 1");
  if (!(gamma > 0.0)) throw ArgumentError("step comparison: gamma must be positive");
  return {kernel, a, b, gamma};
}

double interface_scale(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ArgumentError("interface_scale: epsilon must lie in (0,1)");
  return epsilon * std::fabs(std::log(epsilon));
}

BranchingSpec bbm1d_spec(const StepComparison& setup, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ArgumentError("bbm1d: epsilon must lie in (0,1]");
  auto spec = brownian_spec(1, setup.kernel.n_children, setup.gamma / (epsilon * epsilon), "bbm1d");
  spec.epsilon = epsilon;
  return spec;
}

VoteEstimate bbm1d_vote_prob(double z, double t, double epsilon, const StepComparison& setup,
                             std::size_t n_samples, std::uint64_t seed) {
  const auto spec = bbm1d_spec(setup, epsilon);
  const double a = setup.a, b = setup.b;
  const double x[1] = {z};
  return estimate_vote_probability(spec, setup.kernel, x, t,
                                   [a, b](std::span<const double> y) { return y[0] < 0.0 ? a : b; }, n_samples,
                                   seed);
}

std::vector<double> default_z_grid(double epsilon) {
  const double s = interface_scale(epsilon);
  std::vector<double> z;
  for (int i = -50; i <= 50; ++i) z.push_back(i * s / 10.0);
  return z;
}

std::string InterfaceProfile::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "z,value,stderr\n";
  for (std::size_t i = 0; i < z_grid.size(); ++i) os << z_grid[i] << ',' << values[i].value << ',' << values[i].stderr << '\n';
  return os.str();
}

InterfaceProfile interface_profile(double t, double epsilon, const StepComparison& setup,
                                   std::vector<double> z_grid, std::size_t n_samples, std::uint64_t seed,
                                   double tolerance) {
  if (z_grid.empty()) z_grid = default_z_grid(epsilon);
  if (!std::is_sorted(z_grid.begin(), z_grid.end())) throw ArgumentError("interface_profile: z_grid must be sorted");
  InterfaceProfile p;
  p.t = t;
  p.epsilon = epsilon;
  p.a = setup.a;
  p.b = setup.b;
  p.tolerance = tolerance >= 0.0 ? tolerance : 0.02 * (setup.b - setup.a);
  p.z_grid = std::move(z_grid);
  p.values.reserve(p.z_grid.size());
  for (std::size_t i = 0; i < p.z_grid.size(); ++i)
    p.values.push_back(bbm1d_vote_prob(p.z_grid[i], t, epsilon, setup, n_samples, derive_seed(seed, i)));

  std::vector<double> candidates;
  for (double z : p.z_grid) candidates.push_back(std::fabs(z));
  std::sort(candidates.begin(), candidates.end());
  p.width_estimate = std::numeric_limits<double>::infinity();
  for (double w : candidates) {
    bool ok = true;
    for (std::size_t i = 0; i < p.z_grid.size() && ok; ++i) {
      const double z = p.z_grid[i], v = p.values[i].value;
      if (z >= w && v < p.b - p.tolerance) ok = false;
      if (z <= -w && v > p.a + p.tolerance) ok = false;
    }
    if (ok) {
      p.width_estimate = w;
      break;
    }
  }
  p.width_units = p.width_estimate / interface_scale(epsilon);
  return p;
}

void to_json(nlohmann::json& j, const SlopeReport& r) {
  j = {{"vacuous", r.vacuous}, {"pass", r.pass}, {"c2", r.c2}, {"delta_star", r.delta_star}, {"pairs", r.pairs.size()}};
}

SlopeReport slope_check(const InterfaceProfile& profile, double delta_star, double mu) {
  SlopeReport r;
  r.delta_star = delta_star;
  const double scale = interface_scale(profile.epsilon);
  const double band = profile.b - mu - delta_star;
  std::vector<std::size_t> in;
  for (std::size_t i = 0; i < profile.z_grid.size(); ++i)
    if (std::fabs(profile.values[i].value - mu) <= band) in.push_back(i);
  if (in.size() < 2) {
    r.vacuous = true;
    r.pass = true;
    return r;
  }
  double c2 = 0.0;
  for (std::size_t x = 0; x < in.size(); ++x)
    for (std::size_t y = x + 1; y < in.size(); ++y) {
      const auto i = in[x], j = in[y];
      const double dz = profile.z_grid[j] - profile.z_grid[i];
      if (dz < scale / 4.0) continue;
      const double dv = profile.values[j].value - profile.values[i].value;
      c2 = std::max(c2, dv > 0.0 ? delta_star * dz / (dv * scale) : std::numeric_limits<double>::infinity());
    }
  r.c2 = c2;
  for (std::size_t x = 0; x < in.size(); ++x)
    for (std::size_t y = x + 1; y < in.size(); ++y) {
      const auto i = in[x], j = in[y];
      const auto& vi = profile.values[i];
      const auto& vj = profile.values[j];
      const double dz = profile.z_grid[j] - profile.z_grid[i];
      const double need = std::isfinite(c2) && c2 > 0.0 ? delta_star * dz / (c2 * scale) : 0.0;
      SlopePair p{profile.z_grid[i], profile.z_grid[j], vi.value, vj.value,
                  vj.value - vi.value + 4.0 * (vi.stderr + vj.stderr) >= need};
      r.pass = r.pass && p.pass;
      r.pairs.push_back(p);
    }
  r.pass = r.pass && std::isfinite(c2);
  return r;
}

}  // namespace mcflab
