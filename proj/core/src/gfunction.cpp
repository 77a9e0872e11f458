#include "mcflab/gfunction.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "mcflab/errors.hpp"

namespace mcflab {

double VotingKernel::operator()(VoteMask votes, const Decoration* decoration) const {
  if (!table.empty() && !requires_decoration) return table[votes];
  return theta(votes, decoration);
}

VotingKernel table_kernel(int n_children, std::vector<double> table, std::string label) {
  if (n_children < 1 || n_children > 16) throw ArgumentError("table_kernel: N0 must be in [1,16]");
  if (table.size() != (std::size_t{1} << n_children))
    throw ArgumentError("table_kernel: table size must be 2^N0");
  VotingKernel k;
  k.n_children = n_children;
  k.label = std::move(label);
  k.is_deterministic = std::all_of(table.begin(), table.end(),
                                   [](double v) { return v == 0.0 || v == 1.0; });
  for (double v : table)
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("table_kernel: theta outside [0,1]");
  k.table = std::move(table);
  auto shared = std::make_shared<std::vector<double>>(k.table);
  k.theta = [shared](VoteMask v, const Decoration*) { return (*shared)[v]; };
  return k;
}

VotingKernel exchangeable_kernel(std::vector<double> levels, std::string label) {
  if (levels.size() < 2) throw ArgumentError("exchangeable_kernel: need N0+1 levels");
  const int n = static_cast<int>(levels.size()) - 1;
  std::vector<double> table(std::size_t{1} << n);
  for (std::size_t v = 0; v < table.size(); ++v) table[v] = levels[std::popcount(v)];
  return table_kernel(n, std::move(table), std::move(label));
}

VotingKernel majority_kernel() { return exchangeable_kernel({0.0, 0.0, 1.0, 1.0}, "majority"); }

VotingKernel sexual_reproduction_kernel() {
  return exchangeable_kernel({0.0, 3.0 / 11.0, 9.0 / 11.0, 9.0 / 11.0}, "sexual_reproduction");
}

namespace {

// Multilinear extension of a table by folding one coordinate at a time.
double fold_table(std::vector<double>& work, std::span<const double> probs) {
  std::size_t len = work.size();
  for (double p : probs) {
    const double q = 1.0 - p;
    len >>= 1;
    for (std::size_t m = 0; m < len; ++m) work[m] = q * work[2 * m] + p * work[2 * m + 1];
  }
  return work[0];
}

}  // namespace

double eval_multivariate_g(const VotingKernel& kernel, std::span<const double> probs,
                           const Decoration* decoration) {
  const int n = kernel.n_children;
  if (static_cast<int>(probs.size()) != n)
    throw ArgumentError("eval_multivariate_g: expected " + std::to_string(n) + " probabilities, got " +
                        std::to_string(probs.size()));
  if (n > 16) throw ArgumentError("eval_multivariate_g: exact enumeration limited to N0 <= 16");
  if (kernel.requires_decoration && decoration == nullptr)
    throw ArgumentError("eval_multivariate_g: kernel '" + kernel.label + "' requires a decoration");
  for (double p : probs)
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("eval_multivariate_g: probability outside [0,1]");

  thread_local std::vector<double> work;
  const std::size_t size = std::size_t{1} << n;
  work.resize(size);
  // Bit i of the vote mask is child i; folding pairs adjacent entries, so the
  // table is walked with child 0 as the lowest bit and probs consumed in order.
  if (!kernel.table.empty() && !kernel.requires_decoration) {
    std::copy(kernel.table.begin(), kernel.table.end(), work.begin());
  } else {
    for (std::size_t v = 0; v < size; ++v) work[v] = kernel.theta(static_cast<VoteMask>(v), decoration);
  }
  return fold_table(work, probs);
}

double GFunction::operator()(double p) const {
  if (!(p == p)) throw ArgumentError("g evaluated at NaN");
  return univariate_raw(std::clamp(p, 0.0, 1.0));
}

double GFunction::multivariate(std::span<const double> probs) const {
  thread_local std::vector<double> clamped;
  clamped.assign(probs.begin(), probs.end());
  for (double& p : clamped) p = std::clamp(p, 0.0, 1.0);
  if (kernel) return eval_multivariate_g(*kernel, clamped);
  return multivariate_raw(clamped);
}

GFunction g_from_kernel(VotingKernel kernel, std::string label) {
  if (kernel.requires_decoration)
    throw ArgumentError("g_from_kernel: decorated kernels need an averaged g");
  GFunction g;
  g.n_children = kernel.n_children;
  g.label = std::move(label);
  auto k = std::make_shared<const VotingKernel>(std::move(kernel));
  g.kernel = k;
  g.univariate_raw = [k](double p) {
    thread_local std::vector<double> probs;
    probs.assign(static_cast<std::size_t>(k->n_children), p);
    return eval_multivariate_g(*k, probs);
  };
  g.metadata["kernel"] = k->label;
  g.metadata["theta_table"] = k->table;
  return g;
}

GFunction majority_g() {
  GFunction g = g_from_kernel(majority_kernel(), "majority");
  g.univariate_raw = [](double p) { return 3.0 * p * p - 2.0 * p * p * p; };
  g.metadata["formula"] = "3p^2 - 2p^3";
  return g;
}

GFunction sexual_reproduction_g() {
  GFunction g = g_from_kernel(sexual_reproduction_kernel(), "sexual_reproduction");
  g.metadata["formula"] = "9/11 (p + p^2 - p^3)";
  g.metadata["bernstein_levels"] = {0.0, 3.0 / 11.0, 9.0 / 11.0, 9.0 / 11.0};
  return g;
}

double iterate_g(const GFunction& g, double p, int n) {
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("iterate_g: p outside [0,1]");
  if (n < 0) throw ArgumentError("iterate_g: negative n");
  for (int i = 0; i < n; ++i) p = g(p);
  return p;
}

int contraction_depth(const GFunction& g, double start, double toward, double target, int max_n) {
  double p = start;
  for (int n = 0; n <= max_n; ++n) {
    if (std::abs(p - toward) <= target) return n;
    p = g(p);
  }
  return -1;
}

double g_derivative(const GFunction& g, double p, double step) {
  if (p < 0.0 || p > 1.0) return 0.0;
  if (p - step < 0.0) return (-3.0 * g(p) + 4.0 * g(p + step) - g(p + 2 * step)) / (2 * step);
  if (p + step > 1.0) return (3.0 * g(p) - 4.0 * g(p - step) + g(p - 2 * step)) / (2 * step);
  return (g(p + step) - g(p - step)) / (2 * step);
}

FixedPointResult find_fixed_points(const GFunction& g, double tol, int grid_n) {
  if (!(tol > 0.0)) throw ArgumentError("find_fixed_points: tol must be positive");
  if (grid_n < 2) throw ArgumentError("find_fixed_points: grid_n must be >= 2");
  constexpr double kZero = 1e-14;
  std::vector<double> grid(static_cast<std::size_t>(grid_n) + 1), h(grid.size());
  for (int i = 0; i <= grid_n; ++i) {
    grid[i] = static_cast<double>(i) / grid_n;
    h[i] = g(grid[i]) - grid[i];
  }
  FixedPointResult out;
  std::vector<char> zero(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) zero[i] = std::abs(h[i]) <= kZero;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!zero[i]) continue;
    out.points.push_back(grid[i]);
    const bool left = i > 0 && zero[i - 1];
    const bool right = i + 1 < grid.size() && zero[i + 1];
    if (left || right) out.degenerate.push_back(grid[i]);
  }
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (zero[i] || zero[i + 1]) continue;
    if ((h[i] < 0) == (h[i + 1] < 0)) continue;
    double lo = grid[i], hi = grid[i + 1], hlo = h[i];
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double hm = g(mid) - mid;
      if (hm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((hm < 0) == (hlo < 0)) {
        lo = mid;
        hlo = hm;
      } else {
        hi = mid;
      }
    }
    out.points.push_back(0.5 * (lo + hi));
  }
  std::sort(out.points.begin(), out.points.end());
  return out;
}

namespace {

bool multivariate_monotone(const GFunction& g, std::vector<std::string>& notes) {
  const int n = g.n_children;
  std::vector<std::vector<double>> samples;
  if (n <= 5) {
    const std::vector<double> levels{0.0, 0.25, 0.5, 0.75, 1.0};
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= levels.size();
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<double> p(n);
      std::size_t c = code;
      for (int i = 0; i < n; ++i) {
        p[i] = levels[c % levels.size()];
        c /= levels.size();
      }
      samples.push_back(std::move(p));
    }
  } else {
    std::uint64_t state = 0x2545f4914f6cdd1dULL;
    for (int s = 0; s < 2000; ++s) {
      std::vector<double> p(n);
      for (double& x : p) {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        x = static_cast<double>(state >> 11) * 0x1.0p-53;
      }
      samples.push_back(std::move(p));
    }
  }
  for (const auto& p : samples) {
    const double base = g.multivariate(p);
    for (int i = 0; i < n; ++i) {
      auto q = p;
      q[i] = std::min(1.0, q[i] + 0.25);
      if (g.multivariate(q) < base - 1e-12) {
        notes.push_back("multivariate g decreases when raising coordinate " + std::to_string(i));
        return false;
      }
    }
  }
  for (int i = 0; i <= 200; ++i) {
    const double p = i / 200.0;
    std::vector<double> all(n, p);
    if (std::abs(g.multivariate(all) - g(p)) > 1e-10) {
      notes.push_back("univariate and diagonal multivariate g disagree");
      return false;
    }
  }
  return true;
}

}  // namespace

GAxiomReport verify_g_axioms(const GFunction& g, double tol, int grid_n) {
  GAxiomReport r;
  grid_n = std::max(grid_n, 100);
  const auto fp = find_fixed_points(g, 1e-14, std::max(grid_n, 1000));
  r.fixed_points = fp.points;
  r.degenerate_points = fp.degenerate;
  if (fp.is_degenerate()) r.notes.push_back("degenerate fixed-point plateau detected");

  r.passes["g.0"] = multivariate_monotone(g, r.notes);
  for (int i = 0; i < grid_n; ++i) {
    if (g((i + 1.0) / grid_n) < g(static_cast<double>(i) / grid_n) - 1e-12) {
      r.passes["g.0"] = false;
      r.notes.push_back("univariate g is not nondecreasing");
      break;
    }
  }

  const auto nan = std::numeric_limits<double>::quiet_NaN();
  r.a = r.mu = r.b = nan;
  bool triple = false;
  if (!fp.is_degenerate()) {
    const auto& x = fp.points;
    for (std::size_t i = 0; i + 2 < x.size() && !triple; ++i) {
      const double da = g_derivative(g, x[i]);
      const double dm = g_derivative(g, x[i + 1]);
      const double db = g_derivative(g, x[i + 2]);
      if (std::abs(da) < 1.0 && dm > 1.0 && std::abs(db) < 1.0) {
        r.a = x[i];
        r.mu = x[i + 1];
        r.b = x[i + 2];
        triple = true;
      }
    }
  }
  if (!triple) {
    r.notes.push_back("no stable/unstable/stable triple of fixed points");
    for (const char* name : {"g.1", "g.2", "g.3", "g.5"}) r.passes[name] = false;
    return r;
  }
  r.derivative_at["a"] = g_derivative(g, r.a);
  r.derivative_at["mu"] = g_derivative(g, r.mu);
  r.derivative_at["b"] = g_derivative(g, r.b);

  r.passes["g.1"] = std::abs((r.b - r.mu) - (r.mu - r.a)) <= tol;
  for (double p : fp.points) {
    if (p < r.a || p > r.b) {
      const double d = g_derivative(g, p);
      if (!(d > 1.0)) {
        r.passes["g.1"] = false;
        r.notes.push_back("fixed point outside [a,b] that is not unstable");
      }
    }
  }
  if (std::abs(g(0.0)) > tol) r.notes.push_back("g(0) != 0");
  if (std::abs(g(1.0) - 1.0) > tol) {
    std::ostringstream os;
    os << "g(1) = " << g(1.0) << " != 1; allowed since b < 1";
    r.notes.push_back(os.str());
  }

  bool g2 = true;
  for (int i = 1; i < grid_n; ++i) {
    const double d = r.mu * i / grid_n;
    if (std::abs(g(r.b - d) + g(r.a + d) - (r.a + r.b)) > tol) {
      g2 = false;
      break;
    }
  }
  r.passes["g.2"] = g2 && std::abs(r.a + r.b - 2 * r.mu) <= tol;

  bool positive = true;
  for (int i = 1; i < grid_n; ++i) {
    if (!(g_derivative(g, static_cast<double>(i) / grid_n) > 0.0)) {
      positive = false;
      break;
    }
  }
  const double ga = r.derivative_at["a"], gm = r.derivative_at["mu"], gb = r.derivative_at["b"];
  r.passes["g.3"] = positive && gm > 1.0 && ga < 1.0 && std::abs(ga - gb) <= 1e-6;
  if (!positive) r.notes.push_back("g' not positive on (0,1)");

  r.c0 = (1.0 - ga) / 2.0;
  const double bound = 1.0 - r.c0;
  auto max_abs_derivative = [&](double lo, double hi) {
    double m = 0.0;
    const int steps = std::max(2, static_cast<int>(std::ceil((hi - lo) / 1e-4)));
    for (int i = 0; i <= steps; ++i) m = std::max(m, std::abs(g_derivative(g, lo + (hi - lo) * i / steps)));
    return m;
  };
  r.delta_star = 0.0;
  for (int k = 1; k < 1000; ++k) {
    const double d = k * 1e-3;
    if (max_abs_derivative(r.a - d, r.a + d) < bound && max_abs_derivative(r.b - d, r.b + d) < bound)
      r.delta_star = d;
    else
      break;
  }
  r.passes["g.5"] = r.c0 > 0.0 && r.c0 < 1.0 && r.delta_star > 0.0;
  return r;
}

std::vector<std::string> nlv_condition_flags(const NlvRates& r) {
  std::vector<std::string> flags;
  for (double v : {r.a1, r.a2, r.a3, r.a4})
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("nlv rates must lie in [0,1]");
  if (std::abs(r.a1 - (1.0 - r.a4)) > 1e-12) flags.push_back("rate relation a1 = 1 - a4 violated");
  if (std::abs(r.a2 - (1.0 - r.a3)) > 1e-12) flags.push_back("rate relation a2 = 1 - a3 violated");
  if (!(4 * r.a1 - r.a4 < 0)) flags.push_back("b.1: 4a1 - a4 < 0 violated");
  if (!(12 * r.a1 - 3 * r.a4 + 6 * r.a2 - 4 * r.a3 < 0))
    flags.push_back("b.1: 12a1 - 3a4 + 6a2 - 4a3 < 0 violated");
  if (!(0 <= r.a1 && r.a1 <= r.a2 && r.a2 <= 0.5)) flags.push_back("b.2: 0 <= a1 <= a2 <= 1/2 violated");
  if (!(24 * r.a1 - 6 * r.a4 + 6 * r.a2 - 4 * r.a3 > 0))
    flags.push_back("b.3: 24a1 - 6a4 + 6a2 - 4a3 > 0 violated");
  return flags;
}

VotingKernel nlv_kernel(const NlvRates& r) {
  return exchangeable_kernel({0.0, r.a1, r.a2, r.a3, r.a4, 1.0}, "nonlinear_voter");
}

GFunction nlv_polynomial_g(const NlvRates& r) {
  auto flags = nlv_condition_flags(r);
  GFunction g = g_from_kernel(nlv_kernel(r), "nlv_polynomial");
  const double c1 = 4 * r.a1 - r.a4;
  const double c2 = 6 * r.a2 - 4 * r.a3;
  g.univariate_raw = [c1, c2](double p) {
    const double q = 1.0 - p;
    return c1 * p * q * q * q * q + c2 * p * p * q * q * q - c2 * p * p * p * q * q -
           c1 * p * p * p * p * q + p;
  };
  g.flags = std::move(flags);
  g.metadata["rates"] = {{"a1", r.a1}, {"a2", r.a2}, {"a3", r.a3}, {"a4", r.a4}};
  return g;
}

void to_json(nlohmann::json& j, const GAxiomReport& r) {
  j = nlohmann::json{{"fixed_points", r.fixed_points},
                     {"degenerate_points", r.degenerate_points},
                     {"a", r.a},
                     {"mu", r.mu},
                     {"b", r.b},
                     {"c0", r.c0},
                     {"delta_star", r.delta_star},
                     {"passes", r.passes},
                     {"derivative_at", r.derivative_at},
                     {"notes", r.notes}};
}

void to_json(nlohmann::json& j, const GFunction& g) {
  std::vector<double> values;
  for (int i = 0; i <= 20; ++i) values.push_back(g(i / 20.0));
  j = nlohmann::json{{"label", g.label},
                     {"n_children", g.n_children},
                     {"metadata", g.metadata},
                     {"flags", g.flags},
                     {"values_on_grid_of_21", values}};
  if (g.report) j["report"] = *g.report;
}

}  // namespace mcflab
