#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mcflab {

using VoteMask = std::uint32_t;  // bit i = vote of child i
using Decoration = std::vector<std::int32_t>;
using ThetaFn = std::function<double(VoteMask, const Decoration*)>;

struct VotingKernel {
  int n_children = 0;
  ThetaFn theta;
  bool is_deterministic = false;
  bool requires_decoration = false;
  std::string label;
  // Cached Θ over all 2^N₀ vote vectors when Θ ignores decorations.
  std::vector<double> table;

  double operator()(VoteMask votes, const Decoration* decoration = nullptr) const;
};

VotingKernel table_kernel(int n_children, std::vector<double> table, std::string label);
// Θ(v) = levels[|v|]; levels has N₀+1 entries.
VotingKernel exchangeable_kernel(std::vector<double> levels, std::string label);
VotingKernel majority_kernel();
VotingKernel sexual_reproduction_kernel();

double eval_multivariate_g(const VotingKernel& kernel, std::span<const double> probs,
                           const Decoration* decoration = nullptr);

struct GAxiomReport {
  std::vector<double> fixed_points;
  std::vector<double> degenerate_points;
  double a = 0, mu = 0, b = 0;
  double c0 = 0, delta_star = 0;
  std::map<std::string, bool> passes;
  std::map<std::string, double> derivative_at;
  std::vector<std::string> notes;
};

struct GFunction {
  int n_children = 0;
  std::string label;
  std::function<double(double)> univariate_raw;
  std::shared_ptr<const VotingKernel> kernel;
  std::function<double(std::span<const double>)> multivariate_raw;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<std::string> flags;
  std::optional<GAxiomReport> report;

  // Constant extension outside [0,1].
  double operator()(double p) const;
  double multivariate(std::span<const double> probs) const;
};

GFunction g_from_kernel(VotingKernel kernel, std::string label);
GFunction majority_g();
GFunction sexual_reproduction_g();

double iterate_g(const GFunction& g, double p, int n);
// Smallest n with g^(n)(start) within target of the fixed point `toward`; -1 if
// not reached after max_n steps.
int contraction_depth(const GFunction& g, double start, double toward, double target,
                      int max_n = 10000);

// Derivative of g restricted to [0,1]: central differences with step 1e-5,
// second-order one-sided at the ends, 0 outside [0,1] (constant extension).
double g_derivative(const GFunction& g, double p, double step = 1e-5);

struct FixedPointResult {
  std::vector<double> points;
  std::vector<double> degenerate;
  bool is_degenerate() const { return !degenerate.empty(); }
};

FixedPointResult find_fixed_points(const GFunction& g, double tol, int grid_n = 10000);
GAxiomReport verify_g_axioms(const GFunction& g, double tol = 1e-8, int grid_n = 1000);

struct NlvRates {
  double a1 = 0.25, a2 = 0.27, a3 = 0.73, a4 = 0.75;
};

// Violated conditions among the rate relations and (b.1)-(b.3), checked as printed.
std::vector<std::string> nlv_condition_flags(const NlvRates& rates);
VotingKernel nlv_kernel(const NlvRates& rates);
GFunction nlv_polynomial_g(const NlvRates& rates);

void to_json(nlohmann::json& j, const GAxiomReport& r);
void to_json(nlohmann::json& j, const GFunction& g);

}  // namespace mcflab
