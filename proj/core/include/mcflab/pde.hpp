#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcflab/field.hpp"
#include "mcflab/gfunction.hpp"

namespace mcflab {

// M is dim×dim row-major with dim = p.size().
// |p| > 0: −½ tr[(Id − p⊗p/|p|²) M]; p = 0: −½[tr M + λ_max(M)].
double f_star(std::span<const double> M, std::span<const double> p);
// As f_star with λ_min at p = 0.
double f_lstar(std::span<const double> M, std::span<const double> p);

// Central differences, second-order one-sided on the boundary of the box.
void field_gradient(const ScalarField& f, std::size_t node, std::span<double> grad);
void field_hessian(const ScalarField& f, std::size_t node, std::span<double> hess);

struct McfOptions {
  double reg_delta = 0.0;  // 0 means 1e-6 times the domain size
  double cfl = 0.2;        // time step cfl·h², at most 1/(2·dim)
};

// ∂_t u = ½ tr[(Id − Du⊗Du/(|Du|² + δ²)) D²u], explicit, Neumann boundary.
ScalarField evolve_mcf_levelset(const ScalarField& u0, double T, const McfOptions& options = {});
ScalarField evolve_mcf_levelset(const ScalarField& u0, double T, double reg_delta, double cfl);

// Points where the multilinear interpolant vanishes on grid edges.
std::vector<std::vector<double>> zero_crossings(const ScalarField& f);
std::string zero_crossings_csv(const ScalarField& f);
// A run of more than 3 consecutive exact zeros along some axis.
bool zero_set_fattened(const ScalarField& f);
// Mean and spread of |x − centre| over the zero crossings.
struct RadiusStats {
  double mean = 0.0, min = 0.0, max = 0.0;
  std::size_t count = 0;
};
RadiusStats zero_set_radius(const ScalarField& f, std::span<const double> centre);

// Distance to the zero set of the interpolant (segments in 2-D, edge crossings
// otherwise), signed like the field.
ScalarField signed_distance(const ScalarField& field);

// ψ_α(h,x) = φ(x) − h[F_*(D²φ(x), Dφ(x)) − α].
ScalarField psi_alpha(const ScalarField& phi, double alpha, double h);

enum class SetLabel : std::uint8_t { negative = 0, zero = 1, positive = 2 };

struct LevelSetTriple {
  std::vector<SetLabel> label;
  std::size_t n_zero = 0, n_positive = 0, n_negative = 0;
  ScalarField psi;

  bool in_negative(std::size_t i) const { return label[i] == SetLabel::negative; }
  bool in_positive(std::size_t i) const { return label[i] == SetLabel::positive; }
  bool in_zero(std::size_t i) const { return label[i] == SetLabel::zero; }
};

// Zero set: exact zeros and, for every sign change along an edge, the endpoint
// closer to the crossing.
LevelSetTriple level_set_triple(ScalarField psi);
LevelSetTriple psi_alpha_sets(const ScalarField& phi, double alpha, double h);

struct SupersolutionReport {
  double min_value = 0.0;  // min over band and times of ∂_t d − ½Δd − α/(4|Dψ|)
  double budget = 0.0;
  bool pass = false;
  std::size_t band_sites = 0;
  std::vector<std::size_t> vanishing_gradient_sites;
  std::vector<double> times;
  double stencil = 0.0;
};

void to_json(nlohmann::json& j, const SupersolutionReport& r);

// Derivatives of d use a stencil of `stencil_cells` grid cells to average out
// the piecewise-linear zero set.
SupersolutionReport check_distance_supersolution(const ScalarField& phi, double alpha, double h0, double band_r0,
                                                 int n_times = 6, int stencil_cells = 4, double budget = 0.05);

struct ReactionDiffusionOptions {
  double dt = 0.0;  // 0 picks 0.9 times the stability bound
};

// Stability bound min(h²/(2·dim), ε²/(4γ‖g' − 1‖_∞)).
double reaction_diffusion_dt_bound(double epsilon, const GFunction& g, double gamma, const ScalarField& grid);

// ∂_t u = ½Δu + γε⁻²(g(u) − u), explicit, Neumann boundary.
ScalarField solve_reaction_diffusion(double epsilon, const GFunction& g, double gamma, const ScalarField& p0,
                                     double T, const ReactionDiffusionOptions& options = {});

}  // namespace mcflab
