#include "mcflab/pde.hpp"

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

#include "mcflab/errors.hpp"

namespace mcflab {

namespace {

int matrix_dim(std::span<const double> M, std::span<const double> p) {
  const auto d = p.size();
  if (d == 0 || M.size() != d * d) throw ArgumentError("F: matrix must be dim x dim with dim = |p|");
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      if (std::fabs(M[i * d + j] - M[j * d + i]) > 1e-12 * (1.0 + std::fabs(M[i * d + j])))
        throw ArgumentError("F: matrix is not symmetric");
  return static_cast<int>(d);
}

double f_generic(std::span<const double> M, std::span<const double> p, bool use_max) {
  const int d = matrix_dim(M, p);
  const auto du = static_cast<std::size_t>(d);
  double p2 = 0.0, tr = 0.0;
  for (std::size_t i = 0; i < du; ++i) {
    p2 += p[i] * p[i];
    tr += M[i * du + i];
  }
  if (p2 > 0.0) {
    double pmp = 0.0;
    for (std::size_t i = 0; i < du; ++i)
      for (std::size_t j = 0; j < du; ++j) pmp += p[i] * M[i * du + j] * p[j];
    return -0.5 * (tr - pmp / p2);
  }
  Eigen::MatrixXd A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = M[static_cast<std::size_t>(i * d + j)];
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  const double lam = use_max ? es.eigenvalues().maxCoeff() : es.eigenvalues().minCoeff();
  return -0.5 * (tr + lam);
}

// Mirrored neighbour index along one axis (ghost u[-1] = u[1], u[n] = u[n-2]).
inline std::size_t mirror(std::size_t i, int s, std::size_t n) {
  if (n == 1) return 0;
  if (s < 0) return i == 0 ? 1 : i - 1;
  return i + 1 == n ? n - 2 : i + 1;
}

struct GridIndex {
  const ScalarField& f;
  std::vector<std::size_t> stride;
  std::vector<std::uint32_t> up, down;  // mirrored neighbours, node-major

  explicit GridIndex(const ScalarField& field) : f(field), stride(static_cast<std::size_t>(field.dim)) {
    const auto d = static_cast<std::size_t>(f.dim);
    for (int k = 0; k < f.dim; ++k) stride[static_cast<std::size_t>(k)] = f.stride(k);
    if (f.size() > std::numeric_limits<std::uint32_t>::max()) throw ArgumentError("field: too many nodes");
    up.resize(f.size() * d);
    down.resize(f.size() * d);
    for (std::size_t i = 0; i < f.size(); ++i)
      for (std::size_t k = 0; k < d; ++k) {
        const std::size_t c = (i / stride[k]) % f.extents[k];
        up[i * d + k] = static_cast<std::uint32_t>(i - c * stride[k] + mirror(c, +1, f.extents[k]) * stride[k]);
        down[i * d + k] = static_cast<std::uint32_t>(i - c * stride[k] + mirror(c, -1, f.extents[k]) * stride[k]);
      }
  }
  std::size_t coord(std::size_t flat, int k) const {
    return (flat / stride[static_cast<std::size_t>(k)]) % f.extents[static_cast<std::size_t>(k)];
  }
  std::size_t shift(std::size_t flat, int k, int s) const {
    const std::size_t at = flat * static_cast<std::size_t>(f.dim) + static_cast<std::size_t>(k);
    return s > 0 ? up[at] : down[at];
  }
  // Same as shift with a stencil reach of `cells` nodes, mirrored at the walls.
  std::size_t shift_by(std::size_t flat, int k, long cells) const {
    const auto ku = static_cast<std::size_t>(k);
    const long n = static_cast<long>(f.extents[ku]);
    const long i = static_cast<long>(coord(flat, k));
    long j = i + cells;
    if (n == 1) j = 0;
    while (j < 0 || j >= n) j = j < 0 ? -j : 2 * (n - 1) - j;
    return flat - static_cast<std::size_t>(i) * stride[ku] + static_cast<std::size_t>(j) * stride[ku];
  }
};

void gradient_at(const GridIndex& g, const std::vector<double>& u, std::size_t i, double h, std::span<double> out) {
  for (int k = 0; k < g.f.dim; ++k)
    out[static_cast<std::size_t>(k)] = (u[g.shift(i, k, +1)] - u[g.shift(i, k, -1)]) / (2.0 * h);
}

void hessian_at(const GridIndex& g, const std::vector<double>& u, std::size_t i, double h, std::span<double> out) {
  const int d = g.f.dim;
  const auto du = static_cast<std::size_t>(d);
  const double h2 = h * h;
  for (int k = 0; k < d; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    out[ku * du + ku] = (u[g.shift(i, k, +1)] - 2.0 * u[i] + u[g.shift(i, k, -1)]) / h2;
    for (int l = k + 1; l < d; ++l) {
      const auto lu = static_cast<std::size_t>(l);
      const std::size_t pp = g.shift(g.shift(i, k, +1), l, +1), pm = g.shift(g.shift(i, k, +1), l, -1);
      const std::size_t mp = g.shift(g.shift(i, k, -1), l, +1), mm = g.shift(g.shift(i, k, -1), l, -1);
      const double v = (u[pp] - u[pm] - u[mp] + u[mm]) / (4.0 * h2);
      out[ku * du + lu] = v;
      out[lu * du + ku] = v;
    }
  }
}

double laplacian_wide(const GridIndex& g, const std::vector<double>& u, std::size_t i, double h, int cells) {
  const double H = h * cells;
  double s = 0.0;
  for (int k = 0; k < g.f.dim; ++k) s += u[g.shift_by(i, k, cells)] - 2.0 * u[i] + u[g.shift_by(i, k, -cells)];
  return s / (H * H);
}

void check_finite(const std::vector<double>& u, const char* who, double t) {
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!std::isfinite(u[i])) {
      std::ostringstream os;
      os << who << ": non-finite value at node " << i << " at time " << t;
      throw NumericalError(os.str());
    }
}

}  // namespace

double f_star(std::span<const double> M, std::span<const double> p) { return f_generic(M, p, true); }
double f_lstar(std::span<const double> M, std::span<const double> p) { return f_generic(M, p, false); }

namespace {

// First-derivative stencil along an axis at coordinate c of n nodes: central in
// the interior, second-order one-sided at the ends.
int first_stencil(std::size_t c, std::size_t n, long off[3], double w[3]) {
  if (n == 1) return 0;
  if (n == 2) {
    off[0] = c == 0 ? 0 : -1, w[0] = -1.0;
    off[1] = off[0] + 1, w[1] = 1.0;
    return 2;
  }
  if (c == 0) {
    off[0] = 0, off[1] = 1, off[2] = 2, w[0] = -1.5, w[1] = 2.0, w[2] = -0.5;
  } else if (c + 1 == n) {
    off[0] = 0, off[1] = -1, off[2] = -2, w[0] = 1.5, w[1] = -2.0, w[2] = 0.5;
  } else {
    off[0] = -1, off[1] = 1, w[0] = -0.5, w[1] = 0.5;
    return 2;
  }
  return 3;
}

int second_stencil(std::size_t c, std::size_t n, long off[4], double w[4]) {
  if (n < 3) return 0;
  const long dir = c == 0 ? 1 : -1;
  if (c == 0 || c + 1 == n) {
    if (n >= 4) {
      const double ww[4] = {2.0, -5.0, 4.0, -1.0};
      for (int j = 0; j < 4; ++j) off[j] = dir * j, w[j] = ww[j];
      return 4;
    }
    for (int j = 0; j < 3; ++j) off[j] = dir * j, w[j] = j == 1 ? -2.0 : 1.0;
    return 3;
  }
  off[0] = -1, off[1] = 0, off[2] = 1, w[0] = 1.0, w[1] = -2.0, w[2] = 1.0;
  return 3;
}

double first_derivative(const ScalarField& f, std::size_t i, int k) {
  const auto ku = static_cast<std::size_t>(k);
  const std::size_t s = f.stride(k), c = (i / s) % f.extents[ku];
  long off[3];
  double w[3];
  double acc = 0.0;
  const int m = first_stencil(c, f.extents[ku], off, w);
  for (int j = 0; j < m; ++j) acc += w[j] * f.values[static_cast<std::size_t>(static_cast<long>(i) + off[j] * static_cast<long>(s))];
  return acc / f.spacing;
}

}  // namespace

void field_gradient(const ScalarField& f, std::size_t node, std::span<double> grad) {
  for (int k = 0; k < f.dim; ++k) grad[static_cast<std::size_t>(k)] = first_derivative(f, node, k);
}

void field_hessian(const ScalarField& f, std::size_t node, std::span<double> hess) {
  const auto du = static_cast<std::size_t>(f.dim);
  const double h2 = f.spacing * f.spacing;
  for (int k = 0; k < f.dim; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const auto sk = static_cast<long>(f.stride(k));
    const std::size_t ck = (node / f.stride(k)) % f.extents[ku];
    long off[4];
    double w[4];
    double acc = 0.0;
    const int m = second_stencil(ck, f.extents[ku], off, w);
    for (int j = 0; j < m; ++j) acc += w[j] * f.values[static_cast<std::size_t>(static_cast<long>(node) + off[j] * sk)];
    hess[ku * du + ku] = acc / h2;
    for (int l = k + 1; l < f.dim; ++l) {
      long o1[3];
      double w1[3];
      double mixed = 0.0;
      const int m1 = first_stencil(ck, f.extents[ku], o1, w1);
      for (int j = 0; j < m1; ++j)
        mixed += w1[j] * first_derivative(f, static_cast<std::size_t>(static_cast<long>(node) + o1[j] * sk), l);
      mixed /= f.spacing;
      hess[ku * du + static_cast<std::size_t>(l)] = mixed;
      hess[static_cast<std::size_t>(l) * du + ku] = mixed;
    }
  }
}

ScalarField evolve_mcf_levelset(const ScalarField& u0, double T, const McfOptions& options) {
  u0.validate();
  if (!(T >= 0.0)) throw ArgumentError("evolve_mcf_levelset: T must be >= 0");
  const int d = u0.dim;
  if (!(options.cfl > 0.0) || options.cfl > 1.0 / (2.0 * d))
    throw ArgumentError("evolve_mcf_levelset: cfl must lie in (0, 1/(2 dim)]");
  double size = 0.0;
  for (auto e : u0.extents) size = std::max(size, u0.spacing * static_cast<double>(e - 1));
  const double delta = options.reg_delta > 0.0 ? options.reg_delta : 1e-6 * size;
  const double h = u0.spacing;
  const auto steps = static_cast<long>(std::ceil(T / (options.cfl * h * h)));
  const double dt = steps > 0 ? T / static_cast<double>(steps) : 0.0;
  ScalarField out = u0;
  std::vector<double> next(out.values.size());
  GridIndex g(out);
  const auto du = static_cast<std::size_t>(d);
  const long n = static_cast<long>(out.values.size());
  for (long s = 0; s < steps; ++s) {
    const auto& u = out.values;
#pragma omp parallel
    {
      std::vector<double> grad(du), hess(du * du);
#pragma omp for schedule(static)
      for (long il = 0; il < n; ++il) {
        const auto i = static_cast<std::size_t>(il);
        gradient_at(g, u, i, h, grad);
        hessian_at(g, u, i, h, hess);
        double q = delta * delta, lap = 0.0, dir = 0.0;
        for (std::size_t k = 0; k < du; ++k) {
          q += grad[k] * grad[k];
          lap += hess[k * du + k];
        }
        for (std::size_t k = 0; k < du; ++k)
          for (std::size_t l = 0; l < du; ++l) dir += grad[k] * hess[k * du + l] * grad[l];
        next[i] = u[i] + dt * 0.5 * (lap - dir / q);
      }
    }
    out.values.swap(next);
    if ((s + 1) % 64 == 0 || s + 1 == steps) check_finite(out.values, "evolve_mcf_levelset", out.time + (s + 1) * dt);
  }
  out.time = u0.time + T;
  return out;
}

ScalarField evolve_mcf_levelset(const ScalarField& u0, double T, double reg_delta, double cfl) {
  return evolve_mcf_levelset(u0, T, McfOptions{reg_delta, cfl});
}

std::vector<std::vector<double>> zero_crossings(const ScalarField& f) {
  f.validate();
  GridIndex g(f);
  std::vector<std::vector<double>> pts;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double vi = f.values[i];
    if (vi == 0.0) {
      pts.push_back(f.coordinate(i));
      continue;
    }
    for (int k = 0; k < f.dim; ++k) {
      if (g.coord(i, k) + 1 >= f.extents[static_cast<std::size_t>(k)]) continue;
      const std::size_t j = i + g.stride[static_cast<std::size_t>(k)];
      const double vj = f.values[j];
      if (vj == 0.0 || (vi < 0.0) == (vj < 0.0)) continue;
      auto x = f.coordinate(i);
      x[static_cast<std::size_t>(k)] += f.spacing * vi / (vi - vj);
      pts.push_back(std::move(x));
    }
  }
  return pts;
}

std::string zero_crossings_csv(const ScalarField& f) {
  std::ostringstream os;
  os.precision(17);
  for (int k = 0; k < f.dim; ++k) os << (k ? "," : "") << "x" << k;
  os << '\n';
  for (const auto& p : zero_crossings(f)) {
    for (std::size_t k = 0; k < p.size(); ++k) os << (k ? "," : "") << p[k];
    os << '\n';
  }
  return os.str();
}

bool zero_set_fattened(const ScalarField& f) {
  GridIndex g(f);
  for (int k = 0; k < f.dim; ++k) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (g.coord(i, k) != 0) continue;
      int run = 0;
      for (std::size_t j = i, c = 0; c < f.extents[static_cast<std::size_t>(k)]; ++c, j += g.stride[static_cast<std::size_t>(k)]) {
        run = f.values[j] == 0.0 ? run + 1 : 0;
        if (run > 3) return true;
      }
    }
  }
  return false;
}

RadiusStats zero_set_radius(const ScalarField& f, std::span<const double> centre) {
  RadiusStats r;
  const auto pts = zero_crossings(f);
  if (pts.empty()) return r;
  r.min = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto& p : pts) {
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) s += (p[k] - centre[k]) * (p[k] - centre[k]);
    const double rad = std::sqrt(s);
    sum += rad;
    r.min = std::min(r.min, rad);
    r.max = std::max(r.max, rad);
  }
  r.count = pts.size();
  r.mean = sum / static_cast<double>(pts.size());
  return r;
}

namespace {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

template <int D>
ScalarField distance_with_rtree(const ScalarField& field,
                                const std::vector<std::pair<std::vector<double>, std::vector<double>>>& prims) {
  using P = bg::model::point<double, D, bg::cs::cartesian>;
  using S = bg::model::segment<P>;
  auto to_point = [](const std::vector<double>& x) {
    P p;
    bg::set<0>(p, x[0]);
    if constexpr (D > 1) bg::set<1>(p, x[1]);
    if constexpr (D > 2) bg::set<2>(p, x[2]);
    return p;
  };
  std::vector<S> segs;
  segs.reserve(prims.size());
  for (const auto& [a, b] : prims) segs.emplace_back(to_point(a), to_point(b));
  const bgi::rtree<S, bgi::quadratic<16>> tree(segs.begin(), segs.end());
  ScalarField out = field;
  const long n = static_cast<long>(field.size());
#pragma omp parallel for schedule(static)
  for (long il = 0; il < n; ++il) {
    const auto i = static_cast<std::size_t>(il);
    const double v = field.values[i];
    if (v == 0.0) {
      out.values[i] = 0.0;
      continue;
    }
    const P x = to_point(field.coordinate(i));
    std::vector<S> near;
    tree.query(bgi::nearest(x, 1), std::back_inserter(near));
    const double dist = bg::distance(x, near.front());
    out.values[i] = v < 0.0 ? -dist : dist;
  }
  return out;
}

// Marching-squares segments of the bilinear interpolant on each cell.
std::vector<std::pair<std::vector<double>, std::vector<double>>> segments_2d(const ScalarField& f) {
  std::vector<std::pair<std::vector<double>, std::vector<double>>> segs;
  const std::size_t nx = f.extents[0], ny = f.extents[1];
  const double h = f.spacing;
  auto val = [&](std::size_t i, std::size_t j) { return f.values[i * ny + j]; };
  auto neg = [](double v) { return v < 0.0; };
  for (std::size_t i = 0; i + 1 < nx; ++i)
    for (std::size_t j = 0; j + 1 < ny; ++j) {
      const double c[4] = {val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)};
      const double cx[4] = {0, 1, 1, 0}, cy[4] = {0, 0, 1, 1};
      std::vector<std::vector<double>> pts;
      for (int e = 0; e < 4; ++e) {
        const int a = e, b = (e + 1) % 4;
        if (neg(c[a]) == neg(c[b])) continue;
        const double t = c[a] / (c[a] - c[b]);
        pts.push_back({f.origin[0] + h * (static_cast<double>(i) + cx[a] + t * (cx[b] - cx[a])),
                       f.origin[1] + h * (static_cast<double>(j) + cy[a] + t * (cy[b] - cy[a]))});
      }
      if (pts.size() == 2) {
        segs.emplace_back(pts[0], pts[1]);
      } else if (pts.size() == 4) {
        const double centre = 0.25 * (c[0] + c[1] + c[2] + c[3]);
        // Crossings are ordered along edges 0-1, 1-2, 2-3, 3-0; the centre sign
        // decides which corners are joined.
        if (neg(centre) == neg(c[0])) {
          segs.emplace_back(pts[0], pts[1]);
          segs.emplace_back(pts[2], pts[3]);
        } else {
          segs.emplace_back(pts[3], pts[0]);
          segs.emplace_back(pts[1], pts[2]);
        }
      }
    }
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.values[i] == 0.0) {
      auto x = f.coordinate(i);
      segs.emplace_back(x, x);
    }
  return segs;
}

}  // namespace

ScalarField signed_distance(const ScalarField& field) {
  field.validate();
  bool has_neg = false, has_pos = false;
  for (double v : field.values) {
    has_neg = has_neg || v < 0.0;
    has_pos = has_pos || v > 0.0;
  }
  if (!(has_neg && (has_pos || std::any_of(field.values.begin(), field.values.end(), [](double v) { return v == 0.0; }))))
    throw ArgumentError("signed_distance: field does not change sign");
  if (field.dim > 3) throw ArgumentError("signed_distance: dim must be 1, 2 or 3");
  std::vector<std::pair<std::vector<double>, std::vector<double>>> prims;
  if (field.dim == 2) {
    prims = segments_2d(field);
  } else {
    for (auto& p : zero_crossings(field)) prims.emplace_back(p, p);
  }
  if (prims.empty()) throw ArgumentError("signed_distance: empty zero set");
  switch (field.dim) {
    case 1:
      return distance_with_rtree<1>(field, prims);
    case 2:
      return distance_with_rtree<2>(field, prims);
    default:
      return distance_with_rtree<3>(field, prims);
  }
}

ScalarField psi_alpha(const ScalarField& phi, double alpha, double h) {
  phi.validate();
  ScalarField psi = phi;
  if (h == 0.0) return psi;
  const auto du = static_cast<std::size_t>(phi.dim);
  std::vector<double> grad(du), hess(du * du);
  for (std::size_t i = 0; i < phi.size(); ++i) {
    field_gradient(phi, i, grad);
    field_hessian(phi, i, hess);
    psi.values[i] = phi.values[i] - h * (f_star(hess, grad) - alpha);
  }
  return psi;
}

LevelSetTriple level_set_triple(ScalarField psi) {
  psi.validate();
  LevelSetTriple t;
  const std::size_t n = psi.size();
  t.label.assign(n, SetLabel::positive);
  GridIndex g(psi);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = psi.values[i];
    t.label[i] = v < 0.0 ? SetLabel::negative : SetLabel::positive;
    if (v == 0.0) {
      t.label[i] = SetLabel::zero;
      continue;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = psi.values[i];
    for (int k = 0; k < psi.dim; ++k) {
      if (g.coord(i, k) + 1 >= psi.extents[static_cast<std::size_t>(k)]) continue;
      const std::size_t j = i + g.stride[static_cast<std::size_t>(k)];
      const double vj = psi.values[j];
      if (vi == 0.0 || vj == 0.0 || (vi < 0.0) == (vj < 0.0)) continue;
      t.label[std::fabs(vi) <= std::fabs(vj) ? i : j] = SetLabel::zero;
    }
  }
  for (auto l : t.label) {
    t.n_zero += l == SetLabel::zero;
    t.n_positive += l == SetLabel::positive;
    t.n_negative += l == SetLabel::negative;
  }
  t.psi = std::move(psi);
  return t;
}

LevelSetTriple psi_alpha_sets(const ScalarField& phi, double alpha, double h) {
  return level_set_triple(psi_alpha(phi, alpha, h));
}

void to_json(nlohmann::json& j, const SupersolutionReport& r) {
  j = {{"min_value", r.min_value},   {"budget", r.budget}, {"pass", r.pass},
       {"band_sites", r.band_sites}, {"vanishing_gradient_sites", r.vanishing_gradient_sites.size()},
       {"times", r.times},           {"stencil", r.stencil}};
}

SupersolutionReport check_distance_supersolution(const ScalarField& phi, double alpha, double h0, double band_r0,
                                                 int n_times, int stencil_cells, double budget) {
  if (!(h0 > 0.0) || n_times < 2 || stencil_cells < 1 || !(band_r0 > 0.0))
    throw ArgumentError("check_distance_supersolution: invalid parameters");
  SupersolutionReport r;
  r.budget = budget;
  r.stencil = stencil_cells * phi.spacing;
  r.min_value = std::numeric_limits<double>::infinity();
  const double dt = h0 / n_times;
  std::vector<ScalarField> psi, dist;
  for (int k = 0; k <= n_times; ++k) {
    r.times.push_back(k * dt);
    psi.push_back(psi_alpha(phi, alpha, k * dt));
    dist.push_back(signed_distance(psi.back()));
  }
  GridIndex g(phi);
  const auto du = static_cast<std::size_t>(phi.dim);
  std::vector<double> grad(du);
  const long margin = stencil_cells + 1;
  for (int k = 1; k < n_times; ++k) {
    for (std::size_t i = 0; i < phi.size(); ++i) {
      bool inner = true;
      for (int a = 0; a < phi.dim && inner; ++a) {
        const auto c = static_cast<long>(g.coord(i, a));
        inner = c >= margin && c + margin < static_cast<long>(phi.extents[static_cast<std::size_t>(a)]);
      }
      if (!inner || std::fabs(dist[static_cast<std::size_t>(k)].values[i]) >= band_r0) continue;
      ++r.band_sites;
      field_gradient(psi[static_cast<std::size_t>(k)], i, grad);
      double gn = 0.0;
      for (double x : grad) gn += x * x;
      gn = std::sqrt(gn);
      if (gn < 1e-8) {
        r.vanishing_gradient_sites.push_back(i);
        continue;
      }
      const double dtd = (dist[static_cast<std::size_t>(k + 1)].values[i] - dist[static_cast<std::size_t>(k - 1)].values[i]) / (2.0 * dt);
      const double lap = laplacian_wide(g, dist[static_cast<std::size_t>(k)].values, i, phi.spacing, stencil_cells);
      r.min_value = std::min(r.min_value, dtd - 0.5 * lap - alpha / (4.0 * gn));
    }
  }
  if (r.band_sites == 0) r.min_value = 0.0;
  r.pass = r.band_sites > 0 && r.min_value >= -budget;
  return r;
}

double reaction_diffusion_dt_bound(double epsilon, const GFunction& g, double gamma, const ScalarField& grid) {
  double worst = 0.0;
  for (int i = 0; i <= 1000; ++i) worst = std::max(worst, std::fabs(g_derivative(g, i / 1000.0) - 1.0));
  const double diffusion = grid.spacing * grid.spacing / (2.0 * grid.dim);
  const double reaction = worst > 0.0 ? epsilon * epsilon / (4.0 * gamma * worst) : diffusion;
  return std::min(diffusion, reaction);
}

ScalarField solve_reaction_diffusion(double epsilon, const GFunction& g, double gamma, const ScalarField& p0,
                                     double T, const ReactionDiffusionOptions& options) {
  p0.validate();
  if (!(epsilon > 0.0) || !(gamma > 0.0) || !(T >= 0.0))
    throw ArgumentError("solve_reaction_diffusion: invalid parameters");
  const double bound = reaction_diffusion_dt_bound(epsilon, g, gamma, p0);
  double dt = options.dt > 0.0 ? options.dt : 0.9 * bound;
  if (dt > bound) throw ArgumentError("solve_reaction_diffusion: dt exceeds the stability bound");
  const auto steps = static_cast<long>(std::ceil(T / dt));
  dt = steps > 0 ? T / static_cast<double>(steps) : 0.0;
  const double rate = gamma / (epsilon * epsilon);
  const double h2 = p0.spacing * p0.spacing;
  ScalarField out = p0;
  std::vector<double> next(out.size());
  GridIndex gi(out);
  const long n = static_cast<long>(out.size());
  for (long s = 0; s < steps; ++s) {
    const auto& u = out.values;
    bool escaped = false;
#pragma omp parallel for schedule(static) reduction(|| : escaped)
    for (long il = 0; il < n; ++il) {
      const auto i = static_cast<std::size_t>(il);
      double lap = 0.0;
      for (int k = 0; k < out.dim; ++k) lap += u[gi.shift(i, k, +1)] - 2.0 * u[i] + u[gi.shift(i, k, -1)];
      const double v = u[i] + dt * (0.5 * lap / h2 + rate * (g(u[i]) - u[i]));
      next[i] = v;
      escaped = escaped || !(v >= -0.1 && v <= 1.1);
    }
    out.values.swap(next);
    if (escaped) {
      std::ostringstream os;
      os << "solve_reaction_diffusion: solution left [-0.1, 1.1] at time " << p0.time + (s + 1) * dt;
      throw NumericalError(os.str());
    }
  }
  out.time = p0.time + T;
  return out;
}

}  // namespace mcflab
