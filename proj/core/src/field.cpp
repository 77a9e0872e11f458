#include "mcflab/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "mcflab/errors.hpp"

namespace mcflab {

std::size_t ScalarField::stride(int axis) const {
  std::size_t s = 1;
  for (int k = dim - 1; k > axis; --k) s *= extents[static_cast<std::size_t>(k)];
  return s;
}

std::vector<std::size_t> ScalarField::unravel(std::size_t flat) const {
  std::vector<std::size_t> idx(static_cast<std::size_t>(dim));
  for (int k = dim - 1; k >= 0; --k) {
    const auto e = extents[static_cast<std::size_t>(k)];
    idx[static_cast<std::size_t>(k)] = flat % e;
    flat /= e;
  }
  return idx;
}

std::vector<double> ScalarField::coordinate(std::size_t flat) const {
  auto idx = unravel(flat);
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k)
    x[static_cast<std::size_t>(k)] = origin[static_cast<std::size_t>(k)] + spacing * static_cast<double>(idx[static_cast<std::size_t>(k)]);
  return x;
}

double ScalarField::coordinate(std::size_t flat, int axis) const {
  const std::size_t i = (flat / stride(axis)) % extents[static_cast<std::size_t>(axis)];
  return origin[static_cast<std::size_t>(axis)] + spacing * static_cast<double>(i);
}

double ScalarField::interpolate(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim) throw ArgumentError("interpolate: dimension mismatch");
  std::vector<std::size_t> base(static_cast<std::size_t>(dim));
  std::vector<double> frac(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double n = static_cast<double>(extents[ku] - 1);
    const double s = std::clamp((x[ku] - origin[ku]) / spacing, 0.0, n);
    const double f = std::min(std::floor(s), std::max(n - 1.0, 0.0));
    base[ku] = static_cast<std::size_t>(f);
    frac[ku] = extents[ku] > 1 ? s - f : 0.0;
  }
  double out = 0.0;
  for (unsigned corner = 0; corner < (1u << dim); ++corner) {
    double w = 1.0;
    std::size_t flat = 0;
    for (int k = 0; k < dim; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const bool up = (corner >> k) & 1u;
      if (up && extents[ku] == 1) {
        w = 0.0;
        break;
      }
      w *= up ? frac[ku] : 1.0 - frac[ku];
      flat = flat * extents[ku] + base[ku] + (up ? 1 : 0);
    }
    if (w != 0.0) out += w * values[flat];
  }
  return out;
}

void ScalarField::validate() const {
  if (dim < 1 || origin.size() != static_cast<std::size_t>(dim) || extents.size() != static_cast<std::size_t>(dim))
    throw ArgumentError("field: inconsistent dimension");
  if (!(spacing > 0.0)) throw ArgumentError("field: spacing must be positive");
  std::size_t n = 1;
  for (auto e : extents) {
    if (e == 0) throw ArgumentError("field: empty extent");
    n *= e;
  }
  if (values.size() != n) throw ArgumentError("field: payload size does not match extents");
  for (double v : values)
    if (!std::isfinite(v)) throw ArgumentError("field: non-finite value");
}

bool ScalarField::same_grid(const ScalarField& o) const {
  return dim == o.dim && origin == o.origin && spacing == o.spacing && extents == o.extents;
}

ScalarField make_field(int dim, double lo, double hi, std::size_t n, double time) {
  if (dim < 1 || n < 2 || !(hi > lo)) throw ArgumentError("make_field: invalid box");
  ScalarField f;
  f.dim = dim;
  f.origin.assign(static_cast<std::size_t>(dim), lo);
  f.spacing = (hi - lo) / static_cast<double>(n - 1);
  f.extents.assign(static_cast<std::size_t>(dim), n);
  f.values.assign(static_cast<std::size_t>(std::pow(static_cast<double>(n), dim)), 0.0);
  f.time = time;
  return f;
}

ScalarField sample_field(ScalarField grid, const std::function<double(std::span<const double>)>& f) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto x = grid.coordinate(i);
    grid.values[i] = f(x);
  }
  return grid;
}

namespace {

static_assert(std::endian::native == std::endian::little, "field I/O assumes a little-endian host");

template <class T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T take(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw ArgumentError("read_field: truncated file");
  return v;
}

}  // namespace

void write_field(const ScalarField& f, const std::string& path) {
  f.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ResourceError("write_field: cannot open " + path);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.dim));
  for (auto e : f.extents) put<std::uint64_t>(os, e);
  put<double>(os, f.spacing);
  for (double o : f.origin) put<double>(os, o);
  put<double>(os, f.time);
  os.write(reinterpret_cast<const char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!os) throw ResourceError("write_field: write failed for " + path);
}

ScalarField read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ArgumentError("read_field: cannot open " + path);
  ScalarField f;
  f.dim = static_cast<int>(take<std::uint32_t>(is));
  if (f.dim < 1 || f.dim > 8) throw ArgumentError("read_field: bad dimension");
  std::size_t n = 1;
  for (int k = 0; k < f.dim; ++k) {
    f.extents.push_back(static_cast<std::size_t>(take<std::uint64_t>(is)));
    n *= f.extents.back();
  }
  f.spacing = take<double>(is);
  for (int k = 0; k < f.dim; ++k) f.origin.push_back(take<double>(is));
  f.time = take<double>(is);
  f.values.resize(n);
  is.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw ArgumentError("read_field: truncated payload");
  f.validate();
  return f;
}

}  // namespace mcflab
