#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mcflab {

// Values on the regular grid origin + h·i, i ∈ Π [0, extents[k]); row-major,
// last coordinate fastest.
struct ScalarField {
  int dim = 0;
  std::vector<double> origin;
  double spacing = 1.0;
  std::vector<std::size_t> extents;
  std::vector<double> values;
  double time = 0.0;

  std::size_t size() const { return values.size(); }
  std::size_t stride(int axis) const;
  std::vector<std::size_t> unravel(std::size_t flat) const;
  std::vector<double> coordinate(std::size_t flat) const;
  double coordinate(std::size_t flat, int axis) const;
  // Multilinear interpolation, clamped to the box.
  double interpolate(std::span<const double> x) const;
  void validate() const;
  bool same_grid(const ScalarField& other) const;
};

// Cube [lo, hi]^dim with n nodes per side.
ScalarField make_field(int dim, double lo, double hi, std::size_t n, double time = 0.0);
ScalarField sample_field(ScalarField grid, const std::function<double(std::span<const double>)>& f);

// Little-endian binary: uint32 dim, uint64 extents[dim], f64 spacing,
// f64 origin[dim], f64 time, then the f64 payload in row-major order.
void write_field(const ScalarField& f, const std::string& path);
ScalarField read_field(const std::string& path);

}  // namespace mcflab
