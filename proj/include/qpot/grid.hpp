#pragma once

// Spatial grids, sampled fields and the finite-difference operators that act
// on them. Everything here is a value type; operations return new fields.

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace qpot {

using cplx = std::complex<double>;

/// Raised for malformed grids, undersized grids and operands living on
/// different grids.
class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Boundary { periodic, dirichlet };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

inline constexpr std::size_t kMinGridPoints = 8;

/// Uniform 1D grid. Periodic grids exclude the right end point
/// (dx = L / n); dirichlet grids include both walls (dx = L / (n - 1)).
class Grid1D {
 public:
  Grid1D(double xmin, double xmax, std::size_t n, Boundary boundary);

  double xmin() const noexcept { return xmin_; }
  double xmax() const noexcept { return xmax_; }
  std::size_t size() const noexcept { return n_; }
  Boundary boundary() const noexcept { return boundary_; }
  double dx() const noexcept { return dx_; }
  double length() const noexcept { return xmax_ - xmin_; }
  bool periodic() const noexcept { return boundary_ == Boundary::periodic; }

  double x(std::size_t i) const noexcept { return xmin_ + static_cast<double>(i) * dx_; }
  std::vector<double> nodes() const;

  /// Same domain at half the spacing. Node i of this grid is node 2i of the
  /// refined one.
  Grid1D refined() const;

  friend bool operator==(const Grid1D& a, const Grid1D& b) {
    return a.xmin_ == b.xmin_ && a.xmax_ == b.xmax_ && a.n_ == b.n_ && a.boundary_ == b.boundary_;
  }

 private:
  double xmin_;
  double xmax_;
  std::size_t n_;
  Boundary boundary_;
  double dx_;
};

/// Radial grid for spherically symmetric fields; the origin is excluded.
class RadialGrid {
 public:
  RadialGrid(double rmin, double rmax, std::size_t n);

  double rmin() const noexcept { return rmin_; }
  double rmax() const noexcept { return rmax_; }
  std::size_t size() const noexcept { return n_; }
  double dr() const noexcept { return dr_; }
  double r(std::size_t i) const noexcept { return rmin_ + static_cast<double>(i) * dr_; }
  std::vector<double> nodes() const;
  RadialGrid refined() const;

  friend bool operator==(const RadialGrid& a, const RadialGrid& b) {
    return a.rmin_ == b.rmin_ && a.rmax_ == b.rmax_ && a.n_ == b.n_;
  }

 private:
  double rmin_;
  double rmax_;
  std::size_t n_;
  double dr_;
};

using AnyGrid = std::variant<Grid1D, RadialGrid>;

std::size_t node_count(const AnyGrid& g) noexcept;
double coordinate(const AnyGrid& g, std::size_t i) noexcept;
/// True where a three-point centered stencil is available at node i.
bool has_centered_stencil(const AnyGrid& g, std::size_t i) noexcept;
/// Trapezoidal weights (uniform dx on periodic grids).
std::vector<double> quadrature_weights(const AnyGrid& g);

/// One real or complex sample per grid node. All samples are finite.
template <class T>
class Field {
 public:
  using value_type = T;

  Field(AnyGrid grid, std::vector<T> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != node_count(grid_)) {
      throw GridError("field has " + std::to_string(values_.size()) + " samples for a grid of " +
                      std::to_string(node_count(grid_)) + " nodes");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!is_finite(values_[i])) {
        throw GridError("non-finite field sample at node " + std::to_string(i));
      }
    }
  }

  const AnyGrid& grid() const noexcept { return grid_; }
  std::span<const T> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  const T& operator[](std::size_t i) const noexcept { return values_[i]; }
  double coord(std::size_t i) const noexcept { return coordinate(grid_, i); }

  bool on_line() const noexcept { return std::holds_alternative<Grid1D>(grid_); }
  const Grid1D& line() const {
    if (const auto* g = std::get_if<Grid1D>(&grid_)) return *g;
    throw GridError("operation requires a Grid1D field");
  }
  const RadialGrid& radial() const {
    if (const auto* g = std::get_if<RadialGrid>(&grid_)) return *g;
    throw GridError("operation requires a RadialGrid field");
  }

 private:
  static bool is_finite(double v) { return std::isfinite(v); }
  static bool is_finite(const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

  AnyGrid grid_;
  std::vector<T> values_;
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;

/// Evaluate fn at every node of the grid.
template <class Fn>
auto sample(const AnyGrid& grid, Fn&& fn) {
  using R = std::decay_t<decltype(fn(0.0))>;
  using T = std::conditional_t<std::is_same_v<R, cplx>, cplx, double>;
  std::vector<T> v(node_count(grid));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<T>(fn(coordinate(grid, i)));
  return Field<T>(grid, std::move(v));
}

void require_same_grid(const AnyGrid& a, const AnyGrid& b);

// Second-order finite differences. Interior nodes use centered stencils;
// periodic grids wrap, dirichlet grids use one-sided second-order stencils
// at the two end nodes.
RealField gradient(const RealField& f);
ComplexField gradient(const ComplexField& f);
RealField laplacian(const RealField& f);
ComplexField laplacian(const ComplexField& f);

/// (1/r^2) d/dr (r^2 df/dr) evaluated as f'' + (2/r) f'.
RealField radial_laplacian_3d(const RealField& f);

double l2_norm(const RealField& f);
double l2_norm(const ComplexField& f);
/// <f|g> = sum_i w_i conj(f_i) g_i
cplx inner_product(const ComplexField& f, const ComplexField& g);
double inner_product(const RealField& f, const RealField& g);
double l2_distance(const RealField& f, const RealField& g);
double l2_distance(const ComplexField& f, const ComplexField& g);

ComplexField to_complex(const RealField& f);
ComplexField scaled(const ComplexField& f, cplx factor);

}  // namespace qpot
