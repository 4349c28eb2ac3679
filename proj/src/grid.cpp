#include "qpot/grid.hpp"

#include <cmath>

namespace qpot {

std::string to_string(Boundary b) {
  return b == Boundary::periodic ? "periodic" : "dirichlet";
}

Boundary boundary_from_string(const std::string& s) {
  if (s == "periodic") return Boundary::periodic;
  if (s == "dirichlet") return Boundary::dirichlet;
  throw GridError("unknown boundary '" + s + "' (expected periodic or dirichlet)");
}

Grid1D::Grid1D(double xmin, double xmax, std::size_t n, Boundary boundary)
    : xmin_(xmin), xmax_(xmax), n_(n), boundary_(boundary), dx_(0.0) {
  if (!std::isfinite(xmin) || !std::isfinite(xmax) || !(xmax > xmin)) {
    throw GridError("grid requires finite xmin < xmax");
  }
  if (n < kMinGridPoints) {
    throw GridError("grid requires at least " + std::to_string(kMinGridPoints) + " points, got " +
                    std::to_string(n));
  }
  const double span = xmax - xmin;
  dx_ = boundary == Boundary::periodic ? span / static_cast<double>(n) : span / static_cast<double>(n - 1);
}

std::vector<double> Grid1D::nodes() const {
  std::vector<double> v(n_);
  for (std::size_t i = 0; i < n_; ++i) v[i] = x(i);
  return v;
}

Grid1D Grid1D::refined() const {
  return Grid1D(xmin_, xmax_, periodic() ? 2 * n_ : 2 * n_ - 1, boundary_);
}

RadialGrid::RadialGrid(double rmin, double rmax, std::size_t n) : rmin_(rmin), rmax_(rmax), n_(n), dr_(0.0) {
  if (!std::isfinite(rmin) || !std::isfinite(rmax) || !(rmin > 0.0) || !(rmax > rmin)) {
    throw GridError("radial grid requires 0 < rmin < rmax");
  }
  if (n < kMinGridPoints) {
    throw GridError("radial grid requires at least " + std::to_string(kMinGridPoints) + " points");
  }
  dr_ = (rmax - rmin) / static_cast<double>(n - 1);
}

std::vector<double> RadialGrid::nodes() const {
  std::vector<double> v(n_);
  for (std::size_t i = 0; i < n_; ++i) v[i] = r(i);
  return v;
}

RadialGrid RadialGrid::refined() const { return RadialGrid(rmin_, rmax_, 2 * n_ - 1); }

std::size_t node_count(const AnyGrid& g) noexcept {
  return std::visit([](const auto& grid) { return grid.size(); }, g);
}

double coordinate(const AnyGrid& g, std::size_t i) noexcept {
  if (const auto* line = std::get_if<Grid1D>(&g)) return line->x(i);
  return std::get<RadialGrid>(g).r(i);
}

bool has_centered_stencil(const AnyGrid& g, std::size_t i) noexcept {
  if (const auto* line = std::get_if<Grid1D>(&g); line && line->periodic()) return true;
  return i > 0 && i + 1 < node_count(g);
}

std::vector<double> quadrature_weights(const AnyGrid& g) {
  const std::size_t n = node_count(g);
  double h = 0.0;
  bool trapezoid = true;
  if (const auto* line = std::get_if<Grid1D>(&g)) {
    h = line->dx();
    trapezoid = !line->periodic();
  } else {
    h = std::get<RadialGrid>(g).dr();
  }
  std::vector<double> w(n, h);
  if (trapezoid) {
    w.front() *= 0.5;
    w.back() *= 0.5;
  }
  return w;
}

void require_same_grid(const AnyGrid& a, const AnyGrid& b) {
  if (!(a == b)) throw GridError("fields live on different grids");
}

namespace {

template <class T>
std::vector<T> first_derivative(std::span<const T> f, double h, bool periodic) {
  const std::size_t n = f.size();
  std::vector<T> d(n);
  const double inv2h = 1.0 / (2.0 * h);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) * inv2h;
  if (periodic) {
    d[0] = (f[1] - f[n - 1]) * inv2h;
    d[n - 1] = (f[0] - f[n - 2]) * inv2h;
  } else {
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2h;
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv2h;
  }
  return d;
}

template <class T>
std::vector<T> second_derivative(std::span<const T> f, double h, bool periodic) {
  const std::size_t n = f.size();
  std::vector<T> d(n);
  const double inv_h2 = 1.0 / (h * h);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * inv_h2;
  if (periodic) {
    d[0] = (f[1] - 2.0 * f[0] + f[n - 1]) * inv_h2;
    d[n - 1] = (f[0] - 2.0 * f[n - 1] + f[n - 2]) * inv_h2;
  } else {
    d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * inv_h2;
    d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) * inv_h2;
  }
  return d;
}

template <class T>
Field<T> grad_impl(const Field<T>& f) {
  const auto& g = f.line();
  return Field<T>(g, first_derivative(f.values(), g.dx(), g.periodic()));
}

template <class T>
Field<T> lap_impl(const Field<T>& f) {
  const auto& g = f.line();
  return Field<T>(g, second_derivative(f.values(), g.dx(), g.periodic()));
}

template <class T>
double norm_impl(const Field<T>& f) {
  const auto w = quadrature_weights(f.grid());
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * std::norm(f[i]);
  return std::sqrt(s);
}

}  // namespace

RealField gradient(const RealField& f) { return grad_impl(f); }
ComplexField gradient(const ComplexField& f) { return grad_impl(f); }
RealField laplacian(const RealField& f) { return lap_impl(f); }
ComplexField laplacian(const ComplexField& f) { return lap_impl(f); }

RealField radial_laplacian_3d(const RealField& f) {
  const auto& g = f.radial();
  const auto d1 = first_derivative(f.values(), g.dr(), false);
  auto d2 = second_derivative(f.values(), g.dr(), false);
  for (std::size_t i = 0; i < d2.size(); ++i) d2[i] += 2.0 * d1[i] / g.r(i);
  return RealField(g, std::move(d2));
}

double l2_norm(const RealField& f) { return norm_impl(f); }
double l2_norm(const ComplexField& f) { return norm_impl(f); }

cplx inner_product(const ComplexField& f, const ComplexField& g) {
  require_same_grid(f.grid(), g.grid());
  const auto w = quadrature_weights(f.grid());
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * std::conj(f[i]) * g[i];
  return s;
}

double inner_product(const RealField& f, const RealField& g) {
  require_same_grid(f.grid(), g.grid());
  const auto w = quadrature_weights(f.grid());
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i] * g[i];
  return s;
}

double l2_distance(const RealField& f, const RealField& g) {
  require_same_grid(f.grid(), g.grid());
  const auto w = quadrature_weights(f.grid());
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * (f[i] - g[i]) * (f[i] - g[i]);
  return std::sqrt(s);
}

double l2_distance(const ComplexField& f, const ComplexField& g) {
  require_same_grid(f.grid(), g.grid());
  const auto w = quadrature_weights(f.grid());
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * std::norm(f[i] - g[i]);
  return std::sqrt(s);
}

ComplexField to_complex(const RealField& f) {
  std::vector<cplx> v(f.values().begin(), f.values().end());
  return ComplexField(f.grid(), std::move(v));
}

ComplexField scaled(const ComplexField& f, cplx factor) {
  std::vector<cplx> v(f.values().begin(), f.values().end());
  for (auto& z : v) z *= factor;
  return ComplexField(f.grid(), std::move(v));
}

}  // namespace qpot
