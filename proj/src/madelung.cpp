#include "qpot/madelung.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace qpot {

void PhysicalConstants::validate() const {
  if (!(std::isfinite(hbar) && hbar > 0.0)) throw std::invalid_argument("hbar must be finite and positive");
  if (!(std::isfinite(mass) && mass > 0.0)) throw std::invalid_argument("mass must be finite and positive");
}

double default_floor(const RealField& rho) {
  const auto v = rho.values();
  const double m = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  return kRelativeDensityFloor * m;
}

Mask density_mask(const RealField& rho, double floor) {
  Mask m(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) m[i] = rho[i] > floor && has_centered_stencil(rho.grid(), i);
  return m;
}

Mask erode(const Mask& mask, const AnyGrid& grid, std::size_t radius) {
  const std::size_t n = mask.size();
  const auto* line = std::get_if<Grid1D>(&grid);
  const bool periodic = line != nullptr && line->periodic();
  Mask out(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    bool keep = true;
    for (std::size_t k = 1; k <= radius && keep; ++k) {
      if (periodic) {
        keep = mask[(i + k) % n] && mask[(i + n - k % n) % n];
      } else {
        keep = i >= k && i + k < n && mask[i - k] && mask[i + k];
      }
    }
    out[i] = keep;
  }
  return out;
}

template <class T>
ResidualReport worst_case(std::span<const Residual<T>> series) {
  ResidualReport r;
  for (const auto& s : series) {
    r.max_abs = std::max(r.max_abs, s.report.max_abs);
    r.l2 = std::max(r.l2, s.report.l2);
    r.masked_fraction = std::max(r.masked_fraction, s.report.masked_fraction);
  }
  return r;
}

template ResidualReport worst_case<double>(std::span<const Residual<double>>);
template ResidualReport worst_case<cplx>(std::span<const Residual<cplx>>);

namespace {

double wrap(double dphi, double hbar) {
  const double period = 2.0 * std::numbers::pi * hbar;
  double r = std::remainder(dphi, period);  // in [-pi hbar, pi hbar]
  if (r <= -0.5 * period) r += period;
  return r;
}

std::vector<double> sqrt_density(const RealField& rho) {
  std::vector<double> s(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] < 0.0) throw std::invalid_argument("density is negative at node " + std::to_string(i));
    s[i] = std::sqrt(rho[i]);
  }
  return s;
}

template <class T>
Residual<T> make_residual(const AnyGrid& grid, std::vector<T> values, Mask mask) {
  const auto w = quadrature_weights(grid);
  ResidualReport rep;
  std::size_t kept = 0;
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!mask[i]) {
      values[i] = T{};
      continue;
    }
    ++kept;
    const double a = std::abs(values[i]);
    rep.max_abs = std::max(rep.max_abs, a);
    s += w[i] * a * a;
  }
  rep.l2 = std::sqrt(s);
  rep.masked_fraction = values.empty() ? 0.0 : 1.0 - static_cast<double>(kept) / static_cast<double>(values.size());
  return Residual<T>{Field<T>(grid, std::move(values)), std::move(mask), rep};
}

Mask mask_and(const Mask& a, const Mask& b) {
  Mask m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m[i] = a[i] && b[i];
  return m;
}

// Coefficients (index, weight) of a second-order time derivative at
// snapshot n of a series with `count` entries, before division by dt.
std::vector<std::pair<std::size_t, double>> time_stencil(std::size_t count, std::size_t n) {
  if (count == 2) return {{0, -1.0}, {1, 1.0}};
  if (n == 0) return {{0, -1.5}, {1, 2.0}, {2, -0.5}};
  if (n + 1 == count) return {{n, 1.5}, {n - 1, -2.0}, {n - 2, 0.5}};
  return {{n - 1, -0.5}, {n + 1, 0.5}};
}

}  // namespace

MadelungFields decompose(const ComplexField& psi, const PhysicalConstants& c, double floor) {
  c.validate();
  if (!(floor > 0.0) || !std::isfinite(floor)) throw std::invalid_argument("density floor must be positive");
  const std::size_t n = psi.size();
  std::vector<double> rho(n), phi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) rho[i] = std::norm(psi[i]);

  Mask above(n);
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    above[i] = rho[i] > floor;
    any = any || above[i];
  }
  if (!any) throw EmptyFieldError("every density sample is at or below the floor");

  // Unwrap left to right inside each run of above-floor nodes; every run is
  // anchored independently at the principal argument of its first node.
  for (std::size_t i = 0; i < n; ++i) {
    if (!above[i]) continue;
    if (i == 0 || !above[i - 1]) {
      phi[i] = c.hbar * std::arg(psi[i]);
    } else {
      phi[i] = phi[i - 1] + c.hbar * std::arg(psi[i] * std::conj(psi[i - 1]));
    }
  }

  RealField rho_f(psi.grid(), std::move(rho));
  RealField q = quantum_potential(rho_f, c, floor);
  Mask mask = density_mask(rho_f, floor);
  return MadelungFields{std::move(rho_f), RealField(psi.grid(), std::move(phi)), std::move(q), std::move(mask)};
}

MadelungFields decompose(const ComplexField& psi, const PhysicalConstants& c) {
  std::vector<double> rho(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) rho[i] = std::norm(psi[i]);
  const double floor = default_floor(RealField(psi.grid(), std::move(rho)));
  if (!(floor > 0.0)) throw EmptyFieldError("wave function is identically zero");
  return decompose(psi, c, floor);
}

RealField quantum_potential(const RealField& rho, const PhysicalConstants& c, double floor) {
  c.validate();
  auto amp = sqrt_density(rho);
  RealField amp_f(rho.grid(), amp);
  const RealField lap = amp_f.on_line() ? laplacian(amp_f) : radial_laplacian_3d(amp_f);
  const Mask mask = density_mask(rho, floor);
  const double pref = -c.hbar * c.hbar / (2.0 * c.mass);
  std::vector<double> q(rho.size(), 0.0);
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (mask[i]) q[i] = pref * lap[i] / amp[i];
  }
  return RealField(rho.grid(), std::move(q));
}

RealField quantum_potential(const RealField& rho, const PhysicalConstants& c) {
  return quantum_potential(rho, c, default_floor(rho));
}

ComplexField reconstruct(const MadelungFields& fields, const PhysicalConstants& c) {
  c.validate();
  std::vector<cplx> psi(fields.rho.size(), cplx{0.0, 0.0});
  for (std::size_t i = 0; i < psi.size(); ++i) {
    psi[i] = std::polar(std::sqrt(std::max(fields.rho[i], 0.0)), fields.phi[i] / c.hbar);
  }
  return ComplexField(fields.rho.grid(), std::move(psi));
}

RealField phase_gradient(const RealField& phi, const PhysicalConstants& c) {
  const auto& g = phi.line();
  const std::size_t n = phi.size();
  std::vector<double> d(n);
  const double inv2h = 1.0 / (2.0 * g.dx());
  auto diff = [&](std::size_t a, std::size_t b) { return wrap(phi[a] - phi[b], c.hbar); };
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (diff(i + 1, i) + diff(i, i - 1)) * inv2h;
  if (g.periodic()) {
    d[0] = (diff(1, 0) + diff(0, n - 1)) * inv2h;
    d[n - 1] = (diff(0, n - 1) + diff(n - 1, n - 2)) * inv2h;
  } else {
    d[0] = (4.0 * diff(1, 0) - (diff(2, 1) + diff(1, 0))) * inv2h;
    d[n - 1] = (4.0 * diff(n - 1, n - 2) - (diff(n - 1, n - 2) + diff(n - 2, n - 3))) * inv2h;
  }
  return RealField(g, std::move(d));
}

double q_psi_norm(const MadelungFields& fields) {
  const auto w = quadrature_weights(fields.rho.grid());
  double s = 0.0;
  for (std::size_t i = 0; i < fields.rho.size(); ++i) {
    if (fields.mask[i]) s += w[i] * fields.q[i] * fields.q[i] * fields.rho[i];
  }
  return std::sqrt(s);
}

RealResidual continuity_residual(const MadelungFields& t0, const MadelungFields& t1, double dt,
                                 const PhysicalConstants& c) {
  c.validate();
  require_same_grid(t0.rho.grid(), t1.rho.grid());
  if (!(dt > 0.0)) throw std::invalid_argument("continuity residual needs dt > 0");
  const auto& g = t0.rho.line();
  auto divergence = [&](const MadelungFields& f) {
    const RealField v = phase_gradient(f.phi, c);
    std::vector<double> flux(f.rho.size());
    for (std::size_t i = 0; i < flux.size(); ++i) flux[i] = f.rho[i] * v[i] / c.mass;
    return gradient(RealField(g, std::move(flux)));
  };
  const RealField div0 = divergence(t0);
  const RealField div1 = divergence(t1);
  std::vector<double> r(t0.rho.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = (t1.rho[i] - t0.rho[i]) / dt + 0.5 * (div0[i] + div1[i]);
  return make_residual(t0.rho.grid(), std::move(r), erode(mask_and(t0.mask, t1.mask), g, 2));
}

std::vector<RealResidual> qhj_residual(std::span<const MadelungFields> series, double dt,
                                       const RealField& potential, const PhysicalConstants& c,
                                       bool include_q) {
  c.validate();
  if (series.size() < 2) throw std::invalid_argument("quantum Hamilton-Jacobi residual needs two snapshots");
  if (!(dt > 0.0)) throw std::invalid_argument("quantum Hamilton-Jacobi residual needs dt > 0");
  for (const auto& f : series) require_same_grid(f.rho.grid(), potential.grid());
  const auto& g = potential.line();

  std::vector<RealResidual> out;
  out.reserve(series.size());
  for (std::size_t n = 0; n < series.size(); ++n) {
    const auto& now = series[n];
    const auto stencil = time_stencil(series.size(), n);
    Mask mask = now.mask;
    for (const auto& [j, w] : stencil) mask = mask_and(mask, series[j].mask);
    mask = erode(mask, g, 1);

    const RealField grad_phi = phase_gradient(now.phi, c);
    std::vector<double> r(now.rho.size(), 0.0);
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!mask[i]) continue;
      double dphi = 0.0;
      for (const auto& [j, w] : stencil) dphi += w * wrap(series[j].phi[i] - now.phi[i], c.hbar);
      r[i] = dphi / dt + grad_phi[i] * grad_phi[i] / (2.0 * c.mass) + potential[i];
      if (include_q) r[i] += now.q[i];
    }
    out.push_back(make_residual(now.rho.grid(), std::move(r), std::move(mask)));
  }
  return out;
}

std::vector<ComplexResidual> schrodinger_residual(std::span<const ComplexField> series,
                                                  const RealField& potential, const PhysicalConstants& c,
                                                  double dt) {
  c.validate();
  if (series.size() < 3) throw std::invalid_argument("Schrodinger residual needs at least three snapshots");
  if (!(dt > 0.0)) throw std::invalid_argument("Schrodinger residual needs dt > 0");
  for (const auto& psi : series) require_same_grid(psi.grid(), potential.grid());
  const AnyGrid& g = potential.grid();
  const std::size_t m = potential.size();

  Mask mask(m);
  for (std::size_t i = 0; i < m; ++i) mask[i] = has_centered_stencil(g, i);

  const double kin = c.hbar * c.hbar / (2.0 * c.mass);
  const cplx ih{0.0, c.hbar};
  std::vector<ComplexResidual> out;
  out.reserve(series.size());
  for (std::size_t n = 0; n < series.size(); ++n) {
    const ComplexField lap = laplacian(series[n]);
    std::vector<cplx> r(m);
    for (std::size_t i = 0; i < m; ++i) {
      cplx dpsi{0.0, 0.0};
      for (const auto& [j, w] : time_stencil(series.size(), n)) dpsi += w * series[j][i];
      r[i] = ih * dpsi / dt + kin * lap[i] - potential[i] * series[n][i];
    }
    out.push_back(make_residual(g, std::move(r), mask));
  }
  return out;
}

}  // namespace qpot
