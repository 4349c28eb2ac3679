#include "qpot/semiclassical.hpp"

// pchip.hpp in Boost 1.74 calls isnan unqualified.
#include <cmath>
using std::isnan;
#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <limits>
#include <map>
#include <sstream>

namespace qpot {

namespace {

std::string where(double t, double x0) {
  std::ostringstream os;
  os.precision(17);
  os << "t = " << t << ", x0 = " << x0;
  return os.str();
}

// Second-order derivative of f with respect to the (possibly non-uniform)
// abscissae x at index i. Built from divided differences, so a constant f
// gives exactly zero.
double nonuniform_derivative(std::span<const double> x, std::span<const double> f, std::size_t i) {
  const std::size_t n = x.size();
  const std::size_t j = i == 0 ? 1 : (i + 1 == n ? n - 2 : i);
  const double h1 = x[j] - x[j - 1], h2 = x[j + 1] - x[j];
  const double s1 = (f[j] - f[j - 1]) / h1, s2 = (f[j + 1] - f[j]) / h2;
  if (i == 0) return s1 + (s1 - s2) * h1 / (h1 + h2);
  if (i + 1 == n) return s2 + (s2 - s1) * h2 / (h1 + h2);
  return (h2 * s1 + h1 * s2) / (h1 + h2);
}

void validate_config(const EnsembleConfig& cfg) {
  cfg.constants.validate();
  if (!cfg.initial.rho0) throw std::invalid_argument("ensemble needs an initial density");
  if (cfg.x0.size() < 3) throw std::invalid_argument("ensemble needs at least three trajectories");
  if (!std::is_sorted(cfg.x0.begin(), cfg.x0.end()) ||
      std::adjacent_find(cfg.x0.begin(), cfg.x0.end()) != cfg.x0.end()) {
    throw std::invalid_argument("initial positions must be strictly increasing");
  }
  if (!(cfg.domain_max > cfg.domain_min)) throw std::invalid_argument("ensemble domain is empty");
  if (cfg.x0.front() < cfg.domain_min || cfg.x0.back() > cfg.domain_max) {
    throw std::invalid_argument("initial positions lie outside the ensemble domain");
  }
  if (cfg.snapshot_every < 1) throw std::invalid_argument("snapshot_every must be at least 1");

  const auto rho = sample(cfg.grid, cfg.initial.rho0);
  const auto w = quadrature_weights(cfg.grid);
  double mass = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] < 0.0) throw std::invalid_argument("initial density is negative");
    mass += w[i] * rho[i];
  }
  if (std::abs(mass - 1.0) > 1e-6) {
    throw std::invalid_argument("initial density integrates to " + std::to_string(mass) + " over the grid, not 1");
  }

  for (double x : cfg.x0) {
    const double p = cfg.initial.p0 ? cfg.initial.p0(x) : 0.0;
    double dphi = 0.0;
    if (cfg.initial.phi0) {
      const double h = 1e-5 * std::max(1.0, std::abs(x));
      dphi = (cfg.initial.phi0(x + h) - cfg.initial.phi0(x - h)) / (2.0 * h);
    }
    if (std::abs(dphi - p) > 1e-5 * (1.0 + std::abs(p))) {
      throw std::invalid_argument("initial momentum is inconsistent with the initial phase at " + where(0.0, x));
    }
  }
}

}  // namespace

CausticError::CausticError(double t, double x0)
    : std::runtime_error("caustic: trajectory Jacobian below threshold at " + where(t, x0)), t_(t), x0_(x0) {}

EscapeError::EscapeError(double t, double x0)
    : std::runtime_error("trajectory left the ensemble domain at " + where(t, x0)), t_(t), x0_(x0) {}

std::vector<double> initial_positions(Spacing spacing, std::size_t count, double lo, double hi,
                                      const std::function<double(double)>& rho0) {
  if (count < 3) throw std::invalid_argument("need at least three initial positions");
  if (!(hi > lo)) throw std::invalid_argument("initial position range is empty");
  std::vector<double> x(count);
  if (spacing == Spacing::uniform) {
    const double h = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) x[i] = lo + static_cast<double>(i) * h;
    x.back() = hi;
    return x;
  }
  if (!rho0) throw std::invalid_argument("equal-mass spacing needs a density");
  // Cumulative trapezoid on a fine auxiliary mesh, inverted by linear
  // interpolation.
  const std::size_t fine = 64 * count + 1;
  const double h = (hi - lo) / static_cast<double>(fine - 1);
  std::vector<double> cdf(fine, 0.0);
  double prev = rho0(lo);
  for (std::size_t j = 1; j < fine; ++j) {
    const double cur = rho0(lo + static_cast<double>(j) * h);
    cdf[j] = cdf[j - 1] + 0.5 * h * (prev + cur);
    prev = cur;
  }
  const double total = cdf.back();
  if (!(total > 0.0)) throw std::invalid_argument("density carries no mass on the requested range");
  for (std::size_t i = 0; i < count; ++i) {
    const double target = (static_cast<double>(i) + 0.5) / static_cast<double>(count) * total;
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
    const auto j = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - cdf.begin()));
    const double f = (target - cdf[j - 1]) / (cdf[j] - cdf[j - 1]);
    x[i] = lo + (static_cast<double>(j - 1) + f) * h;
  }
  return x;
}

TrajectoryEnsemble integrate_trajectories(const EnsembleConfig& cfg, const PotentialSpec& v, double dt,
                                          std::size_t steps) {
  validate_config(cfg);
  validate(v);
  if (std::holds_alternative<Barrier>(v)) {
    throw std::invalid_argument("classical trajectories need a smooth potential; the barrier is discontinuous");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("trajectory time step must be positive");

  const auto& c = cfg.constants;
  const bool walls = std::holds_alternative<Box>(v);
  double lo = cfg.domain_min, hi = cfg.domain_max;
  if (walls) {
    (void)sample_potential(v, cfg.grid, c);  // checks the grid spans the box
    lo = cfg.grid.xmin();
    hi = cfg.grid.xmax();
  }

  const std::size_t n = cfg.x0.size();
  TrajectoryEnsemble out;
  out.constants = c;
  out.walls = walls;
  out.caustic_threshold = cfg.caustic_threshold;
  out.trajectories.resize(n);

  std::vector<double> x(cfg.x0), p(n), action(n), disp(n, 0.0), carry(n, 0.0), force(n), jac(n);
  std::vector<int> refl(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& tr = out.trajectories[i];
    tr.x0 = cfg.x0[i];
    tr.p0 = cfg.initial.p0 ? cfg.initial.p0(tr.x0) : 0.0;
    tr.rho0 = cfg.initial.rho0(tr.x0);
    p[i] = tr.p0;
    action[i] = cfg.initial.phi0 ? cfg.initial.phi0(tr.x0) : 0.0;
    force[i] = force_at(v, x[i], c);
  }

  auto update_jacobian = [&](double t) {
    for (std::size_t i = 0; i < n; ++i) {
      jac[i] = (1.0 + nonuniform_derivative(cfg.x0, disp, i)) * ((refl[i] % 2 == 0) ? 1.0 : -1.0);
    }
    if (cfg.abort_on_caustic) {
      for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(jac[i]) < cfg.caustic_threshold) throw CausticError(t, cfg.x0[i]);
      }
    }
  };
  auto record = [&](double t) {
    out.t.push_back(t);
    for (std::size_t i = 0; i < n; ++i) {
      out.trajectories[i].samples.push_back(TrajectorySample{x[i], p[i], action[i], jac[i], refl[i]});
    }
  };

  update_jacobian(0.0);
  record(0.0);
  for (std::size_t step = 1; step <= steps; ++step) {
    const double t = static_cast<double>(step) * dt;
    for (std::size_t i = 0; i < n; ++i) {
      const double lag_old = p[i] * p[i] / (2.0 * c.mass) - potential_at(v, x[i], c);
      double ph = p[i] + 0.5 * dt * force[i];
      const double shift = dt * ph / c.mass;
      double xn = x[i] + shift;
      // Displacement of the unfolded coordinate, where the particle would be
      // without the walls; inside a box V = 0, so this is exact free flight.
      // Compensated sum, since the Jacobian differences neighbouring values.
      const double inc = (walls && refl[i] % 2 != 0 ? -shift : shift) - carry[i];
      const double sum = disp[i] + inc;
      carry[i] = (sum - disp[i]) - inc;
      disp[i] = sum;
      if (walls) {
        while (xn < lo || xn > hi) {
          xn = xn > hi ? 2.0 * hi - xn : 2.0 * lo - xn;
          ph = -ph;
          ++refl[i];
        }
      }
      if (!(xn >= cfg.domain_min && xn <= cfg.domain_max) && !walls) throw EscapeError(t, cfg.x0[i]);
      x[i] = xn;
      force[i] = force_at(v, xn, c);
      p[i] = ph + 0.5 * dt * force[i];
      const double lag_new = p[i] * p[i] / (2.0 * c.mass) - potential_at(v, xn, c);
      action[i] += 0.5 * dt * (lag_old + lag_new);
    }
    const bool snap = step % cfg.snapshot_every == 0 || step == steps;
    if (cfg.abort_on_caustic || snap) update_jacobian(t);
    if (snap) record(t);
  }
  return out;
}

namespace {

// Samples of one sheet in increasing x; p is d(phi)/dx along the sheet.
struct SheetSamples {
  std::vector<double> x, rho, phi, p;
};

std::map<int, SheetSamples> collect_sheets(const TrajectoryEnsemble& e, std::size_t snapshot) {
  std::map<int, SheetSamples> sheets;
  for (const auto& tr : e.trajectories) {
    const auto& s = tr.samples.at(snapshot);
    if (std::abs(s.jacobian) < e.caustic_threshold) throw CausticError(e.t[snapshot], tr.x0);
    auto& sh = sheets[e.walls ? s.reflections : 0];
    sh.x.push_back(s.x);
    sh.rho.push_back(tr.rho0 / std::abs(s.jacobian));
    sh.phi.push_back(s.action);
    sh.p.push_back(s.p);
  }
  for (auto& [m, sh] : sheets) {
    if (sh.x.size() >= 2 && sh.x.back() < sh.x.front()) {
      std::reverse(sh.x.begin(), sh.x.end());
      std::reverse(sh.rho.begin(), sh.rho.end());
      std::reverse(sh.phi.begin(), sh.phi.end());
      std::reverse(sh.p.begin(), sh.p.end());
    }
    for (std::size_t i = 1; i < sh.x.size(); ++i) {
      if (!(sh.x[i] > sh.x[i - 1])) {
        throw BranchFoldError("trajectories of one branch overlap at t = " + std::to_string(e.t[snapshot]) +
                              " near x = " + std::to_string(sh.x[i]));
      }
    }
  }
  return sheets;
}

// Monotone cubic (pchip); linear below four samples.
std::vector<double> interpolate(const std::vector<double>& xs, const std::vector<double>& ys,
                                const std::vector<double>& at) {
  std::vector<double> out(at.size());
  if (xs.size() >= 4) {
    auto xc = xs;
    auto yc = ys;
    boost::math::interpolators::pchip<std::vector<double>> f(std::move(xc), std::move(yc));
    for (std::size_t i = 0; i < at.size(); ++i) out[i] = f(at[i]);
    return out;
  }
  for (std::size_t i = 0; i < at.size(); ++i) {
    auto it = std::upper_bound(xs.begin(), xs.end(), at[i]);
    const auto j = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - xs.begin(), 1, xs.size() - 1));
    const double f = (at[i] - xs[j - 1]) / (xs[j] - xs[j - 1]);
    out[i] = (1.0 - f) * ys[j - 1] + f * ys[j];
  }
  return out;
}

// Cubic Hermite with the exact slopes. The phase gradient is the momentum,
// so extrema of the phase are located correctly, unlike with pchip.
std::vector<double> interpolate_phase(const SheetSamples& sh, const std::vector<double>& at) {
  auto xc = sh.x;
  auto yc = sh.phi;
  auto dc = sh.p;
  boost::math::interpolators::cubic_hermite<std::vector<double>> f(std::move(xc), std::move(yc), std::move(dc));
  std::vector<double> out(at.size());
  for (std::size_t i = 0; i < at.size(); ++i) out[i] = f(at[i]);
  return out;
}

}  // namespace

std::vector<SheetField> sheet_fields(const TrajectoryEnsemble& e, std::size_t snapshot, const Grid1D& grid) {
  const auto nodes = grid.nodes();
  std::vector<SheetField> out;
  for (auto& [m, sh] : collect_sheets(e, snapshot)) {
    SheetField f;
    f.reflections = m;
    f.covered.assign(nodes.size(), false);
    f.rho.assign(nodes.size(), 0.0);
    f.phi.assign(nodes.size(), 0.0);
    if (sh.x.size() < 2) {
      out.push_back(std::move(f));
      continue;
    }
    // Half-open coverage so that sheets meeting at a shared sample do not
    // both claim a node sitting exactly on it.
    std::vector<double> at;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i] >= sh.x.front() && nodes[i] < sh.x.back()) {
        at.push_back(nodes[i]);
        idx.push_back(i);
      }
    }
    const auto rho = interpolate(sh.x, sh.rho, at);
    const auto phi = interpolate_phase(sh, at);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      f.covered[idx[k]] = true;
      f.rho[idx[k]] = std::max(0.0, rho[k]);
      f.phi[idx[k]] = phi[k];
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<RealField> transport_density(const TrajectoryEnsemble& e, const Grid1D& grid) {
  std::vector<RealField> out;
  out.reserve(e.t.size());
  for (std::size_t s = 0; s < e.t.size(); ++s) {
    std::vector<double> rho(grid.size(), 0.0);
    for (const auto& sh : sheet_fields(e, s, grid)) {
      for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += sh.rho[i];
    }
    out.emplace_back(grid, std::move(rho));
  }
  return out;
}

std::vector<ComplexField> assemble_wave(std::span<const TrajectoryEnsemble> branches, std::span<const cplx> weights,
                                        const Grid1D& grid, const PhysicalConstants& c) {
  c.validate();
  if (branches.empty() || branches.size() != weights.size()) {
    throw std::invalid_argument("assemble_wave needs one weight per branch");
  }
  const std::size_t snapshots = branches.front().t.size();
  for (const auto& b : branches) {
    if (b.t != branches.front().t) throw std::invalid_argument("branches were sampled at different times");
  }
  std::vector<ComplexField> out;
  out.reserve(snapshots);
  for (std::size_t s = 0; s < snapshots; ++s) {
    std::vector<cplx> psi(grid.size(), cplx{0.0, 0.0});
    for (std::size_t b = 0; b < branches.size(); ++b) {
      for (const auto& sh : sheet_fields(branches[b], s, grid)) {
        const double sign = branches[b].walls && sh.reflections % 2 != 0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < psi.size(); ++i) {
          if (sh.covered[i]) psi[i] += sign * weights[b] * std::polar(std::sqrt(sh.rho[i]), sh.phi[i] / c.hbar);
        }
      }
    }
    if (!grid.periodic()) psi.front() = psi.back() = cplx{0.0, 0.0};
    ComplexField f(grid, std::move(psi));
    const double norm = l2_norm(f);
    if (!(norm > 0.0)) throw std::runtime_error("semiclassical wave vanishes on the grid");
    out.push_back(scaled(f, 1.0 / norm));
  }
  return out;
}

std::vector<ComplexField> assemble_wave(const TrajectoryEnsemble& e, const Grid1D& grid, const PhysicalConstants& c) {
  const cplx one{1.0, 0.0};
  return assemble_wave(std::span<const TrajectoryEnsemble>(&e, 1), std::span<const cplx>(&one, 1), grid, c);
}

double wkb_transmission(double energy, const Barrier& b, const PhysicalConstants& c) {
  c.validate();
  validate(PotentialSpec{b});
  if (!(energy > 0.0 && energy < b.height)) {
    throw std::invalid_argument("WKB tunnelling needs 0 < E < V0; above the barrier use the exact transmission");
  }
  const double kappa = std::sqrt(2.0 * c.mass * (b.height - energy)) / c.hbar;
  return std::exp(-2.0 * kappa * b.width);
}

double max_energy_drift(const TrajectoryEnsemble& e, const PotentialSpec& v) {
  double worst = 0.0;
  const auto& c = e.constants;
  for (const auto& tr : e.trajectories) {
    auto h = [&](const TrajectorySample& s) { return s.p * s.p / (2.0 * c.mass) + potential_at(v, s.x, c); };
    const double h0 = h(tr.samples.front());
    const double scale = std::max(std::abs(h0), std::numeric_limits<double>::min());
    for (const auto& s : tr.samples) {
      const double d = std::abs(h(s) - h0);
      worst = std::max(worst, d == 0.0 ? 0.0 : d / scale);
    }
  }
  return worst;
}

}  // namespace qpot
