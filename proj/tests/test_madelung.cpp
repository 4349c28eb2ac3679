#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "qpot/madelung.hpp"
#include "qpot/potential.hpp"
#include "qpot/schrodinger.hpp"

using namespace qpot;

namespace {

constexpr double pi = std::numbers::pi;

double masked_max(const RealField& f, const Mask& m, auto&& ref) {
  double e = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (m[i]) e = std::max(e, std::abs(f[i] - ref(f.coord(i), i)));
  }
  return e;
}

// Density of the free Gaussian with sigma = 1 at time t (hbar = M = 1).
double spread_variance(double t) { return 1.0 + t * t / 4.0; }

double gaussian_q(double x, double s2) { return 1.0 / (4.0 * s2) - x * x / (8.0 * s2 * s2); }

ComplexField unit_gaussian(const Grid1D& g) {
  return sample(g, [](double x) { return cplx(std::pow(2.0 * pi, -0.25) * std::exp(-x * x / 4.0), 0.0); });
}

Evolution free_evolution(const Grid1D& g, double dt, std::size_t steps) {
  PropagatorConfig cfg;
  cfg.dt = dt;
  cfg.steps = steps;
  cfg.method = Method::split_operator;
  return propagate(unit_gaussian(g), FreeSpace{}, cfg);
}

}  // namespace

TEST_CASE("constants are validated") {
  CHECK_THROWS_AS((PhysicalConstants{0.0, 1.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((PhysicalConstants{1.0, -1.0}.validate()), std::invalid_argument);
  CHECK_NOTHROW((PhysicalConstants{0.5, 2.0}.validate()));
}

TEST_CASE("decompose a plane wave") {
  const Grid1D g(0.0, 2.0 * pi, 256, Boundary::periodic);
  const auto psi = sample(g, [](double x) { return std::polar(1.0, 2.0 * x); });
  const auto f = decompose(psi, {});
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(f.mask[i]);
    CHECK(f.rho[i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(f.phi[i] - f.phi[0] - 2.0 * g.x(i)) < 1e-9);
    CHECK(std::abs(f.q[i]) < 1e-6);
  }
}

TEST_CASE("decompose a positive real Gaussian has zero phase") {
  const Grid1D g(-8.0, 8.0, 512, Boundary::periodic);
  const auto f = decompose(unit_gaussian(g), {});
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (f.mask[i]) CHECK(f.phi[i] == 0.0);
  }
}

TEST_CASE("decompose the first excited state: the node splits the phase into two runs") {
  const Grid1D g(-6.0, 6.0, 2049, Boundary::dirichlet);
  const PhysicalConstants c{1.3, 1.0};
  const auto psi = sample(g, [](double x) { return cplx(x * std::exp(-x * x / 2.0), 0.0); });
  const auto f = decompose(psi, c);
  const std::size_t mid = 1024;
  CHECK(g.x(mid) == 0.0);
  CHECK_FALSE(f.mask[mid]);
  CHECK(f.mask[mid - 1]);
  CHECK(f.mask[mid + 1]);
  CHECK(std::abs(f.phi[mid - 1] - f.phi[mid + 1]) == doctest::Approx(pi * c.hbar).epsilon(1e-12));
}

TEST_CASE("decompose refuses an empty field") {
  const Grid1D g(0.0, 1.0, 16, Boundary::periodic);
  CHECK_THROWS_AS(decompose(sample(g, [](double) { return cplx{}; }), {}), EmptyFieldError);
}

TEST_CASE("quantum potential examples") {
  SUBCASE("constant density") {
    const Grid1D g(0.0, 5.0, 100, Boundary::dirichlet);
    const auto q = quantum_potential(sample(g, [](double) { return 0.2; }), {});
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(q[i] == 0.0);
  }
  SUBCASE("1/r amplitude on a radial grid") {
    const RadialGrid g(0.5, 20.0, 2048);
    const auto rho = sample(g, [](double r) { return 1.0 / (r * r); });
    const auto q = quantum_potential(rho, {});
    CHECK(masked_max(q, density_mask(rho, default_floor(rho)), [](double, std::size_t) { return 0.0; }) < 1e-4);
  }
  SUBCASE("unit Gaussian gives 1/4 - x^2/8") {
    const Grid1D g(-6.0, 6.0, 2048, Boundary::dirichlet);
    const auto q = quantum_potential(sample(g, [](double x) { return std::exp(-x * x / 2.0); }), {});
    for (double x0 : {0.0, 1.0, 2.0}) {
      const auto i = static_cast<std::size_t>(std::lround((x0 - g.xmin()) / g.dx()));
      CHECK(std::abs(q[i] - gaussian_q(g.x(i), 1.0)) < 1e-4);
    }
  }
}

TEST_CASE("reconstruct examples") {
  const Grid1D g(0.0, 2.0 * pi, 128, Boundary::periodic);
  const auto one = sample(g, [](double) { return 1.0; });
  const auto phi = sample(g, [](double x) { return 3.0 * x; });
  const MadelungFields f{one, phi, sample(g, [](double) { return 0.0; }), Mask(g.size(), true)};
  const auto psi = reconstruct(f, {});
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(psi[i] - std::polar(1.0, 3.0 * g.x(i))) < 1e-12);

  const Grid1D h(-10.0, 10.0, 1024, Boundary::periodic);
  const auto ground = sample(h, [](double x) { return cplx(std::pow(pi, -0.25) * std::exp(-x * x / 2.0), 0.0); });
  const auto back = reconstruct(decompose(ground, {}), {});
  double e = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) e = std::max(e, std::abs(back[i] - ground[i]));
  CHECK(e < 1e-10);
}

TEST_CASE("continuity residual examples") {
  const Grid1D g(0.0, 2.0 * pi, 256, Boundary::periodic);
  const PhysicalConstants c{};
  SUBCASE("stationary state") {
    const auto rho = sample(g, [](double x) { return (1.0 + 0.5 * std::cos(x)) / (2.0 * pi); });
    const auto phi = sample(g, [](double) { return -0.7; });
    const MadelungFields f{rho, phi, quantum_potential(rho, c), density_mask(rho, default_floor(rho))};
    CHECK(continuity_residual(f, f, 1e-3, c).report.max_abs < 1e-14);
  }
  SUBCASE("uniformly translating plane wave") {
    const double k = 2.0, dt = 1e-3;
    const auto at = [&](double t) { return sample(g, [&](double x) { return std::polar(1.0, k * x - k * k * t / 2.0); }); };
    CHECK(continuity_residual(decompose(at(0.0), c), decompose(at(dt), c), dt, c).report.max_abs < 1e-8);
  }
  SUBCASE("exact evolution of a Gaussian, dx = 0.02, dt = 1e-3") {
    const Grid1D w(-20.0, 20.0, 2000, Boundary::periodic);
    const auto ev = free_evolution(w, 1e-3, 100);
    const auto r = continuity_residual(decompose(ev.psi[ev.psi.size() - 2], c), decompose(ev.psi.back(), c), 1e-3, c);
    CHECK(r.report.max_abs < 1e-2);
    CHECK(r.report.masked_fraction > 0.0);
  }
}

TEST_CASE("QHJ residual examples") {
  const PhysicalConstants c{};
  SUBCASE("oscillator ground state with Q") {
    const Grid1D g(-4.0, 4.0, 4096, Boundary::dirichlet);
    const double e0 = 0.5, dt = 1e-2;
    std::vector<MadelungFields> series;
    for (int s = 0; s < 5; ++s) {
      const double t = s * dt;
      series.push_back(decompose(sample(g, [&](double x) { return std::polar(std::exp(-x * x / 2.0), -e0 * t); }), c));
    }
    const auto v = sample_potential(Harmonic{1.0}, g, c);
    const auto res = qhj_residual(series, dt, v, c, true);
    CHECK(worst_case(std::span<const RealResidual>(res)).max_abs < 1e-4);
  }
  SUBCASE("plane wave without Q") {
    const Grid1D g(0.0, 2.0 * pi, 256, Boundary::periodic);
    const double k = 3.0, dt = 1e-2;
    std::vector<MadelungFields> series;
    for (int s = 0; s < 3; ++s) {
      series.push_back(decompose(sample(g, [&](double x) { return std::polar(1.0, k * x - k * k * s * dt / 2.0); }), c));
    }
    const auto res = qhj_residual(series, dt, sample_potential(FreeSpace{}, g, c), c, false);
    CHECK(worst_case(std::span<const RealResidual>(res)).max_abs < 1e-9);
  }
  SUBCASE("free Gaussian without Q leaves -Q behind") {
    const Grid1D g(-20.0, 20.0, 2048, Boundary::periodic);
    const double dt = 1e-3;
    const auto ev = free_evolution(g, dt, 10);
    std::vector<MadelungFields> series;
    for (const auto& p : ev.psi) series.push_back(decompose(p, c));
    const auto v = sample_potential(FreeSpace{}, g, c);
    const auto with_q = qhj_residual(series, dt, v, c, true);
    const auto without_q = qhj_residual(series, dt, v, c, false);
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double s2 = spread_variance(ev.t[s]);
      // Only where the Gaussian is well resolved by the density floor.
      Mask m = without_q[s].mask;
      for (std::size_t i = 0; i < g.size(); ++i) m[i] = m[i] && std::abs(g.x(i)) < 5.0;
      const double level = masked_max(with_q[s].values, m, [](double, std::size_t) { return 0.0; });
      const double err = masked_max(without_q[s].values, m, [&](double x, std::size_t) { return -gaussian_q(x, s2); });
      CHECK(level > 0.0);
      CHECK(err < 10.0 * level + 1e-12);
      CHECK(masked_max(without_q[s].values, m, [](double, std::size_t) { return 0.0; }) > 0.2);
    }
  }
}

TEST_CASE("Schrodinger residual examples") {
  const PhysicalConstants c{};
  SUBCASE("exact plane wave") {
    const Grid1D g(0.0, 2.0 * pi, 8192, Boundary::periodic);
    PropagatorConfig cfg;
    cfg.dt = 2.5e-4;
    cfg.steps = 4;
    const auto ev = propagate(sample(g, [](double x) { return std::polar(1.0 / std::sqrt(2.0 * pi), 2.0 * x); }),
                              FreeSpace{}, cfg);
    const auto r = schrodinger_residual(ev.psi, sample_potential(FreeSpace{}, g, c), c, cfg.dt);
    CHECK(worst_case(std::span<const ComplexResidual>(r)).max_abs < 1e-6);
  }
  SUBCASE("second-order convergence for an exact Gaussian") {
    std::vector<double> norms;
    for (int level = 0; level < 3; ++level) {
      const std::size_t n = 512u << level;
      const double dt = 4e-3 / (1 << level);
      const Grid1D g(-20.0, 20.0, n, Boundary::periodic);
      const auto ev = free_evolution(g, dt, 3);
      const auto r = schrodinger_residual(ev.psi, sample_potential(FreeSpace{}, g, c), c, dt);
      norms.push_back(r[1].report.l2);
    }
    for (std::size_t j = 1; j < norms.size(); ++j) {
      const double ratio = norms[j - 1] / norms[j];
      CHECK(ratio > 3.0);
      CHECK(ratio < 5.0);
    }
  }
  SUBCASE("needs three snapshots") {
    const Grid1D g(0.0, 1.0, 16, Boundary::periodic);
    const std::vector<ComplexField> two(2, sample(g, [](double) { return cplx(1.0, 0.0); }));
    CHECK_THROWS_AS(schrodinger_residual(two, sample(g, [](double) { return 0.0; }), c, 1e-3), std::invalid_argument);
  }
}

TEST_CASE("property: Q is invariant under density scaling") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.1, 50.0);
  const Grid1D g(-6.0, 6.0, 400, Boundary::dirichlet);
  const auto rho = sample(g, [](double x) { return std::exp(-x * x / 3.0) * (1.0 + 0.2 * std::sin(x)); });
  const auto q = quantum_potential(rho, {});
  for (int trial = 0; trial < 5; ++trial) {
    const double s = u(rng);
    const auto qs = quantum_potential(sample(g, [&](double x) { return s * std::exp(-x * x / 3.0) * (1.0 + 0.2 * std::sin(x)); }), {});
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(qs[i] - q[i]) < 1e-9 * (1.0 + std::abs(q[i])));
  }
}

TEST_CASE("property: Q vanishes where the amplitude is grid-harmonic") {
  const Grid1D g(0.0, 4.0, 2048, Boundary::dirichlet);
  for (auto amp : {std::function<double(double)>([](double) { return 0.7; }),
                   std::function<double(double)>([](double x) { return 0.3 + 1.5 * x; })}) {
    const auto rho = sample(g, [&](double x) { return amp(x) * amp(x); });
    const auto q = quantum_potential(rho, {});
    CHECK(masked_max(q, density_mask(rho, default_floor(rho)), [](double, std::size_t) { return 0.0; }) < 1e-4);
  }
}

TEST_CASE("property: decompose then reconstruct round-trips nodeless fields") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Grid1D g(0.0, 2.0 * pi, 300, Boundary::periodic);
  for (int trial = 0; trial < 8; ++trial) {
    const double a1 = u(rng), a2 = u(rng), p1 = 3.0 * u(rng), p2 = 2.0 * u(rng), th = pi * u(rng);
    const auto psi = sample(g, [&](double x) {
      const double amp = 1.5 + 0.5 * a1 * std::sin(x) + 0.4 * a2 * std::cos(2.0 * x);
      return std::polar(amp, th + p1 * std::sin(x) + p2 * std::cos(3.0 * x) + 4.0 * x);
    });
    const PhysicalConstants c{0.5 + std::abs(u(rng)), 1.0};
    const auto f = decompose(psi, c);
    const auto back = reconstruct(f, c);
    const cplx anchor = std::polar(1.0, std::arg(psi[0]) - f.phi[0] / c.hbar);
    double e = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (f.mask[i]) e = std::max(e, std::abs(back[i] * anchor - psi[i]));
    }
    CHECK(e < 1e-10);
  }
}

TEST_CASE("property: frozen classical density obeys continuity and leaves -Q psi in the Schrodinger residual") {
  // rho constant in time and phi = 0 solve the continuity and Q-free HJ
  // equations exactly in free space.
  const Grid1D g(-10.0, 10.0, 2048, Boundary::periodic);
  const PhysicalConstants c{};
  const auto psi = unit_gaussian(g);
  const std::vector<ComplexField> series(3, psi);
  const auto rho = decompose(psi, c);
  CHECK(continuity_residual(rho, rho, 1e-3, c).report.max_abs == 0.0);
  const auto r = schrodinger_residual(series, sample_potential(FreeSpace{}, g, c), c, 1e-3);
  double e = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (rho.mask[i]) e = std::max(e, std::abs(r[1].values[i] + rho.q[i] * psi[i]));
  }
  CHECK(e < 1e-10);
  CHECK(q_psi_norm(rho) == doctest::Approx(r[1].report.l2).epsilon(1e-6));
}
