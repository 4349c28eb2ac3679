#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qpot/schrodinger.hpp"
#include "qpot/semiclassical.hpp"

using namespace qpot;

namespace {

constexpr double pi = std::numbers::pi;

// Regression constant: exp(-2 sqrt 2), kappa = sqrt(2 M (V0 - E)) / hbar.
constexpr double kWkbTransmission = 0.059105746561956237763;
constexpr double kExactTransmission = 0.21077109396613053509;

double gauss(double x) { return std::exp(-x * x / 2.0) / std::sqrt(2.0 * pi); }

EnsembleConfig base(InitialState init, std::vector<double> x0, Grid1D grid, double lo, double hi) {
  EnsembleConfig cfg{std::move(init), std::move(x0), std::move(grid)};
  cfg.domain_min = lo;
  cfg.domain_max = hi;
  return cfg;
}

double moment(const RealField& rho, int k) {
  const auto w = quadrature_weights(rho.grid());
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) s += w[i] * rho[i] * std::pow(rho.coord(i), k);
  return s;
}

}  // namespace

TEST_CASE("free trajectory: position and action") {
  const Grid1D g(-5.0, 5.0, 100, Boundary::periodic);
  auto cfg = base({[](double) { return 0.1; }, [](double x) { return x; }, [](double) { return 1.0; }},
                  {-1.0, 0.0, 1.0}, g, -20.0, 20.0);
  cfg.snapshot_every = 2000;
  const auto e = integrate_trajectories(cfg, FreeSpace{}, 1e-3, 2000);
  const auto& s = e.trajectories[1].samples.back();
  CHECK(e.t.back() == doctest::Approx(2.0));
  CHECK(s.x == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.action == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.jacobian == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("harmonic trajectories") {
  const Grid1D g(0.0, 2.0, 64, Boundary::dirichlet);
  const InitialState init{[](double) { return 0.5; }, {}, {}};
  SUBCASE("quarter of a quarter period") {
    const auto steps = static_cast<std::size_t>(std::lround(pi / 4.0 / 1e-4));
    auto cfg = base(init, {0.9, 1.0, 1.1}, g, -5.0, 5.0);
    cfg.snapshot_every = steps;
    const auto e = integrate_trajectories(cfg, Harmonic{1.0}, pi / 4.0 / static_cast<double>(steps), steps);
    const auto& s = e.trajectories[1].samples.back();
    CHECK(std::abs(s.x - std::cos(pi / 4.0)) < 1e-4);
    CHECK(std::abs(s.jacobian - std::cos(pi / 4.0)) < 1e-4);
  }
  SUBCASE("one full period returns to the start") {
    const auto steps = static_cast<std::size_t>(std::lround(2.0 * pi / 1e-4));
    auto cfg = base(init, {0.2, 0.7, 1.3, 1.9}, g, -5.0, 5.0);
    cfg.snapshot_every = steps;
    cfg.abort_on_caustic = false;
    const auto e = integrate_trajectories(cfg, Harmonic{1.0}, 2.0 * pi / static_cast<double>(steps), steps);
    for (const auto& tr : e.trajectories) {
      CHECK(std::abs(tr.samples.back().x - tr.x0) < 1e-6);
      CHECK(std::abs(tr.samples.back().p - tr.p0) < 1e-6);
    }
    CHECK(max_energy_drift(e, Harmonic{1.0}) < 1e-6);
  }
  SUBCASE("focusing at the origin is a caustic") {
    auto cfg = base(init, {0.5, 1.0, 1.5}, g, -5.0, 5.0);
    CHECK_THROWS_AS(integrate_trajectories(cfg, Harmonic{1.0}, 1e-3, 2000), CausticError);
  }
}

TEST_CASE("ensemble configuration errors") {
  const Grid1D g(0.0, 1.0, 32, Boundary::dirichlet);
  const InitialState ok{[](double) { return 1.0; }, {}, {}};
  CHECK_THROWS_AS(integrate_trajectories(base(ok, {0.1, 0.2}, g, 0.0, 1.0), FreeSpace{}, 1e-3, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(integrate_trajectories(base(ok, {0.1, 0.3, 0.2}, g, 0.0, 1.0), FreeSpace{}, 1e-3, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(integrate_trajectories(base({[](double) { return 2.0; }, {}, {}}, {0.1, 0.2, 0.3}, g, 0.0, 1.0),
                                         FreeSpace{}, 1e-3, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(integrate_trajectories(base({[](double) { return 1.0; }, {}, [](double) { return 1.0; }},
                                              {0.1, 0.2, 0.3}, g, 0.0, 1.0),
                                         FreeSpace{}, 1e-3, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(integrate_trajectories(base(ok, {0.1, 0.2, 0.3}, g, 0.0, 1.0), Barrier{}, 1e-3, 1),
                  std::invalid_argument);
  const InitialState moving{[](double) { return 1.0; }, [](double x) { return x; }, [](double) { return 1.0; }};
  CHECK_THROWS_AS(integrate_trajectories(base(moving, {0.1, 0.2, 0.3}, g, 0.0, 1.0), FreeSpace{}, 1e-2, 100),
                  EscapeError);
}

TEST_CASE("box walls reflect and flip the Jacobian") {
  const Grid1D g(0.0, 1.0, 65, Boundary::dirichlet);
  const InitialState init{[](double) { return 1.0; }, [](double x) { return 2.0 * x; }, [](double) { return 2.0; }};
  auto cfg = base(init, initial_positions(Spacing::uniform, 65, 0.0, 1.0), g, 0.0, 1.0);
  cfg.snapshot_every = 100;
  const auto e = integrate_trajectories(cfg, Box{1.0}, 1e-3, 300);
  for (const auto& tr : e.trajectories) {
    for (const auto& s : tr.samples) {
      CHECK(s.x >= 0.0);
      CHECK(s.x <= 1.0);
      CHECK(std::abs(s.p) == doctest::Approx(2.0));
      CHECK(s.jacobian == doctest::Approx(s.reflections % 2 ? -1.0 : 1.0));
    }
  }
  CHECK(max_energy_drift(e, Box{1.0}) < 1e-12);
}

TEST_CASE("initial positions") {
  const auto u = initial_positions(Spacing::uniform, 5, -1.0, 1.0);
  CHECK(u == std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0});
  const auto m = initial_positions(Spacing::equal_mass, 4, -6.0, 6.0, gauss);
  REQUIRE(m.size() == 4);
  CHECK(m[0] == doctest::Approx(-m[3]).epsilon(1e-3));
  CHECK(m[1] < 0.0);
  CHECK(m[2] > 0.0);
  CHECK_THROWS_AS(initial_positions(Spacing::equal_mass, 4, -6.0, 6.0), std::invalid_argument);
}

TEST_CASE("transport density") {
  SUBCASE("uniform density under uniform flow stays uniform") {
    const Grid1D g(0.0, 2.0 * pi, 128, Boundary::periodic);
    const InitialState init{[](double) { return 1.0 / (2.0 * pi); }, [](double x) { return 1.5 * x; },
                            [](double) { return 1.5; }};
    auto cfg = base(init, initial_positions(Spacing::uniform, 200, -3.0, 2.0 * pi + 1.0), g, -10.0, 20.0);
    cfg.snapshot_every = 500;
    const auto e = integrate_trajectories(cfg, FreeSpace{}, 1e-3, 1000);
    for (const auto& rho : transport_density(e, g)) {
      for (std::size_t i = 0; i < g.size(); ++i) CHECK(rho[i] == doctest::Approx(1.0 / (2.0 * pi)).epsilon(1e-12));
    }
  }
  SUBCASE("Gaussian at rest stays frozen") {
    const Grid1D g(-10.0, 10.0, 401, Boundary::dirichlet);
    auto cfg = base({gauss, {}, {}}, g.nodes(), g, -10.0, 10.0);
    cfg.snapshot_every = 1000;
    const auto e = integrate_trajectories(cfg, FreeSpace{}, 1e-3, 1000);
    const auto rho = transport_density(e, g).back();
    for (std::size_t i = 0; i + 1 < g.size(); ++i) CHECK(rho[i] == doctest::Approx(gauss(g.x(i))).epsilon(1e-12));
  }
  SUBCASE("linear velocity field doubles the width by t = 1") {
    const Grid1D g0(-10.0, 10.0, 401, Boundary::dirichlet);
    const Grid1D g(-20.0, 20.0, 4001, Boundary::dirichlet);
    const InitialState init{gauss, [](double x) { return x * x / 2.0; }, [](double x) { return x; }};
    auto cfg = base(init, initial_positions(Spacing::uniform, 401, -10.0, 10.0), g0, -30.0, 30.0);
    cfg.snapshot_every = 1000;
    const auto e = integrate_trajectories(cfg, FreeSpace{}, 1e-3, 1000);
    const auto rho = transport_density(e, g).back();
    CHECK(std::abs(moment(rho, 0) - 1.0) < 1e-3);
    CHECK(std::abs(moment(rho, 1)) < 1e-3);
    CHECK(std::abs(std::sqrt(moment(rho, 2)) - 2.0) < 1e-3);
  }
}

TEST_CASE("property: transported density obeys continuity at discretization level") {
  // Linear flow: rho = rho0(x / (1 + t)) / (1 + t), phi = x^2 / 2 (1 + t).
  std::vector<double> worst;
  for (int level = 0; level < 2; ++level) {
    const std::size_t n = 801u * (1u << level) - (1u << level) + 1u;
    const double dt = 2e-3 / (1 << level);
    const Grid1D g(-12.0, 12.0, n, Boundary::dirichlet);
    const InitialState init{gauss, [](double x) { return x * x / 2.0; }, [](double x) { return x; }};
    auto cfg = base(init, initial_positions(Spacing::uniform, 2 * n, -12.0, 12.0), g, -40.0, 40.0);
    const auto steps = static_cast<std::size_t>(std::lround(0.5 / dt));
    cfg.snapshot_every = steps - 1;
    const auto e = integrate_trajectories(cfg, FreeSpace{}, dt, steps);
    REQUIRE(e.t.size() == 3);
    const PhysicalConstants c{};
    auto fields = [&](std::size_t s) {
      const auto sheets = sheet_fields(e, s, g);
      REQUIRE(sheets.size() == 1);
      const RealField rho(g, sheets[0].rho);
      const RealField phi(g, sheets[0].phi);
      Mask m = density_mask(rho, 1e-8 * gauss(0.0));
      for (std::size_t i = 0; i < n; ++i) m[i] = m[i] && sheets[0].covered[i];
      return MadelungFields{rho, phi, quantum_potential(rho, c), m};
    };
    const auto r = continuity_residual(fields(1), fields(2), e.t[2] - e.t[1], c);
    worst.push_back(r.report.max_abs);
  }
  CHECK(worst[0] < 1e-3);
  CHECK(worst[0] / worst[1] > 3.0);
}

TEST_CASE("assembled waves") {
  const PhysicalConstants c{};
  SUBCASE("uniform flow is an exact plane wave") {
    const Grid1D g(0.0, 2.0 * pi, 256, Boundary::periodic);
    const double k = 2.0;
    const InitialState init{[](double) { return 1.0 / (2.0 * pi); }, [k](double x) { return k * x; },
                            [k](double) { return k; }};
    auto cfg = base(init, initial_positions(Spacing::uniform, 400, -4.0, 2.0 * pi + 1.0), g, -10.0, 20.0);
    cfg.snapshot_every = 100;
    const auto e = integrate_trajectories(cfg, FreeSpace{}, 1e-3, 1000);
    const auto psi = assemble_wave(e, g, c);
    for (std::size_t s = 0; s < psi.size(); ++s) {
      const double t = e.t[s];
      const auto exact = sample(g, [&](double x) { return std::polar(1.0 / std::sqrt(2.0 * pi), k * x - k * k * t / 2.0); });
      CHECK(l2_distance(psi[s], exact) < 1e-3);
    }
  }
  SUBCASE("start reproduces the initial state") {
    const Grid1D g(-8.0, 8.0, 321, Boundary::dirichlet);
    const InitialState init{gauss, [](double x) { return 0.3 * x * x; }, [](double x) { return 0.6 * x; }};
    auto cfg = base(init, initial_positions(Spacing::uniform, 4096, -8.0, 8.0), g, -20.0, 20.0);
    const auto e = integrate_trajectories(cfg, FreeSpace{}, 1e-3, 1);
    const auto psi = assemble_wave(e, g, c).front();
    double err = 0.0;
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
      err = std::max(err, std::abs(psi[i] - std::polar(std::sqrt(gauss(g.x(i))), 0.3 * g.x(i) * g.x(i))));
    }
    CHECK(err < 1e-6);
  }
  SUBCASE("Gaussian at rest: the Schrodinger residual is the quantum potential") {
    const Grid1D g(-20.0, 20.0, 2048, Boundary::periodic);
    auto cfg = base({gauss, {}, {}}, g.nodes(), g, -20.0, 20.0);
    cfg.snapshot_every = 500;
    const double dt = 1e-3;
    const auto e = integrate_trajectories(cfg, FreeSpace{}, dt, 1000);
    cfg.snapshot_every = 1;
    const auto tail = integrate_trajectories(cfg, FreeSpace{}, dt, 2);
    const auto psi = assemble_wave(tail, g, c);
    const auto r = schrodinger_residual(psi, sample_potential(FreeSpace{}, g, c), c, dt);
    const double qn = q_psi_norm(decompose(psi[1], c));
    CHECK(qn > 0.1);
    CHECK(std::abs(r[1].report.l2 - qn) < 0.2 * qn);
    CHECK(transport_density(e, g).back()[1024] == doctest::Approx(gauss(0.0)));
  }
}

TEST_CASE("WKB transmission") {
  const PhysicalConstants c{};
  const double wkb = wkb_transmission(1.0, Barrier{2.0, 1.0, 0.0}, c);
  CHECK(wkb == doctest::Approx(kWkbTransmission).epsilon(1e-14));
  CHECK(barrier_transmission_exact(1.0, Barrier{2.0, 1.0, 0.0}, c) - wkb ==
        doctest::Approx(kExactTransmission - kWkbTransmission).epsilon(1e-12));
  CHECK(wkb_transmission(1.0, Barrier{2.0, 1e-9, 0.0}, c) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(wkb_transmission(2.0 - 1e-12, Barrier{2.0, 1.0, 0.0}, c) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK_THROWS_AS(wkb_transmission(3.0, Barrier{2.0, 1.0, 0.0}, c), std::invalid_argument);
}
