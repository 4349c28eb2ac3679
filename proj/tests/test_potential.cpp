#include <doctest.h>

#include "qpot/potential.hpp"

using namespace qpot;

TEST_CASE("potential parameters are validated") {
  CHECK_THROWS_AS(validate(Harmonic{0.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate(Box{-1.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate(Barrier{2.0, -1.0, 0.0}), std::invalid_argument);
  CHECK_NOTHROW(validate(Barrier{2.0, 1.0, 0.0}));
  CHECK(kind_name(PotentialSpec{Harmonic{}}) == "harmonic");
  CHECK(kind_name(PotentialSpec{FreeSpace{}}) == "free");
}

TEST_CASE("sampled potentials") {
  const PhysicalConstants c{1.0, 2.0};
  const Grid1D g(-2.0, 2.0, 41, Boundary::dirichlet);
  const auto h = sample_potential(Harmonic{1.5}, g, c);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(h[i] == doctest::Approx(0.5 * 2.0 * 2.25 * g.x(i) * g.x(i)));

  const auto b = sample_potential(Barrier{3.0, 1.0, 0.5}, g, c);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x(i);
    if (x > 0.0 + 1e-12 && x < 1.0 - 1e-12) CHECK(b[i] == 3.0);
    if (x < -1e-12 || x > 1.0 + 1e-12) CHECK(b[i] == 0.0);
  }

  const auto box = sample_potential(Box{4.0}, g, c);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(box[i] == 0.0);
  CHECK_THROWS_AS(sample_potential(Box{3.0}, g, c), std::invalid_argument);
  CHECK_THROWS_AS(sample_potential(Box{4.0}, Grid1D(-2.0, 2.0, 40, Boundary::periodic), c), std::invalid_argument);
}

TEST_CASE("point evaluation and force") {
  const PhysicalConstants c{};
  CHECK(force_at(Harmonic{2.0}, 0.5, c) == doctest::Approx(-2.0));
  CHECK(potential_at(Harmonic{2.0}, 0.5, c) == doctest::Approx(0.5));
  CHECK(force_at(FreeSpace{}, 3.0, c) == 0.0);
  CHECK_THROWS_AS(force_at(Barrier{}, 0.0, c), std::invalid_argument);

  const Grid1D g(0.0, 1.0, 11, Boundary::dirichlet);
  const Tabulated t{sample(g, [](double x) { return 3.0 * x; })};
  CHECK(potential_at(t, 0.55, c) == doctest::Approx(1.65));
  CHECK(force_at(t, 0.55, c) == doctest::Approx(-3.0));
}
