#pragma once

#include <string>
#include <variant>

#include "qpot/grid.hpp"
#include "qpot/madelung.hpp"

namespace qpot {

struct FreeSpace {};

/// V = M omega^2 x^2 / 2
struct Harmonic {
  double omega = 1.0;
};

/// Hard walls at the ends of a dirichlet grid of the same width; V = 0 inside.
struct Box {
  double width = 1.0;
};

/// Rectangular barrier of the given height on |x - center| <= width / 2.
struct Barrier {
  double height = 1.0;
  double width = 1.0;
  double center = 0.0;
};

struct Tabulated {
  RealField values;
};

using PotentialSpec = std::variant<FreeSpace, Harmonic, Box, Barrier, Tabulated>;

std::string kind_name(const PotentialSpec& v);
void validate(const PotentialSpec& v);

/// Potential sampled on the nodes of `grid`. Box potentials require a
/// dirichlet grid spanning exactly the box; tabulated ones the same grid.
RealField sample_potential(const PotentialSpec& v, const Grid1D& grid, const PhysicalConstants& c);

/// Point evaluation and -dV/dx for smooth potentials (free, harmonic, box
/// interior, tabulated by linear interpolation). Throws for the barrier,
/// whose force is a delta function at the edges.
double potential_at(const PotentialSpec& v, double x, const PhysicalConstants& c);
double force_at(const PotentialSpec& v, double x, const PhysicalConstants& c);

}  // namespace qpot
