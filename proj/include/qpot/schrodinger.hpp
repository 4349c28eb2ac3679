#pragma once

// Reference quantum dynamics: split-operator and Crank-Nicolson propagators,
// a tridiagonal eigensolver for the discretised Hamiltonian, and exact
// plane-wave scattering off piecewise-constant potentials.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpot/grid.hpp"
#include "qpot/madelung.hpp"
#include "qpot/potential.hpp"

namespace qpot {

enum class Method { split_operator, crank_nicolson };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct PropagatorConfig {
  /// Finite and nonzero; a negative step runs the evolution backwards.
  double dt = 1e-3;
  std::size_t steps = 1;
  Method method = Method::split_operator;
  PhysicalConstants constants{};
  /// Snapshot every this many steps. The initial and final states are
  /// always recorded.
  std::size_t snapshot_every = 1;
};

/// Non-finite amplitudes appeared during the run.
class InstabilityError : public std::runtime_error {
 public:
  InstabilityError(std::size_t step, const std::string& what)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Requested eigenstates are not converged on the given grid.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Evolution {
  std::vector<double> t;
  std::vector<ComplexField> psi;
  std::vector<std::size_t> step;  ///< step index of each snapshot
};

/// Split-operator requires a periodic grid, Crank-Nicolson a dirichlet one
/// (walls pinned to zero). psi0 must be normalised to within 1e-6.
Evolution propagate(const ComplexField& psi0, const PotentialSpec& v, const PropagatorConfig& cfg);

/// <psi|H|psi> / <psi|psi>. Periodic grids use the spectral kinetic energy
/// of the split-operator scheme, dirichlet grids the three-point stencil of
/// Crank-Nicolson.
double energy(const ComplexField& psi, const PotentialSpec& v, const PhysicalConstants& c);

struct StationaryStates {
  std::vector<double> energies;      ///< ascending
  std::vector<RealField> states;     ///< orthonormal; first significant lobe positive
};

/// Lowest k_max + 1 eigenpairs of the three-point Hamiltonian on a
/// dirichlet grid. Throws ResolutionError when the highest energy moves by
/// more than 0.1% on a grid of half the spacing.
StationaryStates stationary_states(const PotentialSpec& v, const Grid1D& grid, const PhysicalConstants& c,
                                   std::size_t k_max);

/// V(x) = values[j] between edges[j-1] and edges[j]; the outer regions
/// extend to infinity.
struct PiecewiseConstant {
  std::vector<double> edges;
  std::vector<double> values;  ///< edges.size() + 1 entries
};

/// Stationary scattering state for a wave incident from the left:
/// psi_j(x) = a_j exp(i k_j (x - x_j)) + b_j exp(-i k_j (x - x_j)) in region j,
/// with x_j the left edge of the region (the first edge for region 0).
struct ScatteringState {
  double energy = 0.0;
  double transmission = 0.0;
  double reflection = 0.0;
  std::vector<double> edges;
  std::vector<cplx> k;
  std::vector<cplx> a;
  std::vector<cplx> b;

  std::size_t region(double x) const;
  cplx operator()(double x) const;
};

/// Transfer-matrix solution; a_0 = 1 so that b_0 is the reflection
/// amplitude and a_last the transmission amplitude.
ScatteringState scatter(double energy, const PiecewiseConstant& v, const PhysicalConstants& c);

PiecewiseConstant as_piecewise(const Barrier& b);

/// Exact transmission probability through a rectangular barrier.
double barrier_transmission_exact(double energy, const Barrier& b, const PhysicalConstants& c);

}  // namespace qpot
