#pragma once

// Classical-trajectory construction of psi = sqrt(rho) exp(i phi / hbar):
// densities are carried along characteristics by the Jacobian
// rho0(x0) / |dx/dx0| and phases are the accumulated classical action. No
// quantum potential enters anywhere, so the construction is exact only
// where Q vanishes.

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpot/grid.hpp"
#include "qpot/madelung.hpp"
#include "qpot/potential.hpp"

namespace qpot {

struct InitialState {
  std::function<double(double)> rho0;
  std::function<double(double)> phi0;  ///< empty means phi0 = 0
  std::function<double(double)> p0;    ///< empty means p0 = 0; must equal d(phi0)/dx
};

enum class Spacing { uniform, equal_mass };

/// `count` strictly increasing positions on [lo, hi]. Uniform spacing
/// includes both ends; equal-mass spacing places position i at the
/// (i + 1/2) / count quantile of rho0 restricted to [lo, hi].
std::vector<double> initial_positions(Spacing spacing, std::size_t count, double lo, double hi,
                                      const std::function<double(double)>& rho0 = {});

struct EnsembleConfig {
  InitialState initial;
  std::vector<double> x0;  ///< strictly increasing, at least 3 entries
  Grid1D grid;             ///< rho0 must integrate to 1 over this grid
  double domain_min = 0.0; ///< a trajectory leaving [domain_min, domain_max] is an error
  double domain_max = 0.0;
  PhysicalConstants constants{};
  std::size_t snapshot_every = 1;
  double caustic_threshold = 1e-3;
  bool abort_on_caustic = true;
};

struct TrajectorySample {
  double x = 0.0;
  double p = 0.0;
  double action = 0.0;    ///< phi0(x0) + integral of the Lagrangian
  double jacobian = 1.0;  ///< dx(t)/dx0, negative after an odd number of wall bounces
  int reflections = 0;
};

struct Trajectory {
  double x0 = 0.0;
  double p0 = 0.0;
  double rho0 = 0.0;
  std::vector<TrajectorySample> samples;  ///< one per snapshot time
};

struct TrajectoryEnsemble {
  std::vector<double> t;
  std::vector<Trajectory> trajectories;  ///< ordered by x0
  PhysicalConstants constants{};
  bool walls = false;  ///< hard walls: every bounce flips the sign of the amplitude
  double caustic_threshold = 1e-3;
};

class CausticError : public std::runtime_error {
 public:
  CausticError(double t, double x0);
  double t() const noexcept { return t_; }
  double x0() const noexcept { return x0_; }

 private:
  double t_, x0_;
};

class EscapeError : public std::runtime_error {
 public:
  EscapeError(double t, double x0);
  double t() const noexcept { return t_; }
  double x0() const noexcept { return x0_; }

 private:
  double t_, x0_;
};

/// Two trajectories of the same branch reached the same position.
class BranchFoldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Velocity-Verlet integration of Hamilton's equations for every initial
/// position, with elastic reflection at box walls and trapezoidal
/// accumulation of p^2/2M - V.
TrajectoryEnsemble integrate_trajectories(const EnsembleConfig& cfg, const PotentialSpec& v, double dt,
                                          std::size_t steps);

/// Contribution of one single-valued sheet of an ensemble at one snapshot:
/// the trajectories sharing a reflection count.
struct SheetField {
  int reflections = 0;
  Mask covered;              ///< grid nodes inside the sheet's position range
  std::vector<double> rho;   ///< rho0 / |J|, interpolated (monotone cubic)
  std::vector<double> phi;   ///< action, cubic Hermite with the momentum as slope
};

std::vector<SheetField> sheet_fields(const TrajectoryEnsemble& e, std::size_t snapshot, const Grid1D& grid);

/// Classical density on the grid, one field per snapshot.
std::vector<RealField> transport_density(const TrajectoryEnsemble& e, const Grid1D& grid);

/// Sum over branches of weight * sqrt(rho) exp(i phi / hbar), normalised,
/// one field per snapshot. Dirichlet grids pin the end nodes to zero.
std::vector<ComplexField> assemble_wave(std::span<const TrajectoryEnsemble> branches, std::span<const cplx> weights,
                                        const Grid1D& grid, const PhysicalConstants& c);
std::vector<ComplexField> assemble_wave(const TrajectoryEnsemble& e, const Grid1D& grid, const PhysicalConstants& c);

/// exp(-2 kappa a) with kappa = sqrt(2M(V0 - E)) / hbar; requires 0 < E < V0.
double wkb_transmission(double energy, const Barrier& b, const PhysicalConstants& c);

/// Largest relative drift of p^2/2M + V along any trajectory.
double max_energy_drift(const TrajectoryEnsemble& e, const PotentialSpec& v);

}  // namespace qpot
