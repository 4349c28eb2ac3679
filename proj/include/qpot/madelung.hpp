#pragma once

// Polar (Madelung) form of a wave function, psi = sqrt(rho) exp(i phi / hbar),
// the quantum potential Q = -(hbar^2 / 2M) lap(sqrt(rho)) / sqrt(rho), and the
// residuals of the continuity, quantum Hamilton-Jacobi and Schrodinger
// equations evaluated on sampled fields.

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "qpot/grid.hpp"

namespace qpot {

struct PhysicalConstants {
  double hbar = 1.0;
  double mass = 1.0;

  /// Throws std::invalid_argument unless both are finite and positive.
  void validate() const;
};

/// Every density sample is at or below the floor.
class EmptyFieldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Mask = std::vector<bool>;

inline constexpr double kRelativeDensityFloor = 1e-12;

/// kRelativeDensityFloor * max(rho); zero for an all-zero field.
double default_floor(const RealField& rho);

/// Nodes where rho > floor and a centered stencil exists. Only these nodes
/// carry meaningful Q and phi.
Mask density_mask(const RealField& rho, double floor);

/// Shrinks a mask so that each surviving node has `radius` masked neighbours
/// on each side. Grid ends count as unmasked unless the grid is periodic.
Mask erode(const Mask& mask, const AnyGrid& grid, std::size_t radius);

struct MadelungFields {
  RealField rho;
  RealField phi;  ///< action units; unwrapped within each masked run
  RealField q;    ///< energy units; zero off the mask
  Mask mask;
};

struct ResidualReport {
  double max_abs = 0.0;
  double l2 = 0.0;
  double masked_fraction = 0.0;  ///< fraction of nodes excluded from the report
};

template <class T>
struct Residual {
  Field<T> values;  ///< zero off the mask
  Mask mask;
  ResidualReport report;
};

using RealResidual = Residual<double>;
using ComplexResidual = Residual<cplx>;

/// Worst case over a time series: largest max_abs, l2 and masked_fraction.
template <class T>
ResidualReport worst_case(std::span<const Residual<T>> series);

MadelungFields decompose(const ComplexField& psi, const PhysicalConstants& c, double floor);
MadelungFields decompose(const ComplexField& psi, const PhysicalConstants& c);

/// Q on the density mask, zero elsewhere. Radial fields use the 3D
/// spherically symmetric Laplacian.
RealField quantum_potential(const RealField& rho, const PhysicalConstants& c, double floor);
RealField quantum_potential(const RealField& rho, const PhysicalConstants& c);

ComplexField reconstruct(const MadelungFields& fields, const PhysicalConstants& c);

/// grad(phi) with every neighbour difference reduced modulo 2 pi hbar, so
/// branch cuts of the stored phase do not leak into the velocity field.
RealField phase_gradient(const RealField& phi, const PhysicalConstants& c);

/// sqrt(sum_mask w Q^2 rho), i.e. ||Q psi|| restricted to the mask.
double q_psi_norm(const MadelungFields& fields);

/// d(rho)/dt + div(rho grad(phi) / M) between two snapshots, centred at the
/// half step.
RealResidual continuity_residual(const MadelungFields& t0, const MadelungFields& t1, double dt,
                                 const PhysicalConstants& c);

/// d(phi)/dt + |grad phi|^2 / 2M + V [+ Q], one residual per snapshot.
/// Without Q an exact quantum solution leaves exactly -Q behind.
std::vector<RealResidual> qhj_residual(std::span<const MadelungFields> series, double dt,
                                       const RealField& potential, const PhysicalConstants& c,
                                       bool include_q);

/// [i hbar d/dt + (hbar^2 / 2M) lap - V] psi, one residual per snapshot.
/// Needs at least three snapshots.
std::vector<ComplexResidual> schrodinger_residual(std::span<const ComplexField> series,
                                                  const RealField& potential, const PhysicalConstants& c,
                                                  double dt);

}  // namespace qpot
