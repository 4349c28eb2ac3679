#pragma once

// Harmonic-oscillator eigenbasis: physicists' Hermite polynomials times the
// Gaussian weight. Expanding a state in this basis and rotating each
// coefficient by exp(-i E_k t / hbar) is exact quantum evolution in the
// oscillator, which is what makes a Hermite parameterisation of the initial
// density reproduce quantum results.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "qpot/grid.hpp"
#include "qpot/madelung.hpp"

namespace qpot {

/// H_k(x) from H_{k+1} = 2x H_k - 2k H_{k-1}.
std::vector<double> hermite(std::size_t k, std::span<const double> x);
double hermite(std::size_t k, double x);

/// Normalised oscillator eigenfunction
/// N_k H_k(sqrt(M omega / hbar) x) exp(-M omega x^2 / 2 hbar).
/// Throws GridError when the state is larger than 1e-12 at either grid end.
RealField eigenfunction(std::size_t k, const Grid1D& grid, double omega, const PhysicalConstants& c);

class HermiteBasis {
 public:
  /// Builds chi_0 .. chi_kmax on the grid and checks their Gram matrix is
  /// the identity to 1e-8.
  HermiteBasis(double omega, const PhysicalConstants& c, std::size_t k_max, const Grid1D& grid);

  double omega() const noexcept { return omega_; }
  const PhysicalConstants& constants() const noexcept { return constants_; }
  std::size_t k_max() const noexcept { return states_.size() - 1; }
  const Grid1D& grid() const noexcept { return grid_; }
  const RealField& state(std::size_t k) const { return states_.at(k); }
  /// hbar omega (k + 1/2)
  double energy(std::size_t k) const noexcept { return constants_.hbar * omega_ * (static_cast<double>(k) + 0.5); }
  double orthonormality_error() const noexcept { return gram_error_; }

 private:
  double omega_;
  PhysicalConstants constants_;
  Grid1D grid_;
  std::vector<RealField> states_;
  double gram_error_ = 0.0;
};

struct ModeCoefficients {
  std::vector<cplx> c;   ///< one per mode 0..k_max
  double deficit = 0.0;  ///< 1 - sum |c_k|^2

  double total_weight() const noexcept;
};

/// The state has more weight outside the basis than the tolerance allows.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultDeficitTolerance = 1e-6;

ModeCoefficients expand(const ComplexField& psi0, const HermiteBasis& basis,
                        double max_deficit = kDefaultDeficitTolerance);
ModeCoefficients propagate_phases(const ModeCoefficients& c, double t, const HermiteBasis& basis);
ComplexField synthesize(const ModeCoefficients& c, const HermiteBasis& basis);

}  // namespace qpot
