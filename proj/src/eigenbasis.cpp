#include "qpot/eigenbasis.hpp"

#include <cmath>
#include <numbers>

namespace qpot {

double hermite(std::size_t k, double x) {
  double prev = 1.0;
  if (k == 0) return prev;
  double cur = 2.0 * x;
  for (std::size_t j = 1; j < k; ++j) {
    const double next = 2.0 * x * cur - 2.0 * static_cast<double>(j) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

std::vector<double> hermite(std::size_t k, std::span<const double> x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = hermite(k, x[i]);
  return out;
}

RealField eigenfunction(std::size_t k, const Grid1D& grid, double omega, const PhysicalConstants& c) {
  c.validate();
  if (!(omega > 0.0) || !std::isfinite(omega)) throw std::invalid_argument("oscillator frequency must be positive");
  const double scale = std::sqrt(c.mass * omega / c.hbar);
  const auto kd = static_cast<double>(k);
  // log N_k; the polynomial itself stays unnormalised.
  const double log_norm = 0.25 * std::log(c.mass * omega / (std::numbers::pi * c.hbar)) -
                          0.5 * (kd * std::numbers::ln2 + std::lgamma(kd + 1.0));
  auto chi = [&](double x) {
    const double xi = scale * x;
    const double h = hermite(k, xi);
    if (h == 0.0) return 0.0;
    const double mag = std::exp(log_norm + std::log(std::abs(h)) - 0.5 * xi * xi);
    return h > 0.0 ? mag : -mag;
  };
  const double tail = std::max(std::abs(chi(grid.xmin())), std::abs(chi(grid.xmax())));
  if (tail > 1e-12) {
    throw GridError("grid too narrow for oscillator state " + std::to_string(k) + " (edge amplitude " +
                    std::to_string(tail) + ")");
  }
  return sample(grid, chi);
}

HermiteBasis::HermiteBasis(double omega, const PhysicalConstants& c, std::size_t k_max, const Grid1D& grid)
    : omega_(omega), constants_(c), grid_(grid) {
  states_.reserve(k_max + 1);
  for (std::size_t k = 0; k <= k_max; ++k) states_.push_back(eigenfunction(k, grid, omega, c));
  for (std::size_t j = 0; j <= k_max; ++j) {
    for (std::size_t k = j; k <= k_max; ++k) {
      const double g = inner_product(states_[j], states_[k]);
      gram_error_ = std::max(gram_error_, std::abs(g - (j == k ? 1.0 : 0.0)));
    }
  }
  if (gram_error_ > 1e-8) {
    throw GridError("oscillator basis is not orthonormal on this grid (error " + std::to_string(gram_error_) + ")");
  }
}

double ModeCoefficients::total_weight() const noexcept {
  double s = 0.0;
  for (const auto& z : c) s += std::norm(z);
  return s;
}

ModeCoefficients expand(const ComplexField& psi0, const HermiteBasis& basis, double max_deficit) {
  require_same_grid(psi0.grid(), basis.grid());
  ModeCoefficients out;
  out.c.reserve(basis.k_max() + 1);
  for (std::size_t k = 0; k <= basis.k_max(); ++k) out.c.push_back(inner_product(to_complex(basis.state(k)), psi0));
  out.deficit = l2_norm(psi0) * l2_norm(psi0) - out.total_weight();
  if (out.total_weight() > 1.0 + 1e-6) throw std::invalid_argument("initial state is not normalised");
  if (out.deficit > max_deficit) {
    throw TruncationError("state keeps " + std::to_string(out.deficit) + " of its weight outside " +
                          std::to_string(basis.k_max() + 1) + " oscillator modes");
  }
  return out;
}

ModeCoefficients propagate_phases(const ModeCoefficients& c, double t, const HermiteBasis& basis) {
  ModeCoefficients out = c;
  const double hbar = basis.constants().hbar;
  for (std::size_t k = 0; k < out.c.size(); ++k) out.c[k] *= std::polar(1.0, -basis.energy(k) * t / hbar);
  return out;
}

ComplexField synthesize(const ModeCoefficients& c, const HermiteBasis& basis) {
  if (c.c.size() > basis.k_max() + 1) throw std::invalid_argument("more coefficients than basis states");
  std::vector<cplx> psi(basis.grid().size(), cplx{0.0, 0.0});
  for (std::size_t k = 0; k < c.c.size(); ++k) {
    const auto& chi = basis.state(k);
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] += c.c[k] * chi[i];
  }
  return ComplexField(basis.grid(), std::move(psi));
}

}  // namespace qpot
