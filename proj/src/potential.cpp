#include "qpot/potential.hpp"

#include <cmath>
#include <stdexcept>

namespace qpot {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double lerp_table(const Tabulated& t, double x, bool derivative) {
  const auto& g = t.values.line();
  const double s = (x - g.xmin()) / g.dx();
  const auto last = static_cast<double>(g.size() - 1);
  if (!(s >= 0.0 && s <= last)) throw std::domain_error("position outside the tabulated potential");
  auto i = static_cast<std::size_t>(std::floor(s));
  if (i + 1 >= g.size()) i = g.size() - 2;
  const double f = s - static_cast<double>(i);
  if (derivative) return (t.values[i + 1] - t.values[i]) / g.dx();
  return (1.0 - f) * t.values[i] + f * t.values[i + 1];
}

}  // namespace

std::string kind_name(const PotentialSpec& v) {
  return std::visit(overloaded{[](const FreeSpace&) { return std::string("free"); },
                               [](const Harmonic&) { return std::string("harmonic"); },
                               [](const Box&) { return std::string("box"); },
                               [](const Barrier&) { return std::string("barrier"); },
                               [](const Tabulated&) { return std::string("tabulated"); }},
                    v);
}

void validate(const PotentialSpec& v) {
  std::visit(overloaded{[](const FreeSpace&) {},
                        [](const Harmonic& h) {
                          if (!(std::isfinite(h.omega) && h.omega > 0.0))
                            throw std::invalid_argument("harmonic potential needs omega > 0");
                        },
                        [](const Box& b) {
                          if (!(std::isfinite(b.width) && b.width > 0.0))
                            throw std::invalid_argument("box potential needs width > 0");
                        },
                        [](const Barrier& b) {
                          if (!std::isfinite(b.height) || !std::isfinite(b.center) ||
                              !(std::isfinite(b.width) && b.width >= 0.0))
                            throw std::invalid_argument("barrier needs finite height, center and width >= 0");
                        },
                        [](const Tabulated& t) { (void)t.values.line(); }},
             v);
}

RealField sample_potential(const PotentialSpec& v, const Grid1D& grid, const PhysicalConstants& c) {
  validate(v);
  return std::visit(
      overloaded{[&](const FreeSpace&) { return sample(grid, [](double) { return 0.0; }); },
                 [&](const Harmonic& h) {
                   const double k = c.mass * h.omega * h.omega;
                   return sample(grid, [k](double x) { return 0.5 * k * x * x; });
                 },
                 [&](const Box& b) {
                   if (grid.periodic() || std::abs(grid.length() - b.width) > 1e-12 * b.width) {
                     throw GridError("box potential needs a dirichlet grid spanning exactly the box width");
                   }
                   return sample(grid, [](double) { return 0.0; });
                 },
                 [&](const Barrier& b) {
                   return sample(grid, [&b](double x) {
                     return std::abs(x - b.center) <= 0.5 * b.width ? b.height : 0.0;
                   });
                 },
                 [&](const Tabulated& t) {
                   if (!(AnyGrid(grid) == t.values.grid())) {
                     throw GridError("tabulated potential lives on a different grid");
                   }
                   return t.values;
                 }},
      v);
}

double potential_at(const PotentialSpec& v, double x, const PhysicalConstants& c) {
  return std::visit(overloaded{[](const FreeSpace&) { return 0.0; },
                               [&](const Harmonic& h) { return 0.5 * c.mass * h.omega * h.omega * x * x; },
                               [](const Box&) { return 0.0; },
                               [&](const Barrier& b) {
                                 return std::abs(x - b.center) <= 0.5 * b.width ? b.height : 0.0;
                               },
                               [&](const Tabulated& t) { return lerp_table(t, x, false); }},
                    v);
}

double force_at(const PotentialSpec& v, double x, const PhysicalConstants& c) {
  return std::visit(overloaded{[](const FreeSpace&) { return 0.0; },
                               [&](const Harmonic& h) { return -c.mass * h.omega * h.omega * x; },
                               [](const Box&) { return 0.0; },
                               [](const Barrier&) -> double {
                                 throw std::invalid_argument("barrier potential has no smooth force");
                               },
                               [&](const Tabulated& t) { return -lerp_table(t, x, true); }},
                    v);
}

}  // namespace qpot
