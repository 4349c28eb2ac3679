#include "qpot/schrodinger.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>

#include "fft.hpp"

namespace qpot {

std::string to_string(Method m) { return m == Method::split_operator ? "split_operator" : "crank_nicolson"; }

Method method_from_string(const std::string& s) {
  if (s == "split_operator") return Method::split_operator;
  if (s == "crank_nicolson") return Method::crank_nicolson;
  throw std::invalid_argument("unknown propagation method '" + s + "'");
}

namespace {

bool all_finite(std::span<const cplx> v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::isfinite(s);
}

class SplitOperatorStepper {
 public:
  SplitOperatorStepper(const Grid1D& g, const RealField& v, const PropagatorConfig& cfg)
      : n_(g.size()), plan_(g.size()), half_v_(g.size()), kinetic_(g.size()) {
    const auto& c = cfg.constants;
    for (std::size_t i = 0; i < n_; ++i) half_v_[i] = std::polar(1.0, -0.5 * v[i] * cfg.dt / c.hbar);
    const auto k = detail::wavenumbers(g);
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      kinetic_[j] = inv_n * std::polar(1.0, -c.hbar * k[j] * k[j] * cfg.dt / (2.0 * c.mass));
    }
  }

  void load(std::span<const cplx> psi) { std::copy(psi.begin(), psi.end(), plan_.data().begin()); }
  std::span<const cplx> state() noexcept { return plan_.data(); }

  void step() {
    auto psi = plan_.data();
    for (std::size_t i = 0; i < n_; ++i) psi[i] *= half_v_[i];
    plan_.forward();
    for (std::size_t j = 0; j < n_; ++j) psi[j] *= kinetic_[j];
    plan_.backward();
    for (std::size_t i = 0; i < n_; ++i) psi[i] *= half_v_[i];
  }

 private:
  std::size_t n_;
  detail::FftPlan plan_;
  std::vector<cplx> half_v_;
  std::vector<cplx> kinetic_;
};

// (1 + i dt H / 2 hbar) psi' = (1 - i dt H / 2 hbar) psi on the interior
// nodes; the end nodes are walls with psi = 0.
class CrankNicolsonStepper {
 public:
  CrankNicolsonStepper(const Grid1D& g, const RealField& v, const PropagatorConfig& cfg)
      : n_(g.size()), psi_(g.size(), cplx{0.0, 0.0}) {
    const auto& c = cfg.constants;
    const std::size_t m = n_ - 2;
    const double s = c.hbar * c.hbar / (2.0 * c.mass * g.dx() * g.dx());
    const double gamma = cfg.dt / (2.0 * c.hbar);
    off_ = cplx{0.0, -gamma * s};
    diag_h_.resize(m);
    for (std::size_t i = 0; i < m; ++i) diag_h_[i] = 2.0 * s + v[i + 1];
    gamma_ = gamma;
    s_ = s;

    // Thomas factorisation of the constant left-hand matrix.
    denom_.resize(m);
    cprime_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const cplx d = cplx{1.0, gamma * diag_h_[i]};
      denom_[i] = i == 0 ? d : d - off_ * cprime_[i - 1];
      cprime_[i] = off_ / denom_[i];
    }
    rhs_.resize(m);
  }

  void load(std::span<const cplx> psi) {
    std::copy(psi.begin(), psi.end(), psi_.begin());
    psi_.front() = psi_.back() = cplx{0.0, 0.0};
  }
  std::span<const cplx> state() noexcept { return psi_; }

  void step() {
    const std::size_t m = n_ - 2;
    const cplx ig{0.0, gamma_};
    for (std::size_t i = 0; i < m; ++i) {
      const cplx hpsi = -s_ * psi_[i] + diag_h_[i] * psi_[i + 1] - s_ * psi_[i + 2];
      rhs_[i] = psi_[i + 1] - ig * hpsi;
    }
    rhs_[0] /= denom_[0];
    for (std::size_t i = 1; i < m; ++i) rhs_[i] = (rhs_[i] - off_ * rhs_[i - 1]) / denom_[i];
    for (std::size_t i = m - 1; i-- > 0;) rhs_[i] -= cprime_[i] * rhs_[i + 1];
    for (std::size_t i = 0; i < m; ++i) psi_[i + 1] = rhs_[i];
  }

 private:
  std::size_t n_;
  std::vector<cplx> psi_;
  std::vector<double> diag_h_;
  std::vector<cplx> denom_, cprime_, rhs_;
  cplx off_;
  double gamma_ = 0.0;
  double s_ = 0.0;
};

template <class Stepper>
Evolution run(Stepper& stepper, const ComplexField& psi0, const PropagatorConfig& cfg) {
  Evolution ev;
  const AnyGrid& g = psi0.grid();
  stepper.load(psi0.values());
  auto record = [&](std::size_t step) {
    const auto s = stepper.state();
    ev.t.push_back(static_cast<double>(step) * cfg.dt);
    ev.step.push_back(step);
    ev.psi.emplace_back(g, std::vector<cplx>(s.begin(), s.end()));
  };
  record(0);
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    stepper.step();
    if (!all_finite(stepper.state())) throw InstabilityError(step, "non-finite wave function");
    if (step % cfg.snapshot_every == 0 || step == cfg.steps) record(step);
  }
  return ev;
}

}  // namespace

Evolution propagate(const ComplexField& psi0, const PotentialSpec& v, const PropagatorConfig& cfg) {
  cfg.constants.validate();
  if (!std::isfinite(cfg.dt) || cfg.dt == 0.0) throw std::invalid_argument("time step must be finite and nonzero");
  if (cfg.steps < 1) throw std::invalid_argument("propagation needs at least one step");
  if (cfg.snapshot_every < 1) throw std::invalid_argument("snapshot_every must be at least 1");
  const Grid1D& g = psi0.line();
  if (std::abs(l2_norm(psi0) - 1.0) > 1e-6) throw std::invalid_argument("initial state is not normalised");
  const RealField pot = sample_potential(v, g, cfg.constants);

  if (cfg.method == Method::split_operator) {
    if (!g.periodic()) throw std::invalid_argument("split-operator propagation requires a periodic grid");
    SplitOperatorStepper stepper(g, pot, cfg);
    return run(stepper, psi0, cfg);
  }
  if (g.periodic()) throw std::invalid_argument("Crank-Nicolson propagation requires a dirichlet grid");
  CrankNicolsonStepper stepper(g, pot, cfg);
  return run(stepper, psi0, cfg);
}

double energy(const ComplexField& psi, const PotentialSpec& v, const PhysicalConstants& c) {
  c.validate();
  const Grid1D& g = psi.line();
  const RealField pot = sample_potential(v, g, c);
  const std::size_t n = g.size();
  double norm = 0.0, pe = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    norm += std::norm(psi[i]);
    pe += pot[i] * std::norm(psi[i]);
  }
  double ke = 0.0;
  if (g.periodic()) {
    detail::FftPlan plan(n);
    auto buf = plan.data();
    std::copy(psi.values().begin(), psi.values().end(), buf.begin());
    plan.forward();
    const auto k = detail::wavenumbers(g);
    double spec_norm = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      spec_norm += std::norm(buf[j]);
      ke += std::norm(buf[j]) * c.hbar * c.hbar * k[j] * k[j] / (2.0 * c.mass);
    }
    ke /= spec_norm;
  } else {
    const double s = c.hbar * c.hbar / (2.0 * c.mass * g.dx() * g.dx());
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const cplx tpsi = -s * (psi[i + 1] - 2.0 * psi[i] + psi[i - 1]);
      ke += (std::conj(psi[i]) * tpsi).real();
    }
    ke /= norm;
  }
  return ke + pe / norm;
}

namespace {

StationaryStates diagonalise(const RealField& pot, const Grid1D& g, const PhysicalConstants& c, std::size_t k_max) {
  const std::size_t n = g.size();
  const std::size_t m = n - 2;
  if (k_max + 1 > m) throw ResolutionError("more states requested than interior grid nodes");
  const double s = c.hbar * c.hbar / (2.0 * c.mass * g.dx() * g.dx());
  std::vector<double> d(m), e(m, -s);
  for (std::size_t i = 0; i < m; ++i) d[i] = 2.0 * s + pot[i + 1];

  const auto count = static_cast<lapack_int>(k_max + 1);
  lapack_int found = 0;
  std::vector<double> w(m), z(m * static_cast<std::size_t>(count));
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(count));
  const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', static_cast<lapack_int>(m), d.data(), e.data(),
                                         0.0, 0.0, 1, count, 0.0, &found, w.data(), z.data(),
                                         static_cast<lapack_int>(m), isuppz.data());
  if (info != 0 || found != count) throw std::runtime_error("tridiagonal eigensolver failed (info " + std::to_string(info) + ")");

  StationaryStates out;
  const double scale = 1.0 / std::sqrt(g.dx());
  for (std::size_t k = 0; k <= k_max; ++k) {
    out.energies.push_back(w[k]);
    const double* col = z.data() + k * m;
    double peak = 0.0;
    for (std::size_t i = 0; i < m; ++i) peak = std::max(peak, std::abs(col[i]));
    double sign = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (std::abs(col[i]) > 1e-3 * peak) {
        sign = col[i] > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    std::vector<double> v(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) v[i + 1] = sign * scale * col[i];
    out.states.emplace_back(g, std::move(v));
  }
  return out;
}

}  // namespace

StationaryStates stationary_states(const PotentialSpec& v, const Grid1D& grid, const PhysicalConstants& c,
                                   std::size_t k_max) {
  c.validate();
  if (grid.periodic()) throw std::invalid_argument("stationary states need a dirichlet grid");
  auto out = diagonalise(sample_potential(v, grid, c), grid, c, k_max);
  if (!std::holds_alternative<Tabulated>(v)) {
    const Grid1D fine = grid.refined();
    const auto check = diagonalise(sample_potential(v, fine, c), fine, c, k_max);
    const double coarse = out.energies.back();
    const double shift = std::abs(check.energies.back() - coarse) / std::max(std::abs(coarse), 1e-300);
    if (shift > 1e-3) {
      throw ResolutionError("state " + std::to_string(k_max) + " moves by " + std::to_string(100.0 * shift) +
                            "% under grid refinement");
    }
  }
  return out;
}

std::size_t ScatteringState::region(double x) const {
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
}

cplx ScatteringState::operator()(double x) const {
  const std::size_t j = region(x);
  const double ref = edges.empty() ? 0.0 : edges[j == 0 ? 0 : j - 1];
  const double d = x - ref;
  if (k[j] == cplx{0.0, 0.0}) return a[j] + b[j] * d;
  const cplx ikd = cplx{0.0, 1.0} * k[j] * d;
  return a[j] * std::exp(ikd) + b[j] * std::exp(-ikd);
}

ScatteringState scatter(double e, const PiecewiseConstant& v, const PhysicalConstants& c) {
  c.validate();
  if (!(e > 0.0) || !std::isfinite(e)) throw std::invalid_argument("scattering energy must be positive");
  if (v.values.size() != v.edges.size() + 1) throw std::invalid_argument("piecewise potential needs edges + 1 values");
  if (!std::is_sorted(v.edges.begin(), v.edges.end())) throw std::invalid_argument("potential edges must be sorted");
  const std::size_t regions = v.values.size();
  if (!(e > v.values.front()) || !(e > v.values.back())) {
    throw std::invalid_argument("outer regions must be classically allowed");
  }

  ScatteringState st;
  st.energy = e;
  st.edges = v.edges;
  st.k.resize(regions);
  st.a.assign(regions, cplx{0.0, 0.0});
  st.b.assign(regions, cplx{0.0, 0.0});
  for (std::size_t j = 0; j < regions; ++j) {
    st.k[j] = std::sqrt(cplx{2.0 * c.mass * (e - v.values[j]), 0.0}) / c.hbar;
  }

  // Outgoing wave only on the right; match psi and psi' leftwards.
  st.a.back() = 1.0;
  const cplx i1{0.0, 1.0};
  auto ref = [&](std::size_t j) { return v.edges[j == 0 ? 0 : j - 1]; };
  for (std::size_t j = regions - 1; j-- > 0;) {
    const double edge = v.edges[j];
    const std::size_t r = j + 1;
    const double dr = edge - ref(r);
    cplx psi, dpsi;
    if (st.k[r] == cplx{0.0, 0.0}) {
      psi = st.a[r] + st.b[r] * dr;
      dpsi = st.b[r];
    } else {
      const cplx ep = std::exp(i1 * st.k[r] * dr);
      psi = st.a[r] * ep + st.b[r] / ep;
      dpsi = i1 * st.k[r] * (st.a[r] * ep - st.b[r] / ep);
    }
    const double dl = edge - ref(j);
    if (st.k[j] == cplx{0.0, 0.0}) {
      st.b[j] = dpsi;
      st.a[j] = psi - dpsi * dl;
    } else {
      const cplx ep = std::exp(i1 * st.k[j] * dl);
      const cplx u = dpsi / (i1 * st.k[j]);
      st.a[j] = 0.5 * (psi + u) / ep;
      st.b[j] = 0.5 * (psi - u) * ep;
    }
  }
  const cplx a0 = st.a.front();
  for (std::size_t j = 0; j < regions; ++j) {
    st.a[j] /= a0;
    st.b[j] /= a0;
  }
  st.transmission = st.k.back().real() / st.k.front().real() * std::norm(st.a.back());
  st.reflection = std::norm(st.b.front());
  return st;
}

PiecewiseConstant as_piecewise(const Barrier& b) {
  return PiecewiseConstant{{b.center - 0.5 * b.width, b.center + 0.5 * b.width}, {0.0, b.height, 0.0}};
}

double barrier_transmission_exact(double e, const Barrier& b, const PhysicalConstants& c) {
  validate(PotentialSpec{b});
  return scatter(e, as_piecewise(b), c).transmission;
}

}  // namespace qpot
