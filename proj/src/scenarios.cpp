#include "qpot/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <future>
#include <limits>
#include <numbers>
#include <sstream>

#include "qpot/eigenbasis.hpp"
#include "qpot/io.hpp"
#include "qpot/madelung.hpp"
#include "qpot/potential.hpp"
#include "qpot/schrodinger.hpp"
#include "qpot/semiclassical.hpp"

namespace qpot {

namespace {

using json = nlohmann::json;
constexpr double pi = std::numbers::pi;

const std::vector<CatalogEntry> kCatalog = {
    {"plane_wave", "vanishing_q",
     "Uniform density in uniform flow: the classical construction reproduces the exact plane wave.",
     "sec:trivial, \"the classical probability density is spatially uniform\""},
    {"box_branches", "vanishing_q",
     "Two counter-propagating constant-density branches between hard walls superpose to a box eigenstate.",
     "sec:trivial, \"plane waves of constant momentum between the walls\""},
    {"barrier", "vanishing_q",
     "Rectangular barrier: exact and WKB transmission differ while Q vanishes outside the barrier.",
     "sec:trivial, \"Particle in a box and quantum tunnelling\""},
    {"slit_radial", "vanishing_q",
     "Spherically spreading density 1/r^2: the radial Laplacian of 1/r leaves no quantum potential.",
     "sec:trivial, \"the Laplacian of 1/r vanishes everywhere except at the origin\""},
    {"free_gaussian", "nonzero_q",
     "Free Gaussian packet: Q is nonzero and the classical construction departs from quantum spreading.",
     "sec:math, \"such as a Gaussian wave packet\""},
    {"oscillator_eigen", "circular",
     "Coherent state expanded in oscillator eigenfunctions and phase-rotated equals exact evolution.",
     "sec:circular, \"time-dependent phase rotation\""},
};

json threshold(const char* op, double v) { return json{{"op", op}, {"value", v}}; }

json constants_section() { return json{{"hbar", 1.0}, {"mass", 1.0}}; }

json line_section(double xmin, double xmax, std::size_t n, const char* boundary) {
  return json{{"xmin", xmin}, {"xmax", xmax}, {"n", n}, {"boundary", boundary}};
}

json time_section(double dt, double horizon, std::size_t every) {
  return json{{"dt", dt}, {"horizon", horizon}, {"snapshot_every", every}};
}

json defaults(const std::string& name) {
  json d;
  d["constants"] = constants_section();
  if (name == "plane_wave") {
    d["grid"] = line_section(0.0, 2.0 * pi, 256, "periodic");
    d["potential"] = json{{"kind", "free"}};
    d["initial"] = json{{"kind", "plane_wave"}, {"k", 2.0}};
    d["time"] = time_section(1e-3, 1.0, 10);
    d["ensemble"] = json{{"trajectories", 4096}};
    d["thresholds"] = json{{"q_max", threshold("<", 1e-6)}, {"l2_error", threshold("<", 1e-3)}};
  } else if (name == "box_branches") {
    d["grid"] = line_section(0.0, 1.0, 2049, "dirichlet");
    d["potential"] = json{{"kind", "box"}};
    d["initial"] = json{{"kind", "box_mode"}, {"mode", 2}};
    d["time"] = time_section(1e-4, 0.25, 10);
    d["thresholds"] = json{{"branch_q_max", threshold("<", 1e-6)},
                           {"l2_error", threshold("<", 1e-3)},
                           {"residual_rel", threshold("<", 1e-3)}};
  } else if (name == "barrier") {
    d["grid"] = json{{"region_length", 10.0}, {"n", 1024}};
    d["potential"] = json{{"kind", "barrier"}, {"height", 2.0}, {"width", 1.0}, {"center", 0.0}};
    d["initial"] = json{{"kind", "scattering"}, {"energy", 1.0}};
    d["reference"] = json{{"t_exact", 0.21077109396613053509}, {"t_wkb", 0.059105746561956237763}};
    d["thresholds"] = json{{"t_exact_error", threshold("<", 1e-12)},
                           {"t_wkb_error", threshold("<", 1e-12)},
                           {"wkb_gap", threshold(">", 0.0)},
                           {"q_max_outside", threshold("<", 1e-6)},
                           {"unitarity_error", threshold("<", 1e-12)}};
  } else if (name == "slit_radial") {
    d["grid"] = json{{"rmin", 0.5}, {"rmax", 20.0}, {"n", 2048}};
    d["initial"] = json{{"kind", "inverse_r"}};
    d["thresholds"] = json{{"q_max", threshold("<", 1e-4)}};
  } else if (name == "free_gaussian") {
    d["grid"] = line_section(-20.0, 20.0, 2048, "periodic");
    d["potential"] = json{{"kind", "free"}};
    d["initial"] = json{{"kind", "gaussian"}, {"sigma", 1.0}, {"center", 0.0}, {"momentum", 0.0}};
    d["time"] = time_section(1e-3, 1.0, 10);
    d["thresholds"] = json{{"q_max", threshold(">", 0.1)},
                           {"q_origin_rel_error", threshold("<", 0.05)},
                           {"error_bound_ratio", threshold(">", 10.0)},
                           {"residual_identity_error", threshold("<", 0.2)},
                           {"exact_residual_ratio", threshold("<", 0.1)},
                           {"boundary_density", threshold("<", 1e-10)}};
  } else if (name == "oscillator_eigen") {
    d["grid"] = line_section(-12.0, 12.0, 1024, "periodic");
    d["potential"] = json{{"kind", "harmonic"}, {"omega", 1.0}};
    d["initial"] = json{{"kind", "coherent"}, {"x0", 2.0}};
    d["basis"] = json{{"k_max", 24}};
    d["time"] = time_section(1e-3, 2.0 * pi, 100);
    d["thresholds"] = json{{"l2_error", threshold("<", 1e-3)},
                           {"modulus_drift", threshold("<", 1e-14)},
                           {"deficit", threshold("<", 1e-6)},
                           {"poisson_error", threshold("<", 1e-4)}};
  } else {
    throw ConfigError("unknown scenario '" + name + "'");
  }
  return d;
}

const std::map<std::string, std::vector<std::string>>& produced_metrics() {
  static const std::map<std::string, std::vector<std::string>> m = {
      {"plane_wave", {"q_max", "q_max_semiclassical", "l2_error", "norm_drift", "trajectory_energy_drift"}},
      {"box_branches",
       {"branch_q_max", "l2_error", "residual_rel", "residual_rel_exact", "norm_drift", "trajectory_energy_drift"}},
      {"barrier",
       {"t_exact", "t_wkb", "t_exact_error", "t_wkb_error", "wkb_gap", "q_max_outside", "q_max_interference",
        "unitarity_error"}},
      {"slit_radial", {"q_max", "q_max_refined", "refinement_ratio"}},
      {"free_gaussian",
       {"q_max", "q_origin", "q_origin_rel_error", "l2_error", "discretization_bound", "error_bound_ratio",
        "residual_identity_error", "exact_residual_ratio", "boundary_density", "exact_analytic_error",
        "norm_drift"}},
      {"oscillator_eigen",
       {"l2_error", "modulus_drift", "deficit", "poisson_error", "centroid_error", "norm_drift"}},
  };
  return m;
}

// Typed access to dotted paths of a configuration document.
class Params {
 public:
  explicit Params(const json& doc) : doc_(doc) {}

  const json& at(const std::string& path) const {
    const json* j = &doc_;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.')) {
      if (!j->is_object() || !j->contains(part)) throw ConfigError("missing configuration key '" + path + "'");
      j = &(*j)[part];
    }
    return *j;
  }
  double num(const std::string& path) const {
    const auto& j = at(path);
    if (!j.is_number()) throw ConfigError("'" + path + "' must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError("'" + path + "' must be finite");
    return v;
  }
  std::size_t count(const std::string& path) const {
    const auto& j = at(path);
    if (!j.is_number_integer() || j.get<long long>() < 0) {
      throw ConfigError("'" + path + "' must be a non-negative integer");
    }
    return j.get<std::size_t>();
  }
  std::string str(const std::string& path) const {
    const auto& j = at(path);
    if (!j.is_string()) throw ConfigError("'" + path + "' must be a string");
    return j.get<std::string>();
  }

 private:
  const json& doc_;
};

Grid1D line(const Params& p) {
  return Grid1D(p.num("grid.xmin"), p.num("grid.xmax"), p.count("grid.n"),
                boundary_from_string(p.str("grid.boundary")));
}

PhysicalConstants constants(const Params& p) {
  PhysicalConstants c{p.num("constants.hbar"), p.num("constants.mass")};
  c.validate();
  return c;
}

// Steps are a whole number of snapshot intervals so that snapshots are
// equally spaced; dt is adjusted to land exactly on the horizon.
struct Schedule {
  double dt = 0.0;
  std::size_t steps = 0;
  std::size_t every = 1;
  double snap_dt() const { return dt * static_cast<double>(every); }
  double horizon() const { return dt * static_cast<double>(steps); }
};

Schedule schedule(const Params& p) {
  const double dt = p.num("time.dt");
  const double horizon = p.num("time.horizon");
  const std::size_t every = p.count("time.snapshot_every");
  if (!(dt > 0.0) || !(horizon > 0.0) || every == 0) {
    throw ConfigError("time.dt, time.horizon and time.snapshot_every must be positive");
  }
  const double blocks = std::round(horizon / (dt * static_cast<double>(every)));
  if (blocks < 2.0) throw ConfigError("the horizon must span at least two snapshot intervals");
  Schedule s;
  s.every = every;
  s.steps = every * static_cast<std::size_t>(blocks);
  s.dt = horizon / static_cast<double>(s.steps);
  return s;
}

PropagatorConfig propagator(const Schedule& s, Method m, const PhysicalConstants& c) {
  PropagatorConfig cfg;
  cfg.dt = s.dt;
  cfg.steps = s.steps;
  cfg.method = m;
  cfg.constants = c;
  cfg.snapshot_every = s.every;
  return cfg;
}

json grid_json(const Grid1D& g) {
  return json{{"kind", "line"}, {"xmin", g.xmin()},  {"xmax", g.xmax()},
              {"n", g.size()},  {"dx", g.dx()},      {"boundary", to_string(g.boundary())}};
}

json schedule_json(const Schedule& s) {
  return json{{"dt_effective", s.dt}, {"steps", s.steps}, {"snapshot_every", s.every}, {"horizon", s.horizon()}};
}

struct Outcome {
  std::map<std::string, double> metrics;
  std::map<std::string, std::string> artifacts;
  json grid;
  json schedule;
};

std::string csv(const auto& value) {
  std::ostringstream os;
  write_csv(os, value);
  return os.str();
}

double masked_max_abs(const RealField& f, const Mask& m) {
  double v = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (m[i]) v = std::max(v, std::abs(f[i]));
  }
  return v;
}

double q_max(const ComplexField& psi, const PhysicalConstants& c) {
  const auto f = decompose(psi, c);
  return masked_max_abs(f.q, f.mask);
}

double norm_drift(std::span<const ComplexField> series) {
  double d = 0.0;
  const double n0 = l2_norm(series.front());
  for (const auto& p : series) d = std::max(d, std::abs(l2_norm(p) - n0));
  return d;
}

// Per-snapshot comparison of an approximate series with the exact one.
struct Comparison {
  std::vector<double> l2, residual, q_norm;
};

Comparison compare(std::span<const ComplexField> approx, std::span<const ComplexField> exact, const RealField& v,
                   const PhysicalConstants& c, double snap_dt) {
  Comparison out;
  const auto res = schrodinger_residual(approx, v, c, snap_dt);
  for (std::size_t s = 0; s < approx.size(); ++s) {
    out.l2.push_back(l2_distance(approx[s], exact[s]));
    out.residual.push_back(res[s].report.l2);
    out.q_norm.push_back(q_psi_norm(decompose(approx[s], c)));
  }
  return out;
}

std::string comparison_csv(std::span<const double> t, const Comparison& cmp) {
  std::string out = "t,l2_error,residual_norm,q_norm\n";
  for (std::size_t s = 0; s < t.size(); ++s) {
    out += format_shortest(t[s]) + ',' + format_shortest(cmp.l2[s]) + ',' + format_shortest(cmp.residual[s]) + ',' +
           format_shortest(cmp.q_norm[s]) + '\n';
  }
  return out;
}

double max_of(std::span<const double> v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

Outcome run_plane_wave(const Params& p) {
  const Grid1D g = line(p);
  if (!g.periodic()) throw ConfigError("plane_wave needs a periodic grid");
  const auto c = constants(p);
  const auto s = schedule(p);
  const double k = p.num("initial.k");
  const double amp = 1.0 / std::sqrt(g.length());
  const auto psi0 = sample(g, [&](double x) { return std::polar(amp, k * x); });
  const auto exact = propagate(psi0, FreeSpace{}, propagator(s, Method::split_operator, c));

  // The ensemble starts wide enough to cover the grid for the whole run.
  const double travel = c.hbar * k / c.mass * s.horizon();
  const double lo = g.xmin() - std::max(0.0, travel) - 2.0 * g.dx();
  const double hi = g.xmax() + std::max(0.0, -travel) + 2.0 * g.dx();
  const double rho = 1.0 / g.length();
  EnsembleConfig ec{InitialState{[rho](double) { return rho; }, [&](double x) { return c.hbar * k * x; },
                                 [&](double) { return c.hbar * k; }},
                    initial_positions(Spacing::uniform, p.count("ensemble.trajectories"), lo, hi), g};
  ec.domain_min = lo - std::abs(travel) - 1.0;
  ec.domain_max = hi + std::abs(travel) + 1.0;
  ec.constants = c;
  ec.snapshot_every = s.every;
  const auto e = integrate_trajectories(ec, FreeSpace{}, s.dt, s.steps);
  const auto sc = assemble_wave(e, g, c);

  const auto v = sample_potential(FreeSpace{}, g, c);
  const auto cmp = compare(sc, exact.psi, v, c, s.snap_dt());
  double qe = 0.0, qs = 0.0;
  for (std::size_t i = 0; i < sc.size(); ++i) {
    qe = std::max(qe, q_max(exact.psi[i], c));
    qs = std::max(qs, q_max(sc[i], c));
  }
  Outcome out;
  out.metrics = {{"q_max", qe},
                 {"q_max_semiclassical", qs},
                 {"l2_error", max_of(cmp.l2)},
                 {"norm_drift", norm_drift(exact.psi)},
                 {"trajectory_energy_drift", max_energy_drift(e, FreeSpace{})}};
  out.artifacts = {{"error_vs_time.csv", comparison_csv(exact.t, cmp)},
                   {"exact_final.csv", csv(exact.psi.back())},
                   {"semiclassical_final.csv", csv(sc.back())},
                   {"fields_final.csv", csv(decompose(sc.back(), c))}};
  out.grid = grid_json(g);
  out.schedule = schedule_json(s);
  return out;
}

Outcome run_box_branches(const Params& p) {
  const Grid1D g = line(p);
  if (g.periodic()) throw ConfigError("box_branches needs a dirichlet grid");
  const auto c = constants(p);
  const auto s = schedule(p);
  const std::size_t mode = p.count("initial.mode");
  if (mode == 0) throw ConfigError("initial.mode must be at least 1");
  const double width = g.length();
  const double k = static_cast<double>(mode) * pi / width;
  const double energy = c.hbar * c.hbar * k * k / (2.0 * c.mass);
  const Box box{width};

  std::vector<cplx> v0(g.size());
  for (std::size_t i = 1; i + 1 < g.size(); ++i) v0[i] = std::sqrt(2.0 / width) * std::sin(k * (g.x(i) - g.xmin()));
  const ComplexField psi0(g, std::move(v0));
  const auto exact = propagate(psi0, box, propagator(s, Method::crank_nicolson, c));

  // Branch sign s: phi0 = s hbar k (x - xmin). Weights -i/sqrt2 and +i/sqrt2
  // superpose the branches to sqrt(2) sin(k (x - xmin)).
  std::vector<TrajectoryEnsemble> branches;
  const double rho = 1.0 / width;
  double drift = 0.0;
  for (double sign : {1.0, -1.0}) {
    EnsembleConfig ec{InitialState{[rho](double) { return rho; },
                                   [&, sign](double x) { return sign * c.hbar * k * (x - g.xmin()); },
                                   [&, sign](double) { return sign * c.hbar * k; }},
                      g.nodes(), g};
    ec.domain_min = g.xmin();
    ec.domain_max = g.xmax();
    ec.constants = c;
    ec.snapshot_every = s.every;
    branches.push_back(integrate_trajectories(ec, box, s.dt, s.steps));
    drift = std::max(drift, max_energy_drift(branches.back(), box));
  }
  const std::vector<cplx> weights{cplx{0.0, -1.0 / std::sqrt(2.0)}, cplx{0.0, 1.0 / std::sqrt(2.0)}};
  const auto sc = assemble_wave(branches, weights, g, c);

  // Quantum potential of every single-valued sheet, away from its edges.
  double branch_q = 0.0;
  for (const auto& b : branches) {
    for (std::size_t snap = 0; snap < b.t.size(); ++snap) {
      for (const auto& sheet : sheet_fields(b, snap, g)) {
        const RealField r(g, sheet.rho);
        const double floor = default_floor(r);
        if (!(floor > 0.0)) continue;
        const auto q = quantum_potential(r, c, floor);
        Mask m = density_mask(r, floor);
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = m[i] && sheet.covered[i];
        branch_q = std::max(branch_q, masked_max_abs(q, erode(m, g, 1)));
      }
    }
  }

  const auto v = sample_potential(box, g, c);
  const auto cmp = compare(sc, exact.psi, v, c, s.snap_dt());
  const auto res_exact = schrodinger_residual(exact.psi, v, c, s.snap_dt());
  double rel_sc = 0.0, rel_exact = 0.0;
  for (std::size_t i = 0; i < sc.size(); ++i) {
    rel_sc = std::max(rel_sc, cmp.residual[i] / (energy * l2_norm(sc[i])));
    rel_exact = std::max(rel_exact, res_exact[i].report.l2 / (energy * l2_norm(exact.psi[i])));
  }
  Outcome out;
  out.metrics = {{"branch_q_max", branch_q},
                 {"l2_error", max_of(cmp.l2)},
                 {"residual_rel", rel_sc},
                 {"residual_rel_exact", rel_exact},
                 {"norm_drift", norm_drift(exact.psi)},
                 {"trajectory_energy_drift", drift}};
  out.artifacts = {{"error_vs_time.csv", comparison_csv(exact.t, cmp)},
                   {"exact_final.csv", csv(exact.psi.back())},
                   {"semiclassical_final.csv", csv(sc.back())}};
  out.grid = grid_json(g);
  out.schedule = schedule_json(s);
  return out;
}

Outcome run_barrier(const Params& p) {
  const auto c = constants(p);
  const Barrier b{p.num("potential.height"), p.num("potential.width"), p.num("potential.center")};
  const double e = p.num("initial.energy");
  const double length = p.num("grid.region_length");
  const std::size_t n = p.count("grid.n");
  if (!(length > 0.0)) throw ConfigError("grid.region_length must be positive");

  const auto st = scatter(e, as_piecewise(b), c);
  const double t_exact = st.transmission;
  const double t_wkb = wkb_transmission(e, b, c);
  const double left_edge = b.center - 0.5 * b.width;
  const double right_edge = b.center + 0.5 * b.width;

  // Constant-density pieces: transmitted wave, and incident and reflected
  // branches taken separately on the left.
  const Grid1D right(right_edge, right_edge + length, n, Boundary::dirichlet);
  const Grid1D left(left_edge - length, left_edge, n, Boundary::dirichlet);
  const cplx ik = cplx{0.0, 1.0} * st.k.front();
  const auto transmitted = sample(right, [&](double x) { return st(x); });
  const auto incident = sample(left, [&](double x) { return st.a.front() * std::exp(ik * (x - left_edge)); });
  const auto reflected = sample(left, [&](double x) { return st.b.front() * std::exp(-ik * (x - left_edge)); });
  const auto total_left = sample(left, [&](double x) { return st(x); });
  double q_out = 0.0;
  for (const auto* f : {&transmitted, &incident, &reflected}) q_out = std::max(q_out, q_max(*f, c));

  Outcome out;
  out.metrics = {{"t_exact", t_exact},
                 {"t_wkb", t_wkb},
                 {"t_exact_error", std::abs(t_exact - p.num("reference.t_exact")) / p.num("reference.t_exact")},
                 {"t_wkb_error", std::abs(t_wkb - p.num("reference.t_wkb")) / p.num("reference.t_wkb")},
                 {"wkb_gap", t_exact - t_wkb},
                 {"q_max_outside", q_out},
                 {"q_max_interference", q_max(total_left, c)},
                 {"unitarity_error", std::abs(st.transmission + st.reflection - 1.0)}};
  const Grid1D span(left_edge - length, right_edge + length, 2 * n, Boundary::dirichlet);
  out.artifacts = {{"scattering_state.csv", csv(sample(span, [&](double x) { return st(x); }))}};
  out.grid = grid_json(span);
  out.schedule = json::object();
  return out;
}

Outcome run_slit_radial(const Params& p) {
  const auto c = constants(p);
  const RadialGrid g(p.num("grid.rmin"), p.num("grid.rmax"), p.count("grid.n"));
  auto field = [](const RadialGrid& grid) { return sample(grid, [](double r) { return cplx(1.0 / r, 0.0); }); };
  const auto f = decompose(field(g), c);
  const auto fr = decompose(field(g.refined()), c);
  const double q = masked_max_abs(f.q, f.mask);
  const double qr = masked_max_abs(fr.q, fr.mask);
  Outcome out;
  out.metrics = {{"q_max", q},
                 {"q_max_refined", qr},
                 {"refinement_ratio", qr > 0.0 ? q / qr : std::numeric_limits<double>::infinity()}};
  if (!std::isfinite(out.metrics["refinement_ratio"])) out.metrics["refinement_ratio"] = 0.0;
  out.artifacts = {{"fields.csv", csv(f)}};
  out.grid = json{{"kind", "radial"}, {"rmin", g.rmin()}, {"rmax", g.rmax()}, {"n", g.size()}, {"dr", g.dr()}};
  out.schedule = json::object();
  return out;
}

struct GaussianParams {
  double sigma, center, momentum;
};

ComplexField gaussian_packet(const Grid1D& g, const GaussianParams& gp, const PhysicalConstants& c, double t) {
  // Closed-form free evolution of a minimum-uncertainty packet.
  const cplx spread{1.0, c.hbar * t / (2.0 * c.mass * gp.sigma * gp.sigma)};
  const double v = gp.momentum / c.mass;
  const cplx pref = std::pow(2.0 * pi * gp.sigma * gp.sigma, -0.25) / std::sqrt(spread);
  return sample(g, [&](double x) {
    const double d = x - gp.center - v * t;
    const cplx arg = -d * d / (4.0 * gp.sigma * gp.sigma * spread) +
                     cplx{0.0, gp.momentum * (x - gp.center - 0.5 * v * t) / c.hbar};
    return pref * std::exp(arg);
  });
}

// Distance between a field and the even nodes of its refined counterpart.
double restricted_distance(const ComplexField& coarse, const ComplexField& fine) {
  std::vector<cplx> r(coarse.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = fine[2 * i];
  return l2_distance(coarse, ComplexField(coarse.grid(), std::move(r)));
}

Outcome run_free_gaussian(const Params& p) {
  const Grid1D g = line(p);
  if (!g.periodic()) throw ConfigError("free_gaussian needs a periodic grid");
  const auto c = constants(p);
  const auto s = schedule(p);
  const GaussianParams gp{p.num("initial.sigma"), p.num("initial.center"), p.num("initial.momentum")};
  if (!(gp.sigma > 0.0)) throw ConfigError("initial.sigma must be positive");

  auto run = [&](const Grid1D& grid, const Schedule& sch) {
    const auto exact = propagate(gaussian_packet(grid, gp, c, 0.0), FreeSpace{},
                                 propagator(sch, Method::split_operator, c));
    const double var = gp.sigma * gp.sigma;
    const double v = gp.momentum / c.mass;
    EnsembleConfig ec{InitialState{[&](double x) {
                                     const double d = x - gp.center;
                                     return std::exp(-d * d / (2.0 * var)) / std::sqrt(2.0 * pi * var);
                                   },
                                   [&](double x) { return gp.momentum * x; }, [&](double) { return gp.momentum; }},
                      grid.nodes(), grid};
    ec.domain_min = grid.xmin() - std::abs(v) * sch.horizon() - 1.0;
    ec.domain_max = grid.xmax() + std::abs(v) * sch.horizon() + 1.0;
    ec.constants = c;
    ec.snapshot_every = sch.every;
    const auto e = integrate_trajectories(ec, FreeSpace{}, sch.dt, sch.steps);
    return std::pair{exact, assemble_wave(e, grid, c)};
  };

  const auto [exact, sc] = run(g, s);
  Schedule fine_s = s;
  fine_s.dt = s.dt / 2.0;
  fine_s.steps = 2 * s.steps;
  fine_s.every = 2 * s.every;
  const auto [exact_f, sc_f] = run(g.refined(), fine_s);

  double bound = 0.0;
  for (std::size_t i = 0; i < exact.psi.size(); ++i) {
    bound = std::max({bound, restricted_distance(exact.psi[i], exact_f.psi[i]), restricted_distance(sc[i], sc_f[i])});
  }
  bound = std::max(bound, std::numeric_limits<double>::min());

  const auto v = sample_potential(FreeSpace{}, g, c);
  const auto cmp = compare(sc, exact.psi, v, c, s.snap_dt());
  const auto res_exact = schrodinger_residual(exact.psi, v, c, s.snap_dt());
  double identity = 0.0, ratio = 0.0, qmax = 0.0, edge = 0.0, analytic = 0.0;
  for (std::size_t i = 0; i < sc.size(); ++i) {
    identity = std::max(identity, std::abs(cmp.residual[i] - cmp.q_norm[i]) / cmp.q_norm[i]);
    ratio = std::max(ratio, res_exact[i].report.l2 / cmp.residual[i]);
    qmax = std::max(qmax, q_max(exact.psi[i], c));
    edge = std::max({edge, std::norm(exact.psi[i][0]), std::norm(exact.psi[i][g.size() - 1])});
    analytic = std::max(analytic, l2_distance(exact.psi[i], gaussian_packet(g, gp, c, exact.t[i])));
  }

  const auto f0 = decompose(exact.psi.front(), c);
  const auto origin = static_cast<std::size_t>(std::lround((gp.center - g.xmin()) / g.dx()));
  if (origin >= g.size()) throw ConfigError("initial.center lies outside the grid");
  const double q_origin = f0.q[origin];
  const double q_expected = c.hbar * c.hbar / (4.0 * c.mass * gp.sigma * gp.sigma);

  Outcome out;
  out.metrics = {{"q_max", qmax},
                 {"q_origin", q_origin},
                 {"q_origin_rel_error", std::abs(q_origin - q_expected) / q_expected},
                 {"l2_error", cmp.l2.back()},
                 {"discretization_bound", bound},
                 {"error_bound_ratio", cmp.l2.back() / bound},
                 {"residual_identity_error", identity},
                 {"exact_residual_ratio", ratio},
                 {"boundary_density", edge},
                 {"exact_analytic_error", analytic},
                 {"norm_drift", norm_drift(exact.psi)}};
  out.artifacts = {{"error_vs_time.csv", comparison_csv(exact.t, cmp)},
                   {"exact_final.csv", csv(exact.psi.back())},
                   {"semiclassical_final.csv", csv(sc.back())},
                   {"fields_final.csv", csv(decompose(exact.psi.back(), c))}};
  out.grid = grid_json(g);
  out.schedule = schedule_json(s);
  return out;
}

Outcome run_oscillator_eigen(const Params& p) {
  const Grid1D g = line(p);
  if (!g.periodic()) throw ConfigError("oscillator_eigen needs a periodic grid");
  const auto c = constants(p);
  const auto s = schedule(p);
  const double omega = p.num("potential.omega");
  const double x0 = p.num("initial.x0");
  const Harmonic h{omega};
  validate(PotentialSpec{h});

  const double a = c.mass * omega / c.hbar;
  const auto psi0 = sample(g, [&](double x) { return cplx(std::pow(a / pi, 0.25) * std::exp(-a * (x - x0) * (x - x0) / 2.0), 0.0); });
  const auto exact = propagate(psi0, h, propagator(s, Method::split_operator, c));
  const HermiteBasis basis(omega, c, p.count("basis.k_max"), g);
  const auto c0 = expand(psi0, basis, std::numeric_limits<double>::infinity());

  std::vector<ComplexField> eig;
  double modulus = 0.0, centroid = 0.0;
  const auto w = quadrature_weights(g);
  for (std::size_t i = 0; i < exact.t.size(); ++i) {
    const auto ct = propagate_phases(c0, exact.t[i], basis);
    for (std::size_t k = 0; k < ct.c.size(); ++k) modulus = std::max(modulus, std::abs(std::abs(ct.c[k]) - std::abs(c0.c[k])));
    eig.push_back(synthesize(ct, basis));
    double mean = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) mean += w[j] * std::norm(exact.psi[i][j]) * g.x(j);
    centroid = std::max(centroid, std::abs(mean - x0 * std::cos(omega * exact.t[i])));
  }

  // Coherent-state weights are Poissonian with mean M omega x0^2 / 2 hbar.
  const double mean_n = a * x0 * x0 / 2.0;
  double poisson = 0.0, log_fact = 0.0;
  for (std::size_t k = 0; k < c0.c.size() && k <= 12; ++k) {
    if (k > 0) log_fact += std::log(static_cast<double>(k));
    const double pk = std::exp(-mean_n + static_cast<double>(k) * std::log(mean_n) - log_fact);
    poisson = std::max(poisson, std::abs(std::norm(c0.c[k]) - pk));
  }

  const auto v = sample_potential(h, g, c);
  const auto cmp = compare(eig, exact.psi, v, c, s.snap_dt());
  Outcome out;
  out.metrics = {{"l2_error", max_of(cmp.l2)},
                 {"modulus_drift", modulus},
                 {"deficit", c0.deficit},
                 {"poisson_error", poisson},
                 {"centroid_error", centroid},
                 {"norm_drift", norm_drift(exact.psi)}};
  out.artifacts = {{"error_vs_time.csv", comparison_csv(exact.t, cmp)},
                   {"coefficients.csv", csv(c0)},
                   {"exact_final.csv", csv(exact.psi.back())},
                   {"eigenbasis_final.csv", csv(eig.back())}};
  out.grid = grid_json(g);
  out.schedule = schedule_json(s);
  return out;
}

Outcome dispatch(const ScenarioConfig& cfg) {
  const Params p(cfg.doc);
  if (cfg.name == "plane_wave") return run_plane_wave(p);
  if (cfg.name == "box_branches") return run_box_branches(p);
  if (cfg.name == "barrier") return run_barrier(p);
  if (cfg.name == "slit_radial") return run_slit_radial(p);
  if (cfg.name == "free_gaussian") return run_free_gaussian(p);
  if (cfg.name == "oscillator_eigen") return run_oscillator_eigen(p);
  throw ConfigError("unknown scenario '" + cfg.name + "'");
}

// Same keys and the same JSON kinds as the reference document.
void check_shape(const json& ref, const json& doc, const std::string& path) {
  if (ref.is_object()) {
    if (!doc.is_object()) throw ConfigError("'" + path + "' must be an object");
    for (const auto& [key, value] : doc.items()) {
      if (!ref.contains(key)) throw ConfigError("unknown configuration key '" + path + (path.empty() ? "" : ".") + key + "'");
    }
    for (const auto& [key, value] : ref.items()) {
      const std::string sub = path.empty() ? key : path + "." + key;
      if (!doc.contains(key)) throw ConfigError("missing configuration key '" + sub + "'");
      check_shape(value, doc[key], sub);
    }
    return;
  }
  const bool same = (ref.is_number() && doc.is_number() && (!ref.is_number_integer() || doc.is_number_integer())) ||
                    (ref.is_string() && doc.is_string()) || (ref.is_boolean() && doc.is_boolean());
  if (!same) throw ConfigError("'" + path + "' has the wrong type");
}

const CatalogEntry& entry(const std::string& name) {
  for (const auto& e : kCatalog) {
    if (e.name == name) return e;
  }
  throw ConfigError("unknown scenario '" + name + "'");
}

}  // namespace

const std::vector<CatalogEntry>& list_scenarios() { return kCatalog; }

nlohmann::json to_json(const CatalogEntry& e) {
  return json{{"name", e.name}, {"category", e.category}, {"description", e.description}, {"anchor", e.anchor}};
}

CatalogEntry catalog_entry_from_json(const nlohmann::json& j) {
  return CatalogEntry{j.at("name").get<std::string>(), j.at("category").get<std::string>(),
                      j.at("description").get<std::string>(), j.at("anchor").get<std::string>()};
}

ScenarioConfig default_config(const std::string& name) { return ScenarioConfig{name, defaults(name)}; }

void apply_override(ScenarioConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json* target = &cfg.doc;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (!target->is_object() || !target->contains(part)) {
      throw ConfigError("override key '" + key + "' does not exist in scenario " + cfg.name);
    }
    target = &(*target)[part];
  }
  if (target->is_object()) throw ConfigError("override key '" + key + "' names a section, not a value");
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  if (target->is_number_integer() && value.is_number_float()) {
    const double d = value.get<double>();
    if (d != std::floor(d) || d < 0.0) throw ConfigError("override '" + key + "' must be an integer");
    value = static_cast<std::uint64_t>(d);
  }
  if (target->is_number() && !value.is_number()) throw ConfigError("override '" + key + "' must be a number");
  if (target->is_string() && !value.is_string()) value = raw;
  if (target->is_boolean() && !value.is_boolean()) throw ConfigError("override '" + key + "' must be true or false");
  if (value.is_number() && !std::isfinite(value.get<double>())) throw ConfigError("override '" + key + "' is not finite");
  *target = value;
}

void validate(const ScenarioConfig& cfg) {
  (void)entry(cfg.name);
  check_shape(defaults(cfg.name), cfg.doc, "");
  const auto& produced = produced_metrics().at(cfg.name);
  for (const auto& [metric, t] : cfg.doc.at("thresholds").items()) {
    if (std::find(produced.begin(), produced.end(), metric) == produced.end()) {
      throw ConfigError("threshold refers to metric '" + metric + "' which " + cfg.name + " does not produce");
    }
    const auto op = t.at("op").get<std::string>();
    if (op != "<" && op != ">") throw ConfigError("threshold operator for '" + metric + "' must be < or >");
  }
}

std::string config_hash(const ScenarioConfig& cfg) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : cfg.name + "\n" + cfg.doc.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> ScenarioReport::failures() const {
  std::vector<std::string> out;
  for (const auto& c : checks) {
    if (!c.pass) out.push_back(c.metric + " = " + format_shortest(c.value) + " (needs " + c.op + " " + format_shortest(c.threshold) + ")");
  }
  return out;
}

ScenarioReport run_scenario(const ScenarioConfig& cfg) {
  validate(cfg);
  Outcome out;
  try {
    out = dispatch(cfg);
  } catch (const ConfigError& e) {
    throw ConfigError(cfg.name + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.name + ": " + e.what());
  } catch (const std::exception& e) {
    throw ScenarioError(cfg.name + ": " + e.what());
  }

  ScenarioReport r;
  r.name = cfg.name;
  r.anchor = entry(cfg.name).anchor;
  r.metrics = std::move(out.metrics);
  r.artifacts = std::move(out.artifacts);
  r.provenance = json{{"config_hash", config_hash(cfg)}, {"grid", out.grid}, {"schedule", out.schedule}, {"config", cfg.doc}};
  r.pass = true;
  for (const auto& [metric, t] : cfg.doc.at("thresholds").items()) {
    const auto it = r.metrics.find(metric);
    if (it == r.metrics.end()) throw ScenarioError(cfg.name + ": metric '" + metric + "' was not computed");
    Check ch{metric, t.at("op").get<std::string>(), t.at("value").get<double>(), it->second, false};
    ch.pass = ch.op == "<" ? ch.value < ch.threshold : ch.value > ch.threshold;
    r.pass = r.pass && ch.pass;
    r.checks.push_back(std::move(ch));
  }
  return r;
}

ScenarioReport run_scenario(const std::string& name, const std::vector<std::string>& overrides) {
  auto cfg = default_config(name);
  for (const auto& o : overrides) apply_override(cfg, o);
  return run_scenario(cfg);
}

std::vector<ScenarioReport> run_all(const std::vector<std::string>& overrides) {
  std::vector<ScenarioConfig> configs;
  std::vector<bool> used(overrides.size(), false);
  for (const auto& e : kCatalog) {
    auto cfg = default_config(e.name);
    for (std::size_t i = 0; i < overrides.size(); ++i) {
      try {
        apply_override(cfg, overrides[i]);
        used[i] = true;
      } catch (const ConfigError& err) {
        // Keys absent from this scenario are skipped; type errors are not.
        if (std::string(err.what()).find("does not exist") == std::string::npos) throw;
      }
    }
    configs.push_back(std::move(cfg));
  }
  for (std::size_t i = 0; i < overrides.size(); ++i) {
    if (!used[i]) throw ConfigError("override '" + overrides[i] + "' matches no scenario");
  }
  std::vector<std::future<ScenarioReport>> jobs;
  for (const auto& cfg : configs) {
    jobs.push_back(std::async(std::launch::async, [cfg] { return run_scenario(cfg); }));
  }
  std::vector<ScenarioReport> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

nlohmann::json to_json(const ScenarioReport& r) {
  auto number = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json metrics = json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = number(v);
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back(json{{"metric", c.metric}, {"op", c.op}, {"threshold", number(c.threshold)},
                          {"value", number(c.value)}, {"pass", c.pass}});
  }
  return json{{"name", r.name},         {"anchor", r.anchor}, {"provenance", r.provenance},
              {"metrics", metrics},     {"checks", checks},   {"pass", r.pass}};
}

std::string to_csv(const std::vector<ScenarioReport>& reports) {
  std::string out = "scenario,metric,value,threshold,pass\n";
  for (const auto& r : reports) {
    for (const auto& c : r.checks) {
      out += r.name + ',' + c.metric + ',' + format_shortest(c.value) + ',' + format_shortest(c.threshold) + ',' +
             (c.pass ? "true" : "false") + '\n';
    }
  }
  return out;
}

}  // namespace qpot
