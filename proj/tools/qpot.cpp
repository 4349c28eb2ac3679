// qpot: scenario runner and file-level access to decomposition and the
// three propagation routes. Exit status 0 pass, 1 scientific failure,
// 2 usage or configuration error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include "qpot/eigenbasis.hpp"
#include "qpot/io.hpp"
#include "qpot/madelung.hpp"
#include "qpot/scenarios.hpp"
#include "qpot/schrodinger.hpp"
#include "qpot/semiclassical.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace qpot;

namespace {

constexpr double pi = std::numbers::pi;

enum Exit { ok = 0, failure = 1, usage = 2 };

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---- scenario -------------------------------------------------------------

int cmd_scenario(const std::string& name, const std::string& out, const std::vector<std::string>& overrides) {
  std::vector<ScenarioReport> reports;
  if (name == "all") {
    reports = run_all(overrides);
  } else {
    reports.push_back(run_scenario(name, overrides));
  }
  json all = json::array();
  for (const auto& r : reports) all.push_back(to_json(r));

  if (out.empty()) {
    std::cout << dump(name == "all" ? all : all.front());
  } else {
    for (const auto& r : reports) {
      const fs::path dir = fs::path(out) / r.name;
      write_text(dir / "report.json", dump(to_json(r)));
      for (const auto& [file, text] : r.artifacts) write_text(dir / file, text);
    }
    write_text(fs::path(out) / "report.json", dump(all));
    write_text(fs::path(out) / "summary.csv", to_csv(reports));
  }

  bool pass = true;
  for (const auto& r : reports) {
    pass = pass && r.pass;
    std::cerr << r.name << ": " << (r.pass ? "pass" : "FAIL") << "\n";
    for (const auto& f : r.failures()) std::cerr << "  " << f << "\n";
  }
  return pass ? ok : failure;
}

// ---- decompose ------------------------------------------------------------

int cmd_decompose(const std::string& input, const std::string& out, double hbar, double mass,
                  std::optional<double> floor, const std::string& boundary) {
  std::ifstream is(input);
  if (!is) throw ConfigError("cannot open " + input);
  const auto psi = read_complex_csv(is, boundary_from_string(boundary));
  PhysicalConstants c{hbar, mass};
  c.validate();
  const auto f = floor ? decompose(psi, c, *floor) : decompose(psi, c);
  std::ostringstream os;
  write_csv(os, f);
  write_text(out, os.str());
  return ok;
}

// ---- propagate ------------------------------------------------------------

// Required keys of every section; unknown keys are rejected.
void require_keys(const json& j, const std::string& where, const std::set<std::string>& required,
                  const std::set<std::string>& optional = {}) {
  if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!required.contains(key) && !optional.contains(key)) {
      throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
  for (const auto& key : required) {
    if (!j.contains(key)) throw ConfigError("missing key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

double number(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number() || !std::isfinite(v.get<double>())) throw ConfigError("'" + key + "' must be a finite number");
  return v.get<double>();
}

std::size_t integer(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError("'" + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

std::string text(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError("'" + key + "' must be a string");
  return v.get<std::string>();
}

struct RunConfig {
  Grid1D grid;
  PhysicalConstants constants;
  PotentialSpec potential;
  std::string initial_kind;
  json initial;
  double dt = 0.0;
  std::size_t steps = 0, every = 1;
  Method method = Method::split_operator;
  std::size_t k_max = 24;
};

RunConfig parse_run_config(const json& doc) {
  require_keys(doc, "", {"grid", "constants", "potential", "initial", "time", "method"}, {"basis"});
  const auto& g = doc["grid"];
  require_keys(g, "grid", {"xmin", "xmax", "n", "boundary"});
  const auto& cs = doc["constants"];
  require_keys(cs, "constants", {"hbar", "mass"});
  const auto& pot = doc["potential"];
  require_keys(pot, "potential", {"kind", "params"});
  const auto& ini = doc["initial"];
  require_keys(ini, "initial", {"kind", "params"});
  const auto& tm = doc["time"];
  require_keys(tm, "time", {"dt", "steps", "snapshot_every"});

  RunConfig rc{Grid1D(number(g, "xmin"), number(g, "xmax"), integer(g, "n"), boundary_from_string(text(g, "boundary"))),
               PhysicalConstants{number(cs, "hbar"), number(cs, "mass")}, FreeSpace{}, text(ini, "kind"),
               ini["params"]};
  rc.constants.validate();

  const auto kind = text(pot, "kind");
  const auto& pp = pot["params"];
  if (kind == "free") {
    require_keys(pp, "potential.params", {});
  } else if (kind == "harmonic") {
    require_keys(pp, "potential.params", {"omega"});
    rc.potential = Harmonic{number(pp, "omega")};
  } else if (kind == "box") {
    require_keys(pp, "potential.params", {});
    rc.potential = Box{rc.grid.length()};
  } else if (kind == "barrier") {
    require_keys(pp, "potential.params", {"height", "width", "center"});
    rc.potential = Barrier{number(pp, "height"), number(pp, "width"), number(pp, "center")};
  } else {
    throw ConfigError("unknown potential kind '" + kind + "'");
  }
  validate(rc.potential);

  if (rc.initial_kind == "gaussian") {
    require_keys(rc.initial, "initial.params", {"sigma", "center", "momentum"});
    if (!(number(rc.initial, "sigma") > 0.0)) throw ConfigError("'sigma' must be positive");
  } else if (rc.initial_kind == "plane_wave") {
    require_keys(rc.initial, "initial.params", {"k"});
    if (!rc.grid.periodic()) throw ConfigError("a plane wave needs a periodic grid");
  } else if (rc.initial_kind == "coherent") {
    require_keys(rc.initial, "initial.params", {"x0"});
    if (!std::holds_alternative<Harmonic>(rc.potential)) throw ConfigError("a coherent state needs a harmonic potential");
  } else if (rc.initial_kind == "box_mode") {
    require_keys(rc.initial, "initial.params", {"mode"});
    if (integer(rc.initial, "mode") == 0) throw ConfigError("'mode' must be at least 1");
    if (rc.grid.periodic()) throw ConfigError("a box mode needs a dirichlet grid");
  } else {
    throw ConfigError("unknown initial kind '" + rc.initial_kind + "'");
  }

  rc.dt = number(tm, "dt");
  rc.steps = integer(tm, "steps");
  rc.every = integer(tm, "snapshot_every");
  if (rc.dt == 0.0 || rc.steps == 0 || rc.every == 0) throw ConfigError("time.dt, time.steps and time.snapshot_every must be nonzero");
  if (rc.steps % rc.every != 0) throw ConfigError("time.steps must be a multiple of time.snapshot_every");
  rc.method = method_from_string(text(doc, "method"));
  if (doc.contains("basis")) {
    require_keys(doc["basis"], "basis", {"k_max"});
    rc.k_max = integer(doc["basis"], "k_max");
  }
  return rc;
}

struct Initial {
  ComplexField psi;
  InitialState semiclassical;
};

Initial initial_state(const RunConfig& rc) {
  const auto& g = rc.grid;
  const auto& c = rc.constants;
  const auto& p = rc.initial;
  if (rc.initial_kind == "gaussian") {
    const double s = number(p, "sigma"), x0 = number(p, "center"), k = number(p, "momentum");
    auto rho = [=](double x) { return std::exp(-(x - x0) * (x - x0) / (2.0 * s * s)) / std::sqrt(2.0 * pi * s * s); };
    auto psi = sample(g, [=, &c](double x) { return std::sqrt(rho(x)) * std::polar(1.0, k * x / c.hbar); });
    return {std::move(psi), InitialState{rho, [k](double x) { return k * x; }, [k](double) { return k; }}};
  }
  if (rc.initial_kind == "plane_wave") {
    const double k = number(p, "k"), rho = 1.0 / g.length();
    auto psi = sample(g, [=](double x) { return std::polar(std::sqrt(rho), k * x); });
    return {std::move(psi), InitialState{[rho](double) { return rho; }, [k, &c](double x) { return c.hbar * k * x; },
                                         [k, &c](double) { return c.hbar * k; }}};
  }
  if (rc.initial_kind == "coherent") {
    const double x0 = number(p, "x0"), a = c.mass * std::get<Harmonic>(rc.potential).omega / c.hbar;
    auto rho = [=](double x) { return std::sqrt(a / pi) * std::exp(-a * (x - x0) * (x - x0)); };
    return {sample(g, [=](double x) { return cplx(std::sqrt(rho(x)), 0.0); }), InitialState{rho, {}, {}}};
  }
  // box_mode, exact route only: two branches are needed semiclassically.
  const double k = static_cast<double>(integer(p, "mode")) * pi / g.length();
  std::vector<cplx> v(g.size());
  for (std::size_t i = 1; i + 1 < g.size(); ++i) v[i] = std::sqrt(2.0 / g.length()) * std::sin(k * (g.x(i) - g.xmin()));
  return {ComplexField(g, std::move(v)), InitialState{}};
}

Evolution exact_route(const RunConfig& rc, const ComplexField& psi0) {
  PropagatorConfig cfg;
  cfg.dt = rc.dt;
  cfg.steps = rc.steps;
  cfg.method = rc.method;
  cfg.constants = rc.constants;
  cfg.snapshot_every = rc.every;
  return propagate(psi0, rc.potential, cfg);
}

std::vector<ComplexField> semiclassical_route(const RunConfig& rc, const Initial& init) {
  if (!init.semiclassical.rho0) throw ConfigError("the semiclassical route does not support initial kind " + rc.initial_kind);
  const auto& g = rc.grid;
  const double horizon = std::abs(rc.dt) * static_cast<double>(rc.steps);
  std::vector<double> x0 = g.nodes();
  double lo = g.xmin() - 10.0 * g.length(), hi = g.xmax() + 10.0 * g.length();
  if (std::holds_alternative<Box>(rc.potential)) {
    lo = g.xmin();
    hi = g.xmax();
  }
  if (rc.initial_kind == "plane_wave") {
    // Uniform flow: start wide enough that the grid stays covered.
    const double travel = std::abs(rc.constants.hbar * number(rc.initial, "k") / rc.constants.mass) * horizon;
    const double a = g.xmin() - travel - 2.0 * g.dx(), b = g.xmax() + travel + 2.0 * g.dx();
    x0 = initial_positions(Spacing::uniform, static_cast<std::size_t>(std::ceil((b - a) / g.dx())) + 1, a, b);
  }
  EnsembleConfig ec{init.semiclassical, std::move(x0), g};
  ec.domain_min = lo;
  ec.domain_max = hi;
  ec.constants = rc.constants;
  ec.snapshot_every = rc.every;
  const auto e = integrate_trajectories(ec, rc.potential, rc.dt, rc.steps);
  return assemble_wave(e, g, rc.constants);
}

std::vector<ComplexField> eigenbasis_route(const RunConfig& rc, const ComplexField& psi0, std::span<const double> t) {
  if (!std::holds_alternative<Harmonic>(rc.potential)) throw ConfigError("the eigenbasis route needs a harmonic potential");
  const HermiteBasis basis(std::get<Harmonic>(rc.potential).omega, rc.constants, rc.k_max, rc.grid);
  const auto c0 = expand(psi0, basis);
  std::vector<ComplexField> out;
  for (double ti : t) out.push_back(synthesize(propagate_phases(c0, ti, basis), basis));
  return out;
}

std::vector<double> snapshot_times(const RunConfig& rc) {
  std::vector<double> t;
  for (std::size_t s = 0; s <= rc.steps; s += rc.every) t.push_back(rc.dt * static_cast<double>(s));
  return t;
}

int cmd_propagate(const std::string& config, const std::string& method, const std::string& out,
                  const std::string& compare) {
  std::ifstream is(config);
  if (!is) throw ConfigError("cannot open " + config);
  const json doc = json::parse(is, nullptr, false);
  if (doc.is_discarded()) throw ConfigError(config + " is not valid JSON");
  const auto rc = parse_run_config(doc);
  if (!compare.empty() && compare != "exact") throw ConfigError("--compare accepts only 'exact'");
  if (method != "exact" && method != "semiclassical" && method != "eigenbasis") {
    throw ConfigError("--method must be exact, semiclassical or eigenbasis");
  }

  const auto init = initial_state(rc);
  const auto t = snapshot_times(rc);
  std::optional<Evolution> exact;
  if (method == "exact" || !compare.empty()) exact = exact_route(rc, init.psi);

  std::vector<ComplexField> psi;
  if (method == "exact") {
    psi = exact->psi;
  } else if (method == "semiclassical") {
    psi = semiclassical_route(rc, init);
  } else {
    psi = eigenbasis_route(rc, init.psi, t);
  }

  json echo = doc;
  echo["route"] = method;
  write_snapshots(out, t, psi, echo);
  double drift = 0.0;
  for (const auto& p : psi) drift = std::max(drift, std::abs(l2_norm(p) - l2_norm(psi.front())));
  std::cerr << method << ": " << psi.size() << " snapshots, norm drift " << format_shortest(drift) << "\n";

  if (!compare.empty()) {
    const double snap_dt = rc.dt * static_cast<double>(rc.every);
    const auto v = sample_potential(rc.potential, rc.grid, rc.constants);
    const auto res = schrodinger_residual(psi, v, rc.constants, snap_dt);
    std::string csv = "t,l2_error,residual_norm,q_norm\n";
    for (std::size_t s = 0; s < psi.size(); ++s) {
      csv += format_shortest(t[s]) + ',' + format_shortest(l2_distance(psi[s], exact->psi[s])) + ',' +
             format_shortest(res[s].report.l2) + ',' + format_shortest(q_psi_norm(decompose(psi[s], rc.constants))) + '\n';
    }
    write_text(fs::path(out) / "error_vs_time.csv", csv);
  }
  return ok;
}

// ---- list -----------------------------------------------------------------

int cmd_list() {
  json j = json::array();
  for (const auto& e : list_scenarios()) j.push_back(to_json(e));
  std::cout << dump(j);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Madelung decomposition, quantum potential and semiclassical propagation"};
  app.require_subcommand(1);

  auto* scenario = app.add_subcommand("scenario", "Run a catalog scenario, or all of them");
  std::string scenario_name, scenario_out;
  std::vector<std::string> overrides;
  scenario->add_option("name", scenario_name, "Scenario name or 'all'")->required();
  scenario->add_option("--out", scenario_out, "Output directory for reports and field dumps");
  scenario->add_option("--override", overrides, "dotted.key=value, repeatable")->take_all();

  auto* dec = app.add_subcommand("decompose", "Madelung fields of a wavefunction CSV");
  std::string dec_in, dec_out, dec_boundary = "dirichlet";
  double hbar = 1.0, mass = 1.0;
  std::optional<double> floor;
  dec->add_option("--input", dec_in, "x,re,im CSV")->required();
  dec->add_option("--out", dec_out, "x,rho,phi,q,mask CSV")->required();
  dec->add_option("--hbar", hbar);
  dec->add_option("--mass", mass);
  dec->add_option("--floor", floor, "Absolute density floor (default 1e-12 of the maximum)");
  dec->add_option("--boundary", dec_boundary)->check(CLI::IsMember({"dirichlet", "periodic"}));

  auto* prop = app.add_subcommand("propagate", "Propagate a configured state by one of three routes");
  std::string prop_cfg, prop_method, prop_out, prop_compare;
  prop->add_option("--config", prop_cfg, "Run configuration JSON")->required();
  prop->add_option("--method", prop_method, "exact | semiclassical | eigenbasis")->required();
  prop->add_option("--out", prop_out, "Output directory")->required();
  prop->add_option("--compare", prop_compare, "Also write error_vs_time.csv against this route (exact)");

  auto* list = app.add_subcommand("list", "Print the scenario catalog as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return usage;
  }

  try {
    if (*scenario) return cmd_scenario(scenario_name, scenario_out, overrides);
    if (*dec) return cmd_decompose(dec_in, dec_out, hbar, mass, floor, dec_boundary);
    if (*prop) return cmd_propagate(prop_cfg, prop_method, prop_out, prop_compare);
    if (*list) return cmd_list();
  } catch (const OutputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  } catch (const CsvError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return failure;
  }
  return usage;
}
