#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "qpot/scenarios.hpp"

using namespace qpot;

namespace {

const std::vector<ScenarioReport>& all_reports() {
  static const auto reports = run_all();
  return reports;
}

const ScenarioReport& report(const std::string& name) {
  for (const auto& r : all_reports()) {
    if (r.name == name) return r;
  }
  throw std::logic_error("no report " + name);
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("catalog") {
  const auto& cat = list_scenarios();
  REQUIRE(cat.size() == 6);
  const std::vector<std::string> order{"plane_wave",  "box_branches",  "barrier",
                                       "slit_radial", "free_gaussian", "oscillator_eigen"};
  const std::set<std::string> categories{"vanishing_q", "nonzero_q", "circular"};
  for (std::size_t i = 0; i < cat.size(); ++i) {
    CHECK(cat[i].name == order[i]);
    CHECK(cat[i].anchor.starts_with("sec:"));
    CHECK(!cat[i].description.empty());
    CHECK(categories.contains(cat[i].category));
    const auto back = catalog_entry_from_json(nlohmann::json::parse(to_json(cat[i]).dump()));
    CHECK(back.name == cat[i].name);
    CHECK(back.category == cat[i].category);
    CHECK(back.description == cat[i].description);
    CHECK(back.anchor == cat[i].anchor);
  }
  CHECK(&list_scenarios() == &cat);
}

TEST_CASE("configs, overrides and hashes") {
  for (const auto& e : list_scenarios()) CHECK_NOTHROW(validate(default_config(e.name)));
  CHECK_THROWS_AS(default_config("hydrogen"), ConfigError);
  CHECK_THROWS_AS(run_scenario("hydrogen"), ConfigError);

  auto cfg = default_config("free_gaussian");
  const auto h0 = config_hash(cfg);
  CHECK(h0.size() == 16);
  CHECK(h0.find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(config_hash(default_config("free_gaussian")) == h0);

  apply_override(cfg, "time.dt=2e-3");
  CHECK(cfg.doc["time"]["dt"] == 2e-3);
  CHECK(config_hash(cfg) != h0);
  apply_override(cfg, "grid.n=4096");
  CHECK(cfg.doc["grid"]["n"] == 4096);
  apply_override(cfg, "grid.n=1e3");
  CHECK(cfg.doc["grid"]["n"].is_number_integer());
  apply_override(cfg, "grid.boundary=periodic");
  CHECK(cfg.doc["grid"]["boundary"] == "periodic");

  CHECK_THROWS_AS(apply_override(cfg, "grid.nn=3"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "grid=3"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "grid.n=2.5"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "time.dt=fast"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "time.dt"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "=1"), ConfigError);
}

TEST_CASE("threshold and configuration mismatches are rejected") {
  auto cfg = default_config("plane_wave");
  cfg.doc["thresholds"]["transmission"] = {{"op", "<"}, {"value", 1.0}};
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  CHECK_THROWS_AS(run_scenario(cfg), ConfigError);

  cfg = default_config("plane_wave");
  cfg.doc["thresholds"]["q_max"]["op"] = "<=";
  CHECK_THROWS_AS(validate(cfg), ConfigError);

  cfg = default_config("plane_wave");
  cfg.doc["grid"].erase("n");
  CHECK_THROWS_AS(validate(cfg), ConfigError);

  cfg = default_config("plane_wave");
  cfg.doc["grid"]["spacing"] = 0.1;
  CHECK_THROWS_AS(validate(cfg), ConfigError);

  cfg = default_config("plane_wave");
  cfg.name = "barrier";
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("upstream errors carry the scenario name") {
  const auto msg = message_of([] { run_scenario("oscillator_eigen", {"basis.k_max=200"}); });
  CHECK(msg.starts_with("oscillator_eigen: "));
  CHECK_THROWS_AS(run_scenario("oscillator_eigen", {"basis.k_max=200"}), ConfigError);
  CHECK_THROWS_AS(run_scenario("plane_wave", {"grid.boundary=dirichlet"}), ConfigError);
  CHECK_THROWS_AS(run_scenario("free_gaussian", {"time.horizon=0"}), ConfigError);
}

TEST_CASE("scenario examples") {
  const auto& slit = report("slit_radial");
  CHECK(slit.pass);
  CHECK(slit.metrics.at("q_max") < 1e-4);

  const auto& pw = report("plane_wave");
  CHECK(pw.pass);
  CHECK(pw.metrics.at("q_max") < 1e-6);
  CHECK(pw.metrics.at("l2_error") < 1e-3);

  const auto& fg = report("free_gaussian");
  CHECK(fg.pass);
  CHECK(fg.metrics.at("q_origin") == doctest::Approx(0.25).epsilon(0.05));
  CHECK(fg.metrics.at("l2_error") > 10.0 * fg.metrics.at("discretization_bound"));

  const auto& bar = report("barrier");
  CHECK(bar.metrics.at("t_exact") == doctest::Approx(0.21077109396613053509).epsilon(1e-12));
  CHECK(bar.metrics.at("t_wkb") == doctest::Approx(0.059105746561956237763).epsilon(1e-12));
  CHECK(bar.metrics.at("wkb_gap") > 0.0);
  // The quantum potential of the interfering left-hand wave is not small.
  CHECK(bar.metrics.at("q_max_interference") > 1.0);
}

TEST_CASE("reports are complete and self-describing") {
  for (const auto& r : all_reports()) {
    INFO(r.name);
    CHECK(r.pass);
    CHECK(r.failures().empty());
    CHECK(!r.anchor.empty());
    CHECK(r.provenance.contains("config_hash"));
    CHECK(r.provenance.contains("grid"));
    const auto& cfg = r.provenance.at("config");
    CHECK(config_hash(ScenarioConfig{r.name, cfg}) == r.provenance.at("config_hash"));
    for (const auto& [metric, t] : cfg.at("thresholds").items()) CHECK(r.metrics.contains(metric));
    CHECK(std::is_sorted(r.checks.begin(), r.checks.end(),
                         [](const Check& a, const Check& b) { return a.metric < b.metric; }));
    const auto j = to_json(r);
    CHECK(j.at("name") == r.name);
    CHECK(j.at("pass") == r.pass);
    CHECK(j.at("metrics").size() == r.metrics.size());
  }
  const auto csv = to_csv(all_reports());
  CHECK(csv.starts_with("scenario,metric,value,threshold,pass\n"));
  std::size_t checks = 0;
  for (const auto& r : all_reports()) checks += r.checks.size();
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == checks + 1);
}

TEST_CASE("category split is visible in the data") {
  for (const auto& e : list_scenarios()) {
    const auto& r = report(e.name);
    if (e.category == "vanishing_q" && r.metrics.contains("l2_error")) CHECK(r.metrics.at("l2_error") < 1e-3);
  }
  CHECK(report("free_gaussian").metrics.at("l2_error") > 1e-2);
  CHECK(report("oscillator_eigen").metrics.at("l2_error") < 1e-3);
}

TEST_CASE("thresholds decide pass") {
  const auto r = run_scenario("plane_wave", {"thresholds.l2_error.value=1e-20"});
  CHECK(!r.pass);
  REQUIRE(r.failures().size() == 1);
  CHECK(r.failures().front().starts_with("l2_error"));
}

TEST_CASE("property: determinism") {
  const auto a = to_json(run_scenario("box_branches")).dump();
  const auto b = to_json(run_scenario("box_branches")).dump();
  CHECK(a == b);
  CHECK(a == to_json(report("box_branches")).dump());
}

TEST_CASE("property: refinement never flips a pass") {
  const std::vector<std::pair<std::string, std::vector<std::string>>> refined{
      {"plane_wave", {"grid.n=512", "time.dt=5e-4"}},
      {"box_branches", {"grid.n=4097", "time.dt=5e-5"}},
      {"barrier", {"grid.n=2048"}},
      {"slit_radial", {"grid.n=4096"}},
      {"free_gaussian", {"grid.n=4096", "time.dt=5e-4"}},
      {"oscillator_eigen", {"grid.n=2048", "time.dt=5e-4"}},
  };
  for (const auto& [name, overrides] : refined) {
    INFO(name);
    const auto r = run_scenario(name, overrides);
    CHECK(r.pass);
    for (const auto& f : r.failures()) MESSAGE(f);
  }
}

TEST_CASE("run_all applies overrides where the key exists") {
  CHECK_THROWS_AS(run_all({"grid.spacing=1"}), ConfigError);
  CHECK_THROWS_AS(run_all({"time.dt=fast"}), ConfigError);
  const auto r = run_all({"ensemble.trajectories=2048"});
  REQUIRE(r.size() == 6);
  CHECK(r[0].provenance.at("config").at("ensemble").at("trajectories") == 2048);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i].name == list_scenarios()[i].name);
}
