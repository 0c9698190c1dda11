#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "impc/batch.hpp"
#include "impc/engine.hpp"
#include "impc/io.hpp"
#include "impc/scenario.hpp"

using namespace impc;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Blanks the wall-clock column (the only nondeterministic field) of a results
// table so the rest can be compared exactly.
std::string mask_wall_clock(const std::string& csv) {
  std::stringstream out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    const size_t cut = line.rfind(',');
    out << line.substr(0, cut) << ",-\n";
  }
  return out.str();
}

Scenario small_swap() {
  Scenario scen;
  scen.kind = "hand";
  scen.params = preset("2d_typical").params;
  ScenarioRobot a, b;
  a.start = {-0.6, 0.2, 0.0};
  a.target = {0.6, 0.2, 0.0};
  b.start = {0.6, -0.2, 0.0};
  b.target = {-0.6, -0.25, 0.0};
  scen.robots = {a, b};
  validate_scenario(scen);
  return scen;
}

std::string fresh_dir(const std::string& tag) {
  const std::string dir = (std::filesystem::temp_directory_path() / ("impc_" + tag)).string();
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("model parameters survive a JSON round trip exactly") {
  for (const char* name : {"2d_typical", "2d_crowded", "3d_highspeed"}) {
    const ModelParams p = preset(name).params;
    const ModelParams q = params_from_json(params_to_json(p, p.dim), p.dim);
    CHECK(q.dim == p.dim);
    CHECK(q.h == p.h);
    CHECK(q.horizon == p.horizon);
    CHECK(q.v_max == p.v_max);
    CHECK(q.a_max == p.a_max);
    CHECK(q.r_min == p.r_min);
    CHECK(q.eps == p.eps);
    CHECK(q.q_terminal == p.q_terminal);
    CHECK(q.q_run == p.q_run);
    CHECK(q.theta_v == p.theta_v);
    CHECK(q.theta_a == p.theta_a);
    CHECK(q.rho0 == p.rho0);
    CHECK(q.delta_eta == p.delta_eta);
  }
}

TEST_CASE("scenarios and configs round trip through JSON") {
  const Scenario s = gen_scenario("random_transition", 5, "2d_crowded", 99);
  const Scenario t = scenario_from_json(scenario_to_json(s));
  CHECK(t.d == s.d);
  CHECK(t.kind == s.kind);
  CHECK(t.seed == s.seed);
  CHECK(t.ws_min == s.ws_min);
  CHECK(t.ws_max == s.ws_max);
  REQUIRE(t.n() == s.n());
  for (int i = 0; i < s.n(); ++i) {
    CHECK(t.robots[static_cast<size_t>(i)].start == s.robots[static_cast<size_t>(i)].start);
    CHECK(t.robots[static_cast<size_t>(i)].target == s.robots[static_cast<size_t>(i)].target);
  }

  RunConfig c;
  c.method = "bvc";
  c.deadline = 31.5;
  c.overlap_tol = 0.004;
  c.eta_max = 12.0;
  c.resolution_enabled = false;
  c.comm_filter = false;
  c.solver.mu_min = 1e-6;
  c.solver.max_newton_total = 123;
  const RunConfig d = config_from_json(config_to_json(c));
  CHECK(d.method == c.method);
  CHECK(d.deadline == c.deadline);
  CHECK(d.overlap_tol == c.overlap_tol);
  CHECK(d.eta_max == c.eta_max);
  CHECK(d.resolution_enabled == c.resolution_enabled);
  CHECK(d.comm_filter == c.comm_filter);
  CHECK(d.solver.mu_min == c.solver.mu_min);
  CHECK(d.solver.max_newton_total == c.solver.max_newton_total);

  const BatchSpec bs = batch_spec_from_json(batch_spec_to_json(BatchSpec{}));
  CHECK(bs.preset_name == BatchSpec{}.preset_name);
  CHECK(bs.counts == BatchSpec{}.counts);
}

TEST_CASE("scenario schema violations are rejected with messages") {
  const json good = scenario_to_json(gen_scenario("random_transition", 4, "2d_typical", 7));
  validate_scenario_json(good);

  json j = good;
  j.erase("robots");
  CHECK_THROWS_AS(validate_scenario_json(j), IoError);
  j = good;
  j["d"] = 4;
  CHECK_THROWS_AS(validate_scenario_json(j), IoError);
  j = good;
  j["robots"][0].erase("start");
  CHECK_THROWS_AS(validate_scenario_json(j), IoError);
  j = good;
  j["robots"][1]["target"] = {0.1};
  CHECK_THROWS_AS(scenario_from_json(j), IoError);
  j = good;
  j["params"]["h"] = "fast";
  CHECK_THROWS_AS(validate_scenario_json(j), IoError);
}

TEST_CASE("generated tasks respect the separation preconditions for many seeds") {
  const Preset ps = preset("2d_crowded");
  const double rp = ps.params.extended_clearance();
  const double target_sep = rp + 2.0 * ps.params.eps;
  for (uint64_t seed = 1; seed <= 1000; ++seed) {
    const Scenario s = gen_scenario("random_transition", 6, ps, seed);
    REQUIRE(s.n() == 6);
    for (int i = 0; i < 6; ++i) {
      for (int c = 0; c < 2; ++c) {
        REQUIRE(s.robots[static_cast<size_t>(i)].start[static_cast<size_t>(c)] >= -1.0);
        REQUIRE(s.robots[static_cast<size_t>(i)].start[static_cast<size_t>(c)] <= 1.0);
      }
      for (int j = i + 1; j < 6; ++j) {
        const auto &a = s.robots[static_cast<size_t>(i)], &b = s.robots[static_cast<size_t>(j)];
        REQUIRE(std::hypot(a.start[0] - b.start[0], a.start[1] - b.start[1]) >= rp);
        REQUIRE(std::hypot(a.target[0] - b.target[0], a.target[1] - b.target[1]) > target_sep);
      }
    }
  }
  // Same seed, same task.
  const json a = scenario_to_json(gen_scenario("random_transition", 6, ps, 77));
  const json b = scenario_to_json(gen_scenario("random_transition", 6, ps, 77));
  CHECK(a == b);
}

TEST_CASE("impossible or unknown generation requests throw") {
  CHECK_THROWS_AS(gen_scenario("random_transition", 200, "2d_crowded", 1), GenerationError);
  CHECK_THROWS_AS(gen_scenario("symmetric_square", 5, "2d_typical", 1), GenerationError);
  CHECK_THROWS_AS(gen_scenario("narrow_passage", 4, "2d_typical", 1), GenerationError);
  CHECK_THROWS_AS(gen_scenario("spiral", 4, "2d_typical", 1), GenerationError);
  CHECK_THROWS_AS(gen_scenario("random_transition", 4, "5d_hyper", 1), GenerationError);
  CHECK_THROWS_AS(gen_scenario("random_transition", 0, "2d_typical", 1), GenerationError);
}

TEST_CASE("the generated-task snapshot is stable") {
  const Scenario s = gen_scenario("random_transition", 4, "2d_typical", 42);
  const json fresh = scenario_to_json(s);
  const json golden = load_json(std::string(TEST_GOLDEN_DIR) + "/scenario_typical_n4_seed42.json");
  CHECK(fresh == golden);
}

TEST_CASE("a run directory round trips losslessly") {
  RunConfig cfg;
  const RunResult res = run_scenario(small_swap(), cfg);
  REQUIRE(res.success);
  const std::string dir = fresh_dir("rundir");
  write_run(res, dir);
  CHECK(std::filesystem::exists(dir + "/scenario.json"));
  CHECK(std::filesystem::exists(dir + "/trajectory.jsonl"));
  CHECK(std::filesystem::exists(dir + "/summary.json"));

  const RunResult back = load_run(dir);
  CHECK(back.success == res.success);
  CHECK(back.completion_time == res.completion_time);
  CHECK(back.config.method == res.config.method);
  REQUIRE(back.steps.size() == res.steps.size());
  for (size_t k = 0; k < res.steps.size(); ++k) {
    REQUIRE(back.steps[k].robots.size() == res.steps[k].robots.size());
    CHECK(back.steps[k].t == res.steps[k].t);
    for (size_t i = 0; i < res.steps[k].robots.size(); ++i) {
      const RobotStepLog &orig = res.steps[k].robots[i], &rt = back.steps[k].robots[i];
      for (int c = 0; c < 2; ++c) {
        CHECK(rt.p[static_cast<size_t>(c)] == orig.p[static_cast<size_t>(c)]);
        CHECK(rt.v[static_cast<size_t>(c)] == orig.v[static_cast<size_t>(c)]);
        CHECK(rt.u[static_cast<size_t>(c)] == orig.u[static_cast<size_t>(c)]);
      }
      CHECK(rt.w == orig.w);
      CHECK(rt.eta == orig.eta);
      CHECK(rt.overlap == orig.overlap);
      CHECK(rt.solver_status == orig.solver_status);
      CHECK(rt.warm_start_ok == orig.warm_start_ok);
    }
  }

  // Replayed logs reproduce the original safety metrics.
  const json s1 = summary_to_json(res), s2 = summary_to_json(back);
  CHECK(s1.at("invariants") == s2.at("invariants"));
  CHECK(s1.at("path_lengths_m") == s2.at("path_lengths_m"));

  json bad = s1;
  bad.erase("steps");
  CHECK_THROWS_AS(validate_summary_json(bad), IoError);
  bad = s1;
  bad["invariants"]["min_distance_m"] = "close";
  CHECK_THROWS_AS(validate_summary_json(bad), IoError);
}

TEST_CASE("the path plot shows one trace per robot") {
  RunConfig cfg;
  const RunResult res = run_scenario(small_swap(), cfg);
  const std::string path = fresh_dir("svg") + "/paths.svg";
  write_svg(res, path);
  const std::string svg = slurp(path);
  CHECK(svg.find("<svg") != std::string::npos);
  size_t traces = 0;
  for (size_t at = svg.find("<polyline"); at != std::string::npos;
       at = svg.find("<polyline", at + 1))
    ++traces;
  CHECK(traces == 2);
}

TEST_CASE("seed derivation separates counts and trials") {
  std::set<uint64_t> seen;
  for (int n : {2, 4, 8, 14, 16})
    for (int trial = 0; trial < 40; ++trial) seen.insert(derive_seed(7, n, trial));
  CHECK(seen.size() == 200);
  CHECK(derive_seed(7, 4, 0) == derive_seed(7, 4, 0));
  CHECK(derive_seed(7, 4, 0) != derive_seed(8, 4, 0));
}

TEST_CASE("small sweeps are deterministic and match the frozen table") {
  BatchSpec spec;
  spec.preset_name = "2d_typical";
  spec.counts = {2};
  spec.trials = 2;
  spec.seed_base = 3;
  spec.methods = {"impc_dr", "bvc"};
  const BatchResult a = run_batch(spec);
  const BatchResult b = run_batch(spec);
  REQUIRE(a.rows.size() == 2);
  REQUIRE(a.trials.size() == 4);
  for (size_t r = 0; r < a.rows.size(); ++r) {
    CHECK(a.rows[r].method == b.rows[r].method);
    CHECK(a.rows[r].success_count == b.rows[r].success_count);
    CHECK(a.rows[r].mean_completion_s == b.rows[r].mean_completion_s);
    CHECK(a.rows[r].p95_completion_s == b.rows[r].p95_completion_s);
    CHECK(a.rows[r].min_distance_m == b.rows[r].min_distance_m);
  }
  for (size_t k = 0; k < a.trials.size(); ++k) {
    CHECK(a.trials[k].seed == b.trials[k].seed);
    CHECK(a.trials[k].completion_time == b.trials[k].completion_time);
    CHECK(a.trials[k].min_distance == b.trials[k].min_distance);
  }

  const std::string dir = fresh_dir("csv");
  write_csv(a.rows, dir + "/rows.csv");
  const std::string masked = mask_wall_clock(slurp(dir + "/rows.csv"));
  const std::string golden =
      mask_wall_clock(slurp(std::string(TEST_GOLDEN_DIR) + "/batch_typical_n2.csv"));
  CHECK(masked == golden);
}
