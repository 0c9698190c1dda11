#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "impc/engine.hpp"
#include "impc/scenario.hpp"
#include "impc/verify.hpp"

namespace impc {

using nlohmann::json;

namespace detail {

inline json axis_array(const std::array<double, 3>& a, int d) {
  json out = json::array();
  for (int i = 0; i < d; ++i) out.push_back(a[static_cast<size_t>(i)]);
  return out;
}

inline std::array<double, 3> axis_from(const json& j, int d, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != d)
    throw IoError(what + " must be an array of length " + std::to_string(d));
  std::array<double, 3> out{0.0, 0.0, 0.0};
  for (int i = 0; i < d; ++i) {
    if (!j[static_cast<size_t>(i)].is_number())
      throw IoError(what + " entries must be numbers");
    out[static_cast<size_t>(i)] = j[static_cast<size_t>(i)].get<double>();
  }
  return out;
}

inline void require(const json& j, const char* key, const char* type, const std::string& where) {
  if (!j.contains(key))
    throw IoError(where + ": missing required key \"" + key + "\"");
  const json& v = j.at(key);
  const std::string t = type;
  const bool ok = (t == "number" && v.is_number()) || (t == "integer" && v.is_number_integer()) ||
                  (t == "string" && v.is_string()) || (t == "array" && v.is_array()) ||
                  (t == "object" && v.is_object()) || (t == "boolean" && v.is_boolean());
  if (!ok) throw IoError(where + ": key \"" + key + "\" must be a " + t);
}

}  // namespace detail

inline json params_to_json(const ModelParams& p, int d) {
  json j;
  j["h"] = p.h;
  j["horizon"] = p.horizon;
  j["v_max"] = p.v_max;
  j["a_max"] = p.a_max;
  j["r_min"] = p.r_min;
  j["eps"] = p.eps;
  j["q_terminal"] = p.q_terminal;
  j["q_run"] = p.q_run;
  j["theta_v"] = detail::axis_array(p.theta_v, d);
  j["theta_a"] = detail::axis_array(p.theta_a, d);
  j["rho0"] = p.rho0;
  j["delta_eta"] = p.delta_eta;
  return j;
}

inline ModelParams params_from_json(const json& j, int d) {
  for (const char* key : {"h", "v_max", "a_max", "r_min", "eps", "q_terminal", "rho0", "delta_eta"})
    detail::require(j, key, "number", "params");
  detail::require(j, "horizon", "integer", "params");
  ModelParams p;
  p.dim = d;
  p.h = j.at("h").get<double>();
  p.horizon = j.at("horizon").get<int>();
  p.v_max = j.at("v_max").get<double>();
  p.a_max = j.at("a_max").get<double>();
  p.r_min = j.at("r_min").get<double>();
  p.eps = j.at("eps").get<double>();
  p.q_terminal = j.at("q_terminal").get<double>();
  p.rho0 = j.at("rho0").get<double>();
  p.delta_eta = j.at("delta_eta").get<double>();
  if (j.contains("q_run")) p.q_run = j.at("q_run").get<std::vector<double>>();
  if (j.contains("theta_v")) p.theta_v = detail::axis_from(j.at("theta_v"), d, "params.theta_v");
  if (j.contains("theta_a")) p.theta_a = detail::axis_from(j.at("theta_a"), d, "params.theta_a");
  p.finalize();
  p.validate();
  return p;
}

// Structural check of a scenario document before any values are interpreted.
inline void validate_scenario_json(const json& j) {
  detail::require(j, "d", "integer", "scenario");
  detail::require(j, "workspace", "object", "scenario");
  detail::require(j, "robots", "array", "scenario");
  detail::require(j, "params", "object", "scenario");
  detail::require(j, "seed", "integer", "scenario");
  detail::require(j, "kind", "string", "scenario");
  const int d = j.at("d").get<int>();
  if (d != 2 && d != 3) throw IoError("scenario: d must be 2 or 3");
  detail::require(j.at("workspace"), "min", "array", "scenario.workspace");
  detail::require(j.at("workspace"), "max", "array", "scenario.workspace");
  for (size_t i = 0; i < j.at("robots").size(); ++i) {
    const std::string where = "scenario.robots[" + std::to_string(i) + "]";
    const json& r = j.at("robots")[i];
    if (!r.is_object()) throw IoError(where + " must be an object");
    detail::require(r, "start", "array", where);
    detail::require(r, "target", "array", where);
  }
}

inline json scenario_to_json(const Scenario& s) {
  json j;
  j["d"] = s.d;
  j["kind"] = s.kind;
  j["seed"] = s.seed;
  j["workspace"] = {{"min", detail::axis_array(s.ws_min, s.d)},
                    {"max", detail::axis_array(s.ws_max, s.d)}};
  j["robots"] = json::array();
  for (const ScenarioRobot& r : s.robots)
    j["robots"].push_back({{"start", detail::axis_array(r.start, s.d)},
                           {"target", detail::axis_array(r.target, s.d)}});
  j["params"] = params_to_json(s.params, s.d);
  return j;
}

inline Scenario scenario_from_json(const json& j) {
  validate_scenario_json(j);
  Scenario s;
  s.d = j.at("d").get<int>();
  s.kind = j.at("kind").get<std::string>();
  s.seed = j.at("seed").get<uint64_t>();
  s.ws_min = detail::axis_from(j.at("workspace").at("min"), s.d, "workspace.min");
  s.ws_max = detail::axis_from(j.at("workspace").at("max"), s.d, "workspace.max");
  for (size_t i = 0; i < j.at("robots").size(); ++i) {
    const json& r = j.at("robots")[i];
    ScenarioRobot sr;
    sr.start = detail::axis_from(r.at("start"), s.d, "robot start");
    sr.target = detail::axis_from(r.at("target"), s.d, "robot target");
    s.robots.push_back(sr);
  }
  s.params = params_from_json(j.at("params"), s.d);
  validate_scenario(s);
  return s;
}

inline json solve_options_to_json(const SolveOptions& o) {
  json j;
  j["mu0"] = o.mu0;
  j["mu_factor"] = o.mu_factor;
  j["mu_min"] = o.mu_min;
  j["max_newton_total"] = o.max_newton_total;
  j["max_newton_per_stage"] = o.max_newton_per_stage;
  j["ls_alpha"] = o.ls_alpha;
  j["ls_beta"] = o.ls_beta;
  j["feas_tol"] = o.feas_tol;
  j["kkt_tol"] = o.kkt_tol;
  j["nudge_frac"] = o.nudge_frac;
  return j;
}

inline SolveOptions solve_options_from_json(const json& j) {
  SolveOptions o;
  if (j.contains("mu0")) o.mu0 = j.at("mu0").get<double>();
  if (j.contains("mu_factor")) o.mu_factor = j.at("mu_factor").get<double>();
  if (j.contains("mu_min")) o.mu_min = j.at("mu_min").get<double>();
  if (j.contains("max_newton_total")) o.max_newton_total = j.at("max_newton_total").get<int>();
  if (j.contains("max_newton_per_stage"))
    o.max_newton_per_stage = j.at("max_newton_per_stage").get<int>();
  if (j.contains("ls_alpha")) o.ls_alpha = j.at("ls_alpha").get<double>();
  if (j.contains("ls_beta")) o.ls_beta = j.at("ls_beta").get<double>();
  if (j.contains("feas_tol")) o.feas_tol = j.at("feas_tol").get<double>();
  if (j.contains("kkt_tol")) o.kkt_tol = j.at("kkt_tol").get<double>();
  if (j.contains("nudge_frac")) o.nudge_frac = j.at("nudge_frac").get<double>();
  return o;
}

inline json config_to_json(const RunConfig& c) {
  json j;
  j["method"] = c.method;
  j["deadline"] = c.deadline;
  j["arrival_pos_tol"] = c.arrival_pos_tol;
  j["arrival_speed_tol"] = c.arrival_speed_tol;
  j["overlap_tol"] = c.overlap_tol;
  j["overlap_depth"] = c.overlap_depth;
  j["eta_reset_frac"] = c.eta_reset_frac;
  j["eta_max"] = c.eta_max;
  j["resolution_enabled"] = c.resolution_enabled;
  j["comm_filter"] = c.comm_filter;
  j["solver"] = solve_options_to_json(c.solver);
  j["bvc_detect_window"] = c.bvc_detect_window;
  j["bvc_detour_factor"] = c.bvc_detour_factor;
  j["bvc_clearance_factor"] = c.bvc_clearance_factor;
  return j;
}

inline RunConfig config_from_json(const json& j) {
  RunConfig c;
  if (j.contains("method")) c.method = j.at("method").get<std::string>();
  if (j.contains("deadline")) c.deadline = j.at("deadline").get<double>();
  if (j.contains("arrival_pos_tol")) c.arrival_pos_tol = j.at("arrival_pos_tol").get<double>();
  if (j.contains("arrival_speed_tol"))
    c.arrival_speed_tol = j.at("arrival_speed_tol").get<double>();
  if (j.contains("overlap_tol")) c.overlap_tol = j.at("overlap_tol").get<double>();
  if (j.contains("overlap_depth")) c.overlap_depth = j.at("overlap_depth").get<int>();
  if (j.contains("eta_reset_frac")) c.eta_reset_frac = j.at("eta_reset_frac").get<double>();
  if (j.contains("eta_max")) c.eta_max = j.at("eta_max").get<double>();
  if (j.contains("resolution_enabled"))
    c.resolution_enabled = j.at("resolution_enabled").get<bool>();
  if (j.contains("comm_filter")) c.comm_filter = j.at("comm_filter").get<bool>();
  if (j.contains("solver")) c.solver = solve_options_from_json(j.at("solver"));
  if (j.contains("bvc_detect_window")) c.bvc_detect_window = j.at("bvc_detect_window").get<int>();
  if (j.contains("bvc_detour_factor"))
    c.bvc_detour_factor = j.at("bvc_detour_factor").get<double>();
  if (j.contains("bvc_clearance_factor"))
    c.bvc_clearance_factor = j.at("bvc_clearance_factor").get<double>();
  return c;
}

inline void save_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  save_json(scenario_to_json(s), path);
}

inline Scenario load_scenario(const std::string& path) {
  return scenario_from_json(load_json(path));
}

namespace detail {

inline json step_record(const RunResult& res, int step_idx, int robot_idx) {
  const StepLog& step = res.steps[static_cast<size_t>(step_idx)];
  const RobotStepLog& r = step.robots[static_cast<size_t>(robot_idx)];
  const int d = res.scenario.d;
  json j;
  j["step"] = step.step;
  j["t"] = step.t;
  j["robot"] = robot_idx;
  j["p"] = axis_array(r.p, d);
  j["v"] = axis_array(r.v, d);
  j["u"] = axis_array(r.u, d);
  json w = json::object();
  for (const auto& [id, wv] : r.w) w[std::to_string(id)] = wv;
  j["w"] = w;
  j["eta"] = r.eta;
  j["overlap"] = r.overlap;
  j["iters"] = r.solver_iters;
  j["kkt_residual"] = std::isfinite(r.kkt_residual) ? json(r.kkt_residual) : json(nullptr);
  j["eq_residual"] = r.eq_residual;
  j["status"] = r.solver_status;
  j["fallback"] = r.fallback_reason;
  j["warm_ok"] = r.warm_start_ok;
  return j;
}

}  // namespace detail

inline json summary_to_json(const RunResult& res) {
  const RunMetrics m = run_metrics(res);
  json j;
  j["success"] = m.success;
  j["completion_time_s"] = m.completion_time;
  j["steps"] = m.steps;
  j["wall_clock_s"] = res.wall_clock_s;
  j["deadlock_activations"] = m.deadlock_activations;
  j["infeasible_events"] = m.infeasible_events;
  j["solver_fallbacks"] = m.solver_fallbacks;
  j["feasibility_violation"] = m.feasibility_violation;
  j["path_lengths_m"] = m.path_lengths;
  j["config"] = config_to_json(res.config);
  j["invariants"] = {{"collision_free", m.collision_free},
                     {"min_distance_m", std::isfinite(m.min_distance) ? json(m.min_distance)
                                                                      : json(nullptr)},
                     {"clearance_required_m", res.scenario.params.r_min}};
  return j;
}

inline void validate_summary_json(const json& j) {
  detail::require(j, "success", "boolean", "summary");
  detail::require(j, "completion_time_s", "number", "summary");
  detail::require(j, "steps", "integer", "summary");
  detail::require(j, "wall_clock_s", "number", "summary");
  detail::require(j, "deadlock_activations", "integer", "summary");
  detail::require(j, "infeasible_events", "integer", "summary");
  detail::require(j, "solver_fallbacks", "integer", "summary");
  detail::require(j, "feasibility_violation", "boolean", "summary");
  detail::require(j, "path_lengths_m", "array", "summary");
  detail::require(j, "config", "object", "summary");
  detail::require(j, "invariants", "object", "summary");
  detail::require(j.at("invariants"), "collision_free", "boolean", "summary.invariants");
  if (!j.at("invariants").contains("min_distance_m"))
    throw IoError("summary.invariants: missing required key \"min_distance_m\"");
  if (!j.at("invariants").at("min_distance_m").is_number() &&
      !j.at("invariants").at("min_distance_m").is_null())
    throw IoError("summary.invariants: min_distance_m must be a number or null");
}

// Writes scenario.json, trajectory.jsonl, and summary.json into a directory.
inline void write_run(const RunResult& res, const std::string& dir) {
  std::filesystem::create_directories(dir);
  save_scenario(res.scenario, dir + "/scenario.json");
  std::ofstream out(dir + "/trajectory.jsonl");
  if (!out) throw IoError("cannot open for writing: " + dir + "/trajectory.jsonl");
  for (size_t k = 0; k < res.steps.size(); ++k)
    for (size_t i = 0; i < res.steps[k].robots.size(); ++i)
      out << detail::step_record(res, static_cast<int>(k), static_cast<int>(i)).dump() << "\n";
  if (!out) throw IoError("write failed: " + dir + "/trajectory.jsonl");
  out.close();
  const json summary = summary_to_json(res);
  validate_summary_json(summary);
  save_json(summary, dir + "/summary.json");
}

// Rebuilds a RunResult from a run directory. Numeric fields round-trip
// exactly, so replaying the log reproduces the original metrics.
inline RunResult load_run(const std::string& dir) {
  RunResult res;
  res.scenario = load_scenario(dir + "/scenario.json");
  const json summary = load_json(dir + "/summary.json");
  validate_summary_json(summary);
  res.success = summary.at("success").get<bool>();
  res.completion_time = summary.at("completion_time_s").get<double>();
  res.wall_clock_s = summary.at("wall_clock_s").get<double>();
  res.deadlock_activations = summary.at("deadlock_activations").get<int>();
  res.infeasible_events = summary.at("infeasible_events").get<int>();
  res.solver_fallbacks = summary.at("solver_fallbacks").get<int>();
  res.feasibility_violation = summary.at("feasibility_violation").get<bool>();
  res.config = config_from_json(summary.at("config"));
  std::ifstream in(dir + "/trajectory.jsonl");
  if (!in) throw IoError("cannot open for reading: " + dir + "/trajectory.jsonl");
  const int d = res.scenario.d;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError("malformed JSONL record at " + dir + "/trajectory.jsonl:" +
                    std::to_string(lineno) + ": " + e.what());
    }
    const int step_idx = j.at("step").get<int>();
    const int robot_idx = j.at("robot").get<int>();
    if (step_idx < 0 || robot_idx < 0) throw IoError("negative indices in trajectory log");
    if (static_cast<size_t>(step_idx) >= res.steps.size())
      res.steps.resize(static_cast<size_t>(step_idx) + 1);
    StepLog& step = res.steps[static_cast<size_t>(step_idx)];
    step.step = step_idx;
    step.t = j.at("t").get<double>();
    if (static_cast<size_t>(robot_idx) >= step.robots.size())
      step.robots.resize(static_cast<size_t>(robot_idx) + 1);
    RobotStepLog& r = step.robots[static_cast<size_t>(robot_idx)];
    r.p = detail::axis_from(j.at("p"), d, "trajectory p");
    r.v = detail::axis_from(j.at("v"), d, "trajectory v");
    r.u = detail::axis_from(j.at("u"), d, "trajectory u");
    for (const auto& [key, val] : j.at("w").items()) r.w[std::stoi(key)] = val.get<double>();
    r.eta = j.at("eta").get<double>();
    r.overlap = j.at("overlap").get<bool>();
    r.solver_iters = j.at("iters").get<int>();
    r.kkt_residual = j.at("kkt_residual").is_null()
                         ? std::numeric_limits<double>::infinity()
                         : j.at("kkt_residual").get<double>();
    r.eq_residual = j.at("eq_residual").get<double>();
    r.solver_status = j.at("status").get<std::string>();
    r.fallback_reason = j.value("fallback", std::string());
    r.warm_start_ok = j.at("warm_ok").get<bool>();
  }
  return res;
}

// Simple xy path plot: workspace frame, one polyline per robot from start to
// final position, starts drawn as circles at collision radius, targets as
// crosses. Spatial runs are projected onto the xy plane.
inline void write_svg(const RunResult& res, const std::string& path) {
  const auto tracks = detail::position_tracks(res);
  const double x0 = res.scenario.ws_min[0], x1 = res.scenario.ws_max[0];
  const double y0 = res.scenario.ws_min[1], y1 = res.scenario.ws_max[1];
  const double margin = 0.05 * std::max(x1 - x0, y1 - y0);
  const double w = (x1 - x0) + 2.0 * margin, h = (y1 - y0) + 2.0 * margin;
  const double width_px = 640.0;
  const double scale = width_px / w;
  const double height_px = h * scale;
  auto sx = [&](double x) { return (x - x0 + margin) * scale; };
  auto sy = [&](double y) { return height_px - (y - y0 + margin) * scale; };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                  "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
                                  "#aec7e8", "#ff9896", "#98df8a", "#c5b0d5", "#ffbb78",
                                  "#c49c94"};
  const size_t n_colors = sizeof(palette) / sizeof(palette[0]);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << std::setprecision(2) << std::fixed;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_px << "\" height=\""
      << height_px << "\" viewBox=\"0 0 " << width_px << " " << height_px << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<rect x=\"" << sx(x0) << "\" y=\"" << sy(y1) << "\" width=\"" << (x1 - x0) * scale
      << "\" height=\"" << (y1 - y0) * scale
      << "\" fill=\"none\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n";
  const double r_px = 0.5 * res.scenario.params.r_min * scale;
  for (size_t i = 0; i < tracks.size(); ++i) {
    const char* color = palette[i % n_colors];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const Eigen::Vector3d& p : tracks[i]) out << sx(p.x()) << "," << sy(p.y()) << " ";
    out << "\"/>\n";
    const Eigen::Vector3d& s = tracks[i].front();
    const Eigen::Vector3d& e = tracks[i].back();
    out << "<circle cx=\"" << sx(s.x()) << "\" cy=\"" << sy(s.y()) << "\" r=\"" << r_px
        << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
    out << "<circle cx=\"" << sx(e.x()) << "\" cy=\"" << sy(e.y())
        << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    const auto& tgt = res.scenario.robots[i].target;
    const double tx = sx(tgt[0]), ty = sy(tgt[1]), c = 5.0;
    out << "<path d=\"M" << tx - c << " " << ty - c << " L" << tx + c << " " << ty + c << " M"
        << tx - c << " " << ty + c << " L" << tx + c << " " << ty - c << "\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
  }
  out << "</svg>\n";
  if (!out) throw IoError("write failed: " + path);
}

struct BatchRow {
  std::string method;
  int n = 0;
  int trials = 0;
  int success_count = 0;
  int infeasible_count = 0;
  double mean_completion_s = 0.0;
  double p95_completion_s = 0.0;
  double min_distance_m = 0.0;
  double mean_wall_clock_s = 0.0;
};

inline void write_csv(const std::vector<BatchRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "method,N,trials,success_count,infeasible_count,mean_completion_s,p95_completion_s,"
         "min_distance_m,mean_wall_clock_s\n";
  out << std::setprecision(6) << std::fixed;
  for (const BatchRow& r : rows) {
    out << r.method << "," << r.n << "," << r.trials << "," << r.success_count << ","
        << r.infeasible_count << "," << r.mean_completion_s << "," << r.p95_completion_s << ","
        << r.min_distance_m << "," << r.mean_wall_clock_s << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace impc
