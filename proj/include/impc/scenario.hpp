#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "impc/geometry.hpp"
#include "impc/params.hpp"
#include "impc/rng.hpp"
#include "impc/separation.hpp"
#include "impc/types.hpp"

namespace impc {

struct ScenarioRobot {
  std::array<double, 3> start{0.0, 0.0, 0.0};
  std::array<double, 3> target{0.0, 0.0, 0.0};
};

// A complete, self-describing task: workspace, per-robot start/target pairs,
// and the model parameters the run should use.
struct Scenario {
  int d = 2;
  std::string kind = "random_transition";
  uint64_t seed = 0;
  std::array<double, 3> ws_min{-1.0, -1.0, 0.0};
  std::array<double, 3> ws_max{1.0, 1.0, 0.0};
  std::vector<ScenarioRobot> robots;
  ModelParams params;

  int n() const { return static_cast<int>(robots.size()); }
};

struct Preset {
  ModelParams params;
  std::array<double, 3> ws_min{0.0, 0.0, 0.0};
  std::array<double, 3> ws_max{0.0, 0.0, 0.0};
};

// Displacement weights growing geometrically along the horizon. Front-loading
// the motion this way makes the executed first step cover a fixed fraction of
// the remaining distance, so closed-loop flight is near time-optimal instead
// of decaying with the horizon's time constant.
inline std::vector<double> geometric_schedule(int horizon, double ratio) {
  std::vector<double> q(static_cast<size_t>(std::max(horizon - 1, 0)));
  double v = 1.0;
  for (double& qk : q) {
    qk = v;
    v *= ratio;
  }
  return q;
}

// Named parameter sets: a nominal 2D set, a denser 2D set with a finer step
// and longer horizon, and a faster large-workspace 3D set.
inline Preset preset(const std::string& name) {
  Preset ps;
  ModelParams& p = ps.params;
  if (name == "2d_typical" || name == "2d_crowded") {
    p.dim = 2;
    p.v_max = 1.0;
    p.a_max = 1.5;
    p.r_min = 0.3;
    p.eps = 0.1;
    if (name == "2d_crowded") {
      p.h = 0.15;
      p.horizon = 12;
    } else {
      p.h = 0.2;
      p.horizon = 10;
    }
    ps.ws_min = {-1.0, -1.0, 0.0};
    ps.ws_max = {1.0, 1.0, 0.0};
  } else if (name == "3d_highspeed") {
    p.dim = 3;
    p.h = 0.2;
    p.horizon = 10;
    p.v_max = 3.0;
    p.a_max = 2.0;
    p.r_min = 1.0;
    p.eps = 0.2;
    ps.ws_min = {-5.0, -5.0, -2.5};
    ps.ws_max = {5.0, 5.0, 2.5};
  } else {
    throw GenerationError("unknown preset: " + name);
  }
  p.q_terminal = 30.0;
  p.rho0 = 2.0;
  p.delta_eta = 2.0;
  p.q_run = geometric_schedule(p.horizon, 2.0);
  p.finalize();
  p.validate();
  return ps;
}

namespace detail {

inline double dist_d(const std::array<double, 3>& a, const std::array<double, 3>& b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace detail

// Checks the separation preconditions every run relies on: starts pairwise at
// least r'_min apart, targets pairwise more than r'_min + 2*eps apart, no
// three targets collinear in the plane, and everything inside the workspace.
inline void validate_scenario(const Scenario& scen) {
  scen.params.validate();
  if (scen.params.dim != scen.d) throw GenerationError("scenario dimension mismatch with params");
  const double rp = scen.params.extended_clearance();
  const double target_sep = rp + 2.0 * scen.params.eps;
  const int n = scen.n();
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < scen.d; ++c) {
      const double lo = scen.ws_min[static_cast<size_t>(c)],
                   hi = scen.ws_max[static_cast<size_t>(c)];
      if (scen.robots[static_cast<size_t>(i)].start[static_cast<size_t>(c)] < lo - 1e-12 ||
          scen.robots[static_cast<size_t>(i)].start[static_cast<size_t>(c)] > hi + 1e-12 ||
          scen.robots[static_cast<size_t>(i)].target[static_cast<size_t>(c)] < lo - 1e-12 ||
          scen.robots[static_cast<size_t>(i)].target[static_cast<size_t>(c)] > hi + 1e-12)
        throw GenerationError("robot " + std::to_string(i) + " outside the workspace");
    }
    for (int j = i + 1; j < n; ++j) {
      if (detail::dist_d(scen.robots[static_cast<size_t>(i)].start,
                         scen.robots[static_cast<size_t>(j)].start, scen.d) < rp)
        throw GenerationError("starts of robots " + std::to_string(i) + " and " +
                              std::to_string(j) + " closer than the extended clearance");
      if (!(detail::dist_d(scen.robots[static_cast<size_t>(i)].target,
                           scen.robots[static_cast<size_t>(j)].target, scen.d) > target_sep))
        throw GenerationError("targets of robots " + std::to_string(i) + " and " +
                              std::to_string(j) + " too close for guaranteed arrival");
    }
  }
  std::vector<Eigen::Vector2d> targets_xy;
  targets_xy.reserve(static_cast<size_t>(n));
  for (const ScenarioRobot& r : scen.robots)
    targets_xy.emplace_back(r.target[0], r.target[1]);
  if (n >= 3 && any_three_collinear_xy(targets_xy))
    throw GenerationError("three target projections are collinear");
}

// Builds a task of the requested kind. Deterministic in (kind, n, seed) for a
// given preset. Throws GenerationError when the workspace cannot hold n robots
// at the required separations within the sampling budget.
inline Scenario gen_scenario(const std::string& kind, int n, const Preset& ps, uint64_t seed) {
  Scenario scen;
  scen.kind = kind;
  scen.seed = seed;
  scen.params = ps.params;
  scen.d = ps.params.dim;
  scen.ws_min = ps.ws_min;
  scen.ws_max = ps.ws_max;
  if (n < 1) throw GenerationError("need at least one robot");
  const double rp = scen.params.extended_clearance();
  const double target_sep = rp + 2.0 * scen.params.eps;
  const double cx = 0.5 * (ps.ws_min[0] + ps.ws_max[0]);
  const double cy = 0.5 * (ps.ws_min[1] + ps.ws_max[1]);
  const double cz = 0.5 * (ps.ws_min[2] + ps.ws_max[2]);
  const double half_x = 0.5 * (ps.ws_max[0] - ps.ws_min[0]);
  const double half_y = 0.5 * (ps.ws_max[1] - ps.ws_min[1]);

  auto circle_layout = [&](bool cyclic_shift) {
    double radius = 0.9 * std::min(half_x, half_y);
    if (n >= 2) {
      const double needed =
          (target_sep * 1.000001) / (2.0 * std::sin(M_PI / static_cast<double>(n)));
      radius = std::max(radius, needed);
    }
    if (radius > std::min(half_x, half_y) + 1e-12)
      throw GenerationError("workspace too small for " + std::to_string(n) +
                            " robots on a circle at the required separations");
    scen.robots.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
      scen.robots[static_cast<size_t>(i)].start = {cx + radius * std::cos(a),
                                                   cy + radius * std::sin(a), cz};
    }
    for (int i = 0; i < n; ++i) {
      const int src = cyclic_shift ? (i + 1) % n : i;
      const double a = 2.0 * M_PI * static_cast<double>(src) / static_cast<double>(n) +
                       (cyclic_shift ? 0.0 : M_PI);
      scen.robots[static_cast<size_t>(i)].target = {cx + radius * std::cos(a),
                                                    cy + radius * std::sin(a), cz};
    }
  };

  if (kind == "symmetric_circle") {
    circle_layout(false);
  } else if (kind == "swap") {
    circle_layout(true);
  } else if (kind == "symmetric_square") {
    if (n != 4) throw GenerationError("symmetric_square requires exactly 4 robots");
    const double c = 0.9 * std::min(half_x, half_y);
    if (!(2.0 * c > target_sep))
      throw GenerationError("workspace too small for the square layout");
    const double sx[4] = {+c, -c, -c, +c};
    const double sy[4] = {+c, +c, -c, -c};
    scen.robots.resize(4);
    for (int i = 0; i < 4; ++i) {
      scen.robots[static_cast<size_t>(i)].start = {cx + sx[i], cy + sy[i], cz};
      scen.robots[static_cast<size_t>(i)].target = {cx - sx[i], cy - sy[i], cz};
    }
  } else if (kind == "narrow_passage") {
    if (n != 3) throw GenerationError("narrow_passage requires exactly 3 robots");
    if (!(target_sep < 2.0 * scen.params.r_min))
      throw GenerationError("parameters leave no gap width that blocks the baseline");
    const double gap = 0.5 * (target_sep + 2.0 * scen.params.r_min);
    const double reach = std::min(4.0 * scen.params.r_min, 0.95 * half_x);
    if (gap / 2.0 > half_y || reach < 1.5 * scen.params.r_min)
      throw GenerationError("workspace too small for the narrow passage layout");
    scen.robots.resize(3);
    scen.robots[0].start = {cx - reach, cy, cz};
    scen.robots[0].target = {cx + reach, cy, cz};
    scen.robots[1].start = {cx, cy + gap / 2.0, cz};
    scen.robots[1].target = scen.robots[1].start;
    scen.robots[2].start = {cx, cy - gap / 2.0, cz};
    scen.robots[2].target = scen.robots[2].start;
  } else if (kind == "random_transition") {
    Rng rng(seed);
    const int budget = 100000;
    int attempts = 0;
    auto sample_point = [&](std::array<double, 3>& out) {
      for (int c = 0; c < scen.d; ++c)
        out[static_cast<size_t>(c)] =
            rng.uniform(ps.ws_min[static_cast<size_t>(c)], ps.ws_max[static_cast<size_t>(c)]);
      for (int c = scen.d; c < 3; ++c) out[static_cast<size_t>(c)] = cz;
    };
    scen.robots.assign(static_cast<size_t>(n), ScenarioRobot{});
    // Dart throwing with whole-layout restarts on exhaustion of per-point tries.
    bool done = false;
    while (!done) {
      done = true;
      std::vector<Eigen::Vector2d> targets_xy;
      for (int i = 0; i < n && done; ++i) {
        bool placed = false;
        while (!placed) {
          if (++attempts > budget)
            throw GenerationError("workspace too small for " + std::to_string(n) +
                                  " robots at the required separations (sampling budget spent)");
          ScenarioRobot& r = scen.robots[static_cast<size_t>(i)];
          sample_point(r.start);
          sample_point(r.target);
          placed = true;
          for (int j = 0; j < i && placed; ++j) {
            if (detail::dist_d(r.start, scen.robots[static_cast<size_t>(j)].start, scen.d) <
                rp + 1e-9)
              placed = false;
            if (!(detail::dist_d(r.target, scen.robots[static_cast<size_t>(j)].target, scen.d) >
                  target_sep + 1e-9))
              placed = false;
          }
          if (placed && scen.d >= 2) {
            targets_xy.emplace_back(r.target[0], r.target[1]);
            if (targets_xy.size() >= 3 && any_three_collinear_xy(targets_xy)) {
              targets_xy.pop_back();
              placed = false;
            }
          }
          if (!placed && attempts % 2000 == 0) {
            // Restart the whole layout to escape a cornered configuration.
            done = false;
            placed = true;
          }
        }
        if (!done) break;
      }
    }
  } else {
    throw GenerationError("unknown scenario kind: " + kind);
  }
  validate_scenario(scen);
  return scen;
}

inline Scenario gen_scenario(const std::string& kind, int n, const std::string& preset_name,
                             uint64_t seed) {
  return gen_scenario(kind, n, preset(preset_name), seed);
}

}  // namespace impc
