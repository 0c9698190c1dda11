#pragma once

#include <limits>
#include <vector>

#include "impc/engine.hpp"
#include "impc/geometry.hpp"

namespace impc {

struct CollisionReport {
  bool collision_free = true;
  double min_distance = std::numeric_limits<double>::infinity();
  int interval = -1;  // step interval where the minimum occurred
  int robot_a = -1;
  int robot_b = -1;
};

namespace detail {

// Position samples per robot, initial state first, padded to three axes so the
// same segment geometry covers both planar and spatial runs.
inline std::vector<std::vector<Eigen::Vector3d>> position_tracks(const RunResult& res) {
  const size_t n = res.scenario.robots.size();
  std::vector<std::vector<Eigen::Vector3d>> tracks(n);
  for (size_t i = 0; i < n; ++i) {
    const auto& s = res.scenario.robots[i].start;
    tracks[i].emplace_back(s[0], s[1], s[2]);
  }
  for (const StepLog& step : res.steps) {
    if (step.robots.size() != n) continue;  // partial round from an aborted run
    for (size_t i = 0; i < n; ++i) {
      const auto& p = step.robots[i].p;
      tracks[i].emplace_back(p[0], p[1], p[2]);
    }
  }
  return tracks;
}

}  // namespace detail

// Minimum pairwise distance across the run, measured along the straight-line
// interpolation between consecutive samples, against the collision radius.
inline CollisionReport check_run_collision_free(const RunResult& res) {
  CollisionReport rep;
  const auto tracks = detail::position_tracks(res);
  const size_t n = tracks.size();
  if (n < 2) return rep;
  const double r_min = res.scenario.params.r_min;
  const size_t samples = tracks[0].size();
  for (size_t k = 0; k + 1 < samples; ++k) {
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = i + 1; j < n; ++j) {
        SegmentPair<3> sp;
        sp.r1 = tracks[i][k] - tracks[j][k];
        sp.r2 = tracks[i][k + 1] - tracks[j][k + 1];
        const double d = segment_pair_min_distance<3>(sp);
        if (d < rep.min_distance) {
          rep.min_distance = d;
          rep.interval = static_cast<int>(k);
          rep.robot_a = static_cast<int>(i);
          rep.robot_b = static_cast<int>(j);
        }
      }
    }
  }
  rep.collision_free = !(rep.min_distance < r_min - 1e-9);
  return rep;
}

struct RunMetrics {
  bool success = false;
  double completion_time = 0.0;
  bool collision_free = true;
  double min_distance = std::numeric_limits<double>::infinity();
  std::vector<double> path_lengths;
  int steps = 0;
  int deadlock_activations = 0;
  int infeasible_events = 0;
  int solver_fallbacks = 0;
  bool feasibility_violation = false;
};

inline RunMetrics run_metrics(const RunResult& res) {
  RunMetrics m;
  m.success = res.success;
  m.completion_time = res.completion_time;
  m.steps = static_cast<int>(res.steps.size());
  m.deadlock_activations = res.deadlock_activations;
  m.infeasible_events = res.infeasible_events;
  m.solver_fallbacks = res.solver_fallbacks;
  m.feasibility_violation = res.feasibility_violation;
  const CollisionReport rep = check_run_collision_free(res);
  m.collision_free = rep.collision_free;
  m.min_distance = rep.min_distance;
  const auto tracks = detail::position_tracks(res);
  m.path_lengths.resize(tracks.size(), 0.0);
  for (size_t i = 0; i < tracks.size(); ++i)
    for (size_t k = 0; k + 1 < tracks[i].size(); ++k)
      m.path_lengths[i] += (tracks[i][k + 1] - tracks[i][k]).norm();
  return m;
}

}  // namespace impc
