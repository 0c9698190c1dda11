#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "impc/model.hpp"
#include "impc/params.hpp"
#include "impc/types.hpp"

namespace impc {

// r'_min: clearance to enforce between synchronized plan samples so that the
// continuous constant-velocity motion between samples never dips below r_min,
// given both robots move at most h*v_max per step.
inline double extended_buffer(double r_min, double h, double v_max) {
  return std::sqrt(r_min * r_min + h * h * v_max * v_max);
}

// One linear separating constraint normal^T p >= offset at horizon step k.
template <int D>
struct HalfPlane {
  Vec<D> normal = Vec<D>::Zero();  // unit vector pointing from the neighbor toward us
  double offset = 0.0;
  int k = 0;          // horizon step the constraint applies to (1..K)
  int neighbor = -1;  // id of the robot this plane separates us from
  bool terminal = false;

  double slack(const Vec<D>& p) const { return normal.dot(p) - offset; }
};

// Separating plane between two same-step committed positions, with buffer
// `clearance`: the boundary sits halfway between the two points, pushed back
// by clearance/2 toward the midpoint.
template <int D>
HalfPlane<D> separating_halfplane(const Vec<D>& own, const Vec<D>& other, double clearance,
                                  int k, int neighbor_id, double degenerate_tol = 1e-9) {
  const Vec<D> diff = own - other;
  const double dist = diff.norm();
  if (!(dist > degenerate_tol))
    throw DegenerateGeometryError("coincident committed positions for neighbor " +
                                  std::to_string(neighbor_id) + " at horizon step " +
                                  std::to_string(k));
  HalfPlane<D> plane;
  plane.normal = diff / dist;
  plane.offset = plane.normal.dot(0.5 * (own + other)) + 0.5 * clearance;
  plane.k = k;
  plane.neighbor = neighbor_id;
  return plane;
}

// The full linear separation set one robot must respect for one round, plus
// the band geometry the optimizer needs. Planes are ordered by (neighbor, k)
// with the terminal plane of each neighbor last; neighbor ids are sorted.
template <int D>
struct ConstraintSet {
  int horizon = 0;
  double eps = 0.0;
  std::vector<int> neighbor_ids;
  std::vector<HalfPlane<D>> planes;  // horizon * |neighbors| entries

  int terminal_index(int j) const {
    // Planes for neighbor slot j occupy [j*horizon, (j+1)*horizon).
    return j * horizon + horizon - 1;
  }
};

// Builds the buffered separating set between our committed positions and each
// neighbor's, one plane per neighbor per horizon step; the terminal plane is
// the one tightened by the warning-band slack in the optimizer.
template <int D>
ConstraintSet<D> build_constraints(const PredeterminedTrajectory<D>& own,
                                   const std::map<int, PredeterminedTrajectory<D>>& neighbors,
                                   const ModelParams& params) {
  ConstraintSet<D> cons;
  cons.horizon = own.horizon();
  cons.eps = params.eps;
  if (cons.horizon != params.horizon)
    throw AssemblyError("committed trajectory length does not match the model horizon");
  const double clearance = params.extended_clearance();
  cons.neighbor_ids.reserve(neighbors.size());
  cons.planes.reserve(neighbors.size() * static_cast<size_t>(cons.horizon));
  for (const auto& [id, pt] : neighbors) {
    if (pt.horizon() != cons.horizon)
      throw AssemblyError("neighbor " + std::to_string(id) +
                          " committed trajectory length mismatch");
    cons.neighbor_ids.push_back(id);
    for (int k = 1; k <= cons.horizon; ++k) {
      HalfPlane<D> plane = separating_halfplane<D>(
          own.p[static_cast<size_t>(k - 1)], pt.p[static_cast<size_t>(k - 1)], clearance, k, id);
      plane.terminal = (k == cons.horizon);
      cons.planes.push_back(plane);
    }
  }
  return cons;
}

// Baseline separating plane from current positions only, with the plain
// buffer r_min: admits positions strictly closer than the warning-band set.
template <int D>
HalfPlane<D> bvc_halfplane(const Vec<D>& own, const Vec<D>& other, double r_min, int neighbor_id,
                           double degenerate_tol = 1e-9) {
  return separating_halfplane<D>(own, other, r_min, 1, neighbor_id, degenerate_tol);
}

}  // namespace impc
