#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "impc/types.hpp"

namespace impc {

// Two straight-line motions over a common time interval, given by their
// relative endpoints: r1 = p_a(start) - p_b(start), r2 = p_a(end) - p_b(end).
template <int D>
struct SegmentPair {
  Vec<D> r1 = Vec<D>::Zero();
  Vec<D> r2 = Vec<D>::Zero();
};

// Minimum distance between two robots moving at constant velocity between
// synchronized samples: the relative position interpolates linearly, so the
// squared distance is a parabola in t whose minimizer is clamped to [0, 1].
template <int D>
double segment_pair_min_distance(const SegmentPair<D>& s) {
  const Vec<D> d = s.r2 - s.r1;
  const double dd = d.squaredNorm();
  double t = 0.0;
  if (dd > 0.0) t = std::clamp(-s.r1.dot(d) / dd, 0.0, 1.0);
  return (s.r1 + t * d).norm();
}

// Sufficient endpoint condition for the interpolated distance to stay above
// r_min: both endpoint separations at least sqrt(r_min^2 + ||r2 - r1||^2 / 4).
template <int D>
bool lemma_endpoint_condition(const SegmentPair<D>& s, double r_min) {
  const double need = std::sqrt(r_min * r_min + 0.25 * (s.r2 - s.r1).squaredNorm());
  return s.r1.norm() >= need && s.r2.norm() >= need;
}

// True when any three of the given planar points are collinear within tol
// (perpendicular distance of the middle point from the line of the others).
inline bool any_three_collinear_xy(const std::vector<Eigen::Vector2d>& pts, double tol = 1e-6) {
  const size_t n = pts.size();
  for (size_t a = 0; a + 2 < n; ++a)
    for (size_t b = a + 1; b + 1 < n; ++b) {
      const Eigen::Vector2d ab = pts[b] - pts[a];
      const double len = ab.norm();
      if (len < tol) return true;  // coincident points: degenerate, treat as collinear
      for (size_t c = b + 1; c < n; ++c) {
        const Eigen::Vector2d ac = pts[c] - pts[a];
        const double perp = std::abs(ab.x() * ac.y() - ab.y() * ac.x()) / len;
        if (perp < tol) return true;
      }
    }
  return false;
}

}  // namespace impc
