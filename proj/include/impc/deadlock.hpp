#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "impc/types.hpp"

namespace impc {

// Per-robot bookkeeping for online deadlock handling. `overlap` holds last
// round's detection verdict; `last_w` the warning slacks of last round's plan;
// `eta` the accumulated resolution gain.
struct DeadlockState {
  double eta = 0.0;
  bool overlap = false;
  std::map<int, double> last_w;
};

// A plan looks deadlocked when its terminal position froze between rounds,
// the tail of the plan has already settled onto that point (depth trailing
// steps), and the target has not been reached.
template <int D>
bool detect_terminal_overlap(const std::vector<Vec<D>>& plan_positions,
                             const Vec<D>& prev_terminal, const Vec<D>& target, double tol,
                             double arrival_tol, int depth = 2) {
  const int k_max = static_cast<int>(plan_positions.size());
  if (k_max < depth + 1) return false;
  const Vec<D>& terminal = plan_positions[static_cast<size_t>(k_max - 1)];
  if ((terminal - target).norm() <= arrival_tol) return false;
  if ((terminal - prev_terminal).norm() > tol) return false;
  for (int i = 1; i <= depth; ++i)
    if ((plan_positions[static_cast<size_t>(k_max - 1 - i)] -
         plan_positions[static_cast<size_t>(k_max - i)])
            .norm() > tol)
      return false;
  return true;
}

// Signed in-plane angle at `own` from the ray toward `target` to the ray
// toward `other`: positive when the other robot lies to the left. Degenerate
// rays (either projection shorter than tol) give zero.
template <int D>
double signed_angle_xy(const Vec<D>& own, const Vec<D>& target, const Vec<D>& other,
                       double tol = 1e-9) {
  const double tx = target[0] - own[0], ty = target[1] - own[1];
  const double nx = other[0] - own[0], ny = other[1] - own[1];
  if (std::hypot(tx, ty) <= tol || std::hypot(nx, ny) <= tol) return 0.0;
  return std::atan2(tx * ny - ty * nx, tx * nx + ty * ny);
}

// Gain update: a detected deadlock escalates; once every neighbor's warning
// slack rests at the band edge the gain resets; otherwise it is kept.
inline double update_eta(double eta, bool overlap_detected, bool all_w_at_eps,
                         double delta_eta) {
  if (overlap_detected) return eta + delta_eta;
  if (all_w_at_eps) return 0.0;
  return eta;
}

// Asymmetric warning-band weight: neighbors to the left are weighted up,
// neighbors to the right down, steering everyone right-handed around a jam.
// The exponent is clamped so the weight stays a positive finite number even
// when the gain has grown large; beyond e^±30 the contrast is saturated
// anyway and inf/0 weights would erase the band barrier altogether.
inline double repulsion_coeff(double rho0, double eta, double sin_theta) {
  const double arg = std::clamp(eta * sin_theta, -30.0, 30.0);
  return rho0 * std::exp(arg);
}

// One neighbor's contribution to the terminal force balance.
template <int D>
struct NeighborForce {
  Vec<D> normal = Vec<D>::Zero();  // terminal plane normal (points away from the neighbor)
  double rho = 0.0;
  double w = 0.0;
};

// Residual of the stationarity balance at the plan's terminal point: target
// attraction against the warning-band repulsions of neighbors inside the band.
// Zero residual characterizes a force-equilibrium deadlock.
template <int D>
Vec<D> equilibrium_residual(const Vec<D>& terminal, const Vec<D>& target, double q_terminal,
                            double eps, const std::vector<NeighborForce<D>>& neighbors) {
  Vec<D> r = q_terminal * (target - terminal);
  for (const NeighborForce<D>& nb : neighbors) {
    if (!(nb.w < eps)) continue;
    const double delta = (eps - nb.w) / (eps * nb.w);
    r += nb.rho * delta * nb.normal;
  }
  return r;
}

}  // namespace impc
