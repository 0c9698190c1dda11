#pragma once

#include <cmath>
#include <vector>

#include "impc/params.hpp"
#include "impc/types.hpp"

namespace impc {

// One step of the double-integrator map: position integrates the current
// velocity only; the input enters through the velocity.
template <int D>
RobotState<D> step_dynamics(const RobotState<D>& x, const Vec<D>& u, double h) {
  RobotState<D> next;
  next.p = x.p + h * x.v;
  next.v = x.v + h * u;
  if (!next.p.allFinite() || !next.v.allFinite())
    throw ModelError("step_dynamics produced a non-finite state");
  return next;
}

// Rolls the dynamics forward over a full input sequence.
template <int D>
PlannedTrajectory<D> rollout(const RobotState<D>& x0, const std::vector<Vec<D>>& u, double h) {
  PlannedTrajectory<D> traj;
  const int k_max = static_cast<int>(u.size());
  traj.p.reserve(u.size());
  traj.v.reserve(u.size());
  traj.u = u;
  RobotState<D> x = x0;
  for (int k = 0; k < k_max; ++k) {
    x = step_dynamics<D>(x, u[static_cast<size_t>(k)], h);
    traj.p.push_back(x.p);
    traj.v.push_back(x.v);
  }
  return traj;
}

// Closed-form (condensed) linear maps from the stacked input vector
// U = (u_0, ..., u_{K-1}) to each predicted position/velocity:
//   v_k = v_0 + h * sum_{m<k} u_m
//   p_k = p_0 + k*h*v_0 + h^2 * sum_{m<=k-2} (k-1-m) u_m
// so the first predicted position never depends on the input.
template <int D>
struct CondensedDynamics {
  int horizon = 0;
  double h = 0.0;
  // jac_p[k-1], jac_v[k-1]: D x (K*D) Jacobians of p_k, v_k w.r.t. U.
  std::vector<Eigen::MatrixXd> jac_p;
  std::vector<Eigen::MatrixXd> jac_v;
  // Orthonormal basis of the rest subspace { U : sum_m u_m = 0 }, so that the
  // terminal-rest equality can be eliminated: U = U_part + null_basis * y.
  Eigen::MatrixXd null_basis;  // (K*D) x ((K-1)*D)

  CondensedDynamics() = default;

  CondensedDynamics(int horizon_k, double step) : horizon(horizon_k), h(step) {
    const int n = horizon * D;
    jac_p.assign(static_cast<size_t>(horizon), Eigen::MatrixXd::Zero(D, n));
    jac_v.assign(static_cast<size_t>(horizon), Eigen::MatrixXd::Zero(D, n));
    for (int k = 1; k <= horizon; ++k) {
      Eigen::MatrixXd& jp = jac_p[static_cast<size_t>(k - 1)];
      Eigen::MatrixXd& jv = jac_v[static_cast<size_t>(k - 1)];
      for (int m = 0; m < k; ++m)
        jv.block(0, m * D, D, D) = h * Eigen::MatrixXd::Identity(D, D);
      for (int m = 0; m + 2 <= k; ++m)
        jp.block(0, m * D, D, D) =
            h * h * static_cast<double>(k - 1 - m) * Eigen::MatrixXd::Identity(D, D);
    }
    // Helmert-style orthonormal basis of the zero-sum subspace of R^K,
    // expanded blockwise over the D coordinates.
    null_basis = Eigen::MatrixXd::Zero(n, (horizon - 1) * D);
    for (int j = 1; j < horizon; ++j) {
      const double s = 1.0 / std::sqrt(static_cast<double>(j) * (j + 1));
      for (int r = 0; r < D; ++r) {
        for (int m = 0; m < j; ++m) null_basis(m * D + r, (j - 1) * D + r) = s;
        null_basis(j * D + r, (j - 1) * D + r) = -s * static_cast<double>(j);
      }
    }
  }

  // Input-free trajectory from x0 (the affine part of the condensed maps).
  void free_states(const RobotState<D>& x0, std::vector<Vec<D>>& p_free,
                   std::vector<Vec<D>>& v_free) const {
    p_free.resize(static_cast<size_t>(horizon));
    v_free.resize(static_cast<size_t>(horizon));
    for (int k = 1; k <= horizon; ++k) {
      p_free[static_cast<size_t>(k - 1)] = x0.p + static_cast<double>(k) * h * x0.v;
      v_free[static_cast<size_t>(k - 1)] = x0.v;
    }
  }

  // Particular solution of the terminal-rest equality sum_m u_m = -v_0/h,
  // spread uniformly over the horizon.
  Eigen::VectorXd particular_input(const RobotState<D>& x0) const {
    Eigen::VectorXd u_part(horizon * D);
    const Vec<D> block = -x0.v / (static_cast<double>(horizon) * h);
    for (int m = 0; m < horizon; ++m) u_part.segment(m * D, D) = block;
    return u_part;
  }

  static Eigen::VectorXd stack(const std::vector<Vec<D>>& u) {
    Eigen::VectorXd out(static_cast<int>(u.size()) * D);
    for (size_t m = 0; m < u.size(); ++m) out.segment(static_cast<int>(m) * D, D) = u[m];
    return out;
  }

  static std::vector<Vec<D>> unstack(const Eigen::VectorXd& u_flat) {
    std::vector<Vec<D>> out(static_cast<size_t>(u_flat.size() / D));
    for (size_t m = 0; m < out.size(); ++m) out[m] = u_flat.segment(static_cast<int>(m) * D, D);
    return out;
  }
};

// Shifts a committed plan forward one step and repeats the terminal entry:
// the broadcastable position sequence for the next round.
template <int D>
PredeterminedTrajectory<D> shift_predetermined(const PlannedTrajectory<D>& plan) {
  if (plan.p.empty()) throw ModelError("cannot shift an empty plan");
  PredeterminedTrajectory<D> pt;
  pt.p.assign(plan.p.begin() + 1, plan.p.end());
  pt.p.push_back(plan.p.back());
  return pt;
}

// Before any plan exists, a robot commits to holding its start position.
template <int D>
PredeterminedTrajectory<D> init_predetermined(const RobotState<D>& x0, int horizon) {
  PredeterminedTrajectory<D> pt;
  pt.p.assign(static_cast<size_t>(horizon), x0.p);
  return pt;
}

}  // namespace impc
