#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "impc/model.hpp"
#include "impc/params.hpp"
#include "impc/separation.hpp"
#include "impc/types.hpp"

namespace impc {

// One robot's per-round convex program, condensed onto the stacked input
// vector U plus the per-neighbor warning slacks w.
template <int D>
struct ProblemInstance {
  RobotState<D> x0;
  Vec<D> target = Vec<D>::Zero();
  ConstraintSet<D> cons;
  std::vector<double> rho;  // warning-band weights, aligned with cons.neighbor_ids
  ModelParams params;
  const CondensedDynamics<D>* dyn = nullptr;
  std::vector<Vec<D>> p_free, v_free;  // input-free predicted states

  int n_inputs() const { return params.horizon * D; }
  int n_neighbors() const { return static_cast<int>(cons.neighbor_ids.size()); }
};

template <int D>
ProblemInstance<D> assemble(const RobotState<D>& x0, const Vec<D>& target,
                            const ConstraintSet<D>& cons, const std::map<int, double>& rho,
                            const ModelParams& params, const CondensedDynamics<D>& dyn) {
  if (params.dim != D) throw AssemblyError("model dimension does not match instance dimension");
  if (cons.horizon != params.horizon && !cons.neighbor_ids.empty())
    throw AssemblyError("constraint horizon does not match the model horizon");
  if (dyn.horizon != params.horizon) throw AssemblyError("condensed maps built for a different horizon");
  if (cons.planes.size() != cons.neighbor_ids.size() * static_cast<size_t>(cons.horizon) &&
      !cons.neighbor_ids.empty())
    throw AssemblyError("constraint set must hold one plane per neighbor per horizon step");
  ProblemInstance<D> inst;
  inst.x0 = x0;
  inst.target = target;
  inst.cons = cons;
  inst.params = params;
  inst.dyn = &dyn;
  inst.rho.reserve(cons.neighbor_ids.size());
  for (int id : cons.neighbor_ids) {
    auto it = rho.find(id);
    if (it == rho.end())
      throw AssemblyError("missing warning-band weight for neighbor " + std::to_string(id));
    if (!(it->second > 0.0))
      throw AssemblyError("warning-band weight must be positive for neighbor " + std::to_string(id));
    inst.rho.push_back(it->second);
  }
  dyn.free_states(x0, inst.p_free, inst.v_free);
  return inst;
}

// Predicted position/velocity at horizon step k (1-based) for stacked input u.
template <int D>
Vec<D> predicted_position(const ProblemInstance<D>& inst, const Eigen::VectorXd& u, int k) {
  return inst.p_free[static_cast<size_t>(k - 1)] +
         inst.dyn->jac_p[static_cast<size_t>(k - 1)] * u;
}

template <int D>
Vec<D> predicted_velocity(const ProblemInstance<D>& inst, const Eigen::VectorXd& u, int k) {
  return inst.v_free[static_cast<size_t>(k - 1)] +
         inst.dyn->jac_v[static_cast<size_t>(k - 1)] * u;
}

// Progress-to-target part: terminal distance plus weighted inter-step
// displacements (the step-0 displacement is input-independent and unweighted).
// Each displacement p_{k+1} - p_k equals h * v_k under the dynamics.
template <int D>
double objective_goal(const ProblemInstance<D>& inst, const Eigen::VectorXd& u) {
  const int k_max = inst.params.horizon;
  const double h2 = inst.params.h * inst.params.h;
  double c = 0.5 * inst.params.q_terminal *
             (predicted_position(inst, u, k_max) - inst.target).squaredNorm();
  for (int k = 1; k <= k_max - 1; ++k)
    c += 0.5 * inst.params.q_run[static_cast<size_t>(k - 1)] * h2 *
         predicted_velocity(inst, u, k).squaredNorm();
  return c;
}

// Warning-band part: rho * (w/eps - ln w) per neighbor, +inf outside w > 0.
template <int D>
double objective_band(const ProblemInstance<D>& inst, const std::vector<double>& w) {
  double c = 0.0;
  for (size_t j = 0; j < w.size(); ++j) {
    if (!(w[j] > 0.0)) return std::numeric_limits<double>::infinity();
    c += inst.rho[j] * (w[j] / inst.cons.eps - std::log(w[j]));
  }
  return c;
}

template <int D>
double objective(const ProblemInstance<D>& inst, const Eigen::VectorXd& u,
                 const std::vector<double>& w) {
  return objective_goal(inst, u) + objective_band(inst, w);
}

// Analytic gradient of the smooth objective in (U, w).
template <int D>
void objective_gradient(const ProblemInstance<D>& inst, const Eigen::VectorXd& u,
                        const std::vector<double>& w, Eigen::VectorXd& grad_u,
                        std::vector<double>& grad_w) {
  const int k_max = inst.params.horizon;
  const double h2 = inst.params.h * inst.params.h;
  grad_u = inst.params.q_terminal * inst.dyn->jac_p[static_cast<size_t>(k_max - 1)].transpose() *
           (predicted_position(inst, u, k_max) - inst.target);
  for (int k = 1; k <= k_max - 1; ++k)
    grad_u += inst.params.q_run[static_cast<size_t>(k - 1)] * h2 *
              (inst.dyn->jac_v[static_cast<size_t>(k - 1)].transpose() *
               predicted_velocity(inst, u, k));
  grad_w.resize(w.size());
  for (size_t j = 0; j < w.size(); ++j)
    grad_w[j] = inst.rho[j] * (1.0 / inst.cons.eps - 1.0 / w[j]);
}

enum class ConstraintKind {
  separation,      // buffered plane at a non-terminal step
  terminal_band,   // terminal plane tightened by w
  band_upper,      // w <= eps
  band_lower,      // w > 0
  input_bound,     // ||theta_a u_k|| <= a_max
  velocity_bound,  // ||theta_v v_k|| <= v_max
  terminal_rest,   // v_K = 0
};

inline const char* constraint_kind_name(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::separation: return "separation";
    case ConstraintKind::terminal_band: return "terminal_band";
    case ConstraintKind::band_upper: return "band_upper";
    case ConstraintKind::band_lower: return "band_lower";
    case ConstraintKind::input_bound: return "input_bound";
    case ConstraintKind::velocity_bound: return "velocity_bound";
    case ConstraintKind::terminal_rest: return "terminal_rest";
  }
  return "unknown";
}

struct Violation {
  ConstraintKind kind;
  int neighbor = -1;  // -1 where not applicable
  int k = 0;          // horizon step where applicable
  double amount = 0.0;
};

struct FeasibilityReport {
  bool feasible = true;
  double worst = 0.0;
  std::vector<Violation> violations;

  void add(ConstraintKind kind, int neighbor, int k, double amount, double tol) {
    if (amount > tol) {
      feasible = false;
      if (amount > worst) worst = amount;
      violations.push_back({kind, neighbor, k, amount});
    }
  }
};

// Checks every constraint of the program (including the input-independent
// first-step planes the solver treats as constants) against tolerance tol.
template <int D>
FeasibilityReport check_feasible(const ProblemInstance<D>& inst, const Eigen::VectorXd& u,
                                 const std::vector<double>& w, double tol) {
  FeasibilityReport rep;
  const int k_max = inst.params.horizon;
  const ModelParams& prm = inst.params;
  const Vec<D> theta_a = prm.theta_a_vec<D>();
  const Vec<D> theta_v = prm.theta_v_vec<D>();
  auto traj = rollout<D>(inst.x0, CondensedDynamics<D>::unstack(u), prm.h);

  const int m = inst.n_neighbors();
  if (static_cast<int>(w.size()) != m)
    throw AssemblyError("warning slack count does not match neighbor count");
  for (int j = 0; j < m; ++j) {
    const int id = inst.cons.neighbor_ids[static_cast<size_t>(j)];
    for (int k = 1; k <= k_max; ++k) {
      const HalfPlane<D>& plane = inst.cons.planes[static_cast<size_t>(j * k_max + k - 1)];
      const double s = plane.slack(traj.p[static_cast<size_t>(k - 1)]);
      if (plane.terminal)
        rep.add(ConstraintKind::terminal_band, id, k, w[static_cast<size_t>(j)] - s, tol);
      else
        rep.add(ConstraintKind::separation, id, k, -s, tol);
    }
    rep.add(ConstraintKind::band_upper, id, k_max, w[static_cast<size_t>(j)] - inst.cons.eps, tol);
    rep.add(ConstraintKind::band_lower, id, k_max, -w[static_cast<size_t>(j)], 0.0);
  }
  for (int k = 1; k <= k_max; ++k) {
    const Vec<D> uk = traj.u[static_cast<size_t>(k - 1)];
    rep.add(ConstraintKind::input_bound, -1, k,
            theta_a.cwiseProduct(uk).norm() - prm.a_max, tol);
    rep.add(ConstraintKind::velocity_bound, -1, k,
            theta_v.cwiseProduct(traj.v[static_cast<size_t>(k - 1)]).norm() - prm.v_max, tol);
  }
  rep.add(ConstraintKind::terminal_rest, -1, k_max, traj.v.back().norm(), tol);
  return rep;
}

// A feasible point handed to the solver: stacked inputs plus warning slacks.
struct WarmStartCandidate {
  Eigen::VectorXd u;
  std::vector<double> w;
};

// Shift-and-hold construction: drop the executed input, append a zero input
// (the previous plan ends at rest, so holding preserves every bound), and pick
// each warning slack as the largest value the shifted terminal position still
// satisfies, capped at eps.
template <int D>
WarmStartCandidate warm_start(const PlannedTrajectory<D>& prev_plan, const RobotState<D>& x0,
                              const ConstraintSet<D>& cons, const ModelParams& params) {
  if (prev_plan.horizon() != params.horizon)
    throw AssemblyError("previous plan horizon mismatch in warm start");
  WarmStartCandidate cand;
  std::vector<Vec<D>> u_shift(prev_plan.u.begin() + 1, prev_plan.u.end());
  u_shift.push_back(Vec<D>::Zero());
  cand.u = CondensedDynamics<D>::stack(u_shift);
  auto traj = rollout<D>(x0, u_shift, params.h);
  const Vec<D> terminal = traj.p.back();
  cand.w.reserve(cons.neighbor_ids.size());
  for (size_t j = 0; j < cons.neighbor_ids.size(); ++j) {
    const HalfPlane<D>& plane = cons.planes[j * static_cast<size_t>(cons.horizon) +
                                            static_cast<size_t>(cons.horizon - 1)];
    cand.w.push_back(std::min(cons.eps, plane.slack(terminal)));
  }
  return cand;
}

}  // namespace impc
