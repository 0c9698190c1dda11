#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "impc/deadlock.hpp"
#include "impc/model.hpp"
#include "impc/scenario.hpp"
#include "impc/separation.hpp"
#include "impc/solver.hpp"

namespace impc {

// Broadcast radius beyond which another robot provably cannot interfere with
// any plan made this round: both plans stay within v_max*K*h of the current
// positions, plus the enforced clearance and both warning bands.
inline double comm_range(const ModelParams& p) {
  return 2.0 * p.v_max * static_cast<double>(p.horizon) * p.h + p.extended_clearance() +
         2.0 * p.eps;
}

struct RunConfig {
  std::string method = "impc_dr";  // "impc_dr" | "bvc"
  double deadline = 50.0;          // [s] simulated time budget
  double arrival_pos_tol = 0.05;   // [m]
  double arrival_speed_tol = 0.05; // [m/s]
  double overlap_tol = 1e-3;       // [m] terminal-freeze detection
  int overlap_depth = 2;           // trailing plan steps that must have settled
  double eta_reset_frac = 1e-3;    // w counts as at-band-edge within this fraction of eps
  double eta_max = 50.0;           // cap on the resolution gain of a persistent jam
  bool resolution_enabled = true;
  bool comm_filter = true;         // false: every robot hears every other
  SolveOptions solver;
  // Baseline detour heuristic.
  int bvc_detect_window = 3;
  double bvc_detour_factor = 2.0;    // detour offset = factor * r_min
  double bvc_clearance_factor = 0.5; // progress = factor * r_min before returning
};

struct RobotStepLog {
  std::array<double, 3> p{0.0, 0.0, 0.0};
  std::array<double, 3> v{0.0, 0.0, 0.0};
  std::array<double, 3> u{0.0, 0.0, 0.0};
  std::map<int, double> w;  // warning slack per neighbor id
  double eta = 0.0;
  bool overlap = false;
  int solver_iters = 0;
  double kkt_residual = 0.0;
  double eq_residual = 0.0;
  std::string solver_status = "optimal";
  std::string fallback_reason;  // empty unless the candidate plan was kept
  bool warm_start_ok = true;
};

struct StepLog {
  int step = 0;
  double t = 0.0;  // time of the logged states (after executing this round)
  std::vector<RobotStepLog> robots;
};

struct RunResult {
  Scenario scenario;
  RunConfig config;
  std::vector<StepLog> steps;
  bool success = false;
  double completion_time = 0.0;  // deadline sentinel on failure
  bool feasibility_violation = false;
  int infeasible_events = 0;
  int solver_fallbacks = 0;
  int deadlock_activations = 0;
  double wall_clock_s = 0.0;
};

namespace detail {

// Euclidean projection onto { x : ||theta .* (x - c)|| <= r } for a positive
// diagonal metric, via bisection on the scalar multiplier.
template <int D>
Vec<D> ellipsoid_project(const Vec<D>& z, const Vec<D>& c, const Vec<D>& theta, double r) {
  const Vec<D> diff = z - c;
  auto weighted = [&](double lambda) {
    double s = 0.0;
    for (int i = 0; i < D; ++i) {
      const double xi = diff[i] / (1.0 + lambda * theta[i] * theta[i]);
      s += theta[i] * theta[i] * xi * xi;
    }
    return s;
  };
  if (weighted(0.0) <= r * r) return z;
  double hi = 1.0;
  while (weighted(hi) > r * r) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (weighted(mid) > r * r)
      lo = mid;
    else
      hi = mid;
  }
  const double lambda = 0.5 * (lo + hi);
  Vec<D> x;
  for (int i = 0; i < D; ++i) x[i] = c[i] + diff[i] / (1.0 + lambda * theta[i] * theta[i]);
  return x;
}

template <int D>
std::array<double, 3> to_array(const Vec<D>& v) {
  std::array<double, 3> out{0.0, 0.0, 0.0};
  for (int i = 0; i < D; ++i) out[static_cast<size_t>(i)] = v[i];
  return out;
}

template <int D>
Vec<D> from_array(const std::array<double, 3>& a) {
  Vec<D> v;
  for (int i = 0; i < D; ++i) v[i] = a[static_cast<size_t>(i)];
  return v;
}

}  // namespace detail

// Synchronous lockstep simulation: every round each robot plans against the
// others' committed position sequences, then all first steps execute at once.
template <int D>
class SwarmEngine {
 public:
  SwarmEngine(const Scenario& scen, const RunConfig& cfg)
      : scen_(scen), cfg_(cfg), prm_(scen.params), dyn_(prm_.horizon, prm_.h), solver_(cfg.solver) {
    validate_scenario(scen_);
    const int n = scen_.n();
    x_.resize(static_cast<size_t>(n));
    target_.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      x_[static_cast<size_t>(i)].p = detail::from_array<D>(scen_.robots[static_cast<size_t>(i)].start);
      x_[static_cast<size_t>(i)].v = Vec<D>::Zero();
      target_[static_cast<size_t>(i)] =
          detail::from_array<D>(scen_.robots[static_cast<size_t>(i)].target);
    }
  }

  RunResult run() {
    const auto t_start = std::chrono::steady_clock::now();
    RunResult res;
    res.scenario = scen_;
    res.config = cfg_;
    if (cfg_.method == "impc_dr")
      run_impc(res);
    else if (cfg_.method == "bvc")
      run_bvc(res);
    else
      throw GenerationError("unknown method: " + cfg_.method);
    res.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
  }

 private:
  Scenario scen_;
  RunConfig cfg_;
  ModelParams prm_;
  CondensedDynamics<D> dyn_;
  BarrierSolver<D> solver_;
  std::vector<RobotState<D>> x_;
  std::vector<Vec<D>> target_;

  bool all_arrived() const {
    for (size_t i = 0; i < x_.size(); ++i) {
      if ((x_[i].p - target_[i]).norm() > cfg_.arrival_pos_tol) return false;
      if (x_[i].v.norm() > cfg_.arrival_speed_tol) return false;
    }
    return true;
  }

  std::map<int, PredeterminedTrajectory<D>> inbox_for(
      int i, const std::vector<PredeterminedTrajectory<D>>& pts, double radius) const {
    std::map<int, PredeterminedTrajectory<D>> inbox;
    for (int j = 0; j < scen_.n(); ++j) {
      if (j == i) continue;
      if (cfg_.comm_filter &&
          (x_[static_cast<size_t>(i)].p - x_[static_cast<size_t>(j)].p).norm() > radius)
        continue;
      inbox.emplace(j, pts[static_cast<size_t>(j)]);
    }
    return inbox;
  }

  void run_impc(RunResult& res) {
    const int n = scen_.n();
    const double radius = comm_range(prm_);
    std::vector<PredeterminedTrajectory<D>> pts;
    std::vector<PlannedTrajectory<D>> prev_plan(static_cast<size_t>(n));
    std::vector<DeadlockState> dl(static_cast<size_t>(n));
    pts.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      pts.push_back(init_predetermined<D>(x_[static_cast<size_t>(i)], prm_.horizon));
      // Scenarios start at rest, so holding still is the initial committed plan.
      prev_plan[static_cast<size_t>(i)].u.assign(static_cast<size_t>(prm_.horizon), Vec<D>::Zero());
      prev_plan[static_cast<size_t>(i)].p.assign(static_cast<size_t>(prm_.horizon),
                                                 x_[static_cast<size_t>(i)].p);
      prev_plan[static_cast<size_t>(i)].v.assign(static_cast<size_t>(prm_.horizon), Vec<D>::Zero());
    }

    double t = 0.0;
    int round = 0;
    while (true) {
      if (all_arrived()) {
        res.success = true;
        res.completion_time = t;
        return;
      }
      if (t >= cfg_.deadline - 1e-9) {
        res.success = false;
        res.completion_time = cfg_.deadline;
        return;
      }
      StepLog step;
      step.step = round;
      step.t = t + prm_.h;
      step.robots.resize(static_cast<size_t>(n));
      std::vector<PlannedTrajectory<D>> new_plan(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) {
        auto inbox = inbox_for(i, pts, radius);
        ConstraintSet<D> cons = build_constraints<D>(pts[static_cast<size_t>(i)], inbox, prm_);
        DeadlockState& ds = dl[static_cast<size_t>(i)];
        // Gain update from last round's verdicts before this round's weights.
        if (cfg_.resolution_enabled) {
          bool all_at_eps = true;
          for (const auto& [id, wv] : ds.last_w)
            if (prm_.eps - wv > cfg_.eta_reset_frac * prm_.eps) all_at_eps = false;
          const double eta_new =
              std::min(update_eta(ds.eta, ds.overlap, all_at_eps, prm_.delta_eta), cfg_.eta_max);
          if (eta_new > ds.eta) ++res.deadlock_activations;
          ds.eta = eta_new;
        }
        std::map<int, double> rho;
        for (const auto& [id, pt] : inbox) {
          const double ang = signed_angle_xy<D>(pts[static_cast<size_t>(i)].p.back(),
                                                target_[static_cast<size_t>(i)], pt.p.back());
          rho[id] = repulsion_coeff(prm_.rho0, ds.eta, std::sin(ang));
        }
        ProblemInstance<D> inst = assemble<D>(x_[static_cast<size_t>(i)],
                                              target_[static_cast<size_t>(i)], cons, rho, prm_, dyn_);
        WarmStartCandidate cand =
            warm_start<D>(prev_plan[static_cast<size_t>(i)], x_[static_cast<size_t>(i)], cons, prm_);
        FeasibilityReport rep = check_feasible<D>(inst, cand.u, cand.w, cfg_.solver.feas_tol);
        RobotStepLog& log = step.robots[static_cast<size_t>(i)];
        log.warm_start_ok = rep.feasible;
        if (!rep.feasible) {
          // The shifted previous plan must stay feasible by construction; a
          // violation means the safety argument broke down. Stop loudly.
          res.feasibility_violation = true;
          res.success = false;
          res.completion_time = cfg_.deadline;
          std::fprintf(stderr,
                       "recursive feasibility violated: robot %d at t=%.3f, worst violation "
                       "%.3e (%s)\n",
                       i, t, rep.worst,
                       rep.violations.empty()
                           ? "?"
                           : constraint_kind_name(rep.violations.front().kind));
          for (int r = 0; r < n; ++r) {
            step.robots[static_cast<size_t>(r)].p = detail::to_array<D>(x_[static_cast<size_t>(r)].p);
            step.robots[static_cast<size_t>(r)].v = detail::to_array<D>(x_[static_cast<size_t>(r)].v);
          }
          res.steps.push_back(step);
          return;
        }
        Solution<D> sol = solver_.solve(inst, cand);
        if (sol.status == SolveStatus::infeasible) ++res.infeasible_events;
        if (sol.status != SolveStatus::optimal) ++res.solver_fallbacks;
        // Detection compares this round's terminal against last round's; the
        // two warm-up rounds lack meaningful history.
        const bool overlap =
            round >= 2 &&
            detect_terminal_overlap<D>(sol.traj.p, prev_plan[static_cast<size_t>(i)].p.back(),
                                       target_[static_cast<size_t>(i)], cfg_.overlap_tol,
                                       cfg_.arrival_pos_tol, cfg_.overlap_depth);
        ds.overlap = overlap;
        ds.last_w = sol.w_by_neighbor;
        // Terminal force balance diagnostic.
        std::vector<NeighborForce<D>> forces;
        forces.reserve(inst.cons.neighbor_ids.size());
        for (size_t j = 0; j < inst.cons.neighbor_ids.size(); ++j) {
          NeighborForce<D> f;
          f.normal = inst.cons.planes[j * static_cast<size_t>(prm_.horizon) +
                                      static_cast<size_t>(prm_.horizon - 1)]
                         .normal;
          f.rho = inst.rho[j];
          f.w = sol.w[j];
          forces.push_back(f);
        }
        log.eq_residual = equilibrium_residual<D>(sol.traj.p.back(), target_[static_cast<size_t>(i)],
                                                  prm_.q_terminal, prm_.eps, forces)
                              .norm();
        log.w = sol.w_by_neighbor;
        log.eta = ds.eta;
        log.overlap = overlap;
        log.solver_iters = sol.newton_iters;
        log.kkt_residual = sol.kkt_residual;
        log.solver_status = to_string(sol.status);
        log.fallback_reason = sol.fallback_reason;
        new_plan[static_cast<size_t>(i)] = sol.traj;
      }
      // Synchronous execution of every robot's first planned step.
      for (int i = 0; i < n; ++i) {
        const PlannedTrajectory<D>& plan = new_plan[static_cast<size_t>(i)];
        RobotStepLog& log = step.robots[static_cast<size_t>(i)];
        log.u = detail::to_array<D>(plan.u.front());
        x_[static_cast<size_t>(i)].p = plan.p.front();
        x_[static_cast<size_t>(i)].v = plan.v.front();
        log.p = detail::to_array<D>(x_[static_cast<size_t>(i)].p);
        log.v = detail::to_array<D>(x_[static_cast<size_t>(i)].v);
        pts[static_cast<size_t>(i)] = shift_predetermined<D>(plan);
        prev_plan[static_cast<size_t>(i)] = plan;
      }
      res.steps.push_back(std::move(step));
      t += prm_.h;
      ++round;
    }
  }

  struct BvcState {
    bool detour = false;
    Vec<D> detour_target = Vec<D>::Zero();
    double dist_at_start = 0.0;
    int static_count = 0;
  };

  // Maximal-braking input sequence: decelerate at the acceleration bound until
  // rest, then hold. Fallback start for the baseline when the shifted previous
  // plan no longer fits the refreshed cell.
  Eigen::VectorXd brake_inputs(const RobotState<D>& x0) const {
    std::vector<Vec<D>> u(static_cast<size_t>(prm_.horizon), Vec<D>::Zero());
    Vec<D> v = x0.v;
    const Vec<D> theta_a = prm_.theta_a_vec<D>();
    for (int k = 0; k < prm_.horizon; ++k) {
      const double speed = v.norm();
      if (speed <= 1e-12) break;
      const Vec<D> dir = v / speed;
      const double dec = std::min(speed / prm_.h, prm_.a_max / theta_a.cwiseProduct(dir).norm());
      u[static_cast<size_t>(k)] = -dec * dir;
      v += prm_.h * u[static_cast<size_t>(k)];
    }
    return CondensedDynamics<D>::stack(u);
  }

  // Baseline: the same horizon program and kinematic limits, but every planned
  // position is confined to the cell built from current positions only (plain
  // buffer r_min, one fixed plane per neighbor for the whole horizon) and the
  // band slack is uncoupled. Stuck robots swap in a right-hand detour target.
  void run_bvc(RunResult& res) {
    const int n = scen_.n();
    const double radius = comm_range(prm_);
    std::vector<BvcState> bvc(static_cast<size_t>(n));
    std::vector<PlannedTrajectory<D>> prev_plan(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      prev_plan[static_cast<size_t>(i)].u.assign(static_cast<size_t>(prm_.horizon), Vec<D>::Zero());
      prev_plan[static_cast<size_t>(i)].p.assign(static_cast<size_t>(prm_.horizon),
                                                 x_[static_cast<size_t>(i)].p);
      prev_plan[static_cast<size_t>(i)].v.assign(static_cast<size_t>(prm_.horizon), Vec<D>::Zero());
    }
    double t = 0.0;
    int round = 0;
    while (true) {
      if (all_arrived()) {
        res.success = true;
        res.completion_time = t;
        return;
      }
      if (t >= cfg_.deadline - 1e-9) {
        res.success = false;
        res.completion_time = cfg_.deadline;
        return;
      }
      StepLog step;
      step.step = round;
      step.t = t + prm_.h;
      step.robots.resize(static_cast<size_t>(n));
      std::vector<PlannedTrajectory<D>> new_plan(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) {
        const Vec<D>& p_now = x_[static_cast<size_t>(i)].p;
        ConstraintSet<D> cons;
        cons.horizon = prm_.horizon;
        cons.eps = prm_.eps;
        std::map<int, double> rho;
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          if (cfg_.comm_filter && (p_now - x_[static_cast<size_t>(j)].p).norm() > radius) continue;
          HalfPlane<D> pl = bvc_halfplane<D>(p_now, x_[static_cast<size_t>(j)].p, prm_.r_min, j);
          cons.neighbor_ids.push_back(j);
          for (int k = 1; k <= prm_.horizon; ++k) {
            pl.k = k;
            cons.planes.push_back(pl);
          }
          rho[j] = prm_.rho0;
        }
        const BvcState& bs = bvc[static_cast<size_t>(i)];
        const Vec<D> goal = bs.detour ? bs.detour_target : target_[static_cast<size_t>(i)];
        ProblemInstance<D> inst =
            assemble<D>(x_[static_cast<size_t>(i)], goal, cons, rho, prm_, dyn_);
        WarmStartCandidate cand =
            warm_start<D>(prev_plan[static_cast<size_t>(i)], x_[static_cast<size_t>(i)], cons, prm_);
        // No plane is band-tightened here, so the slack only has to sit
        // strictly inside its own bounds.
        cand.w.assign(cons.neighbor_ids.size(), 0.5 * prm_.eps);
        RobotStepLog& log = step.robots[static_cast<size_t>(i)];
        FeasibilityReport rep = check_feasible<D>(inst, cand.u, cand.w, cfg_.solver.feas_tol);
        log.warm_start_ok = rep.feasible;
        if (!rep.feasible) {
          cand.u = brake_inputs(x_[static_cast<size_t>(i)]);
          rep = check_feasible<D>(inst, cand.u, cand.w, cfg_.solver.feas_tol);
        }
        if (!rep.feasible) {
          // Momentum carries the robot out of every plan that fits the new
          // cell — the program is infeasible, which ends the task.
          ++res.infeasible_events;
          res.success = false;
          res.completion_time = cfg_.deadline;
          log.solver_status = "infeasible";
          for (int r = 0; r < n; ++r) {
            step.robots[static_cast<size_t>(r)].p = detail::to_array<D>(x_[static_cast<size_t>(r)].p);
            step.robots[static_cast<size_t>(r)].v = detail::to_array<D>(x_[static_cast<size_t>(r)].v);
          }
          res.steps.push_back(step);
          return;
        }
        Solution<D> sol = solver_.solve(inst, cand);
        if (sol.status != SolveStatus::optimal) ++res.solver_fallbacks;
        log.solver_iters = sol.newton_iters;
        log.kkt_residual = sol.kkt_residual;
        log.solver_status = to_string(sol.status);
        log.fallback_reason = sol.fallback_reason;
        new_plan[static_cast<size_t>(i)] = sol.traj;
      }
      for (int i = 0; i < n; ++i) {
        const PlannedTrajectory<D>& plan = new_plan[static_cast<size_t>(i)];
        RobotStepLog& log = step.robots[static_cast<size_t>(i)];
        log.u = detail::to_array<D>(plan.u.front());
        x_[static_cast<size_t>(i)].p = plan.p.front();
        x_[static_cast<size_t>(i)].v = plan.v.front();
        log.p = detail::to_array<D>(x_[static_cast<size_t>(i)].p);
        log.v = detail::to_array<D>(x_[static_cast<size_t>(i)].v);
        prev_plan[static_cast<size_t>(i)] = plan;
        update_bvc_state(i, bvc[static_cast<size_t>(i)]);
      }
      res.steps.push_back(std::move(step));
      t += prm_.h;
      ++round;
    }
  }

  void update_bvc_state(int i, BvcState& bs) {
    const Vec<D>& p = x_[static_cast<size_t>(i)].p;
    const Vec<D>& v = x_[static_cast<size_t>(i)].v;
    const Vec<D>& goal = target_[static_cast<size_t>(i)];
    const bool arrived = (p - goal).norm() <= cfg_.arrival_pos_tol &&
                         v.norm() <= cfg_.arrival_speed_tol;
    if (bs.detour) {
      const double progress = bs.dist_at_start - (p - bs.detour_target).norm();
      if (progress >= cfg_.bvc_clearance_factor * prm_.r_min) {
        bs.detour = false;
        bs.static_count = 0;
      }
      return;
    }
    if (v.norm() <= cfg_.arrival_speed_tol && !arrived)
      ++bs.static_count;
    else
      bs.static_count = 0;
    if (bs.static_count >= cfg_.bvc_detect_window) {
      // Right-hand sidestep: aim perpendicular to the goal direction.
      const Vec<D> dir = goal - p;
      Vec<D> perp = Vec<D>::Zero();
      const double nx = dir[0], ny = dir[1];
      const double len = std::hypot(nx, ny);
      if (len > 1e-9) {
        perp[0] = ny / len;
        perp[1] = -nx / len;
      } else {
        perp[0] = 1.0;
      }
      bs.detour = true;
      bs.detour_target = p + cfg_.bvc_detour_factor * prm_.r_min * perp;
      bs.dist_at_start = (p - bs.detour_target).norm();
      bs.static_count = 0;
    }
  }
};

// Runs a scenario with the requested configuration, dispatching on dimension.
inline RunResult run_scenario(const Scenario& scen, const RunConfig& cfg) {
  if (scen.d == 2) return SwarmEngine<2>(scen, cfg).run();
  if (scen.d == 3) return SwarmEngine<3>(scen, cfg).run();
  throw GenerationError("unsupported dimension: " + std::to_string(scen.d));
}

}  // namespace impc
