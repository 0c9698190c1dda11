#pragma once

#include <map>
#include <vector>

#include "impc/problem.hpp"
#include "impc/rng.hpp"
#include "impc/scenario.hpp"
#include "impc/separation.hpp"

namespace impc::test {

// A self-contained one-robot planning round against fixed neighbor plans:
// everything the solver needs, owning the condensed maps.
template <int D>
struct Round {
  ModelParams prm;
  CondensedDynamics<D> dyn;
  RobotState<D> x0;
  Vec<D> target = Vec<D>::Zero();
  PredeterminedTrajectory<D> own;
  std::map<int, PredeterminedTrajectory<D>> neighbors;
  ProblemInstance<D> inst;
  WarmStartCandidate cand;

  void assemble_all(double rho_value = 0.0) {
    const ConstraintSet<D> cons = build_constraints<D>(own, neighbors, prm);
    std::map<int, double> rho;
    for (int id : cons.neighbor_ids) rho[id] = rho_value > 0.0 ? rho_value : prm.rho0;
    inst = assemble<D>(x0, target, cons, rho, prm, dyn);
  }

  void hold_candidate() {
    PlannedTrajectory<D> hold;
    hold.u.assign(static_cast<size_t>(prm.horizon), Vec<D>::Zero());
    hold.p.assign(static_cast<size_t>(prm.horizon), x0.p);
    hold.v.assign(static_cast<size_t>(prm.horizon), Vec<D>::Zero());
    cand = warm_start<D>(hold, x0, inst.cons, prm);
  }
};

// A resting robot at `start` with stationary neighbors, all mutually beyond
// the buffered clearance, so the hold-still candidate is strictly feasible.
inline Round<2> make_static_round(const Vec<2>& start, const Vec<2>& target,
                                  const std::vector<Vec<2>>& neighbor_positions,
                                  const ModelParams& prm) {
  Round<2> rd;
  rd.prm = prm;
  rd.dyn = CondensedDynamics<2>(prm.horizon, prm.h);
  rd.x0.p = start;
  rd.x0.v = Vec<2>::Zero();
  rd.target = target;
  rd.own.p.assign(static_cast<size_t>(prm.horizon), start);
  for (size_t j = 0; j < neighbor_positions.size(); ++j) {
    PredeterminedTrajectory<2> pt;
    pt.p.assign(static_cast<size_t>(prm.horizon), neighbor_positions[j]);
    rd.neighbors[static_cast<int>(j) + 1] = pt;
  }
  rd.assemble_all();
  rd.hold_candidate();
  return rd;
}

}  // namespace impc::test
