#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "impc/problem.hpp"
#include "impc/rng.hpp"
#include "impc/scenario.hpp"
#include "impc/solver.hpp"
#include "oracles.hpp"

using namespace impc;
using impc::test::Round;
using impc::test::make_static_round;

namespace {

Eigen::VectorXd stack_inputs(const PlannedTrajectory<2>& traj) {
  return CondensedDynamics<2>::stack(traj.u);
}

}  // namespace

TEST_CASE("solver matches a dense KKT solve when only the rest constraint is active") {
  const impc::test::KktAgreement ag = impc::test::compare_solver_to_kkt();
  // The reference must not touch the cone bounds, or the comparison is moot.
  REQUIRE(ag.reference_interior);
  CHECK(ag.optimal);
  CHECK(ag.fallback_free);
  CHECK(ag.kkt_residual < 1e-6);
  CHECK(ag.worst_u < 1e-4);
  CHECK(ag.worst_p < 1e-5);
  CHECK(ag.objective_gap_rel < 1e-5);
  CHECK(ag.feasible);
}

TEST_CASE("solver tracks an independent dense barrier method through active planes") {
  const impc::test::SolverAgreement ag = impc::test::compare_solver_to_dense_reference();
  REQUIRE(ag.cases == 3);
  CHECK(ag.fallback_free);
  CHECK(ag.worst_objective_rel < 1e-5);
  CHECK(ag.worst_p < 1e-5);
  CHECK(ag.worst_w < 1e-6);
  // At the default (much smaller) final weight the true objective can only
  // improve, and the result must satisfy every original constraint.
  CHECK(ag.worst_regression <= 1e-9);
  CHECK(ag.all_feasible);
}

TEST_CASE("a violated input-independent first plane falls back to the candidate") {
  const ModelParams prm = preset("2d_typical").params;
  Vec<2> start, target, nbr;
  start << 0.0, 0.0;
  target << 1.0, 0.0;
  nbr << 0.5, 0.0;
  Round<2> rd = make_static_round(start, target, {nbr}, prm);
  rd.x0.v << 1.0, 0.0;  // next position is 0.2 regardless of input: past the plane
  rd.assemble_all();

  BarrierSolver<2> solver;
  const Solution<2> sol = solver.solve(rd.inst, rd.cand);
  CHECK(sol.status == SolveStatus::infeasible);
  CHECK(sol.fallback_reason == "start_infeasible");
  // The returned plan is the candidate itself, rolled out from the true state.
  const Eigen::VectorXd u_sol = stack_inputs(sol.traj);
  CHECK((u_sol - rd.cand.u).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("repeated solves of one instance are bitwise identical") {
  const ModelParams prm = preset("2d_crowded").params;
  Vec<2> start, target, n1, n2;
  start << -0.4, 0.05;
  target << 0.5, -0.1;
  n1 << 0.2, 0.15;
  n2 << 0.1, -0.45;
  Round<2> rd = make_static_round(start, target, {n1, n2}, prm);
  BarrierSolver<2> solver;
  const Solution<2> a = solver.solve(rd.inst, rd.cand);
  const Solution<2> b = solver.solve(rd.inst, rd.cand);
  REQUIRE(a.traj.u.size() == b.traj.u.size());
  for (size_t k = 0; k < a.traj.u.size(); ++k) {
    CHECK(a.traj.u[k][0] == b.traj.u[k][0]);
    CHECK(a.traj.u[k][1] == b.traj.u[k][1]);
  }
  REQUIRE(a.w.size() == b.w.size());
  for (size_t j = 0; j < a.w.size(); ++j) CHECK(a.w[j] == b.w[j]);
  CHECK(a.objective == b.objective);
  CHECK(a.newton_iters == b.newton_iters);
}

TEST_CASE("random congested rounds solve to optimal, feasible, no-regression points") {
  Rng rng(11);
  const ModelParams prm = preset("2d_typical").params;
  BarrierSolver<2> solver;
  for (int trial = 0; trial < 25; ++trial) {
    Vec<2> start, target;
    start << rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3);
    target << rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9);
    std::vector<Vec<2>> nbrs;
    const int m = 1 + static_cast<int>(rng.raw() % 3);
    for (int j = 0; j < m; ++j) {
      const double ang = rng.uniform(0.0, 2.0 * M_PI);
      const double dist = rng.uniform(0.45, 1.0);
      nbrs.emplace_back(start[0] + dist * std::cos(ang), start[1] + dist * std::sin(ang));
    }
    Round<2> rd = make_static_round(start, target, nbrs, prm);
    const Solution<2> sol = solver.solve(rd.inst, rd.cand);
    CAPTURE(trial, sol.fallback_reason);
    REQUIRE(sol.fallback_reason.empty());
    CHECK(sol.status == SolveStatus::optimal);
    CHECK(sol.kkt_residual < 1e-6);
    CHECK(sol.objective <= objective<2>(rd.inst, rd.cand.u, rd.cand.w) + 1e-9);
    CHECK(check_feasible<2>(rd.inst, stack_inputs(sol.traj), sol.w, 1e-7).feasible);
    for (double wj : sol.w) {
      CHECK(wj > 0.0);
      CHECK(wj <= prm.eps + 1e-12);
    }
  }
}
