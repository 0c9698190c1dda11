#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "impc/problem.hpp"

namespace impc {

enum class SolveStatus { optimal, max_iterations, infeasible };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

struct SolveOptions {
  double mu0 = 1.0;         // initial barrier weight
  double mu_factor = 0.1;   // per-stage shrink
  double mu_min = 1e-8;     // final barrier weight
  int max_newton_total = 400;
  int max_newton_per_stage = 100;
  double ls_alpha = 0.25;  // sufficient-decrease fraction
  double ls_beta = 0.5;    // backtracking shrink
  double feas_tol = 1e-7;
  double kkt_tol = 1e-7;
  double nudge_frac = 1e-3;  // interior margin sought when re-centering the start
};

template <int D>
struct Solution {
  PlannedTrajectory<D> traj;
  std::vector<double> w;  // aligned with the instance's neighbor ids
  std::map<int, double> w_by_neighbor;
  double objective = std::numeric_limits<double>::infinity();
  SolveStatus status = SolveStatus::max_iterations;
  double kkt_residual = std::numeric_limits<double>::infinity();
  int newton_iters = 0;
  double mu_final = 0.0;
  // Set when the returned plan is the shift-and-hold candidate rather than a
  // solver iterate: "start_infeasible", "interior_start", or "worse_than_candidate".
  std::string fallback_reason;
};

// Minimizes the per-round program by following the log-barrier central path on
// the reduced variables (inputs parametrized over the terminal-rest null space,
// plus the warning slacks). The first-step separating planes are
// input-independent constants, so they are verified rather than solved for.
template <int D>
class BarrierSolver {
 public:
  SolveOptions opts;

  explicit BarrierSolver(SolveOptions o = {}) : opts(o) {}

  Solution<D> solve(const ProblemInstance<D>& inst, const WarmStartCandidate& cand) {
    bind(inst);
    Solution<D> sol;
    sol.mu_final = opts.mu_min;

    // Input-independent planes: if the current state already violates one, no
    // input can fix it this round.
    for (int j = 0; j < m_; ++j) {
      const HalfPlane<D>& p1 = plane(j, 1);
      if (!p1.terminal && p1.slack(inst.p_free[0]) < -opts.feas_tol)
        return finish_with_candidate(cand, SolveStatus::infeasible, "start_infeasible", sol);
    }

    // Strictly interior start built from the candidate.
    Eigen::VectorXd u = project_terminal_rest(cand.u);
    if (!nudge_interior(u))
      return finish_with_candidate(cand, SolveStatus::max_iterations, "interior_start", sol);
    std::vector<double> w = centered_band_start(u);

    Eigen::VectorXd y = null_.transpose() * (u - u_part_);
    bool budget_ok = true;
    double mu = opts.mu0;
    while (true) {
      const bool final_stage = mu <= opts.mu_min * 1.0000001;
      budget_ok = newton_stage(y, w, mu, final_stage, sol.newton_iters);
      if (!budget_ok || final_stage) break;
      mu = std::max(mu * opts.mu_factor, opts.mu_min);
    }

    // Final diagnostics at the best point reached.
    Eigen::VectorXd u_fin = u_part_ + null_ * y;
    sol.kkt_residual = kkt_residual(u_fin, w, opts.mu_min);
    sol.objective = objective(inst, u_fin, w);
    const double cand_objective = objective(inst, cand.u, cand.w);
    if (!(sol.objective <= cand_objective + 1e-9))
      return finish_with_candidate(cand, SolveStatus::max_iterations, "worse_than_candidate", sol);
    sol.status = (budget_ok && sol.kkt_residual <= opts.kkt_tol) ? SolveStatus::optimal
                                                                 : SolveStatus::max_iterations;
    sol.traj = rollout<D>(inst.x0, CondensedDynamics<D>::unstack(u_fin), inst.params.h);
    sol.w = w;
    for (int j = 0; j < m_; ++j)
      sol.w_by_neighbor[inst.cons.neighbor_ids[static_cast<size_t>(j)]] =
          w[static_cast<size_t>(j)];
    return sol;
  }

 private:
  const ProblemInstance<D>* inst_ = nullptr;
  int k_ = 0, nu_ = 0, ny_ = 0, m_ = 0, n_ = 0, nfull_ = 0;
  Eigen::VectorXd u_part_;
  Eigen::MatrixXd null_;
  Eigen::MatrixXd hess_goal_;  // constant objective Hessian over stacked inputs
  Vec<D> th_a2_, th_v2_;       // squared metric diagonals
  double amax2_ = 0.0, vmax2_ = 0.0;

  // Scratch reused across iterations.
  std::vector<Vec<D>> p_, v_;
  std::vector<double> s_sep_, s_term_, s_wu_, s_in_, s_vel_;
  Eigen::MatrixXd hess_, hess_red_;
  Eigen::VectorXd grad_, grad_red_, dir_red_, gtmp_;

  const HalfPlane<D>& plane(int j, int k) const {
    return inst_->cons.planes[static_cast<size_t>(j * k_ + k - 1)];
  }

  void bind(const ProblemInstance<D>& inst) {
    inst_ = &inst;
    k_ = inst.params.horizon;
    nu_ = k_ * D;
    ny_ = (k_ - 1) * D;
    m_ = inst.n_neighbors();
    n_ = ny_ + m_;
    nfull_ = nu_ + m_;
    u_part_ = inst.dyn->particular_input(inst.x0);
    null_ = inst.dyn->null_basis;
    const Vec<D> ta = inst.params.template theta_a_vec<D>();
    const Vec<D> tv = inst.params.template theta_v_vec<D>();
    th_a2_ = ta.cwiseProduct(ta);
    th_v2_ = tv.cwiseProduct(tv);
    amax2_ = inst.params.a_max * inst.params.a_max;
    vmax2_ = inst.params.v_max * inst.params.v_max;
    p_.resize(static_cast<size_t>(k_));
    v_.resize(static_cast<size_t>(k_));
    s_sep_.assign(static_cast<size_t>(m_ * std::max(k_ - 2, 0)), 0.0);
    s_term_.assign(static_cast<size_t>(m_), 0.0);
    s_wu_.assign(static_cast<size_t>(m_), 0.0);
    s_in_.assign(static_cast<size_t>(k_), 0.0);
    s_vel_.assign(static_cast<size_t>(std::max(k_ - 1, 0)), 0.0);
    hess_goal_.setZero(nu_, nu_);
    for (int kk = 1; kk <= k_; ++kk) {
      const double q = (kk == k_) ? inst.params.q_terminal : 0.0;
      if (q != 0.0)
        hess_goal_ += q * inst.dyn->jac_p[static_cast<size_t>(kk - 1)].transpose() *
                      inst.dyn->jac_p[static_cast<size_t>(kk - 1)];
      if (kk <= k_ - 1) {
        const double qr = inst.params.q_run[static_cast<size_t>(kk - 1)] * inst.params.h *
                          inst.params.h;
        hess_goal_ += qr * inst.dyn->jac_v[static_cast<size_t>(kk - 1)].transpose() *
                      inst.dyn->jac_v[static_cast<size_t>(kk - 1)];
      }
    }
  }

  Eigen::VectorXd project_terminal_rest(const Eigen::VectorXd& u) const {
    return u_part_ + null_ * (null_.transpose() * (u - u_part_));
  }

  void compute_states(const Eigen::VectorXd& u) {
    for (int kk = 1; kk <= k_; ++kk) {
      p_[static_cast<size_t>(kk - 1)] = inst_->p_free[static_cast<size_t>(kk - 1)] +
                                        inst_->dyn->jac_p[static_cast<size_t>(kk - 1)] * u;
      v_[static_cast<size_t>(kk - 1)] = inst_->v_free[static_cast<size_t>(kk - 1)] +
                                        inst_->dyn->jac_v[static_cast<size_t>(kk - 1)] * u;
    }
  }

  // Fills every barrier slack; returns the minimum scale-normalized slack
  // (negative or zero means the point is not strictly interior).
  double compute_slacks(const Eigen::VectorXd& u, const std::vector<double>& w) {
    compute_states(u);
    const double eps = inst_->cons.eps;
    double worst = std::numeric_limits<double>::infinity();
    for (int j = 0; j < m_; ++j) {
      for (int kk = 2; kk <= k_ - 1; ++kk) {
        const double s = plane(j, kk).slack(p_[static_cast<size_t>(kk - 1)]);
        s_sep_[static_cast<size_t>(j * (k_ - 2) + kk - 2)] = s;
        worst = std::min(worst, s / eps);
      }
      const double st = plane(j, k_).slack(p_[static_cast<size_t>(k_ - 1)]) -
                        (w.empty() ? 0.0 : w[static_cast<size_t>(j)]);
      s_term_[static_cast<size_t>(j)] = st;
      worst = std::min(worst, st / eps);
      if (!w.empty()) {
        const double su = eps - w[static_cast<size_t>(j)];
        s_wu_[static_cast<size_t>(j)] = su;
        worst = std::min(worst, su / eps);
        worst = std::min(worst, w[static_cast<size_t>(j)] / eps);
      }
    }
    for (int kk = 0; kk < k_; ++kk) {
      const Vec<D> uk = u.segment(kk * D, D);
      const double s = amax2_ - uk.dot(th_a2_.cwiseProduct(uk));
      s_in_[static_cast<size_t>(kk)] = s;
      worst = std::min(worst, s / amax2_);
    }
    for (int kk = 1; kk <= k_ - 1; ++kk) {
      const Vec<D>& vk = v_[static_cast<size_t>(kk - 1)];
      const double s = vmax2_ - vk.dot(th_v2_.cwiseProduct(vk));
      s_vel_[static_cast<size_t>(kk - 1)] = s;
      worst = std::min(worst, s / vmax2_);
    }
    return worst;
  }

  // Barrier merit at (u, w); +inf outside the strict interior.
  double eval_merit(const Eigen::VectorXd& u, const std::vector<double>& w, double mu) {
    if (!(compute_slacks(u, w) > 0.0)) return std::numeric_limits<double>::infinity();
    double f = objective(*inst_, u, w);
    for (double s : s_sep_) f -= mu * std::log(s);
    for (double s : s_term_) f -= mu * std::log(s);
    for (double s : s_wu_) f -= mu * std::log(s);
    for (double s : s_in_) f -= mu * std::log(s);
    for (double s : s_vel_) f -= mu * std::log(s);
    return f;
  }

  // Gradient and Hessian of the barrier merit over (U, w), assembled at the
  // point whose states/slacks are already in the scratch arrays.
  void assemble(const Eigen::VectorXd& u, const std::vector<double>& w, double mu) {
    const ModelParams& prm = inst_->params;
    const double h = prm.h;
    grad_.setZero(nfull_);
    hess_.setZero(nfull_, nfull_);
    hess_.topLeftCorner(nu_, nu_) = hess_goal_;

    grad_.head(nu_) = prm.q_terminal * inst_->dyn->jac_p[static_cast<size_t>(k_ - 1)].transpose() *
                      (p_[static_cast<size_t>(k_ - 1)] - inst_->target);
    for (int kk = 1; kk <= k_ - 1; ++kk)
      grad_.head(nu_) += prm.q_run[static_cast<size_t>(kk - 1)] * h * h *
                         (inst_->dyn->jac_v[static_cast<size_t>(kk - 1)].transpose() *
                          v_[static_cast<size_t>(kk - 1)]);

    const double eps = inst_->cons.eps;
    gtmp_.setZero(nfull_);
    for (int j = 0; j < m_; ++j) {
      // Band terms (objective plus the w <= eps barrier).
      const double wj = w[static_cast<size_t>(j)];
      grad_[nu_ + j] += inst_->rho[static_cast<size_t>(j)] * (1.0 / eps - 1.0 / wj) +
                        mu / s_wu_[static_cast<size_t>(j)];
      hess_(nu_ + j, nu_ + j) += inst_->rho[static_cast<size_t>(j)] / (wj * wj) +
                                 mu / (s_wu_[static_cast<size_t>(j)] * s_wu_[static_cast<size_t>(j)]);
      // Interior separating planes.
      for (int kk = 2; kk <= k_ - 1; ++kk) {
        const double s = s_sep_[static_cast<size_t>(j * (k_ - 2) + kk - 2)];
        const HalfPlane<D>& pl = plane(j, kk);
        const int prefix = (kk - 1) * D;
        gtmp_.head(prefix).setZero();
        for (int mm = 0; mm + 2 <= kk; ++mm)
          gtmp_.segment(mm * D, D) = (h * h * static_cast<double>(kk - 1 - mm)) * pl.normal;
        grad_.head(prefix) -= (mu / s) * gtmp_.head(prefix);
        hess_.topLeftCorner(prefix, prefix)
            .template selfadjointView<Eigen::Lower>()
            .rankUpdate(gtmp_.head(prefix), mu / (s * s));
      }
      // Terminal plane tightened by w_j.
      {
        const double s = s_term_[static_cast<size_t>(j)];
        const HalfPlane<D>& pl = plane(j, k_);
        gtmp_.setZero();
        for (int mm = 0; mm + 2 <= k_; ++mm)
          gtmp_.segment(mm * D, D) = (h * h * static_cast<double>(k_ - 1 - mm)) * pl.normal;
        gtmp_[nu_ + j] = -1.0;
        grad_ -= (mu / s) * gtmp_;
        hess_.template selfadjointView<Eigen::Lower>().rankUpdate(gtmp_, mu / (s * s));
        gtmp_[nu_ + j] = 0.0;
      }
    }
    for (int kk = 0; kk < k_; ++kk) {
      const double s = s_in_[static_cast<size_t>(kk)];
      const Vec<D> tu = th_a2_.cwiseProduct(Vec<D>(u.segment(kk * D, D)));
      grad_.segment(kk * D, D) += (2.0 * mu / s) * tu;
      Eigen::Matrix<double, D, D> ublk = (4.0 * mu / (s * s)) * tu * tu.transpose();
      for (int i = 0; i < D; ++i) ublk(i, i) += 2.0 * mu / s * th_a2_[i];
      hess_.block(kk * D, kk * D, D, D) += ublk;
    }
    for (int kk = 1; kk <= k_ - 1; ++kk) {
      const double s = s_vel_[static_cast<size_t>(kk - 1)];
      const Vec<D> tv = th_v2_.cwiseProduct(v_[static_cast<size_t>(kk - 1)]);
      Eigen::Matrix<double, D, D> wblk =
          (4.0 * h * h * mu / (s * s)) * tv * tv.transpose();
      for (int i = 0; i < D; ++i) wblk(i, i) += 2.0 * h * h * mu / s * th_v2_[i];
      for (int mm = 0; mm < kk; ++mm) {
        grad_.segment(mm * D, D) += (2.0 * h * mu / s) * tv;
        for (int mp = 0; mp <= mm; ++mp) hess_.block(mm * D, mp * D, D, D) += wblk;
      }
    }
    // Mirror the accumulated lower triangle.
    hess_.template triangularView<Eigen::StrictlyUpper>() = hess_.transpose();
  }

  void reduce() {
    grad_red_.resize(n_);
    grad_red_.head(ny_) = null_.transpose() * grad_.head(nu_);
    grad_red_.tail(m_) = grad_.tail(m_);
    hess_red_.resize(n_, n_);
    hess_red_.topLeftCorner(ny_, ny_) =
        null_.transpose() * hess_.topLeftCorner(nu_, nu_) * null_;
    if (m_ > 0) {
      hess_red_.topRightCorner(ny_, m_) = null_.transpose() * hess_.topRightCorner(nu_, m_);
      hess_red_.bottomLeftCorner(m_, ny_) = hess_red_.topRightCorner(ny_, m_).transpose();
      hess_red_.bottomRightCorner(m_, m_) = hess_.bottomRightCorner(m_, m_);
    }
  }

  // One barrier stage: Newton iterations with backtracking line search.
  // Returns false when the total iteration budget is exhausted.
  bool newton_stage(Eigen::VectorXd& y, std::vector<double>& w, double mu, bool final_stage,
                    int& iters_total) {
    const double stage_tol = final_stage ? 1e-16 : 0.01 * mu;
    const double grad_target = final_stage ? 0.5 * opts.kkt_tol : 0.0;
    double best_grad = std::numeric_limits<double>::infinity();
    int stalled = 0;
    Eigen::VectorXd u = u_part_ + null_ * y;
    double merit = eval_merit(u, w, mu);
    for (int it = 0; it < opts.max_newton_per_stage; ++it) {
      if (iters_total >= opts.max_newton_total) return false;
      assemble(u, w, mu);
      reduce();
      const double gnorm = grad_red_.lpNorm<Eigen::Infinity>();
      if (final_stage) {
        if (gnorm <= grad_target) return true;
        if (gnorm < 0.9 * best_grad) {
          best_grad = gnorm;
          stalled = 0;
        } else if (++stalled >= 6) {
          return true;  // gradient no longer improving: float noise floor
        }
      }
      double ridge = 0.0;
      Eigen::LLT<Eigen::MatrixXd> llt;
      for (int attempt = 0; attempt < 12; ++attempt) {
        Eigen::MatrixXd hr = hess_red_;
        if (ridge > 0.0) hr.diagonal().array() += ridge;
        llt.compute(hr);
        if (llt.info() == Eigen::Success) {
          dir_red_ = -llt.solve(grad_red_);
          if (grad_red_.dot(dir_red_) < 0.0) break;
        }
        ridge = (ridge == 0.0) ? 1e-10 * hess_red_.diagonal().maxCoeff() : ridge * 100.0;
        dir_red_.setZero();
      }
      const double decrement = -grad_red_.dot(dir_red_);
      if (!(decrement > 0.0)) return true;  // no usable direction left
      if (0.5 * decrement <= stage_tol && !final_stage) return true;
      ++iters_total;
      // Backtracking line search on the merit (infeasible trials are +inf).
      double t = 1.0;
      bool moved = false;
      Eigen::VectorXd y_try(ny_);
      std::vector<double> w_try(w.size());
      for (int ls = 0; ls < 60; ++ls) {
        y_try = y + t * dir_red_.head(ny_);
        for (int j = 0; j < m_; ++j)
          w_try[static_cast<size_t>(j)] = w[static_cast<size_t>(j)] + t * dir_red_[ny_ + j];
        const Eigen::VectorXd u_try = u_part_ + null_ * y_try;
        const double merit_try = eval_merit(u_try, w_try, mu);
        if (merit_try <= merit - opts.ls_alpha * t * decrement) {
          y = y_try;
          w = w_try;
          u = u_try;
          merit = merit_try;
          moved = true;
          break;
        }
        t *= opts.ls_beta;
      }
      if (!moved) return true;  // line search exhausted: accept current point
      if (0.5 * decrement <= stage_tol && final_stage) {
        compute_slacks(u, w);
        return true;
      }
    }
    compute_slacks(u, w);
    return true;
  }

  // Stationarity of the original program at (u, w): multipliers start from the
  // barrier estimates mu/s and the strongly active ones are refined by least
  // squares (the barrier estimates alone carry an O(mu/s^2) float noise floor).
  double kkt_residual(const Eigen::VectorXd& u, const std::vector<double>& w, double mu) {
    if (!(compute_slacks(u, w) > 0.0)) return std::numeric_limits<double>::infinity();
    assemble(u, w, mu);
    reduce();
    const double plain = grad_red_.lpNorm<Eigen::Infinity>();

    // Collect reduced gradients of the most active constraints.
    struct Active {
      Eigen::VectorXd col;
      double lambda;
    };
    std::vector<Active> act;
    const double thresh = 1e-4;
    auto consider = [&](double s, const Eigen::VectorXd& grad_full) {
      const double lam = mu / s;
      if (lam < thresh) return;
      Active a;
      a.col.resize(n_);
      a.col.head(ny_) = null_.transpose() * grad_full.head(nu_);
      a.col.tail(m_) = grad_full.tail(m_);
      a.lambda = lam;
      act.push_back(std::move(a));
    };
    const double h = inst_->params.h;
    Eigen::VectorXd gfull(nfull_);
    for (int j = 0; j < m_; ++j) {
      for (int kk = 2; kk <= k_ - 1; ++kk) {
        const double s = s_sep_[static_cast<size_t>(j * (k_ - 2) + kk - 2)];
        if (mu / s < thresh) continue;
        gfull.setZero();
        for (int mm = 0; mm + 2 <= kk; ++mm)
          gfull.segment(mm * D, D) =
              -(h * h * static_cast<double>(kk - 1 - mm)) * plane(j, kk).normal;
        consider(s, gfull);
      }
      gfull.setZero();
      for (int mm = 0; mm + 2 <= k_; ++mm)
        gfull.segment(mm * D, D) =
            -(h * h * static_cast<double>(k_ - 1 - mm)) * plane(j, k_).normal;
      gfull[nu_ + j] = 1.0;
      consider(s_term_[static_cast<size_t>(j)], gfull);
      gfull.setZero();
      gfull[nu_ + j] = 1.0;
      consider(s_wu_[static_cast<size_t>(j)], gfull);
    }
    for (int kk = 0; kk < k_; ++kk) {
      gfull.setZero();
      gfull.segment(kk * D, D) =
          2.0 * th_a2_.cwiseProduct(Vec<D>(u.segment(kk * D, D)));
      consider(s_in_[static_cast<size_t>(kk)], gfull);
    }
    for (int kk = 1; kk <= k_ - 1; ++kk) {
      const Vec<D> tv = th_v2_.cwiseProduct(v_[static_cast<size_t>(kk - 1)]);
      gfull.setZero();
      for (int mm = 0; mm < kk; ++mm) gfull.segment(mm * D, D) = 2.0 * h * tv;
      consider(s_vel_[static_cast<size_t>(kk - 1)], gfull);
    }
    if (act.empty()) return plain;

    Eigen::MatrixXd cols(n_, static_cast<int>(act.size()));
    Eigen::VectorXd lam0(static_cast<int>(act.size()));
    for (size_t c = 0; c < act.size(); ++c) {
      cols.col(static_cast<int>(c)) = act[c].col;
      lam0[static_cast<int>(c)] = act[c].lambda;
    }
    // grad_red_ already equals grad(objective) + cols * lam0 (plus weakly
    // active terms); shift the active multipliers to minimize the residual.
    Eigen::VectorXd delta = cols.colPivHouseholderQr().solve(-grad_red_);
    Eigen::VectorXd lam = (lam0 + delta).cwiseMax(0.0);
    const double refined =
        (grad_red_ + cols * (lam - lam0)).template lpNorm<Eigen::Infinity>();
    return std::min(plain, refined);
  }

  // Pushes the start strictly inside the inequality set along the projected
  // sum of inward normals of the tight constraints, maximizing the minimum
  // normalized slack (concave in the step length).
  bool nudge_interior(Eigen::VectorXd& u) {
    std::vector<double> w_empty;
    double psi = interior_margin(u);
    if (psi >= opts.nudge_frac) return true;
    const double eps = inst_->cons.eps;
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(nu_);
    Eigen::VectorXd g(nu_);
    const double h = inst_->params.h;
    auto add_dir = [&](const Eigen::VectorXd& grad_s, double scale) {
      const double norm = grad_s.norm();
      if (norm > 1e-12) dir += grad_s / norm;
      (void)scale;
    };
    compute_states(u);
    for (int j = 0; j < m_; ++j)
      for (int kk = 2; kk <= k_; ++kk) {
        const HalfPlane<D>& pl = plane(j, kk);
        if (pl.slack(p_[static_cast<size_t>(kk - 1)]) / eps >= opts.nudge_frac) continue;
        g.setZero();
        for (int mm = 0; mm + 2 <= kk; ++mm)
          g.segment(mm * D, D) = (h * h * static_cast<double>(kk - 1 - mm)) * pl.normal;
        add_dir(g, eps);
      }
    for (int kk = 0; kk < k_; ++kk) {
      const Vec<D> uk = u.segment(kk * D, D);
      if ((amax2_ - uk.dot(th_a2_.cwiseProduct(uk))) / amax2_ >= opts.nudge_frac) continue;
      g.setZero();
      g.segment(kk * D, D) = -2.0 * th_a2_.cwiseProduct(uk);
      add_dir(g, amax2_);
    }
    for (int kk = 1; kk <= k_ - 1; ++kk) {
      const Vec<D>& vk = v_[static_cast<size_t>(kk - 1)];
      if ((vmax2_ - vk.dot(th_v2_.cwiseProduct(vk))) / vmax2_ >= opts.nudge_frac) continue;
      g.setZero();
      const Vec<D> tv = th_v2_.cwiseProduct(vk);
      for (int mm = 0; mm < kk; ++mm) g.segment(mm * D, D) = -2.0 * h * tv;
      add_dir(g, vmax2_);
    }
    dir = null_ * (null_.transpose() * dir);
    const double dn = dir.norm();
    if (dn < 1e-12) return psi > 0.0;
    dir /= dn;

    // Bracket then ternary-search the concave margin profile.
    double t_hi = 1e-3 * inst_->params.a_max;
    double best_t = 0.0, best_psi = psi;
    for (int it = 0; it < 60; ++it) {
      const double cand_psi = interior_margin(u + t_hi * dir);
      if (cand_psi > best_psi) {
        best_psi = cand_psi;
        best_t = t_hi;
        t_hi *= 2.0;
      } else {
        break;
      }
    }
    double lo = 0.0, hi = (best_t > 0.0) ? t_hi : t_hi;
    for (int it = 0; it < 80; ++it) {
      const double t1 = lo + (hi - lo) / 3.0, t2 = hi - (hi - lo) / 3.0;
      if (interior_margin(u + t1 * dir) < interior_margin(u + t2 * dir))
        lo = t1;
      else
        hi = t2;
    }
    const double t_opt = 0.5 * (lo + hi);
    if (interior_margin(u + t_opt * dir) > best_psi) best_t = t_opt;
    if (best_t > 0.0) u += best_t * dir;
    return interior_margin(u) > 0.0;
  }

  // Minimum normalized slack over the input-dependent inequality constraints
  // (warning slacks excluded: they are chosen after the inputs).
  double interior_margin(const Eigen::VectorXd& u) {
    compute_states(u);
    const double eps = inst_->cons.eps;
    double worst = std::numeric_limits<double>::infinity();
    for (int j = 0; j < m_; ++j)
      for (int kk = 2; kk <= k_; ++kk)
        worst = std::min(worst, plane(j, kk).slack(p_[static_cast<size_t>(kk - 1)]) / eps);
    for (int kk = 0; kk < k_; ++kk) {
      const Vec<D> uk = u.segment(kk * D, D);
      worst = std::min(worst, (amax2_ - uk.dot(th_a2_.cwiseProduct(uk))) / amax2_);
    }
    for (int kk = 1; kk <= k_ - 1; ++kk) {
      const Vec<D>& vk = v_[static_cast<size_t>(kk - 1)];
      worst = std::min(worst, (vmax2_ - vk.dot(th_v2_.cwiseProduct(vk))) / vmax2_);
    }
    return worst;
  }

  // Per-neighbor 1-D barrier-centered choice of the warning slack given the
  // inputs: unique root of a strictly increasing derivative on (0, min(s, eps)).
  std::vector<double> centered_band_start(const Eigen::VectorXd& u) {
    std::vector<double> w(static_cast<size_t>(m_), 0.0);
    compute_states(u);
    const double eps = inst_->cons.eps;
    for (int j = 0; j < m_; ++j) {
      const double st = plane(j, k_).slack(p_[static_cast<size_t>(k_ - 1)]);
      const double cap = std::min(eps, st);
      const double rho = inst_->rho[static_cast<size_t>(j)];
      double lo = 1e-12 * cap, hi = (1.0 - 1e-12) * cap;
      auto deriv = [&](double x) {
        return rho * (1.0 / eps - 1.0 / x) + opts.mu0 / (st - x) + opts.mu0 / (eps - x);
      };
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (deriv(mid) < 0.0)
          lo = mid;
        else
          hi = mid;
      }
      w[static_cast<size_t>(j)] = 0.5 * (lo + hi);
    }
    return w;
  }

  Solution<D> finish_with_candidate(const WarmStartCandidate& cand, SolveStatus status,
                                    const char* reason, Solution<D>& sol) {
    sol.status = status;
    sol.fallback_reason = reason;
    sol.traj = rollout<D>(inst_->x0, CondensedDynamics<D>::unstack(cand.u), inst_->params.h);
    sol.w = cand.w;
    for (int j = 0; j < m_; ++j)
      sol.w_by_neighbor[inst_->cons.neighbor_ids[static_cast<size_t>(j)]] =
          cand.w[static_cast<size_t>(j)];
    sol.objective = objective(*inst_, cand.u, cand.w);
    sol.kkt_residual = std::numeric_limits<double>::infinity();
    return sol;
  }
};

}  // namespace impc
