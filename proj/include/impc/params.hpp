#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "impc/types.hpp"

namespace impc {

// All model-level knobs shared by every robot. Weight schedule convention:
// q_run[k-1] weighs the k-th inter-step displacement ||p_{k+1} - p_k||^2 for
// k = 1..K-1 (the 0-th displacement is never penalized: the first predicted
// position is determined by the current state alone), and q_terminal weighs
// the terminal distance to the target.
struct ModelParams {
  int dim = 2;           // spatial dimension, 2 or 3
  double h = 0.2;        // step length [s]
  int horizon = 10;      // K, steps per plan
  double v_max = 1.0;    // speed bound [m/s]
  double a_max = 1.5;    // acceleration bound [m/s^2]
  double r_min = 0.3;    // minimum center-to-center clearance [m]
  double eps = 0.1;      // warning band width [m]
  double q_terminal = 30.0;
  std::vector<double> q_run;  // size K-1; built by finalize() if empty
  std::array<double, 3> theta_v{1.0, 1.0, 1.0};  // velocity metric diagonal
  std::array<double, 3> theta_a{1.0, 1.0, 1.0};  // acceleration metric diagonal
  double rho0 = 2.0;       // base warning-band weight
  double delta_eta = 2.0;  // deadlock-resolution gain increment

  // Clearance the constraint builder actually enforces between planned
  // samples so that constant-velocity motion between them stays >= r_min.
  double extended_clearance() const {
    return std::sqrt(r_min * r_min + h * h * v_max * v_max);
  }

  void finalize() {
    if (q_run.empty()) q_run.assign(static_cast<size_t>(std::max(horizon - 1, 0)), 1.0);
  }

  // Throws ModelError naming the violated requirement.
  void validate() const {
    auto fail = [](const std::string& msg) { throw ModelError("invalid model params: " + msg); };
    if (dim != 2 && dim != 3) fail("dim must be 2 or 3");
    if (!(h > 0.0)) fail("h must be positive");
    if (!(v_max > 0.0)) fail("v_max must be positive");
    if (!(a_max > 0.0)) fail("a_max must be positive");
    if (!(r_min > 0.0)) fail("r_min must be positive");
    if (!(static_cast<double>(horizon) > v_max / (a_max * h)))
      fail("horizon too short to brake from full speed: need K > v_max/(a_max*h)");
    if (!(eps > r_min / 6.0 && eps < r_min / 2.0))
      fail("eps must lie in (r_min/6, r_min/2)");
    if (!(q_terminal > 0.0)) fail("q_terminal must be positive");
    if (q_run.size() != static_cast<size_t>(horizon - 1))
      fail("q_run must have horizon-1 entries");
    for (double q : q_run)
      if (!(q > 0.0)) fail("q_run entries must be positive");
    for (int i = 0; i < dim; ++i) {
      if (!(theta_v[static_cast<size_t>(i)] > 0.0)) fail("theta_v entries must be positive");
      if (!(theta_a[static_cast<size_t>(i)] > 0.0)) fail("theta_a entries must be positive");
    }
    if (!(rho0 > 0.0)) fail("rho0 must be positive");
    if (!(delta_eta > 0.0)) fail("delta_eta must be positive");
  }

  template <int D>
  Vec<D> theta_v_vec() const {
    Vec<D> t;
    for (int i = 0; i < D; ++i) t[i] = theta_v[static_cast<size_t>(i)];
    return t;
  }

  template <int D>
  Vec<D> theta_a_vec() const {
    Vec<D> t;
    for (int i = 0; i < D; ++i) t[i] = theta_a[static_cast<size_t>(i)];
    return t;
  }
};

}  // namespace impc
