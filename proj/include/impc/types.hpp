#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace impc {

template <int D>
using Vec = Eigen::Matrix<double, D, 1>;

// Full kinematic state of one robot: position and velocity.
template <int D>
struct RobotState {
  Vec<D> p = Vec<D>::Zero();
  Vec<D> v = Vec<D>::Zero();
};

// A solved plan over a K-step horizon: inputs u[0..K-1] and the states they
// produce, x[k] = (p[k], v[k]) for k = 1..K (index k-1 in the arrays below).
template <int D>
struct PlannedTrajectory {
  std::vector<Vec<D>> p;  // K entries, horizon steps 1..K
  std::vector<Vec<D>> v;  // K entries
  std::vector<Vec<D>> u;  // K entries, inputs applied at steps 0..K-1
  int horizon() const { return static_cast<int>(u.size()); }
};

// The position sequence a robot commits to and broadcasts: last round's plan
// shifted forward one step with the terminal entry repeated.
template <int D>
struct PredeterminedTrajectory {
  std::vector<Vec<D>> p;  // K entries, horizon steps 1..K
  int horizon() const { return static_cast<int>(p.size()); }
};

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateGeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AssemblyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace impc
