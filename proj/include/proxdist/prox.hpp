#pragma once

#include "proxdist/models.hpp"
#include "proxdist/types.hpp"

namespace proxdist {

/// Inner-solve knobs for the iterative proximal evaluations. The defaults
/// make the inner error negligible next to subsampling noise.
struct ProxControls {
  int max_inner = 50;          // S
  double tol = 1e-8;           // stationarity norm target
  double step = 1.0;           // initial eta
  double armijo_shrink = 0.5;  // backtracking factor
  double armijo_slope = 1e-4;  // sufficient-decrease fraction
  int max_halvings = 50;
  bool backtracking = true;    // false: fixed step of size `step`

  void validate() const;
};

/// One proximal evaluation theta = prox_{rho^-1 fbar}(anchor), where fbar is
/// the batch loss and anchor = P_C(theta_{k-1}).
struct ProxProblem {
  const Model* model = nullptr;
  Batch batch;
  Vector anchor;
  double rho = 1.0;
  Vector init;  // warm start for iterative solvers; empty means anchor
  ProxControls controls;

  const Vector& start() const { return init.size() > 0 ? init : anchor; }
  void validate() const;
};

struct ProxResult {
  Vector theta;
  int inner_iterations = 0;
  double grad_norm = 0.0;          // surrogate gradient norm at exit
  bool line_search_failed = false;
};

enum class LinearSolveBranch {
  Auto,      // Woodbury when b < dim, direct otherwise
  Direct,    // solve (b rho I + X~^T X~) theta = b rho v + X~^T y~
  Woodbury,  // [I - X~^T (b rho I_b + X~ X~^T)^-1 X~][v + (b rho)^-1 X~^T y~]
};

/// Closed-form evaluation for the linear and matrix families.
ProxResult prox_linear(const ProxProblem& problem,
                       LinearSolveBranch branch = LinearSolveBranch::Auto);

/// Damped Newton with Armijo backtracking for the logistic family,
/// starting from problem.start().
ProxResult prox_newton_logistic(const ProxProblem& problem);

/// Backtracked gradient descent for the Huber family.
ProxResult prox_gd_huber(const ProxProblem& problem);

/// Family dispatch; matrix designs reuse the linear path on vectorized data.
ProxResult solve_prox(const ProxProblem& problem);

/// fbar(theta) + (rho/2)||theta - anchor||^2 and its gradient.
double surrogate_value(const ProxProblem& problem, const Vector& theta);
Vector surrogate_gradient(const ProxProblem& problem, const Vector& theta);

}  // namespace proxdist
