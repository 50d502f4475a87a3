#pragma once

// Damped Newton solver for the stationary Monge-Ampere equations, used as an
// independent reference for flow limits, plus the sparse linear solver shared
// with semi-implicit stepping.

#include <optional>

#include "hkflow/flow.hpp"
#include "hkflow/geometry.hpp"

namespace hkflow {

/// Solves (shift Id - L_g) u = rhs to normwise backward error <= tol, where L_g is
/// the elliptic operator of the metric (see elliptic_apply). With shift == 0
/// the solution is pinned to zero mean and the mean of rhs is projected out.
/// Throws LinearSolveFailed.
ScalarField linear_solve(const MetricField& m, double shift, const ScalarField& rhs,
                         double tol = 1e-12, int max_iters = 5);

struct GaugedSolution {
  ScalarField u;
  double multiplier;  ///< constant absorbed by the kernel of L_g
};
/// Bordered system  -L_g u + mu = rhs,  sum(u) = 0.
GaugedSolution linear_solve_gauged(const MetricField& m, const ScalarField& rhs,
                                   double tol = 1e-12, int max_iters = 5);

struct NewtonConfig {
  double tol_residual = 1e-11;
  int max_iters = 50;
  double damping_min = 1.0 / 1024.0;
  double linear_tol = 1e-13;
  int linear_max_iters = 5;

  void validate() const;
};

struct EllipticSolution {
  ScalarField phi;
  double c;  ///< additive constant of the limit equation (0 when lambda > 0)
  int iterations;
  double final_residual;
  std::vector<double> residual_history;  ///< sup-norm of F per iterate
};

/// Stationary equation rhs(phi) = 0 for flows with lambda > 0.
/// Throws NewtonDiverged, LineSearchFailed.
EllipticSolution newton_solve(const FlowSpec& spec, const NewtonConfig& config,
                              std::optional<ScalarField> initial = std::nullopt);

/// Stationary equation rhs(phi) = c with integrate(phi) = 0, for lambda = 0
/// flows (TwistedCalabi, RiemannianPMA). Throws NewtonDiverged, LineSearchFailed.
EllipticSolution newton_solve_normalized(const FlowSpec& spec, const NewtonConfig& config,
                                         std::optional<ScalarField> initial = std::nullopt);

}  // namespace hkflow
