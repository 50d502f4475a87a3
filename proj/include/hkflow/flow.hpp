#pragma once

// Scalar parabolic Monge-Ampere flows on the flat torus and their time
// integration.
//
//   MaximalTime       phi_t = log det(g0 - t eta + Hess phi) - log det g0 - w + f
//   NormalizedLambda  phi_t = log det(g0 + Hess phi) - log det g0 - lambda phi - f
//   TwistedCalabi     phi_t = log det(g0 + Hess phi) - log det g0 + f
//   RiemannianPMA     phi_t = log det(g + LC-Hess phi) - log det g - lambda phi - f
//
// with phi(0) = 0. Here w is the log-density of Omega^2 relative to det g0.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hkflow/diag_record.hpp"
#include "hkflow/geometry.hpp"
#include "hkflow/grid.hpp"

namespace hkflow {

enum class FlowKind { MaximalTime, NormalizedLambda, TwistedCalabi, RiemannianPMA };

std::string_view to_string(FlowKind kind);
/// Throws ValidationError for unknown names.
FlowKind parse_flow_kind(std::string_view name);

struct FlowSpec {
  FlowKind kind;
  SymTensorField g0;
  SymTensorField eta;
  ScalarField f;
  double lambda = 0.0;
  ScalarField omega_log;
  SymTensorField base_metric_riemannian;

  /// Identity g0, every other field zero.
  FlowSpec(FlowKind kind, const PeriodicGrid& grid);

  const PeriodicGrid& grid() const { return g0.grid(); }
  /// Throws ValidationError on an inconsistent description.
  void validate() const;

  /// Background tensor the potential is added to at time t.
  SymTensorField background(double t) const;
  /// Reference metric for traces and volume weights: g0 (or the fixed
  /// Riemannian metric).
  const SymTensorField& reference_metric() const;
  /// True when the stationary equation only holds up to an additive constant.
  bool mean_adjusted() const;
  /// sqrt(det reference metric) per cell.
  ScalarField volume_weight() const;
  /// Coefficient of the linearized zeroth-order damping term.
  double damping() const;
};

/// Metric g(t, phi) for the given flow; throws NotPositiveDefinite.
MetricField metric_at(const FlowSpec& spec, double t, const ScalarField& phi);
/// Right-hand side evaluated with an already assembled metric.
ScalarField rhs_from_metric(const FlowSpec& spec, const MetricField& metric,
                            const ScalarField& phi);
/// Right-hand side at (t, phi); throws NotPositiveDefinite.
ScalarField rhs_eval(const FlowSpec& spec, double t, const ScalarField& phi);

/// Sup-norm of rhs minus its volume average (or of rhs itself, for flows
/// whose limit equation has no free constant).
double residual_norm(const FlowSpec& spec, const ScalarField& rhs);
/// Volume-weighted average with respect to the reference metric.
double volume_average(const FlowSpec& spec, const ScalarField& u);

struct FlowState {
  double t;
  ScalarField phi;
  ScalarField phi_dot;  ///< right-hand side at (t, phi)
  MetricField metric;
  double dt_last;
  long step_count;
};

/// State at t = 0 with phi = 0.
FlowState initial_state(const FlowSpec& spec);
/// Arbitrary admissible state, e.g. a resumed snapshot or a probe start.
FlowState make_state(const FlowSpec& spec, double t, ScalarField phi, double dt_last = 0.0,
                     long step_count = 0);

enum class Stepper { Explicit, SemiImplicit };
std::string_view to_string(Stepper s);
Stepper parse_stepper(std::string_view name);

/// Largest stable forward-Euler step for the current metric (no safety factor).
double explicit_stability_limit(const FlowState& state);

inline constexpr double kStabilityGuard = 0.5;
inline constexpr double kStepLinearTol = 1e-12;

/// phi <- phi + dt * rhs. Throws StepRejected.
FlowState step_explicit(const FlowSpec& spec, const FlowState& state, double dt);
/// (Id - dt L_g + dt lambda) delta = dt rhs with L_g frozen at the current
/// state. Throws StepRejected.
FlowState step_semi_implicit(const FlowSpec& spec, const FlowState& state, double dt);
FlowState step(Stepper stepper, const FlowSpec& spec, const FlowState& state, double dt);

struct StepController {
  double dt_init = 1e-3;
  double dt_min = 1e-10;
  double dt_max = 0.1;
  double safety = 0.9;
  double tol_converge = 1e-9;
  double t_max = 100.0;
  long max_steps = 100000;

  void validate() const;
};


enum class RunStatus { Converged, ReachedTmax, BlowUp, StepFloor };
std::string_view to_string(RunStatus s);

struct RunOutcome {
  RunStatus status;
  FlowState final;
  std::vector<DiagRecord> history;
  double failing_min_eig;  ///< min eigenvalue of the last rejected metric (BlowUp)
};

struct DiagHooks {
  /// Called with every recorded row (the initial state and each accepted step).
  std::function<void(const DiagRecord&, const FlowState&)> on_record;
  bool keep_history = true;
};

/// Integrates from `start` (or phi = 0) until convergence, t_max, max_steps,
/// or step-size collapse. Dynamical failures are encoded in the status.
RunOutcome run(const FlowSpec& spec, const StepController& controller, Stepper stepper,
               const DiagHooks& hooks = {}, std::optional<FlowState> start = std::nullopt);

struct BlowupSignal {
  bool near_blowup;
  double margin;
};
inline constexpr double kBlowupMargin = 1e-4;
/// margin = min(min eigenvalue of g, 1 / sup Tr_{g0} g).
BlowupSignal detect_blowup(const FlowState& state, const FlowSpec& spec);

}  // namespace hkflow
