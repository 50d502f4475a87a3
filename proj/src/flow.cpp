#include "hkflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hkflow/diagnostics.hpp"
#include "hkflow/oracle.hpp"

namespace hkflow {

std::string_view to_string(FlowKind kind) {
  switch (kind) {
    case FlowKind::MaximalTime: return "MaximalTime";
    case FlowKind::NormalizedLambda: return "NormalizedLambda";
    case FlowKind::TwistedCalabi: return "TwistedCalabi";
    case FlowKind::RiemannianPMA: return "RiemannianPMA";
  }
  return "?";
}

FlowKind parse_flow_kind(std::string_view name) {
  for (FlowKind k : {FlowKind::MaximalTime, FlowKind::NormalizedLambda,
                     FlowKind::TwistedCalabi, FlowKind::RiemannianPMA})
    if (to_string(k) == name) return k;
  throw ValidationError("kind", "unknown flow kind '" + std::string(name) + "'");
}

std::string_view to_string(Stepper s) {
  return s == Stepper::Explicit ? "explicit" : "semi_implicit";
}

Stepper parse_stepper(std::string_view name) {
  if (name == "explicit") return Stepper::Explicit;
  if (name == "semi_implicit") return Stepper::SemiImplicit;
  throw ValidationError("stepper", "unknown stepper '" + std::string(name) + "'");
}

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::ReachedTmax: return "ReachedTmax";
    case RunStatus::BlowUp: return "BlowUp";
    case RunStatus::StepFloor: return "StepFloor";
  }
  return "?";
}

// ------------------------------------------------------------------- FlowSpec

FlowSpec::FlowSpec(FlowKind k, const PeriodicGrid& grid)
    : kind(k),
      g0(SymTensorField::identity(grid)),
      eta(grid),
      f(grid),
      omega_log(grid),
      base_metric_riemannian(grid) {}

namespace {

bool is_zero(const SymTensorField& t) { return t.max_abs() == 0.0; }
bool is_zero(const ScalarField& u) { return u.max_abs() == 0.0; }

bool is_constant(const SymTensorField& t) {
  const SmallSym m = t.mean();
  const double scale = std::max(1.0, t.max_abs());
  for (std::size_t c = 0; c < t.grid().size(); ++c)
    for (int k = 0; k < t.components(); ++k)
      if (std::abs(t.at(c).c[k] - m.c[k]) > 1e-12 * scale) return false;
  return true;
}

}  // namespace

void FlowSpec::validate() const {
  const PeriodicGrid& g = grid();
  if (!(eta.grid() == g) || !(f.grid() == g) || !(omega_log.grid() == g) ||
      !(base_metric_riemannian.grid() == g))
    throw ValidationError("grid", "all flow fields must share one grid");
  if (!spd_check(g0).ok) throw ValidationError("g0", "must be positive definite");
  if (!std::isfinite(lambda)) throw ValidationError("lambda", "must be finite");

  switch (kind) {
    case FlowKind::MaximalTime:
      if (!is_constant(eta)) throw ValidationError("eta", "must have constant coefficients");
      if (lambda != 0.0) throw ValidationError("lambda", "unused by MaximalTime; must be 0");
      if (!is_zero(base_metric_riemannian))
        throw ValidationError("base_metric_riemannian", "only used by RiemannianPMA");
      break;
    case FlowKind::NormalizedLambda:
      if (!(lambda > 0.0)) throw ValidationError("lambda", "NormalizedLambda needs lambda > 0");
      if (!is_zero(eta)) throw ValidationError("eta", "unused by NormalizedLambda; must be 0");
      if (!is_zero(omega_log)) throw ValidationError("w", "unused by NormalizedLambda; must be 0");
      if (!is_zero(base_metric_riemannian))
        throw ValidationError("base_metric_riemannian", "only used by RiemannianPMA");
      break;
    case FlowKind::TwistedCalabi:
      // The constant representative of the first affine Chern class of a
      // flat torus is zero; the twist is carried entirely by f.
      if (!is_zero(eta)) throw ValidationError("eta", "TwistedCalabi on the torus needs eta = 0");
      if (lambda != 0.0) throw ValidationError("lambda", "TwistedCalabi needs lambda = 0");
      if (!is_zero(omega_log)) throw ValidationError("w", "unused by TwistedCalabi; must be 0");
      if (!is_zero(base_metric_riemannian))
        throw ValidationError("base_metric_riemannian", "only used by RiemannianPMA");
      break;
    case FlowKind::RiemannianPMA:
      if (!spd_check(base_metric_riemannian).ok)
        throw ValidationError("base_metric_riemannian", "must be positive definite");
      if (!std::equal(g0.data().begin(), g0.data().end(),
                      base_metric_riemannian.data().begin()))
        throw ValidationError("g0", "RiemannianPMA starts from the fixed metric; g0 must equal it");
      if (!is_zero(eta)) throw ValidationError("eta", "unused by RiemannianPMA; must be 0");
      if (!is_zero(omega_log)) throw ValidationError("w", "unused by RiemannianPMA; must be 0");
      break;
  }
}

SymTensorField FlowSpec::background(double t) const {
  switch (kind) {
    case FlowKind::MaximalTime: return g0 - t * eta;
    case FlowKind::RiemannianPMA: return base_metric_riemannian;
    default: return g0;
  }
}

const SymTensorField& FlowSpec::reference_metric() const {
  return kind == FlowKind::RiemannianPMA ? base_metric_riemannian : g0;
}

bool FlowSpec::mean_adjusted() const {
  return kind == FlowKind::TwistedCalabi || (kind == FlowKind::RiemannianPMA && lambda == 0.0);
}

ScalarField FlowSpec::volume_weight() const {
  const SymTensorField& g = reference_metric();
  std::vector<double> v(g.grid().size());
  for (std::size_t c = 0; c < v.size(); ++c) v[c] = std::sqrt(g.at(c).det());
  return ScalarField(g.grid(), std::move(v));
}

double FlowSpec::damping() const {
  return (kind == FlowKind::NormalizedLambda || kind == FlowKind::RiemannianPMA) ? lambda : 0.0;
}

// ------------------------------------------------------------------------ RHS

MetricField metric_at(const FlowSpec& spec, double t, const ScalarField& phi) {
  if (spec.kind == FlowKind::RiemannianPMA)
    return assemble_riemannian_metric(spec.base_metric_riemannian, phi);
  return assemble_metric(spec.background(t), phi);
}

ScalarField rhs_from_metric(const FlowSpec& spec, const MetricField& metric,
                            const ScalarField& phi) {
  require_same_grid(spec.grid(), phi.grid(), "rhs_eval");
  const std::size_t n = phi.size();
  std::vector<double> v(n);
  const SymTensorField& ref = spec.reference_metric();
  for (std::size_t c = 0; c < n; ++c)
    v[c] = std::log(metric.assembled().at(c).det()) - std::log(ref.at(c).det());
  switch (spec.kind) {
    case FlowKind::MaximalTime:
      for (std::size_t c = 0; c < n; ++c) v[c] += spec.f[c] - spec.omega_log[c];
      break;
    case FlowKind::TwistedCalabi:
      for (std::size_t c = 0; c < n; ++c) v[c] += spec.f[c];
      break;
    case FlowKind::NormalizedLambda:
    case FlowKind::RiemannianPMA:
      for (std::size_t c = 0; c < n; ++c) v[c] -= spec.lambda * phi[c] + spec.f[c];
      break;
  }
  return ScalarField(phi.grid(), std::move(v));
}

ScalarField rhs_eval(const FlowSpec& spec, double t, const ScalarField& phi) {
  return rhs_from_metric(spec, metric_at(spec, t, phi), phi);
}

double volume_average(const FlowSpec& spec, const ScalarField& u) {
  const ScalarField w = spec.volume_weight();
  return integrate(u, w) / integrate(w);
}

double residual_norm(const FlowSpec& spec, const ScalarField& rhs) {
  const double shift = spec.mean_adjusted() ? volume_average(spec, rhs) : 0.0;
  double m = 0.0;
  for (double v : rhs.values()) m = std::max(m, std::abs(v - shift));
  return m;
}

// ---------------------------------------------------------------------- state

FlowState make_state(const FlowSpec& spec, double t, ScalarField phi, double dt_last,
                     long step_count) {
  MetricField metric = metric_at(spec, t, phi);
  ScalarField phi_dot = rhs_from_metric(spec, metric, phi);
  return FlowState{t, std::move(phi), std::move(phi_dot), std::move(metric), dt_last, step_count};
}

FlowState initial_state(const FlowSpec& spec) {
  return make_state(spec, 0.0, ScalarField(spec.grid(), 0.0));
}

double explicit_stability_limit(const FlowState& state) {
  const MetricField& m = state.metric;
  double worst = 0.0;
  for (std::size_t c = 0; c < m.grid().size(); ++c)
    worst = std::max(worst, m.inverse().at(c).trace());
  const double h = m.grid().spacing();
  return h * h / (2.0 * worst);
}

// ------------------------------------------------------------------- stepping

namespace {

FlowState accept(const FlowSpec& spec, const FlowState& state, double dt, ScalarField delta) {
  if (delta.max_abs() > kStabilityGuard)
    throw StepRejected(StepRejected::Reason::StabilityGuard,
                       "increment exceeds the stability guard");
  ScalarField phi = state.phi + delta;
  try {
    return make_state(spec, state.t + dt, std::move(phi), dt, state.step_count + 1);
  } catch (const NotPositiveDefinite& e) {
    throw StepRejected(StepRejected::Reason::NotPositiveDefinite,
                       "stepped metric is not positive definite", e.min_eig());
  }
}

}  // namespace

FlowState step_explicit(const FlowSpec& spec, const FlowState& state, double dt) {
  return accept(spec, state, dt, dt * state.phi_dot);
}

FlowState step_semi_implicit(const FlowSpec& spec, const FlowState& state, double dt) {
  const double shift = 1.0 / dt + std::max(0.0, spec.damping());
  ScalarField delta(spec.grid());
  try {
    // (1/dt + lambda - L_g) delta = rhs
    delta = linear_solve(state.metric, shift, state.phi_dot, kStepLinearTol);
  } catch (const LinearSolveFailed& e) {
    throw StepRejected(StepRejected::Reason::LinearSolve, e.what());
  }
  return accept(spec, state, dt, std::move(delta));
}

FlowState step(Stepper stepper, const FlowSpec& spec, const FlowState& state, double dt) {
  return stepper == Stepper::Explicit ? step_explicit(spec, state, dt)
                                      : step_semi_implicit(spec, state, dt);
}

void StepController::validate() const {
  if (!(dt_min > 0.0) || !(dt_min <= dt_init) || !(dt_init <= dt_max))
    throw ValidationError("controller", "need 0 < dt_min <= dt_init <= dt_max");
  if (!(safety > 0.0 && safety < 1.0)) throw ValidationError("safety", "must lie in (0, 1)");
  if (!(tol_converge > 0.0)) throw ValidationError("tol_converge", "must be positive");
  if (!(t_max > 0.0)) throw ValidationError("t_max", "must be positive");
  if (max_steps < 0) throw ValidationError("max_steps", "must be non-negative");
}

// ------------------------------------------------------------------------ run

RunOutcome run(const FlowSpec& spec, const StepController& controller, Stepper stepper,
               const DiagHooks& hooks, std::optional<FlowState> start) {
  spec.validate();
  controller.validate();

  FlowState state = start ? std::move(*start) : initial_state(spec);
  std::vector<DiagRecord> history;
  auto emit = [&](const FlowState& s) {
    DiagRecord r = record(s, spec);
    if (hooks.on_record) hooks.on_record(r, s);
    if (hooks.keep_history) history.push_back(r);
  };
  if (!start) emit(state);

  constexpr double kGrow = 1.2;
  double dt = state.dt_last > 0.0 ? std::min(state.dt_last * kGrow, controller.dt_max)
                                  : controller.dt_init;
  bool spd_streak = false;
  double failing_min_eig = 0.0;

  while (true) {
    if (state.step_count >= controller.max_steps || state.t >= controller.t_max)
      return {RunStatus::ReachedTmax, std::move(state), std::move(history), failing_min_eig};

    double dt_try = dt;
    if (stepper == Stepper::Explicit)
      dt_try = std::min(dt_try, controller.safety * explicit_stability_limit(state));

    try {
      FlowState next = step(stepper, spec, state, dt_try);
      state = std::move(next);
      spd_streak = false;
      emit(state);
      if (residual_norm(spec, state.phi_dot) < controller.tol_converge)
        return {RunStatus::Converged, std::move(state), std::move(history), failing_min_eig};
      dt = std::min(dt_try * kGrow, controller.dt_max);
    } catch (const StepRejected& e) {
      if (e.reason() == StepRejected::Reason::NotPositiveDefinite) {
        spd_streak = true;
        failing_min_eig = e.min_eig();
      }
      dt = dt_try / 2.0;
      if (dt < controller.dt_min) {
        const RunStatus status = spd_streak ? RunStatus::BlowUp : RunStatus::StepFloor;
        return {status, std::move(state), std::move(history), failing_min_eig};
      }
    }
  }
}

BlowupSignal detect_blowup(const FlowState& state, const FlowSpec& spec) {
  const ScalarField tr = trace_pair(spec.reference_metric(), state.metric.assembled());
  const double sup_tr = sup_osc(tr).sup;
  const double margin = std::min(state.metric.min_eig(), 1.0 / sup_tr);
  return {margin < kBlowupMargin, margin};
}

}  // namespace hkflow
