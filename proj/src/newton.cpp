#include <cmath>

#include "hkflow/oracle.hpp"

namespace hkflow {

void NewtonConfig::validate() const {
  if (!(tol_residual > 0.0)) throw ValidationError("newton_tol", "must be positive");
  if (!(damping_min > 0.0 && damping_min <= 1.0))
    throw ValidationError("damping_min", "must lie in (0, 1]");
  if (max_iters < 1) throw ValidationError("newton_max_iters", "must be at least 1");
  if (!(linear_tol > 0.0)) throw ValidationError("linear_tol", "must be positive");
}

namespace {

struct Iterate {
  ScalarField phi;
  double c;
  MetricField metric;
  ScalarField residual;  // F(phi) - c
  double norm;
};

Iterate evaluate(const FlowSpec& spec, ScalarField phi, double c) {
  MetricField m = metric_at(spec, 0.0, phi);
  ScalarField r = rhs_from_metric(spec, m, phi);
  r += -c;
  const double norm = r.max_abs();
  return Iterate{std::move(phi), c, std::move(m), std::move(r), norm};
}

void remove_mean(ScalarField& u) { u += -integrate(u); }

// Shared damped Newton loop. `normalized` selects the (phi, c) system with
// the zero-mean constraint.
EllipticSolution solve(const FlowSpec& spec, const NewtonConfig& cfg,
                       std::optional<ScalarField> initial, bool normalized) {
  ScalarField phi0 = initial ? std::move(*initial) : ScalarField(spec.grid(), 0.0);
  require_same_grid(spec.grid(), phi0.grid(), "newton initial guess");
  if (normalized) remove_mean(phi0);

  Iterate cur = evaluate(spec, std::move(phi0), 0.0);
  std::vector<double> history{cur.norm};
  int it = 0;
  while (cur.norm > cfg.tol_residual) {
    if (it >= cfg.max_iters) throw NewtonDiverged(it, cur.norm);
    ScalarField delta(spec.grid());
    double delta_c = 0.0;
    if (normalized) {
      // -L delta + delta_c = F - c, sum(delta) = 0
      GaugedSolution s =
          linear_solve_gauged(cur.metric, cur.residual, cfg.linear_tol, cfg.linear_max_iters);
      delta = std::move(s.u);
      delta_c = s.multiplier;
    } else {
      // (lambda - L) delta = F
      delta = linear_solve(cur.metric, spec.lambda, cur.residual, cfg.linear_tol,
                           cfg.linear_max_iters);
    }

    double step = 1.0;
    std::optional<Iterate> next;
    while (step >= cfg.damping_min) {
      ScalarField trial = cur.phi + step * delta;
      if (normalized) remove_mean(trial);
      try {
        Iterate cand = evaluate(spec, std::move(trial), cur.c + step * delta_c);
        if (cand.norm < cur.norm || cand.norm <= cfg.tol_residual) {
          next = std::move(cand);
          break;
        }
      } catch (const NotPositiveDefinite&) {
      }
      step *= 0.5;
    }
    if (!next) throw LineSearchFailed(it, cur.norm);
    cur = std::move(*next);
    history.push_back(cur.norm);
    ++it;
  }
  return EllipticSolution{std::move(cur.phi), normalized ? cur.c : 0.0, it, cur.norm,
                          std::move(history)};
}

}  // namespace

EllipticSolution newton_solve(const FlowSpec& spec, const NewtonConfig& config,
                              std::optional<ScalarField> initial) {
  config.validate();
  spec.validate();
  if (!(spec.lambda > 0.0))
    throw ValidationError("lambda", "newton_solve needs lambda > 0");
  if (spec.kind != FlowKind::NormalizedLambda && spec.kind != FlowKind::RiemannianPMA)
    throw ValidationError("kind", "no stationary equation with lambda > 0 for this flow");
  return solve(spec, config, std::move(initial), false);
}

EllipticSolution newton_solve_normalized(const FlowSpec& spec, const NewtonConfig& config,
                                         std::optional<ScalarField> initial) {
  config.validate();
  spec.validate();
  if (spec.lambda != 0.0)
    throw ValidationError("lambda", "newton_solve_normalized needs lambda = 0");
  if (spec.kind != FlowKind::TwistedCalabi && spec.kind != FlowKind::RiemannianPMA)
    throw ValidationError("kind", "no normalized stationary equation for this flow");
  return solve(spec, config, std::move(initial), true);
}

}  // namespace hkflow
