#include "doctest.h"
#include "hkflow/diagnostics.hpp"
#include "hkflow/errors.hpp"
#include "support.hpp"

using namespace hkflow;
using testing::kTwoPi;

namespace {

std::vector<std::pair<double, double>> samples(double amp, double rate, int n, double t1) {
  std::vector<std::pair<double, double>> s;
  for (int k = 0; k < n; ++k) {
    const double t = t1 * k / (n - 1);
    s.emplace_back(t, amp * std::exp(-rate * t));
  }
  return s;
}

// Unnormalized flow phi_t = log det(g0 + Hess phi) on a conformal background.
FlowSpec unnormalized(const PeriodicGrid& g, double amp) {
  FlowSpec s(FlowKind::MaximalTime, g);
  s.g0 = testing::conformal(g, 1.0, amp);
  ScalarField w(g);
  for (std::size_t c = 0; c < g.size(); ++c) w[c] = -std::log(s.g0.at(c).det());
  s.omega_log = w;
  return s;
}

double residual_after(const FlowSpec& spec, double dt, int steps) {
  FlowState prev = initial_state(spec);
  FlowState next = step_explicit(spec, prev, dt);
  for (int k = 1; k < steps; ++k) {
    prev = next;
    next = step_explicit(spec, prev, dt);
  }
  return trace_evolution_residual(prev, next, spec);
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("record: flat state") {
  const PeriodicGrid g(2, 8);
  const FlowSpec flat(FlowKind::TwistedCalabi, g);
  const DiagRecord r = record(initial_state(flat), flat);
  CHECK(r.osc_phi_dot == 0.0);
  CHECK(r.sup_phi == 0.0);
  CHECK(r.min_eig_g == doctest::Approx(1.0));
  CHECK(r.shima_lhs == 0.0);
  CHECK(r.shima_rhs == 0.0);
  CHECK(r.beta_bar_min == 0.0);
  CHECK(r.sup_tr_g0_g == doctest::Approx(2.0));
  CHECK(r.residual_norm == 0.0);
}

TEST_CASE("record: traces against the reference metric") {
  const PeriodicGrid g(2, 8);
  FlowSpec s(FlowKind::MaximalTime, g);
  s.eta = SymTensorField::identity(g, -1.0);
  const DiagRecord r = record(make_state(s, 1.0, ScalarField(g)), s);
  CHECK(r.sup_tr_g0_g == doctest::Approx(4.0));
  CHECK(r.sup_tr_g_g0 == doctest::Approx(1.0));
  CHECK(r.min_eig_g == doctest::Approx(2.0));
  CHECK(r.sup_phi_dot == doctest::Approx(2 * std::log(2.0)));
  CHECK(r.osc_phi_dot == doctest::Approx(r.sup_phi_dot - r.inf_phi_dot).epsilon(1e-14));
}

TEST_CASE("beta_bar") {
  const PeriodicGrid g(1, 64);
  const MetricField m = assemble_metric(testing::conformal(g, 2.0, 0.0), ScalarField(g));
  CHECK(beta_bar(m).max_abs() == 0.0);
  const MetricField c = assemble_metric(testing::conformal(g, 2.0, 1.0), ScalarField(g));
  const ScalarField b = beta_bar(c);
  // beta = -(log g)'' and bbar = beta / g.
  const std::size_t q = 16;  // x = 1/4
  const double gx = 3.0, d2 = -kTwoPi * kTwoPi, d1 = 0.0;
  const double exact = -(d2 / gx - d1 * d1 / (gx * gx)) / gx;
  CHECK(b[q] == doctest::Approx(exact).epsilon(2e-3));
}

TEST_CASE("fit_exponential") {
  const auto e2 = samples(1.0, 2.0, 20, 3.0);
  const DecayFit a = fit_exponential(e2, 0.0, 3.0);
  CHECK(a.rate == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(a.r_squared == doctest::Approx(1.0).epsilon(1e-12));

  const auto e3 = samples(3.0, 0.5, 40, 10.0);
  const DecayFit b = fit_exponential(e3, 0.0, 10.0);
  CHECK(std::abs(b.rate - 0.5) < 1e-10);
  CHECK(std::abs(b.amplitude - 3.0) < 1e-10);

  const DecayFit c = fit_exponential(samples(4.0, 0.0, 12, 1.0), 0.0, 1.0);
  CHECK(c.rate == 0.0);
  CHECK(c.r_squared == 1.0);

  const DecayFit tail = fit_exponential_tail(e3);
  CHECK(tail.t_lo == doctest::Approx(4.0));
  CHECK(tail.rate == doctest::Approx(0.5).epsilon(1e-10));

  CHECK_THROWS_AS(fit_exponential(samples(1.0, 1.0, 9, 1.0), 0.0, 1.0), InsufficientData);
  CHECK_THROWS_AS(fit_exponential(e3, 0.0, 1.0), InsufficientData);
  auto bad = e3;
  bad[5].second = 0.0;
  CHECK_THROWS_AS(fit_exponential(bad, 0.0, 10.0), NonPositiveOrdinate);
}

TEST_CASE("trace_evolution_residual") {
  const PeriodicGrid g(1, 16);
  const FlowSpec flat = unnormalized(g, 0.0);
  const FlowState s0 = initial_state(flat);
  CHECK(trace_evolution_residual(s0, step_explicit(flat, s0, 1e-3), flat) == 0.0);
  CHECK_THROWS_AS(trace_evolution_residual(s0, s0, flat), StateMismatch);
  const FlowSpec other = unnormalized(PeriodicGrid(1, 32), 0.0);
  CHECK_THROWS_AS(trace_evolution_residual(s0, initial_state(other), flat), StateMismatch);

  // First order in time at fixed N.
  const PeriodicGrid g32(1, 32);
  const FlowSpec bench = unnormalized(g32, 0.5);
  const double h2 = g32.spacing() * g32.spacing();
  const double r1 = residual_after(bench, 0.1 * h2, 1);
  const double r2 = residual_after(bench, 0.05 * h2, 1);
  const double r3 = residual_after(bench, 0.025 * h2, 1);
  CHECK(r1 / r2 >= 1.8);
  CHECK(r2 / r3 >= 1.8);

  // Second order under h -> h/2 with dt proportional to h^2.
  std::vector<double> levels;
  for (int n : {32, 64, 128}) {
    const PeriodicGrid gn(1, n);
    const double h = gn.spacing();
    levels.push_back(residual_after(unnormalized(gn, 0.5), 0.1 * h * h, 1));
  }
  CHECK(levels[0] / levels[1] >= 3.0);
  CHECK(levels[1] / levels[2] >= 3.0);
}

TEST_CASE("beta_bar lower bound decays on the unnormalized flow") {
  const PeriodicGrid g(1, 32);
  const FlowSpec spec = unnormalized(g, 0.5);
  StepController ctl;
  ctl.dt_max = 0.005;
  ctl.t_max = 0.5;
  ctl.tol_converge = 1e-300;
  const RunOutcome out = run(spec, ctl, Stepper::SemiImplicit);
  REQUIRE(out.history.front().beta_bar_min < 0.0);
  std::vector<std::pair<double, double>> env;
  const double start = std::min(out.history.front().beta_bar_min, -1.0);
  for (const DiagRecord& r : out.history) {
    CHECK(r.beta_bar_min >= start * std::exp(-r.t) - 1e-6);
    if (r.beta_bar_min < 0.0) env.emplace_back(r.t, -r.beta_bar_min);
  }
  const DecayFit fit = fit_exponential(env, 0.0, ctl.t_max);
  CHECK(fit.rate >= 0.9);
}

TEST_CASE("comparison_probe") {
  const PeriodicGrid g(1, 32);
  FlowSpec tc(FlowKind::TwistedCalabi, g);
  tc.f = testing::sine(g, 0.1);
  const ScalarField low = testing::sine(g, 0.002, 0, 2);
  const ComparisonResult same = comparison_probe(tc, low, low, 20);
  CHECK(same.worst_gap == 0.0);
  CHECK_FALSE(same.violated);

  ScalarField high = low;
  high += 0.01;
  const ComparisonResult shift = comparison_probe(tc, low, high, 50);
  CHECK(shift.worst_gap == doctest::Approx(-0.01).epsilon(1e-12));
  CHECK(shift.steps_completed == 50);

  FlowSpec nl(FlowKind::NormalizedLambda, g);
  nl.lambda = 1.0;
  nl.f = testing::sine(g, 0.1);
  const ScalarField bump = ScalarField::sample(g, [](const auto& x) {
    return 0.01 * (1 - std::cos(kTwoPi * x[0]));
  });
  const ComparisonResult r = comparison_probe(nl, ScalarField(g), bump, 200);
  CHECK_FALSE(r.violated);
  CHECK_FALSE(r.step_failed);
  CHECK(r.steps_completed == 200);
  CHECK(r.worst_gap <= 0.0);

  // A pair that crosses is detected.
  const ComparisonResult crossed = comparison_probe(nl, bump, ScalarField(g), 5);
  CHECK(crossed.violated);
}

TEST_CASE("bounds_report") {
  CHECK_THROWS_AS(bounds_report({}), EmptyHistory);

  const PeriodicGrid g(1, 32);
  const FlowSpec flat(FlowKind::TwistedCalabi, g);
  const RunOutcome f = run(flat, StepController{}, Stepper::SemiImplicit);
  const BoundsReport fr = bounds_report(f.history);
  CHECK(fr.maxima.at("sup_abs_phi") == 0.0);
  CHECK(fr.maxima.at("osc_phi_dot") == 0.0);
  CHECK(fr.maxima.at("sup_tr_g0_g") == doctest::Approx(1.0));

  FlowSpec tc(FlowKind::TwistedCalabi, g);
  tc.f = testing::sine(g, 0.2);
  const BoundsReport tr = bounds_report(run(tc, StepController{}, Stepper::SemiImplicit).history);
  CHECK(tr.flags.at("osc_phi_uniformly_bounded"));
  CHECK(tr.flags.at("sup_phi_dot_nonincreasing"));
  CHECK(tr.flags.at("inf_phi_dot_nondecreasing"));

  FlowSpec nl(FlowKind::NormalizedLambda, g);
  nl.lambda = 1.0;
  nl.f = testing::sine(g, 0.1);
  const BoundsReport nr = bounds_report(run(nl, StepController{}, Stepper::SemiImplicit).history);
  CHECK(nr.flags.at("sup_abs_phi_dot_nonincreasing"));
  CHECK(nr.flags.at("sup_abs_phi_dot_uniformly_bounded"));
}

TEST_CASE("csv columns") {
  const auto& cols = diag_columns();
  REQUIRE(cols.size() == 14);
  CHECK(cols.front() == "t");
  CHECK(cols.back() == "residual_norm");
  DiagRecord r{};
  r.t = 1.5;
  r.residual_norm = 2.5;
  const auto v = diag_values(r);
  CHECK(v.front() == 1.5);
  CHECK(v.back() == 2.5);
}

}
