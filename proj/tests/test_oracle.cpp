#include "doctest.h"
#include "hkflow/errors.hpp"
#include "hkflow/oracle.hpp"
#include "support.hpp"

using namespace hkflow;
using testing::kTwoPi;

namespace {

FlowSpec normalized(const PeriodicGrid& g, double lambda, const ScalarField& f) {
  FlowSpec s(FlowKind::NormalizedLambda, g);
  s.lambda = lambda;
  s.f = f;
  return s;
}

FlowSpec calabi(const PeriodicGrid& g, const ScalarField& f) {
  FlowSpec s(FlowKind::TwistedCalabi, g);
  s.f = f;
  return s;
}

ScalarField mixed_mode(const PeriodicGrid& g, double amp) {
  return ScalarField::sample(g, [=](const auto& x) {
    return amp * std::sin(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]);
  });
}

}  // namespace

TEST_SUITE("elliptic_oracle") {

TEST_CASE("linear_solve: Fourier diagonalization on the flat metric") {
  const PeriodicGrid g(1, 32);
  const MetricField flat = assemble_metric(SymTensorField::identity(g), ScalarField(g));
  CHECK(linear_solve(flat, 2.0, ScalarField(g)).max_abs() == 0.0);
  for (double s : {0.5, 1.0, 100.0}) {
    const ScalarField u = linear_solve(flat, s, testing::sine(g, 1.0));
    const double denom = s - testing::second_diff_symbol(1, g.spacing());
    for (std::size_t c = 0; c < g.size(); ++c)
      CHECK(u[c] == doctest::Approx(std::sin(kTwoPi * g.coords(c)[0]) / denom).epsilon(1e-12));
  }
}

TEST_CASE("linear_solve: linearity and residual on a curved metric") {
  const PeriodicGrid g(2, 16);
  const MetricField m = assemble_metric(SymTensorField::identity(g), mixed_mode(g, 0.01));
  const ScalarField rhs = ScalarField::sample(g, [](const auto& x) {
    return std::exp(std::sin(kTwoPi * x[0])) - std::cos(kTwoPi * x[1]) * x[0];
  });
  const ScalarField u = linear_solve(m, 0.7, rhs);
  const ScalarField v = linear_solve(m, 0.7, -1.0 * rhs);
  for (std::size_t c = 0; c < g.size(); ++c) CHECK(v[c] == -u[c]);
  ScalarField res = 0.7 * u - elliptic_apply(m, u);
  res -= rhs;
  CHECK(res.max_abs() <= 1e-10 * rhs.max_abs());
  const ScalarField again = linear_solve(m, 0.7, rhs);
  CHECK(testing::sup_diff(u, again) == 0.0);
  CHECK_THROWS_AS(linear_solve(m, -1.0, rhs), LinearSolveFailed);
}

TEST_CASE("linear_solve: zero shift pins the mean") {
  const PeriodicGrid g(2, 16);
  const MetricField m = assemble_metric(SymTensorField::identity(g), mixed_mode(g, 0.01));
  const ScalarField rhs = mixed_mode(g, 1.0);
  const GaugedSolution sol = linear_solve_gauged(m, rhs);
  CHECK(std::abs(integrate(sol.u)) < 1e-14);
  ScalarField res = -1.0 * elliptic_apply(m, sol.u);
  res += sol.multiplier;
  res -= rhs;
  CHECK(res.max_abs() < 1e-10);
  const ScalarField u0 = linear_solve(m, 0.0, rhs);
  CHECK(testing::sup_diff(u0, sol.u) < 1e-14);
}

TEST_CASE("newton_solve: trivial roots") {
  const PeriodicGrid g(1, 32);
  const EllipticSolution z = newton_solve(normalized(g, 1.0, ScalarField(g)), NewtonConfig{});
  CHECK(z.phi.max_abs() == 0.0);
  CHECK(z.iterations <= 1);
  CHECK(z.c == 0.0);

  const EllipticSolution k = newton_solve(normalized(g, 1.0, ScalarField(g, 0.3)), NewtonConfig{});
  for (std::size_t c = 0; c < g.size(); ++c) CHECK(k.phi[c] == doctest::Approx(-0.3).epsilon(1e-12));
  const EllipticSolution k2 = newton_solve(normalized(g, 2.0, ScalarField(g, 0.3)), NewtonConfig{});
  for (std::size_t c = 0; c < g.size(); ++c) CHECK(k2.phi[c] == doctest::Approx(-0.15).epsilon(1e-12));
}

TEST_CASE("newton_solve: 1D benchmark, quadratic tail, uniqueness") {
  const PeriodicGrid g(1, 64);
  const FlowSpec spec = normalized(g, 1.0, testing::sine(g, 0.1));
  const EllipticSolution sol = newton_solve(spec, NewtonConfig{});
  CHECK(sol.final_residual <= 1e-11);
  CHECK(sol.iterations <= 8);
  CHECK(rhs_eval(spec, 0.0, sol.phi).max_abs() <= 1e-11);

  const auto& h = sol.residual_history;
  REQUIRE(h.size() >= 3);
  for (std::size_t k = 2; k < h.size(); ++k) CHECK(h[k] < h[k - 1]);
  for (std::size_t k = 1; k < h.size(); ++k)
    if (h[k - 1] < 1e-2 && h[k] > 1e-13) CHECK(h[k] / (h[k - 1] * h[k - 1]) < 100.0);

  // Start from the solution of a perturbed problem.
  const FlowSpec other = normalized(g, 1.0, testing::sine(g, 0.15) + testing::sine(g, 0.05, 0, 3));
  const EllipticSolution seed = newton_solve(other, NewtonConfig{});
  const EllipticSolution sol2 = newton_solve(spec, NewtonConfig{}, seed.phi);
  CHECK(testing::sup_diff(sol.phi, sol2.phi) <= 1e-9);
}

TEST_CASE("newton_solve: flow limit agreement") {
  const PeriodicGrid g(1, 64);
  const FlowSpec spec = normalized(g, 1.0, testing::sine(g, 0.1));
  StepController ctl;
  ctl.dt_max = 0.5;
  ctl.tol_converge = 1e-10;
  const RunOutcome out = run(spec, ctl, Stepper::SemiImplicit);
  REQUIRE(out.status == RunStatus::Converged);
  const EllipticSolution sol = newton_solve(spec, NewtonConfig{});
  CHECK(testing::sup_diff(out.final.phi, sol.phi) <= 10 * std::max(ctl.tol_converge, 1e-11));
}

TEST_CASE("newton_solve_normalized: trivial roots and the gauge") {
  const PeriodicGrid g(2, 16);
  const EllipticSolution z = newton_solve_normalized(calabi(g, ScalarField(g)), NewtonConfig{});
  CHECK(z.phi.max_abs() == 0.0);
  CHECK(z.c == 0.0);
  const EllipticSolution k = newton_solve_normalized(calabi(g, ScalarField(g, 0.4)), NewtonConfig{});
  CHECK(k.phi.max_abs() < 1e-14);
  CHECK(k.c == doctest::Approx(0.4).epsilon(1e-13));

  const ScalarField f = mixed_mode(g, 0.2);
  const EllipticSolution a = newton_solve_normalized(calabi(g, f), NewtonConfig{});
  ScalarField shifted = f;
  shifted += 0.25;
  const EllipticSolution b = newton_solve_normalized(calabi(g, shifted), NewtonConfig{});
  CHECK(testing::sup_diff(a.phi, b.phi) <= 1e-10);
  CHECK(b.c - a.c == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(std::abs(integrate(a.phi)) <= 1e-12);
  CHECK(spd_check(SymTensorField::identity(g) + discrete_hessian(a.phi)).ok);
}

TEST_CASE("newton_solve_normalized: constant from the Jacobian mass") {
  // Integrating det(I + Hess phi) = e^{c - f} gives e^c = mass / int e^{-f}.
  // The continuum mass is 1; the lattice mass differs from 1 by O(h^2).
  auto gap = [](int n) {
    const PeriodicGrid g(2, n);
    const ScalarField f = mixed_mode(g, 0.2);
    const EllipticSolution sol = newton_solve_normalized(calabi(g, f), NewtonConfig{});
    CHECK(sol.final_residual <= 1e-11);
    ScalarField ef(g);
    for (std::size_t c = 0; c < g.size(); ++c) ef[c] = std::exp(-f[c]);
    const double mass = integrate(det_field(SymTensorField::identity(g) + discrete_hessian(sol.phi)));
    const double g_c = sol.c + std::log(integrate(ef));
    CHECK(g_c == doctest::Approx(std::log(mass)).epsilon(1e-9));
    return std::abs(g_c);
  };
  const double g32 = gap(32), g64 = gap(64), g128 = gap(128);
  CHECK(g32 / g64 >= 3.9);
  CHECK(g64 / g128 >= 3.9);
  CHECK(g128 <= 5e-6);
}

TEST_CASE("newton: argument and failure handling") {
  const PeriodicGrid g(1, 32);
  CHECK_THROWS_AS(newton_solve(calabi(g, ScalarField(g)), NewtonConfig{}), ValidationError);
  CHECK_THROWS_AS(newton_solve_normalized(normalized(g, 1.0, ScalarField(g)), NewtonConfig{}),
                  ValidationError);
  FlowSpec mt(FlowKind::MaximalTime, g);
  CHECK_THROWS_AS(newton_solve_normalized(mt, NewtonConfig{}), ValidationError);

  NewtonConfig one;
  one.max_iters = 1;
  CHECK_THROWS_AS(newton_solve(normalized(g, 1.0, testing::sine(g, 0.2)), one), NewtonDiverged);

  NewtonConfig rigid;
  rigid.damping_min = 1.0;
  CHECK_THROWS_AS(newton_solve(normalized(g, 1.0, testing::sine(g, 3.0)), rigid), LineSearchFailed);

  NewtonConfig bad;
  bad.tol_residual = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = NewtonConfig{};
  bad.damping_min = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("newton: Riemannian stationary equation") {
  const PeriodicGrid g(2, 32);
  FlowSpec rp(FlowKind::RiemannianPMA, g);
  rp.base_metric_riemannian = testing::conformal(g, 1.0, 0.3);
  rp.g0 = rp.base_metric_riemannian;
  rp.f = ScalarField::sample(g, [](const auto& x) { return 0.1 * std::cos(kTwoPi * x[1]); });
  const EllipticSolution sol = newton_solve_normalized(rp, NewtonConfig{});
  ScalarField r = rhs_eval(rp, 0.0, sol.phi);
  r += -sol.c;
  CHECK(r.max_abs() <= 1e-10);
  rp.lambda = 0.5;
  const EllipticSolution damped = newton_solve(rp, NewtonConfig{});
  CHECK(rhs_eval(rp, 0.0, damped.phi).max_abs() <= 1e-10);
}

}
